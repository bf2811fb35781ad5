"""Angular eigenproblem for L_{A,a} = (i grad_S + A)^2 + a on S^1 and S^2.

The operator is assembled in the Galerkin basis of Laplace eigenfunctions
(Fourier modes on S^1, real spherical harmonics on S^2) from its quadratic
form

    <u, L u> = int |(i grad_S + A) u|^2 + a |u|^2,

which equals the expanded form with |A|^2 + i div A + 2i A . grad after an
integration by parts on the closed sphere (A tangential).  Matrix entries
are computed with product Gauss rules, so no derivative of A is needed.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.special import comb, eval_gegenbauer

from .errors import DomainError, ParameterError, PositivityError, PotentialError
from .quadrature import gauss_legendre

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
GAUGE_TOL_ANALYTIC = 1e-10
GAUGE_TOL_FD = 1e-6
POSITIVITY_TOL = 1e-10


# ----------------------------------------------------------------- potentials


@dataclass
class PotentialPair:
    """Angular potentials a(x_hat), A(x_hat) on S^{n-1}.

    ``a`` maps (N, n) unit vectors to (N,) reals, ``A`` maps them to (N, n)
    tangential vectors.  ``None`` means identically zero.  ``a_const`` marks
    a constant electric part, which enables the closed-form spectrum when
    ``A`` is absent.
    """

    n: int
    a: object = None
    A: object = None
    label: str = ""
    a_const: float | None = None
    validation: bool = False

    def __post_init__(self):
        if self.n < 2 or (self.n == 2 and not self.validation):
            raise ParameterError("dimension n must be >= 3 (n = 2 only in validation mode)")

    @property
    def is_radial_constant(self):
        return self.A is None and (self.a is None or self.a_const is not None)

    def eval_a(self, pts):
        if self.a is None:
            return np.zeros(len(pts))
        try:
            vals = np.asarray(self.a(pts), dtype=float)
        except Exception as exc:  # noqa: BLE001 - any user callable failure
            raise PotentialError(f"scalar potential failed to evaluate: {exc}") from exc
        vals = np.broadcast_to(vals, (len(pts),)).copy()
        if not np.all(np.isfinite(vals)):
            raise PotentialError("scalar potential is not finite at some sample point")
        return vals

    def eval_A(self, pts):
        if self.A is None:
            return np.zeros_like(pts, dtype=float)
        try:
            vals = np.asarray(self.A(pts), dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise PotentialError(f"magnetic potential failed to evaluate: {exc}") from exc
        if vals.shape != pts.shape or not np.all(np.isfinite(vals)):
            raise PotentialError("magnetic potential must return finite (N, n) vectors")
        return vals


def _const(c):
    return lambda pts: np.full(len(pts), float(c))


def free_potential(n=3):
    return PotentialPair(n=n, label="free", a_const=0.0, validation=(n == 2))


def constant_a(c, n=3):
    return PotentialPair(n=n, a=_const(c), label=f"constant_a:{c:g}", a_const=float(c),
                         validation=(n == 2))


def ab_flux(phi):
    """Aharonov-Bohm potential on S^1: A(x_hat) = phi (-x2, x1), flux phi."""
    return PotentialPair(n=2, A=lambda p: phi * np.stack([-p[:, 1], p[:, 0]], axis=1),
                         label=f"ab_flux:{phi:g}", validation=True)


def azimuthal_3d():
    """A(x) = (-x2, x1, 0)/|x|^2, i.e. A(x_hat) = x_hat x (0, 0, 1) on S^2."""
    return PotentialPair(n=3, A=lambda p: np.stack([-p[:, 1], p[:, 0], np.zeros(len(p))], axis=1),
                         label="azimuthal_3d")


BUILTINS = {
    "free": "a = 0, A = 0 (any n >= 3; n = 2 validation)",
    "constant_a:c": "inverse-square potential a(x_hat) = c, A = 0",
    "ab_flux:phi": "Aharonov-Bohm flux phi on S^1 (n = 2 validation only)",
    "azimuthal_3d": "A(x) = (-x2, x1, 0)/|x|^2 on R^3, a = 0",
}


def builtin_potential(name, n=3):
    """Look up a named built-in potential (see ``BUILTINS``)."""
    key, _, arg = name.partition(":")
    if key == "free":
        return free_potential(n)
    if key == "constant_a":
        return constant_a(float(arg), n)
    if key == "ab_flux":
        if n != 2:
            raise ParameterError("ab_flux is an S^1 (n = 2) validation potential")
        return ab_flux(float(arg))
    if key == "azimuthal_3d":
        if n != 3:
            raise ParameterError("azimuthal_3d lives on R^3")
        return azimuthal_3d()
    raise ParameterError(f"unknown built-in potential {name!r}; known: {sorted(BUILTINS)}")


def potential_from_coefficients(n, a_coeffs, A=None, label="coefficients"):
    """Scalar potential given as harmonic coefficients.

    On S^2 ``a_coeffs`` is a list of (l, m, c) in the real spherical harmonic
    basis; on S^1 a list of (k, c) with k >= 0 meaning c cos(k theta) and
    k < 0 meaning c sin(|k| theta).
    """
    terms = [tuple(t) for t in a_coeffs]
    if n == 3:
        lmax = max(int(t[0]) for t in terms)
        basis = SphericalHarmonicBasis(max(lmax, 1))

        def a(pts):
            vals = basis.evaluate(pts)
            return sum(c * vals[:, basis.index(int(l), int(m))] for l, m, c in terms)
    elif n == 2:
        def a(pts):
            th = np.arctan2(pts[:, 1], pts[:, 0])
            return sum(c * (np.cos(k * th) if k >= 0 else np.sin(-k * th)) for k, c in terms)
    else:
        raise ParameterError("harmonic coefficients supported for n in {2, 3}")
    const = None
    if all((t[0] == 0 and (n == 2 or t[1] == 0)) for t in terms):
        const = sum(t[-1] for t in terms) * (1 / math.sqrt(4 * math.pi) if n == 3 else 1.0)
    return PotentialPair(n=n, a=a, A=A, label=label, a_const=const, validation=(n == 2))


# ----------------------------------------------------------------- bases


def sphere_area(n):
    """Surface measure of S^{n-1}."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def harmonic_dimension(l, n):
    """Multiplicity of the eigenvalue l(l+n-2) of -Laplace on S^{n-1}."""
    if n == 2:
        return 1 if l == 0 else 2
    return int(round(comb(l + n - 1, n - 1) - (comb(l + n - 3, n - 1) if l >= 2 else 0)))


class CircleBasis:
    """Fourier modes e^{ik theta}/sqrt(2 pi), |k| <= kmax, with a trapezoid rule."""

    n = 2

    def __init__(self, kmax):
        if kmax < 1:
            raise ParameterError("basis_size must be >= 1")
        self.kmax = int(kmax)
        self.k = np.arange(-self.kmax, self.kmax + 1)
        self.dim = len(self.k)

    def quadrature(self, extra=0):
        m = 4 * self.kmax + 4 + extra
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2 * np.pi / m)

    def evaluate(self, pts):
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return np.exp(1j * np.outer(th, self.k)) / math.sqrt(2 * math.pi)

    def gradient(self, pts):
        th = np.arctan2(pts[:, 1], pts[:, 0])
        tangent = np.stack([-np.sin(th), np.cos(th)], axis=1)
        dvals = 1j * self.k * self.evaluate(pts)
        return tangent[:, :, None] * dvals[:, None, :]

    def laplace_eigenvalues(self):
        return self.k.astype(float) ** 2


class SphericalHarmonicBasis:
    """Orthonormal real spherical harmonics Y_lm, l <= lmax, ordered by (l, m)."""

    n = 3

    def __init__(self, lmax):
        if lmax < 1:
            raise ParameterError("basis_size must be >= 1")
        self.lmax = int(lmax)
        self.lm = [(l, m) for l in range(self.lmax + 1) for m in range(-l, l + 1)]
        self.dim = len(self.lm)
        self._l = np.array([l for l, _ in self.lm])
        self._m = np.array([m for _, m in self.lm])

    def index(self, l, m):
        return l * l + l + m

    def quadrature(self, extra=0):
        """Gauss-Legendre in cos(theta) x uniform azimuth product rule."""
        nt = 2 * self.lmax + 2 + extra
        nphi = 4 * self.lmax + 4 + 2 * extra
        x, wx = gauss_legendre(nt)
        phi = 2 * np.pi * np.arange(nphi) / nphi
        X, P = np.meshgrid(x, phi, indexing="ij")
        s = np.sqrt(1 - X ** 2)
        pts = np.stack([s * np.cos(P), s * np.sin(P), X], axis=-1).reshape(-1, 3)
        w = (wx[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]).ravel()
        return pts, w

    def _legendre(self, x, s):
        # fully normalized: int_{-1}^{1} Theta_lm^2 dx = 1
        L = self.lmax
        th = np.zeros((L + 2, L + 1, len(x)))
        th[0, 0] = 1 / math.sqrt(2)
        for m in range(1, L + 1):
            th[m, m] = math.sqrt((2 * m + 1) / (2 * m)) * s * th[m - 1, m - 1]
        for m in range(0, L):
            th[m + 1, m] = math.sqrt(2 * m + 3) * x * th[m, m]
        for m in range(0, L + 1):
            for l in range(m + 2, L + 1):
                a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                th[l, m] = a * (x * th[l - 1, m] - b * th[l - 2, m])
        return th[: L + 1]

    def _angles(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        x = np.clip(pts[:, 2] / r, -1.0, 1.0)
        s = np.sqrt(np.maximum(0.0, 1 - x * x))
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        return x, s, phi

    def evaluate(self, pts):
        x, s, phi = self._angles(pts)
        th = self._legendre(x, s)
        out = np.empty((len(x), self.dim))
        for j, (l, m) in enumerate(self.lm):
            if m == 0:
                out[:, j] = th[l, 0] / math.sqrt(2 * math.pi)
            elif m > 0:
                out[:, j] = th[l, m] * np.cos(m * phi) / math.sqrt(math.pi)
            else:
                out[:, j] = th[l, -m] * np.sin(-m * phi) / math.sqrt(math.pi)
        return out

    def gradient(self, pts):
        """Tangential gradient as ambient 3-vectors, shape (N, 3, dim); not valid at the poles."""
        x, s, phi = self._angles(pts)
        if np.any(s < 1e-12):
            raise DomainError("spherical-harmonic gradient undefined at the poles")
        th = self._legendre(x, s)
        dth = np.zeros_like(th)
        for l in range(1, self.lmax + 1):
            for m in range(0, l + 1):
                c = math.sqrt((2 * l + 1) / (2 * l - 1) * (l * l - m * m))
                prev = th[l - 1, m] if m <= l - 1 else 0.0
                dth[l, m] = (l * x * th[l, m] - c * prev) / s
        e_theta = np.stack([x * np.cos(phi), x * np.sin(phi), -s], axis=1)
        e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
        out = np.empty((len(x), 3, self.dim))
        for j, (l, m) in enumerate(self.lm):
            am = abs(m)
            norm = 1 / math.sqrt(2 * math.pi) if m == 0 else 1 / math.sqrt(math.pi)
            if m >= 0:
                ang, dang = np.cos(am * phi), -am * np.sin(am * phi)
            else:
                ang, dang = np.sin(am * phi), am * np.cos(am * phi)
            d_theta = norm * dth[l, am] * ang
            d_phi = norm * th[l, am] * dang / s
            out[:, :, j] = e_theta * d_theta[:, None] + e_phi * d_phi[:, None]
        return out

    def laplace_eigenvalues(self):
        return (self._l * (self._l + 1)).astype(float)


def make_basis(n, basis_size):
    if n == 2:
        return CircleBasis(basis_size)
    if n == 3:
        return SphericalHarmonicBasis(basis_size)
    raise ParameterError("Galerkin assembly is implemented for n in {2, 3}; use closed_form_spectrum otherwise")


def basis_for_dimension(n, dim):
    if n == 2:
        return CircleBasis((dim - 1) // 2)
    root = int(round(math.sqrt(dim)))
    if root * root != dim:
        raise ParameterError(f"matrix size {dim} is not (L+1)^2")
    return SphericalHarmonicBasis(root - 1)


# ----------------------------------------------------------------- gauge & fields


def check_gauge(p, nodes):
    """sup over ``nodes`` of |A(x_hat) . x_hat|."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 0:
        raise ParameterError("need at least one sample node")
    A = p.eval_A(nodes)
    return float(np.max(np.abs(np.einsum("ij,ij->i", A, nodes))))


def sphere_divergence(p, nodes, h=1e-4):
    """div_S A by central differences on the degree-0 extension A(x/|x|)."""
    nodes = np.asarray(nodes, dtype=float)
    total = np.zeros(len(nodes))
    for j in range(p.n):
        e = np.zeros(p.n)
        e[j] = h

        def ext(x):
            return p.eval_A(x / np.linalg.norm(x, axis=1, keepdims=True))[:, j]

        total += (ext(nodes + e) - ext(nodes - e)) / (2 * h)
    return total


@dataclass
class FieldDiagnostics:
    points: np.ndarray
    B: np.ndarray
    B_tau: np.ndarray
    b_tau_sup: float


def field_diagnostics(p, radii, nodes, h=1e-4, ambient=None):
    """Magnetic field matrix B = DA - DA^T and its tangential part at r * x_hat.

    The ambient potential defaults to A(x) = A(x/|x|)/|x|; pass ``ambient``
    (callable on (N, n) points) to examine another field.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii <= 0):
        raise DomainError("radius 0 is not allowed: the potential is singular at the origin")
    nodes = np.asarray(nodes, dtype=float)
    if ambient is None:
        def ambient(x):
            r = np.linalg.norm(x, axis=1, keepdims=True)
            return p.eval_A(x / r) / r
    pts = (radii[:, None, None] * nodes[None, :, :]).reshape(-1, p.n)
    dim = p.n
    D = np.empty((len(pts), dim, dim))
    for j in range(dim):
        step = np.zeros(dim)
        step[j] = h
        D[:, :, j] = (ambient(pts + step) - ambient(pts - step)) / (2 * h)
    B = D - np.transpose(D, (0, 2, 1))
    xhat = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    B_tau = np.einsum("pk,pkj->pj", xhat, B)
    return FieldDiagnostics(pts, B, B_tau, float(np.max(np.linalg.norm(B_tau, axis=1))))


# ----------------------------------------------------------------- spectrum


@dataclass
class AngularMode:
    k: int
    mu_k: float
    nu_k: float
    psi_k: np.ndarray | None
    psi_sup: float
    shell: int = -1


@dataclass
class SpectrumSummary:
    """Sorted angular modes and the constants nu_0, alpha, p(alpha) derived from them.

    For Galerkin spectra ``coeffs[:, k]`` holds the eigenvector of mode k in
    ``basis``; closed-form (zonal) spectra carry ``shell`` labels instead and
    their eigenspace projectors are evaluated analytically.
    """

    n: int
    modes: list
    nu0: float
    alpha: float
    p_alpha: float
    weyl_fit: float
    label: str = ""
    basis: object = None
    coeffs: np.ndarray | None = None
    nodes: np.ndarray | None = None
    weights: np.ndarray | None = None
    zonal: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def mu(self):
        return np.array([m.mu_k for m in self.modes])

    @property
    def nu(self):
        return np.array([m.nu_k for m in self.modes])

    def __len__(self):
        return len(self.modes)

    def eigenfunctions(self, pts, count=None):
        """psi_k at arbitrary unit vectors (Galerkin spectra only), shape (N, count)."""
        if self.coeffs is None:
            raise ParameterError("closed-form spectra expose shell projectors, not individual modes")
        count = len(self.modes) if count is None else count
        return self.basis.evaluate(pts) @ self.coeffs[:, :count]

    def to_dict(self, max_modes=None):
        modes = self.modes if max_modes is None else self.modes[:max_modes]
        return {
            "label": self.label,
            "n": self.n,
            "nu0": self.nu0,
            "alpha": self.alpha,
            "p_alpha": "inf" if math.isinf(self.p_alpha) else self.p_alpha,
            "weyl_fit": self.weyl_fit,
            "zonal": self.zonal,
            "modes": [{"k": m.k, "mu": m.mu_k, "nu": m.nu_k, "psi_sup": m.psi_sup} for m in modes],
        }


def critical_exponent(alpha, n):
    """p(alpha): infinity for alpha >= 0, n/|alpha| otherwise."""
    return math.inf if alpha >= 0 else n / abs(alpha)


def weyl_exponent(nu):
    """Least-squares slope of log nu_k^2 against log(1+k) over the middle third."""
    nu = np.asarray(nu)
    m = len(nu)
    if m < 6:
        return float("nan")
    k = np.arange(m)
    sel = slice(m // 3, 2 * m // 3)
    slope, _ = np.polyfit(np.log1p(k[sel]), np.log(nu[sel] ** 2), 1)
    return float(slope)


def _summary_constants(mu, n):
    shift = (n - 2) ** 2 / 4
    if mu[0] + shift <= POSITIVITY_TOL:
        raise PositivityError(mu[0], n)
    nu = np.sqrt(mu + shift)
    alpha = -(n - 2) / 2 + nu[0]
    return nu, float(nu[0]), float(alpha), critical_exponent(alpha, n)


def assemble_operator(p, basis_size, quad_extra=0):
    """Dense Hermitian Galerkin matrix of L_{A,a} in the Laplace eigenbasis."""
    if basis_size < 1:
        raise ParameterError("basis_size must be >= 1")
    basis = make_basis(p.n, basis_size)
    pts, w = basis.quadrature(quad_extra)
    Y = basis.evaluate(pts).astype(complex)
    G = 1j * basis.gradient(pts)
    if p.A is not None:
        A = p.eval_A(pts)
        G = G + A[:, :, None] * Y[:, None, :]
    a = p.eval_a(pts)
    M = np.einsum("qci,qcj->ij", (G.conj() * w[:, None, None]), G)
    M += (Y.conj() * (w * a)[:, None]).T @ Y
    return 0.5 * (M + M.conj().T)


def solve_spectrum(matrix, p, count):
    """Diagonalize the Galerkin matrix and keep the lowest ``count`` modes."""
    matrix = np.asarray(matrix)
    dim = matrix.shape[0]
    if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(matrix))):
        raise ParameterError("matrix is not Hermitian")
    if count > dim // 2:
        raise ParameterError(f"count {count} exceeds half the basis dimension {dim}")
    mu_all, vecs = np.linalg.eigh(matrix)
    mu = mu_all[:count]
    nu, nu0, alpha, p_alpha = _summary_constants(mu, p.n)
    basis = basis_for_dimension(p.n, dim)
    pts, w = basis.quadrature()
    psi = basis.evaluate(pts) @ vecs[:, :count]
    norms = (np.abs(psi) ** 2 * w[:, None]).sum(axis=0)
    if np.max(np.abs(norms - 1)) > NORMALIZATION_TOL:
        raise ParameterError("eigenfunction normalization lost; increase quadrature")
    modes = [
        AngularMode(k, float(mu[k]), float(nu[k]), psi[:, k], float(np.max(np.abs(psi[:, k]))))
        for k in range(count)
    ]
    return SpectrumSummary(
        n=p.n, modes=modes, nu0=nu0, alpha=alpha, p_alpha=p_alpha,
        weyl_fit=weyl_exponent(nu), label=p.label, basis=basis,
        coeffs=vecs[:, :count], nodes=pts, weights=w,
        meta={"basis_size": int(getattr(basis, "lmax", getattr(basis, "kmax", 0))), "dim": dim},
    )


def closed_form_spectrum(n, a_const=0.0, lmax=160, label=""):
    """Spectrum for A = 0 and constant a on S^{n-1}: mu = l(l+n-2) + a, shell by shell."""
    if n < 2:
        raise ParameterError("n must be >= 2")
    area = sphere_area(n)
    modes = []
    k = 0
    mu0 = a_const
    for l in range(lmax + 1):
        mu = l * (l + n - 2) + a_const
        if l == 0:
            shift = (n - 2) ** 2 / 4
            if mu0 + shift <= POSITIVITY_TOL:
                raise PositivityError(mu0, n)
        nu = math.sqrt(mu + (n - 2) ** 2 / 4)
        mult = harmonic_dimension(l, n)
        sup = math.sqrt(mult / area)
        for _ in range(mult):
            modes.append(AngularMode(k, mu, nu, None, sup, shell=l))
            k += 1
    nu = np.array([m.nu_k for m in modes])
    alpha = -(n - 2) / 2 + nu[0]
    return SpectrumSummary(
        n=n, modes=modes, nu0=float(nu[0]), alpha=float(alpha),
        p_alpha=critical_exponent(alpha, n), weyl_fit=weyl_exponent(nu),
        label=label or f"closed_form(n={n}, a={a_const:g})", zonal=True,
        meta={"a_const": float(a_const), "lmax": lmax},
    )


def zonal_projector(l, n, cos_delta):
    """Kernel of the projector onto degree-l harmonics on S^{n-1} at cos(geodesic angle)."""
    cos_delta = np.clip(np.asarray(cos_delta, dtype=float), -1.0, 1.0)
    area = sphere_area(n)
    dim = harmonic_dimension(l, n)
    if n == 2:
        return dim / area * np.cos(l * np.arccos(cos_delta))
    if n == 3:
        return dim / area * legendre_p(l, cos_delta)
    lam = (n - 2) / 2
    return dim / area * eval_gegenbauer(l, lam, cos_delta) / eval_gegenbauer(l, lam, 1.0)


def legendre_p(lmax_or_l, x, all_degrees=False):
    """P_l(x) by the three-term recurrence; with ``all_degrees`` returns P_0..P_l stacked."""
    x = np.asarray(x, dtype=float)
    L = int(lmax_or_l)
    out = np.empty((L + 1,) + x.shape)
    out[0] = 1.0
    if L >= 1:
        out[1] = x
    for l in range(2, L + 1):
        out[l] = ((2 * l - 1) * x * out[l - 1] - (l - 1) * out[l - 2]) / l
    return out if all_degrees else out[L]


def spectrum_for(p, basis_size=16, count=None, closed_form="auto", lmax=160):
    """Spectrum of a potential pair: closed form when A = 0 and a is constant, else Galerkin."""
    use_closed = closed_form is True or (closed_form == "auto" and p.is_radial_constant)
    if use_closed:
        if not p.is_radial_constant:
            raise ParameterError("closed form needs A = 0 and constant a")
        return closed_form_spectrum(p.n, p.a_const or 0.0, lmax, label=p.label)
    if p.n not in (2, 3):
        raise ParameterError("Galerkin path implemented for n in {2, 3} only")
    gauge = check_gauge(p, make_basis(p.n, basis_size).quadrature()[0])
    if gauge > GAUGE_TOL_ANALYTIC:
        raise ParameterError(f"A violates the transversal gauge: sup |A.x| = {gauge:.3g}")
    M = assemble_operator(p, basis_size)
    count = M.shape[0] // 2 if count is None else count
    return solve_spectrum(M, p, count)
