"""Heat and Schrodinger kernels of L_{A,a} as sums over angular modes.

Each angular channel (a shell or a cluster of equal nu_k) contributes

    W_c(x_hat, y_hat) * K_nu(tau; r1, r2),
    K_nu = (r1 r2)^{-(n-2)/2} e^{-(r1^2 + r2^2)/(4 tau)} / (2 tau) * I_nu(r1 r2 / (2 tau)),

with tau = t for e^{-tL} and tau = eps + i t for e^{-itL}.  The limit
eps -> 0 is the formula at tau = i t itself, evaluated directly; Richardson
extrapolation from eps in {h, 2h, 4h} remains available as ``eps_limit``.  The kernel of e^{itL} is the complex
conjugate, i.e. the value at -t.

A second route evaluates I_nu through its integral split with the mode sum
moved inside the s-integrals, where it becomes the angular kernels of
cos(s sqrt(P)) and e^{-s sqrt(P)}.  Agreement of both routes is tested.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import logging
import math
import warnings

import numpy as np

from .angular import harmonic_dimension, sphere_area, zonal_projector
from .errors import DomainError, ParameterError
from .special import bessel_i_orders, lgamma, split_first_nodes, split_second_contour

log = logging.getLogger(__name__)

FLAVORS = ("heat", "schrodinger")
CLUSTER_TOL = 1e-8
TAIL_WARN = 1e-6


# ----------------------------------------------------------------- point pairs


@dataclass
class PairGrid:
    """Point pairs x = r1 x_hat, y = r2 y_hat."""

    r1: np.ndarray
    r2: np.ndarray
    xhat: np.ndarray
    yhat: np.ndarray

    def __post_init__(self):
        self.r1 = np.atleast_1d(np.asarray(self.r1, dtype=float))
        self.r2 = np.atleast_1d(np.asarray(self.r2, dtype=float))
        self.xhat = np.atleast_2d(np.asarray(self.xhat, dtype=float))
        self.yhat = np.atleast_2d(np.asarray(self.yhat, dtype=float))
        if not (len(self.r1) == len(self.r2) == len(self.xhat) == len(self.yhat)):
            raise ParameterError("pair arrays have inconsistent lengths")
        if np.any(self.r1 <= 0) or np.any(self.r2 <= 0):
            raise DomainError("radii must be positive")

    @property
    def n(self):
        return self.xhat.shape[1]

    @property
    def cos_delta(self):
        return np.clip(np.einsum("ij,ij->i", self.xhat, self.yhat), -1.0, 1.0)

    @property
    def delta(self):
        return np.arccos(self.cos_delta)

    def __len__(self):
        return len(self.r1)

    def distance(self):
        d2 = self.r1 ** 2 + self.r2 ** 2 - 2 * self.r1 * self.r2 * self.cos_delta
        return np.sqrt(np.maximum(d2, 0.0))

    def subset(self, mask):
        return PairGrid(self.r1[mask], self.r2[mask], self.xhat[mask], self.yhat[mask])

    @classmethod
    def from_polar(cls, r1, r2, delta, n=3):
        """Pairs with x_hat at the pole and y_hat on a geodesic at angle delta from it."""
        r1, r2, delta = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (r1, r2, delta))
        r1, r2, delta = np.broadcast_arrays(r1, r2, delta)
        m = r1.size
        xhat = np.zeros((m, n))
        yhat = np.zeros((m, n))
        if n == 2:
            xhat[:, 0] = 1.0
            yhat[:, 0] = np.cos(delta.ravel())
            yhat[:, 1] = np.sin(delta.ravel())
        else:
            xhat[:, -1] = 1.0
            yhat[:, -1] = np.cos(delta.ravel())
            yhat[:, 0] = np.sin(delta.ravel())
        return cls(r1.ravel(), r2.ravel(), xhat, yhat)

    @classmethod
    def product(cls, r1_list, r2_list, delta_list, n=3):
        R1, R2, D = np.meshgrid(r1_list, r2_list, delta_list, indexing="ij")
        return cls.from_polar(R1.ravel(), R2.ravel(), D.ravel(), n)


# ----------------------------------------------------------------- radial kernel


def _tau(t, eps, flavor):
    if flavor not in FLAVORS:
        raise ParameterError(f"flavor must be one of {FLAVORS}")
    if t == 0:
        raise DomainError("t = 0 is the identity; the kernel is not a function there")
    if flavor == "heat":
        if t < 0:
            raise DomainError("the heat semigroup needs t > 0")
        return complex(t, 0.0)
    if eps < 0:
        raise ParameterError("regularization eps must be >= 0")
    return complex(eps, t)


def _prefactor(tau, r1, r2, n):
    """(r1 r2)^{-(n-2)/2} e^{-(r1^2+r2^2)/(4 tau) + Re z} / (2 tau), z = r1 r2/(2 tau)."""
    z = r1 * r2 / (2 * tau)
    # the scaled Bessel function absorbs e^{Re z}
    expo = -(r1 * r1 + r2 * r2) / (4 * tau) + z.real
    return (r1 * r2) ** (-(n - 2) / 2) / (2 * tau) * np.exp(expo)


def _radial_block(nus, tau, r1, r2, n):
    """K_nu(tau; r1, r2) for all ``nus`` at one radial pair (complex vector)."""
    z = r1 * r2 / (2 * tau)
    return _prefactor(tau, r1, r2, n) * bessel_i_orders(nus, z, scaled=True)


def _richardson(values_at):
    """eps -> 0 limit from values at eps = h, 2h, 4h (error O(h^3))."""
    k1, k2, k4 = values_at
    return (8 * k1 - 6 * k2 + k4) / 3


def richardson_step(t):
    return 1e-3 * abs(t)


def radial_mode_kernel(nu, t, r1, r2, eps=0.0, flavor="heat", n=3, eps_limit="direct"):
    """Radial kernel K_nu of one angular channel.

    For ``flavor="schrodinger"`` and ``eps=0`` the limit eps -> 0 is taken
    at tau = i t directly (``eps_limit="direct"``) or extrapolated from eps
    in {h, 2h, 4h}, h = 1e-3 |t| (``eps_limit="richardson"``, error
    O(h^3 z^3)).  With ``eps > 0`` the regularized value is returned as is.
    """
    r1a, r2a = np.broadcast_arrays(np.asarray(r1, dtype=float), np.asarray(r2, dtype=float))
    scalar = r1a.ndim == 0
    r1a, r2a = np.atleast_1d(r1a).ravel(), np.atleast_1d(r2a).ravel()
    if np.any(r1a <= 0) or np.any(r2a <= 0):
        raise DomainError("radii must be positive")
    nus = np.array([float(nu)])
    out = np.array([_channel_radial(nus, t, a, b, eps, flavor, n, eps_limit)[0] for a, b in zip(r1a, r2a)])
    if flavor == "heat":
        out = out.real
    return out[0] if scalar else out.reshape(np.shape(np.broadcast_arrays(r1, r2)[0]))


EPS_LIMITS = ("direct", "richardson")


def _channel_radial(nus, t, r1, r2, eps, flavor, n, eps_limit="direct"):
    if eps_limit not in EPS_LIMITS:
        raise ParameterError(f"unknown eps_limit {eps_limit!r}; expected one of {EPS_LIMITS}")
    if flavor == "schrodinger" and eps == 0 and eps_limit == "richardson":
        h = richardson_step(t)
        return _richardson([_radial_block(nus, _tau(t, m * h, flavor), r1, r2, n) for m in (1, 2, 4)])
    return _radial_block(nus, _tau(t, eps, flavor), r1, r2, n)


def free_kernel(n, t, pairs, flavor="heat"):
    """Free kernel (4 pi tau)^{-n/2} e^{-|x-y|^2/(4 tau)} with tau = t or i t."""
    tau = complex(t, 0) if flavor == "heat" else complex(0, t)
    d2 = pairs.distance() ** 2
    return (4 * math.pi * tau) ** (-n / 2) * np.exp(-d2 / (4 * tau))


# ----------------------------------------------------------------- channels


@dataclass
class Channels:
    """Angular channels: orders nu_c and the angular kernels W_c(x_hat, y_hat).

    Zonal channels are shells of a rotation-invariant spectrum with W_c given
    by the projector onto degree-l harmonics; Galerkin channels are clusters
    of numerically equal nu_k with W_c = sum_k psi_k(x_hat) conj(psi_k(y_hat)).
    """

    nus: np.ndarray
    counts: np.ndarray
    members: list
    spectrum: object
    shells: np.ndarray | None = None

    @property
    def modes(self):
        return int(self.counts.sum())

    def angular(self, pairs):
        """(P, C) matrix of W_c at each pair."""
        s = self.spectrum
        if s.zonal:
            cd = pairs.cos_delta
            return np.stack([zonal_projector(int(l), s.n, cd) for l in self.shells], axis=1).astype(complex)
        idx = np.concatenate(self.members)
        psi_x = s.eigenfunctions(pairs.xhat, idx.max() + 1)
        psi_y = s.eigenfunctions(pairs.yhat, idx.max() + 1)
        out = np.empty((len(pairs), len(self.nus)), dtype=complex)
        for c, mem in enumerate(self.members):
            out[:, c] = np.sum(psi_x[:, mem] * np.conj(psi_y[:, mem]), axis=1)
        return out

    def subset(self, keep):
        keep = np.asarray(keep, dtype=bool)
        return Channels(self.nus[keep], self.counts[keep], [m for m, k in zip(self.members, keep) if k],
                        self.spectrum, None if self.shells is None else self.shells[keep])


def build_channels(spectrum, cutoff=None):
    """Group modes into channels; keep whole channels with cumulative count <= cutoff."""
    nu = spectrum.nu
    groups = []
    start = 0
    for k in range(1, len(nu) + 1):
        if k == len(nu) or abs(nu[k] - nu[start]) > CLUSTER_TOL * max(1.0, nu[start]):
            groups.append(list(range(start, k)))
            start = k
    if spectrum.coeffs is not None and len(groups) > 1:
        # the last cluster may be cut by ``count``; drop it to keep sums basis independent
        groups = groups[:-1]
    cutoff = len(nu) if cutoff is None else int(cutoff)
    keep, total = [], 0
    for g in groups:
        if total + len(g) > cutoff:
            break
        keep.append(g)
        total += len(g)
    if not keep:
        raise ParameterError(f"cutoff {cutoff} is smaller than the first channel")
    nus = np.array([float(np.mean(nu[g])) for g in keep])
    counts = np.array([len(g) for g in keep])
    shells = np.array([spectrum.modes[g[0]].shell for g in keep]) if spectrum.zonal else None
    return Channels(nus, counts, [np.array(g) for g in keep], spectrum, shells)


def auto_cutoff(spectrum, zmax):
    """Number of modes with nu <= |z|max + 10 |z|max^{1/3} + 25, whole channels."""
    nu_cut = zmax + 10 * zmax ** (1 / 3) + 25
    return int(np.sum(spectrum.nu <= nu_cut))


def _tail_bound(channels, n, tau, r1, r2):
    """Bound on the discarded channels from |I_nu(z)| <= (|z|/2)^nu e^{|z|^2/(4(nu+1))} / Gamma(nu+1)."""
    az = r1 * r2 / (2 * abs(tau))
    log_pref = (-(n - 2) / 2) * math.log(r1 * r2) - math.log(2 * abs(tau)) + (
        -(r1 * r1 + r2 * r2) * (1 / (4 * tau)).real
    )
    nu_next = channels.nus[-1] + 1.0
    area = sphere_area(n)
    total = 0.0
    for j in range(400):
        nu = nu_next + j
        l = max(0, int(math.ceil(nu - (n - 2) / 2)))
        w = harmonic_dimension(l, n) / area
        log_i = nu * math.log(max(az, 1e-300) / 2) + az * az / (4 * (nu + 1)) - lgamma(nu + 1)
        term = w * math.exp(min(log_pref + log_i, 700.0))
        total += term
        if j > 5 and term < 1e-18 * max(total, 1e-300):
            break
    return total


# ----------------------------------------------------------------- kernel field


@dataclass
class KernelField:
    t: float
    flavor: str
    eps: float
    cutoff: int
    pairs: PairGrid
    values: np.ndarray
    tail_estimate: float
    tail_heuristic: bool
    method: str = "weber"
    label: str = ""
    meta: dict = field(default_factory=dict)
    term_scale: np.ndarray | None = None

    def rounding_error(self):
        """Floating-point error bound of the mode sum, ~ eps * sum_c |W_c K_c| per pair."""
        if self.term_scale is None:
            return np.zeros(len(self.values))
        return 16 * np.finfo(float).eps * self.term_scale

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "r1", "r2", "delta", "re", "im", "cutoff", "eps"])
        for r1, r2, d, v in zip(self.pairs.r1, self.pairs.r2, self.pairs.delta, self.values):
            w.writerow([repr(float(self.t)), repr(float(r1)), repr(float(r2)), repr(float(d)),
                        repr(float(v.real)), repr(float(v.imag)), self.cutoff, repr(float(self.eps))])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "t": self.t, "flavor": self.flavor, "eps": self.eps, "cutoff": self.cutoff,
            "method": self.method, "label": self.label,
            "tail_estimate": self.tail_estimate, "tail_heuristic": self.tail_heuristic,
            "r1": self.pairs.r1.tolist(), "r2": self.pairs.r2.tolist(), "delta": self.pairs.delta.tolist(),
            "re": self.values.real.tolist(), "im": self.values.imag.tolist(), "meta": self.meta,
        }, sort_keys=True, indent=1)


def _unique_radial(pairs):
    key = np.stack([pairs.r1, pairs.r2], axis=1)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    return uniq, inverse.ravel()


def full_kernel(spectrum, t, pairs, cutoff=None, flavor="heat", eps=0.0, method="weber",
                channels=None, warn=True, eps_limit="direct"):
    """Kernel of e^{-tL} (heat) or e^{-itL} (Schrodinger) at the given pairs.

    Parameters
    ----------
    spectrum : SpectrumSummary
    t : float
    pairs : PairGrid
    cutoff : int, optional
        Number of angular modes kept, rounded down to whole channels.  The
        default adapts to the largest r1 r2 / (2|t|) on the grid.
    method : {"weber", "mbessel_split"}
        Weber closed form, or the integral split with the mode sum inside
        the s-integrals (eps = 0 exactly).
    eps_limit : {"direct", "richardson"}
        How the Weber route takes eps -> 0 when ``eps=0``; see
        ``radial_mode_kernel``.
    channels : Channels, optional
        Precomputed channel subset (used by ``project``).
    """
    if pairs.n != spectrum.n:
        raise ParameterError("pair grid and spectrum live in different dimensions")
    tau = _tau(t, eps, flavor)
    uniq, inverse = _unique_radial(pairs)
    zmax = float(np.max(uniq[:, 0] * uniq[:, 1])) / (2 * abs(tau))
    if channels is None:
        cutoff = auto_cutoff(spectrum, zmax) if cutoff is None else cutoff
        channels = build_channels(spectrum, cutoff)
    W = channels.angular(pairs)
    n = spectrum.n
    R = np.empty((len(uniq), len(channels.nus)), dtype=complex)
    tails = np.empty(len(uniq))
    pref = np.empty(len(uniq))
    for i, (a, b) in enumerate(uniq):
        pref[i] = abs(_prefactor(tau, a, b, n))
        if method == "weber":
            R[i] = _channel_radial(channels.nus, t, a, b, eps, flavor, n, eps_limit)
        elif method == "mbessel_split":
            R[i] = np.nan
        else:
            raise ParameterError(f"unknown method {method!r}")
        tails[i] = _tail_bound(channels, n, tau, a, b)
    term_scale = None
    if method == "weber":
        terms = W * R[inverse]
        values = np.sum(terms, axis=1)
        # scaled Bessel values carry an absolute error ~ machine eps
        term_scale = np.sum(np.abs(W), axis=1) * pref[inverse] + np.sum(np.abs(terms), axis=1)
    else:
        values = _split_sum(channels, W, uniq, inverse, t, flavor, n)
    if flavor == "heat" and spectrum.zonal:
        # no magnetic part: the heat kernel is real
        values = values.real.astype(complex)
    tail = float(np.max(tails[inverse])) if len(pairs) else 0.0
    vmax = float(np.max(np.abs(values))) if len(pairs) else 0.0
    if warn and tail > TAIL_WARN * vmax:
        warnings.warn(f"mode tail estimate {tail:.2e} exceeds 1e-6 of max |K| = {vmax:.2e}; raise the cutoff",
                      RuntimeWarning, stacklevel=2)
    return KernelField(
        t=float(t), flavor=flavor, eps=float(eps), cutoff=channels.modes, pairs=pairs, values=values,
        tail_estimate=tail, tail_heuristic=bool(zmax > 1.0), method=method, label=spectrum.label,
        meta={"channels": len(channels.nus), "nu_max": float(channels.nus[-1]), "eps_limit": eps_limit},
        term_scale=term_scale,
    )


def _split_sum(channels, W, uniq, inverse, t, flavor, n, order=24):
    """Mode sum with I_nu written as its two-integral split (eps = 0)."""
    if flavor == "schrodinger" and t == 0:
        raise DomainError("t = 0")
    tau = complex(t, 0) if flavor == "heat" else complex(0, t)
    nus = channels.nus
    sin_nu = np.sin(math.pi * nus)
    values = np.empty(len(inverse), dtype=complex)
    for i, (a, b) in enumerate(uniq):
        sel = np.nonzero(inverse == i)[0]
        Wp = W[sel]
        z = a * b / (2 * tau)
        shift = z.real
        pref = (a * b) ** (-(n - 2) / 2) / (2 * tau) * np.exp(-(a * a + b * b) / (4 * tau) + shift)
        s, w = split_first_nodes(z, float(nus.max()), order)
        wave = Wp @ np.cos(np.outer(nus, s))                   # angular kernel of cos(s sqrt P)
        first = wave @ (np.exp(z * np.cos(s) - shift) * w) / math.pi
        active = np.abs(sin_nu) > 1e-15
        second = np.zeros(len(sel), dtype=complex)
        if active.any():
            sc, wc = split_second_contour(z, float(nus[active].min()), order, float(nus[active].max()))
            poisson = (Wp[:, active] * sin_nu[active]) @ np.exp(-np.outer(nus[active], sc))
            second = poisson @ (np.exp(-z * np.cosh(sc) - shift) * wc) / math.pi
        values[sel] = pref * (first - second)
    return values


# ----------------------------------------------------------------- projections


@dataclass
class ProjectionSplit:
    """Channel indices with nu < (n-2)/2 (low) and the rest (high)."""

    low: np.ndarray
    high: np.ndarray
    n: int

    def low_modes(self, channels):
        return int(channels.counts[self.low].sum())


def projection_split(channels, n):
    nus = channels.nus
    low = np.nonzero(nus < (n - 2) / 2)[0]
    high = np.nonzero(nus >= (n - 2) / 2)[0]
    return ProjectionSplit(low, high, n)


def project(split, which, spectrum, t, pairs, cutoff=None, flavor="heat", eps=0.0, channels=None):
    """Kernel of the propagator composed with P_< (``low``) or P_>= (``high``)."""
    if which not in ("low", "high"):
        raise ParameterError("which must be 'low' or 'high'")
    if channels is None:
        tau = _tau(t, eps, flavor)
        zmax = float(np.max(pairs.r1 * pairs.r2)) / (2 * abs(tau))
        channels = build_channels(spectrum, auto_cutoff(spectrum, zmax) if cutoff is None else cutoff)
    idx = split.low if which == "low" else split.high
    keep = np.zeros(len(channels.nus), dtype=bool)
    keep[idx] = True
    if not keep.any():
        return KernelField(float(t), flavor, float(eps), 0, pairs, np.zeros(len(pairs), dtype=complex),
                           0.0, False, "weber", spectrum.label, {"projection": which, "empty": True})
    field_ = full_kernel(spectrum, t, pairs, flavor=flavor, eps=eps, channels=channels.subset(keep), warn=False)
    field_.meta["projection"] = which
    return field_
