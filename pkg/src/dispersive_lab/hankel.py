"""Dense Hankel transforms and per-mode spectral multipliers.

For the angular order nu the radial transform is

    (H_nu f)(rho) = int_0^inf (r rho)^{-(n-2)/2} J_nu(r rho) f(r) r^{n-1} dr,

unitary on L^2(r^{n-1} dr) and its own inverse.  A function F of the
operator acts on mode k as H_nu [F(rho^2) H_nu c_k].
"""

from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math
import warnings

import numpy as np

from .errors import ParameterError, UnsupportedOrderError
from .quadrature import composite_gauss_legendre
from .special import bessel_j

log = logging.getLogger(__name__)

DECAY_TOL = 1e-12


@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre rule for int_{r_min}^{r_max} (.) r^{n-1} dr.

    Panels have width ``panel_width``; the first few are geometrically
    refined toward ``r_min`` so that power-law behaviour near the origin is
    integrated accurately.
    """

    n: int = 3
    r_min: float = 1e-3
    r_max: float = 40.0
    panel_width: float = 0.25
    order: int = 16
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    panels: int = field(init=False, compare=False)

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max) or self.panel_width <= 0:
            raise ParameterError("need 0 < r_min < r_max and panel_width > 0")
        breaks = [self.r_min]
        h = min(self.panel_width, max(self.r_min, self.panel_width / 64))
        while breaks[-1] + h < self.r_max - 1e-12:
            breaks.append(breaks[-1] + h)
            h = min(2 * h, self.panel_width)
        breaks.append(self.r_max)
        x, w = composite_gauss_legendre(np.asarray(breaks), self.order)
        w = w * x ** (self.n - 1)
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "panels", len(breaks) - 1)

    def __len__(self):
        return len(self.nodes)

    def norm(self, values):
        """L^2(r^{n-1} dr) norm of samples on this grid."""
        values = np.asarray(values)
        return float(math.sqrt(np.sum(np.abs(values) ** 2 * self.weights)))

    def inner(self, u, v):
        return complex(np.sum(np.conj(u) * v * self.weights))


@dataclass
class ModeCoefficient:
    """Radial profile c_k(r) of one angular mode on a grid."""

    k: int
    nu: float
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.grid),):
            raise ParameterError("mode samples do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("mode samples must be finite")

    def norm(self):
        return self.grid.norm(self.values)

    def with_values(self, values, grid=None):
        return ModeCoefficient(self.k, self.nu, values, grid or self.grid)


@lru_cache(maxsize=32)
def _kernel_matrix(nu, src, dst):
    # entry (i, j) = (rho_i r_j)^{-(n-2)/2} J_nu(rho_i r_j) w_j
    prod = np.outer(dst.nodes, src.nodes)
    J = bessel_j(nu, prod.ravel()).reshape(prod.shape)
    mat = prod ** (-(src.n - 2) / 2) * J * src.weights[None, :]
    mat.setflags(write=False)
    return mat


def hankel_matrix(nu, src, dst=None):
    """Dense quadrature matrix of H_nu from ``src`` samples to ``dst`` nodes."""
    if nu < 0:
        raise UnsupportedOrderError(f"Hankel transform needs nu >= 0, got {nu}")
    dst = src if dst is None else dst
    if dst.n != src.n:
        raise ParameterError("grids belong to different dimensions")
    return _kernel_matrix(float(nu), src, dst)


def hankel_forward(nu, f, grid, rho_grid=None):
    """H_nu f sampled on ``rho_grid`` (defaults to ``grid``)."""
    f = np.asarray(f)
    if f.shape != (len(grid),):
        raise ParameterError(f"samples have shape {f.shape}, grid has {len(grid)} nodes")
    scale = np.max(np.abs(f)) if f.size else 0.0
    if scale > 0 and abs(f[-1]) > DECAY_TOL * scale:
        warnings.warn(f"input does not decay at r_max = {grid.r_max}: |f| = {abs(f[-1]):.2e}",
                      RuntimeWarning, stacklevel=2)
    return hankel_matrix(nu, grid, rho_grid) @ f


def apply_multiplier(F, mode, rho_grid=None, out_grid=None):
    """Per-mode action of F(L): H_nu [F(rho^2) (H_nu c_k)].

    ``F`` is a callable of rho^2; ``rho_grid`` is the frequency grid for the
    intermediate transform and ``out_grid`` the radial grid of the result.
    """
    rho_grid = mode.grid if rho_grid is None else rho_grid
    out_grid = mode.grid if out_grid is None else out_grid
    freq = hankel_matrix(mode.nu, mode.grid, rho_grid) @ mode.values
    mult = np.asarray(F(rho_grid.nodes ** 2))
    mult = np.broadcast_to(mult, freq.shape)
    if not np.all(np.isfinite(mult)):
        raise ParameterError("multiplier is not bounded on the frequency grid")
    out = hankel_matrix(mode.nu, rho_grid, out_grid) @ (mult * freq)
    return mode.with_values(out, out_grid)


def multiplier_norm_ratio(F, mode, rho_grid=None):
    """||F(rho^2) H c|| / ||c|| computed on the frequency side."""
    rho_grid = mode.grid if rho_grid is None else rho_grid
    freq = hankel_matrix(mode.nu, mode.grid, rho_grid) @ mode.values
    return rho_grid.norm(F(rho_grid.nodes ** 2) * freq) / mode.norm()


# ------------------------------------------------------------ Littlewood-Paley


def _smooth_edge(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def lp_step(lam):
    """C^infinity step: 1 for lam <= 3/4, 0 for lam >= 4/3.

    chi(lam) = f(4/3 - lam) / (f(4/3 - lam) + f(lam - 3/4)), f(x) = e^{-1/x} for x > 0.
    """
    lam = np.asarray(lam, dtype=float)
    a = _smooth_edge(4.0 / 3.0 - lam)
    b = _smooth_edge(lam - 0.75)
    return a / (a + b)


def lp_bump(lam):
    """phi(lam) = chi(lam/2) - chi(lam), supported in [3/4, 8/3].

    sum_j phi(2^{-j} lam) telescopes to 1 for every lam > 0.
    """
    lam = np.asarray(lam, dtype=float)
    return lp_step(0.5 * lam) - lp_step(lam)


def lp_multiplier(j):
    """F(rho^2) = phi(2^{-j} rho) as a callable of rho^2."""
    return lambda rho2: lp_bump(2.0 ** (-j) * np.sqrt(rho2))


def littlewood_paley_project(j, mode, rho_grid=None):
    """phi_j(sqrt L) applied to one mode."""
    return apply_multiplier(lp_multiplier(j), mode, rho_grid)


# ------------------------------------------------------------ closed forms


def gaussian_mode(nu, grid, k=0):
    """g(r) = r^{nu-(n-2)/2} e^{-r^2/2}, a fixed point of H_nu."""
    r = grid.nodes
    return ModeCoefficient(k, nu, r ** (nu - (grid.n - 2) / 2) * np.exp(-r * r / 2), grid)


def gaussian_evolution(nu, n, r, t):
    """Exact e^{it rho^2} evolution of ``gaussian_mode`` at radius r."""
    a = 0.5 - 1j * t
    return r ** (nu - (n - 2) / 2) * (0.5 / a) ** (nu + 1) * np.exp(-r * r / (4 * a))


def bump(r, center=2.0, width=0.5):
    """Gaussian bump e^{-((r - center)/width)^2}."""
    return np.exp(-(((np.asarray(r) - center) / width) ** 2))


# ------------------------------------------------------------ Schrodinger evolution


@dataclass
class RadialSamples:
    """Values on arbitrary radial nodes with weights for int (.) r^{n-1} dr."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def lp_norm(self, p):
        a = np.abs(self.values)
        if math.isinf(p):
            return float(np.max(a))
        return float(np.sum(a ** p * self.weights) ** (1.0 / p))


def evolve(mode, t, rho_grid=None, t_switch=1.0):
    """e^{it L} on one mode, i.e. the multiplier e^{it rho^2}.

    For |t| <= ``t_switch`` this is ``apply_multiplier`` on the mode's grid.
    For larger |t| the solution has spread far beyond that grid, and the
    Weber kernel gives the exact factorization

        c(t, 2 t rho) = e^{i nu pi/2} (2t)^{-(n-2)/2} / (2 tau) e^{-(2 t rho)^2/(4 tau)}
                        * H_nu[e^{-i r^2/(4t)} c](rho),   tau = -i t,

    so the profile is sampled at r = 2|t| rho on a fixed frequency grid.
    Negative times use c(-t) = conj(e^{itL} conj(c)).
    """
    rho_grid = mode.grid if rho_grid is None else rho_grid
    if t < 0:
        out = evolve(mode.with_values(np.conj(mode.values)), -t, rho_grid, t_switch)
        return RadialSamples(out.nodes, out.weights, np.conj(out.values))
    if t == 0:
        return RadialSamples(mode.grid.nodes, mode.grid.weights, mode.values.copy())
    return evolve_many(mode, [t], rho_grid, t_switch)[0]


def evolve_many(mode, times, rho_grid=None, t_switch=1.0):
    """``evolve`` for many positive times, batched into two matrix products."""
    rho_grid = mode.grid if rho_grid is None else rho_grid
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ParameterError("evolve_many expects positive times")
    n = mode.grid.n
    out = [None] * len(times)
    near = np.nonzero(times <= t_switch)[0]
    far = np.nonzero(times > t_switch)[0]
    if len(near):
        freq = hankel_matrix(mode.nu, mode.grid, rho_grid) @ mode.values
        phases = np.exp(1j * np.outer(rho_grid.nodes ** 2, times[near]))
        vals = hankel_matrix(mode.nu, rho_grid, mode.grid) @ (phases * freq[:, None])
        for j, i in enumerate(near):
            out[i] = RadialSamples(mode.grid.nodes, mode.grid.weights, vals[:, j])
    if len(far):
        tf = times[far]
        chirps = np.exp(-1j * np.outer(mode.grid.nodes ** 2, 1 / (4 * tf)))
        g = hankel_matrix(mode.nu, mode.grid, rho_grid) @ (chirps * mode.values[:, None])
        for j, i in enumerate(far):
            r, w, pref = fresnel_factors(mode.nu, n, tf[j], rho_grid)
            out[i] = RadialSamples(r, w, pref * g[:, j])
    return out


def fresnel_factors(nu, n, t, rho_grid):
    """Sample radii 2 t rho, their weights and the prefactor of the Fresnel factorization."""
    tau = -1j * t
    r = 2 * t * rho_grid.nodes
    pref = np.exp(0.5j * math.pi * nu) * (2 * t) ** (-(n - 2) / 2) / (2 * tau) * np.exp(-r * r / (4 * tau))
    return r, rho_grid.weights * (2 * t) ** n, pref
