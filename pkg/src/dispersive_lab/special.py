"""Bessel functions J_nu and I_nu of real order nu >= 0.

J_nu uses the ascending series for small arguments, the Poisson integral

    J_nu(x) = (x/2)^nu / (Gamma(nu+1/2) Gamma(1/2)) * int_{-1}^{1} cos(s x) (1-s^2)^(nu-1/2) ds

(Gauss-Jacobi in s) for moderate arguments and the Hankel asymptotic
expansion for x > 30 + nu^2.

I_nu(z), Re z >= 0, is computed from

    I_nu(z) = 1/pi int_0^pi e^{z cos s} cos(nu s) ds
              - sin(nu pi)/pi int_0^inf e^{-z cosh s - nu s} ds.

The first integral uses uniform Gauss panels sized by |Im z| and nu.  The
second one is taken along the contour 0 -> i*phi -> i*phi + inf with
phi = -arg z, on which e^{-z cosh s} decays like e^{-|z| sinh u}; this is
exact by Cauchy's theorem and makes purely imaginary z tractable.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, UnsupportedOrderError
from .quadrature import gauss_jacobi, gauss_legendre, composite_gauss_legendre, graded_breaks

_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

METHODS = ("series", "poisson_integral", "mbessel_split", "asymptotic")


@dataclass(frozen=True)
class BesselEval:
    order: float
    argument: complex
    value: complex
    scaled: bool
    method: str


def _lanczos_sum(x):
    s = np.full_like(x, _LANCZOS_COEF[0])
    for i in range(1, 9):
        s = s + _LANCZOS_COEF[i] / (x + i)
    return s


def lgamma(x):
    """log Gamma(x) for x > 0 (Lanczos, g = 7, 9 terms)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("lgamma implemented for positive arguments only")
    small = x < 0.5
    xs = np.where(small, 1.0 - x, x) - 1.0
    t = xs + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (xs + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xs))
    if np.any(small):
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x), positive on (0, 1)
        refl = math.log(math.pi) - np.log(np.sin(np.pi * x)) - out
        out = np.where(small, refl, out)
    return out if out.ndim else float(out)


def gamma(x):
    """Gamma(x) for real x away from the poles (Lanczos, g = 7, 9 terms)."""
    x = np.asarray(x, dtype=float)
    small = x < 0.5
    xs = np.where(small, 1.0 - x, x) - 1.0
    t = xs + _LANCZOS_G + 0.5
    g = math.sqrt(2.0 * math.pi) * t ** (xs + 0.5) * np.exp(-t) * _lanczos_sum(xs)
    if np.any(small):
        with np.errstate(divide="ignore"):
            g = np.where(small, math.pi / (np.sin(np.pi * x) * g), g)
    return g if g.ndim else float(g)


# ---------------------------------------------------------------- J_nu


def _check_order(nu):
    nu = float(nu)
    if nu < 0 or not math.isfinite(nu):
        raise UnsupportedOrderError(f"order nu = {nu} not supported (need nu >= 0)")
    return nu


def _j_series(nu, x):
    half = 0.5 * x
    with np.errstate(divide="ignore"):
        lead = np.exp(nu * np.log(half) - lgamma(nu + 1.0))
    if nu == 0:
        lead = np.where(x == 0, 1.0, lead)
    q = -half * half
    term = lead.copy()
    total = lead.copy()
    for m in range(1, 400):
        term = term * q / (m * (m + nu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _poisson_nodes(nu, x_max):
    order = 40 + 16 * int(math.ceil(x_max / 16.0))
    return gauss_jacobi(order, nu - 0.5, nu - 0.5)


def _j_poisson(nu, x):
    out = np.empty_like(x)
    bins = np.ceil(x / 16.0).astype(int)
    pref_log = nu * np.log(0.5 * x) - lgamma(nu + 0.5) - 0.5 * math.log(math.pi)
    for b in np.unique(bins):
        sel = bins == b
        s, w = _poisson_nodes(nu, 16.0 * b)
        integral = np.cos(np.outer(x[sel], s)) @ w
        out[sel] = np.exp(pref_log[sel]) * integral
    return out


def _j_asymptotic(nu, x):
    mu = 4.0 * nu * nu
    inv = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 60):
        a = a * (mu - (2 * k - 1) ** 2) * inv / k
        mag = np.abs(a)
        # stop each entry once terms start growing (optimal truncation)
        grow = mag > prev
        done |= grow
        live = ~done
        sign = (-1) ** (k // 2)
        if k % 2:
            q = np.where(live, q + sign * a, q)
        else:
            p = np.where(live, p + sign * a, p)
        prev = np.where(live, mag, prev)
        done |= mag < 1e-17
        if done.all():
            break
    omega = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def j_method(nu, x):
    """Name of the evaluation route bessel_j uses at (nu, x)."""
    if x <= max(2.0, 0.5 * nu):
        return "series"
    if x > 30.0 + nu * nu:
        return "asymptotic"
    return "poisson_integral"


def bessel_j(nu, x, method="auto"):
    """J_nu(x) for nu >= 0 and x >= 0.

    ``method`` forces one of ``series``, ``poisson_integral`` or
    ``asymptotic``; ``auto`` picks by region.
    """
    nu = _check_order(nu)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise DomainError("bessel_j needs x >= 0")
    out = np.empty_like(xa)
    if method == "auto":
        ser = xa <= max(2.0, 0.5 * nu)
        asy = (~ser) & (xa > 30.0 + nu * nu)
        poi = ~(ser | asy)
    else:
        ser = np.full(xa.shape, method == "series")
        asy = np.full(xa.shape, method == "asymptotic")
        poi = np.full(xa.shape, method == "poisson_integral")
        if not (ser.any() or asy.any() or poi.any()):
            raise ValueError(f"unknown method {method!r}")
    if ser.any():
        out[ser] = _j_series(nu, xa[ser])
    if poi.any() and method == "auto":
        # the Poisson integral cancels by a factor ~ (x/2)^nu / Gamma(nu+1/2);
        # beyond 1e4 go through J_nu(x) = e^{i nu pi/2} I_nu(-i x) instead
        lossy = poi & (nu * np.log(0.5 * np.maximum(xa, 1e-300)) - lgamma(nu + 0.5) > 4 * math.log(10))
        if lossy.any():
            out[lossy] = [_j_via_i(nu, xx) for xx in xa[lossy]]
            poi = poi & ~lossy
    if poi.any():
        if np.any(xa[poi] == 0):
            raise DomainError("poisson_integral route needs x > 0")
        out[poi] = _j_poisson(nu, xa[poi])
    if asy.any():
        out[asy] = _j_asymptotic(nu, xa[asy])
    return float(out[0]) if scalar else out


def _j_via_i(nu, x):
    value = bessel_i_orders([nu], complex(0.0, -x), method="mbessel_split")[0]
    return (np.exp(0.5j * math.pi * nu) * value).real


def small_argument_bound(nu, x, constant=1.0):
    """Right side of |J_nu(x)| <= C x^nu / (2^nu Gamma(nu+1/2) Gamma(1/2)) (1 + 1/(nu+1/2))."""
    x = np.asarray(x, dtype=float)
    return constant * np.exp(nu * np.log(0.5 * x) - lgamma(nu + 0.5)) / math.sqrt(math.pi) * (
        1.0 + 1.0 / (nu + 0.5)
    )


# ---------------------------------------------------------------- I_nu


def _i_series(nus, z, scaled):
    nus = np.asarray(nus, dtype=float)
    half = 0.5 * z
    if z == 0:
        out = np.where(nus == 0, 1.0 + 0j, 0j)
        return out
    lead = np.exp(nus * np.log(half) - lgamma(nus + 1.0))
    if scaled:
        lead = lead * math.exp(-z.real)
    q = half * half
    term = lead.astype(complex)
    total = term.copy()
    for m in range(1, 400):
        term = term * q / (m * (m + nus))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def split_first_nodes(z, nu_max, order=16):
    """Uniform composite nodes on [0, pi] for the cos-integral of the split."""
    panels = max(4, int(math.ceil((abs(z.imag) + nu_max) / 4.0)) + int(math.ceil(math.sqrt(max(z.real, 0.0)))))
    return composite_gauss_legendre(np.linspace(0.0, math.pi, panels + 1), order)


def split_second_contour(z, nu_min, order=16, nu_max=None):
    """Contour nodes for int_0^inf e^{-z cosh s} (...) ds, rotated by phi = -arg z.

    Returns (s_nodes, weights) with complex s so that the caller evaluates
    any integrand g(s) and sums ``g(s) * weights``.
    """
    az = abs(z)
    theta = math.atan2(z.imag, z.real)
    phi = -theta
    s_parts = []
    w_parts = []
    nu_top = nu_min if nu_max is None else nu_max
    if phi != 0.0:
        # e^{-nu s} oscillates like e^{-i nu tau} on the vertical leg
        panels = max(2, int(math.ceil((az + nu_top) * abs(phi) / 4.0)) + 1)
        tau, wt = composite_gauss_legendre(np.linspace(0.0, phi, panels + 1), order)
        s_parts.append(1j * tau)
        w_parts.append(1j * wt)
    u_cap = 50.0 / nu_min if nu_min > 0 else np.inf
    u_max = min(math.asinh(50.0 / az) + 0.5 if az > 0 else np.inf, u_cap, 200.0)
    breaks = graded_breaks(u_max, min(0.5, 1.0 / (az + 1.0), 4.0 / (nu_top + 1.0)))
    u, wu = composite_gauss_legendre(breaks, order)
    s_parts.append(u + 1j * phi)
    w_parts.append(wu.astype(complex))
    return np.concatenate(s_parts), np.concatenate(w_parts)


def _i_split(nus, z, scaled):
    nus = np.asarray(nus, dtype=float)
    shift = z.real if scaled else 0.0
    s, w = split_first_nodes(z, float(nus.max()))
    first = (np.exp(z * np.cos(s) - shift) * w) @ np.cos(np.outer(s, nus)) / math.pi
    sin_nu = np.sin(math.pi * nus)
    active = np.abs(sin_nu) > 1e-15
    second = np.zeros_like(first)
    if active.any():
        nu_act = nus[active]
        sc, wc = split_second_contour(z, float(nu_act.min()), nu_max=float(nu_act.max()))
        base = np.exp(-z * np.cosh(sc) - shift) * wc
        second[active] = base @ np.exp(-np.outer(sc, nu_act))
    return first - sin_nu / math.pi * second


def bessel_i_orders(nus, z, scaled=False, method="auto"):
    """I_nu(z) for an array of orders at one complex argument with Re z >= 0.

    With ``scaled`` the result is e^{-Re z} I_nu(z).
    """
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    if np.any(nus < 0):
        raise UnsupportedOrderError("negative orders are not supported")
    z = complex(z)
    if z.real < -1e-14 * max(1.0, abs(z)):
        raise DomainError(f"bessel_i needs Re z >= 0, got {z}")
    if z.real < 0:
        z = complex(0.0, z.imag)
    if not scaled and z.real > 700:
        raise DomainError("unscaled I_nu overflows for Re z > 700; request scaled=True")
    if method == "auto":
        method = "series" if abs(z) <= 1.0 else "mbessel_split"
    if method == "series":
        return _i_series(nus, z, scaled)
    if method == "mbessel_split":
        if z == 0:
            return _i_series(nus, z, scaled)
        return _i_split(nus, z, scaled)
    raise ValueError(f"unknown method {method!r}")


def bessel_i(nu, z, scaled=False, method="auto"):
    """I_nu(z) for real nu >= 0 and complex z (array-like) with Re z >= 0."""
    nu = _check_order(nu)
    za = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(za).ravel()
    out = np.array([bessel_i_orders([nu], zz, scaled, method)[0] for zz in flat])
    if za.ndim == 0:
        return complex(out[0])
    return out.reshape(za.shape)


def evaluate_i(nu, z, scaled=False):
    """Single I_nu evaluation with its provenance."""
    z = complex(z)
    method = "series" if abs(z) <= 1.0 else "mbessel_split"
    value = bessel_i_orders([nu], z, scaled, method)[0]
    return BesselEval(float(nu), z, complex(value), bool(scaled), method)


def evaluate_j(nu, x):
    return BesselEval(float(nu), complex(x), complex(bessel_j(nu, x)), False, j_method(nu, x))
