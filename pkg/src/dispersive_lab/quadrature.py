"""Gauss rules used throughout: plain, composite and Jacobi-weighted."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=256)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order, a=-1.0, b=1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(int(order))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_gauss_legendre(breaks, order=16):
    """Composite rule with one ``order``-point Gauss panel between consecutive breaks.

    Parameters
    ----------
    breaks : array_like
        Increasing panel endpoints.
    order : int
        Nodes per panel.

    Returns
    -------
    nodes, weights : ndarray
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(int(order))
    a = breaks[:-1, None]
    half = 0.5 * np.diff(breaks)[:, None]
    nodes = a + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(length, first, min_panels=1):
    """Breakpoints 0, h, 2h, 4h, ... capped at ``length``; geometric grading toward 0."""
    first = min(first, length)
    pts = [0.0]
    h = first
    while pts[-1] + h < length:
        pts.append(pts[-1] + h)
        h = min(2.0 * h, 1.0)
    pts.append(length)
    pts = np.asarray(pts)
    if len(pts) - 1 < min_panels:
        pts = np.linspace(0.0, length, min_panels + 1)
    return pts


@lru_cache(maxsize=512)
def _jacobi(order, alpha, beta):
    x, w = roots_jacobi(order, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(order, alpha, beta):
    """Nodes/weights on [-1, 1] for the weight (1-s)^alpha (1+s)^beta."""
    return _jacobi(int(order), float(alpha), float(beta))
