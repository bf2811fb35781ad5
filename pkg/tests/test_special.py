import math

import mpmath as mp
import numpy as np
import pytest

from dispersive_lab.errors import DomainError, UnsupportedOrderError
from dispersive_lab.special import (bessel_i, bessel_i_orders, bessel_j, evaluate_i, evaluate_j, gamma, j_method,
                                    lgamma, small_argument_bound)


@pytest.mark.parametrize("x", [0.3, 0.5, 1.0, 2.5, 7.25, 30.0])
def test_lgamma_and_gamma(x):
    assert lgamma(x) == pytest.approx(float(mp.loggamma(x)), abs=1e-13)
    assert gamma(x) == pytest.approx(float(mp.gamma(x)), rel=1e-13)


@pytest.mark.parametrize("nu", [0.0, 0.25, 0.5, 1.5, 4.75, 10.0])
@pytest.mark.parametrize("x", [1e-3, 0.5, 3.0, 12.0, 45.0, 250.0])
def test_bessel_j_against_mpmath(nu, x):
    ref = float(mp.besselj(nu, x))
    assert bessel_j(nu, x) == pytest.approx(ref, abs=5e-14 * max(1.0, abs(ref)) + 1e-14)


def test_bessel_j_routes_agree():
    for method in ("series", "poisson_integral"):
        assert bessel_j(1.25, 3.0, method=method) == pytest.approx(float(mp.besselj(1.25, 3.0)), abs=1e-13)
    assert bessel_j(0.75, 200.0, method="asymptotic") == pytest.approx(float(mp.besselj(0.75, 200.0)), abs=1e-14)
    assert {j_method(0.5, 1.0), j_method(0.5, 10.0), j_method(0.5, 100.0)} == {"series", "poisson_integral", "asymptotic"}


def test_bessel_j_errors():
    with pytest.raises(UnsupportedOrderError):
        bessel_j(-0.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0.5, -1.0)


@pytest.mark.parametrize("z", [0.3, 2.5j, 0.0025 - 2.5j, 3 + 4j, 90.0, -45j + 0.01, 1.2])
def test_bessel_i_many_orders(z):
    nus = np.arange(0, 40) * 0.75 + 0.25
    got = bessel_i_orders(nus, z, scaled=True)
    ref = np.array([complex(mp.besseli(nu, z) * mp.exp(-mp.re(z))) for nu in nus])
    assert np.max(np.abs(got - ref)) < 1e-14 * max(1.0, np.max(np.abs(ref))) + 1e-15


def test_bessel_i_unscaled_and_overflow_guard():
    assert bessel_i(0.5, 2.0) == pytest.approx(complex(mp.besseli(0.5, 2.0)), rel=1e-14)
    with pytest.raises(DomainError):
        bessel_i(0.5, 800.0)
    with pytest.raises(DomainError):
        bessel_i(0.5, -1.0)


def test_evaluate_records_route():
    assert evaluate_i(0.5, 0.5).method == "series"
    assert evaluate_i(0.5, 5j).method == "mbessel_split"
    assert evaluate_j(0.5, 1.0).method == "series"


def test_small_argument_bound_holds():
    x = np.linspace(1e-6, 2, 2000)
    for nu in (0.5, 1.7):
        assert np.all(np.abs(bessel_j(nu, x)) <= small_argument_bound(nu, x) * (1 + 1e-12))


def test_small_argument_bound_needs_constant_below_half():
    # at nu = 1/4 the x -> 0 limit of the ratio is
    # Gamma(3/4) sqrt(pi) / (Gamma(5/4) (1 + 4/3)) > 1, so C = 1 is not enough
    x = np.linspace(1e-6, 2, 2000)
    ratio = np.max(np.abs(bessel_j(0.25, x)) / small_argument_bound(0.25, x))
    limit = gamma(0.75) * math.sqrt(math.pi) / (gamma(1.25) * (1 + 4 / 3))
    assert ratio == pytest.approx(limit, rel=1e-4)
    assert 1.02 < ratio < 1.03
    assert np.all(np.abs(bessel_j(0.25, x)) <= small_argument_bound(0.25, x, constant=limit) * (1 + 1e-9))


def test_closed_forms_half_order():
    for x in (1.0, 10.0, 100.0):
        assert bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), abs=1e-14)
    assert abs(bessel_j(0.0, 2.404825557695773)) < 1e-9
    assert bessel_i(0.5, 3.0).real == pytest.approx(math.sqrt(2 / (3 * math.pi)) * math.sinh(3), rel=1e-10)


def test_j_identity_through_i():
    # J_nu(x) = e^{-i nu pi/2} I_nu(i x) ... with I evaluated at -i x
    nu, x = 1.75, 6.0
    val = (np.exp(0.5j * math.pi * nu) * bessel_i(nu, -1j * x)).real
    assert val == pytest.approx(bessel_j(nu, x), abs=1e-14)
