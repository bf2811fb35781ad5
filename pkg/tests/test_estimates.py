import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from dispersive_lab.errors import ParameterError, ScenarioError
from dispersive_lab.estimates import (ScanReport, chi_bump, classify_admissible, combine_verdict,
                                      counterexample_blowup, counterexample_norms, dispersive_scan_small,
                                      enumerate_pairs, fit_slope, heat_bound_scan, heat_small_z_slope,
                                      linear_fit, mode_sum_growth, operator_norm, pair_with_p,
                                      refinement_verdict, tnu_decay_check)
from dispersive_lab.hankel import RadialGrid


# ----------------------------------------------------------------- admissible pairs


def test_free_pairs_at_zero_regularity(free3):
    pairs = {(pr.q, pr.p) for pr in enumerate_pairs(0.0, free3)}
    assert (2.0, 6.0) in pairs
    assert (math.inf, 2.0) in pairs


def test_restricted_membership_invsq(invsq):
    assert invsq.p_alpha == pytest.approx(12.0)
    at = pair_with_p(1.0, invsq, 12.0)
    below = pair_with_p(1.0, invsq, 11.9)
    assert at is not None and not at.in_restricted_set
    assert below is not None and below.in_restricted_set


def test_no_pairs_past_top_regularity(invsq):
    s = 1.5 + 1e-9
    assert enumerate_pairs(s, invsq) == []
    assert classify_admissible(s, 3, invsq.alpha) == "empty"


@given(st.floats(0.0, 1.5))
@settings(max_examples=40, deadline=None)
def test_scaling_residual(s):
    class Summ:
        n = 3
        alpha = -0.25
    for pr in enumerate_pairs(s, Summ):
        assert abs(pr.residual()) <= 1e-12
        assert 2 <= pr.q and 2 <= pr.p


def test_excluded_endpoint_in_two_dimensions():
    class Summ:
        n = 2
        alpha = 0.3
    pairs = enumerate_pairs(0.0, Summ)
    assert all(not (pr.q == 2 and math.isinf(pr.p)) for pr in pairs)


def test_classification_threshold_is_nu0():
    # n = 3, nu0 = 1/4, alpha = -1/4: removal starts once (n/2 - s - 1)/n <= |alpha|/n
    nu0, alpha = 0.25, -0.25
    assert classify_admissible(nu0 - 0.01, 3, alpha) == "equal"
    assert classify_admissible(nu0 + 0.01, 3, alpha) == "strict"
    assert classify_admissible(0.5 + nu0 - 0.01, 3, alpha) == "strict"
    assert classify_admissible(1.0 + nu0 + 0.01, 3, alpha) == "empty"


def test_nonnegative_alpha_keeps_everything():
    assert classify_admissible(0.0, 3, 0.0) == "equal"
    assert classify_admissible(0.3, 3, 0.2) == "equal"


def test_negative_regularity_rejected(free3):
    with pytest.raises(ParameterError):
        enumerate_pairs(-0.1, free3)


# ----------------------------------------------------------------- verdict plumbing


@pytest.mark.parametrize("coarse, fine, expected", [
    ("pass", "pass", "pass"),
    ("pass", "fail", "unstable"),
    ("bounded", "inconclusive", "unstable"),
    ("fail", "pass", "pass"),
    ("inconclusive", "bounded", "bounded"),
])
def test_refinement_verdict(coarse, fine, expected):
    assert refinement_verdict(coarse, fine) == expected


def test_combine_verdict():
    assert combine_verdict({"a": True, "b": True}) == "pass"
    assert combine_verdict({"a": True, "b": False}) == "fail"
    assert combine_verdict({"a": True}, stable=False) == "inconclusive"


def test_fits():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_slope(x, 3 * x ** -1.5) == pytest.approx(-1.5)
    slope, icpt, r2 = linear_fit(x, 2 * x + 1)
    assert (slope, icpt, r2) == pytest.approx((2.0, 1.0, 1.0))


def test_report_json_is_deterministic():
    rep = ScanReport("x", {"a": np.float64(1.5)}, {"v": float("inf"), "w": np.int64(3)}, {}, 0.1, "pass",
                     runtime=1.0)
    other = ScanReport("x", {"a": 1.5}, {"w": 3, "v": math.inf}, {}, 0.1, "pass", runtime=2.0)
    assert rep.to_json() == other.to_json()
    assert "runtime" not in rep.to_json()


def test_report_table_and_csv():
    rep = ScanReport("x", {}, {"v": 1.0}, {"v": 1.0}, None, "pass", checks={"c": False},
                     samples=[{"a": 0.1, "b": 2}])
    assert "check c: FAILED" in rep.to_table()
    assert rep.samples_csv().splitlines() == ["a,b", "0.1,2"]


# ----------------------------------------------------------------- scans


def test_dispersive_small_free(free3):
    rep = dispersive_scan_small(free3, [0.5, 1.0, 2.0], [1e-3, 1e-2, 1e-1], [0.0, math.pi / 2, math.pi])
    assert rep.verdict == "pass", rep.to_table()
    assert rep.observed["z_slope_unweighted"] == pytest.approx(0.0, abs=0.05)


def test_dispersive_small_invsq_slope(invsq):
    rep = dispersive_scan_small(invsq, [0.5, 1.0, 2.0], [1e-4, 1e-3, 1e-2, 1e-1], [0.0, math.pi])
    assert rep.observed["z_slope_max_dev"] <= 0.05, rep.to_table()
    assert rep.observed["t_slope_max_dev"] <= 0.02


def test_dispersive_small_rejects_large_z(free3):
    with pytest.raises(ParameterError):
        dispersive_scan_small(free3, [1.0], [2.0], [0.0])


def test_heat_small_z_slope(invsq):
    slope, _ = heat_small_z_slope(invsq, np.logspace(-4, -1, 7))
    assert slope == pytest.approx(-0.25, abs=0.05)


def test_heat_bound_scan_bounded(invsq):
    rep = heat_bound_scan(invsq, [0.25, 1.0], np.linspace(0.25, 3, 5), np.linspace(0, math.pi, 4))
    assert rep.verdict == "bounded", rep.to_table()
    assert rep.observed["sup_ratio"] <= rep.observed["sup_ratio_raw"]


def test_mode_sum_growth_free_is_polynomial(free3):
    n_fit, rows = mode_sum_growth(free3, [2, 4, 8, 16], np.linspace(0, math.pi / 2, 4))
    assert n_fit <= 8.0
    assert len(rows) == 16


def test_chi_bump_support():
    rho = np.linspace(0.0, 1.5, 301)
    c = chi_bump(rho)
    assert np.all(c[(rho <= 0.5) | (rho >= 1.0)] == 0)
    assert chi_bump([0.75])[0] == pytest.approx(1.0)
    assert np.all((c >= 0) & (c <= 1))


def test_counterexample_power_regime(invsq):
    rep = counterexample_blowup(invsq, 24.0, [1e-2, 3e-3, 1e-3, 3e-4], full=False)
    assert rep.provenance["regime"] == "power"
    assert rep.observed["slope_P"] == pytest.approx(-0.125, abs=0.02)


def test_counterexample_bounded_regime(invsq):
    rep = counterexample_blowup(invsq, 6.0, [1e-2, 1e-3, 1e-4], full=False)
    assert rep.verdict == "pass", rep.to_table()


def test_counterexample_needs_negative_alpha(free3):
    with pytest.raises(ScenarioError):
        counterexample_blowup(free3, 6.0, [1e-2, 1e-3])


def test_counterexample_norms_grow_with_smaller_eps():
    a, _ = counterexample_norms(0.25, 3, 24.0, 1e-2, full=False)
    b, _ = counterexample_norms(0.25, 3, 24.0, 1e-4, full=False)
    assert b > a


def test_operator_norm_matches_svd_for_p2(rng):
    A = rng.standard_normal((12, 10)) + 1j * rng.standard_normal((12, 10))
    w_in = np.ones(10)
    w_out = np.ones(12)
    est = operator_norm(A, w_in, w_out, 2.0, [rng.standard_normal(10)], iterations=200)
    assert est == pytest.approx(np.linalg.norm(A, 2), rel=1e-8)


def test_tnu_p2_constant():
    grid = RadialGrid(3, 1e-3, 30.0, 0.5)
    rho = RadialGrid(3, 1e-3, 12.0, 0.25)
    rep = tnu_decay_check(0.25, 3, 2.0, [1.0, 4.0, 16.0], grid, rho, iterations=10)
    assert rep.observed["spread"] <= 0.05, rep.to_table()


def test_tnu_parameter_checks():
    with pytest.raises(ParameterError):
        tnu_decay_check(0.75, 3, 4.0, [1.0, 2.0])
    with pytest.raises(ParameterError):
        tnu_decay_check(0.25, 3, 12.0, [1.0, 2.0])
