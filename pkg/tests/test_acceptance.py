"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal.

Tolerances are the stated ones.  Where a criterion fails, the diagnostic
lines below the verdict show what limits it.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from dispersive_lab.angular import builtin_potential, spectrum_for
from dispersive_lab.estimates import (classify_admissible, counterexample_blowup, dispersive_scan_localized,
                                      dispersive_scan_small, enumerate_pairs, heat_bound_scan, tnu_decay_check)
from dispersive_lab.hankel import ModeCoefficient, RadialGrid, bump, evolve, gaussian_mode, hankel_forward
from dispersive_lab.propagator import PairGrid, auto_cutoff, free_kernel, full_kernel, radial_mode_kernel

ROOT = Path(__file__).resolve().parent.parent
R_GRID = np.linspace(0.25, 3.0, 10)
DELTA_GRID = np.linspace(0.0, math.pi, 8)


def verdict(capsys, number, ok, headline, details=()):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {headline}")
        for line in details:
            print(f"    {line}")
    assert ok, headline


@pytest.fixture(scope="module")
def free():
    return spectrum_for(builtin_potential("free", 3), lmax=320)


@pytest.fixture(scope="module")
def invsq():
    return spectrum_for(builtin_potential("constant_a:-0.1875", 3), lmax=320)


def test_criterion_01_free_kernel(capsys, free):
    start = time.perf_counter()
    pairs = PairGrid.product(R_GRID, R_GRID, DELTA_GRID, 3)
    d = pairs.distance()
    details, ok = [], True
    for t in (0.1, 0.25, 1.0):
        k = full_kernel(free, t, pairs, flavor="heat", warn=False)
        exact = (4 * math.pi * t) ** -1.5 * np.exp(-d ** 2 / (4 * t))
        rel = np.abs(k.values.real - exact) / exact
        floor = k.rounding_error()
        resolvable = exact > 1e6 * floor
        ok &= bool(rel.max() <= 1e-6)
        details.append(f"heat t={t:g}: max rel {rel.max():.2e}, on {int(resolvable.sum())}/{len(rel)} pairs "
                       f"with |K| > 1e6 x rounding bound: {rel[resolvable].max():.2e}, "
                       f"min exact/rounding bound {np.min(exact / floor):.1e}")
    for t in (0.1, 0.25, 1.0):
        k = full_kernel(free, t, pairs, flavor="schrodinger", warn=False)
        ref = (4 * math.pi * t) ** -1.5
        rel = np.max(np.abs(np.abs(k.values) - ref)) / ref
        phase = np.max(np.abs(k.values - free_kernel(3, t, pairs, "schrodinger"))) / ref
        ok &= bool(rel <= 1e-5)
        details.append(f"schrodinger t={t:g}: modulus max rel {rel:.2e}, full complex max rel {phase:.2e}")
    runtime = time.perf_counter() - start
    ok &= runtime < 60
    details.append(f"runtime {runtime:.1f} s")
    verdict(capsys, 1, ok, "free heat kernel to 1e-6 and Schrodinger modulus to 1e-5 on 10x10x8 grid", details)


def weber_quadrature(nu, tau, r1, r2, n=3):
    mp.mp.dps = 20
    f = lambda p: mp.exp(-tau * p * p) * mp.besselj(nu, r1 * p) * mp.besselj(nu, r2 * p) * p
    cut = float(mp.sqrt(80 / mp.re(tau)))
    return complex(mp.quad(f, mp.linspace(0, cut, 1 + int(2 * cut)))) * (r1 * r2) ** (-(n - 2) / 2)


def test_criterion_02_weber_identity(capsys):
    radii = (0.5, 1.75, 3.0)
    cases = [(nu, t, r1, r2) for nu in (0.25, 0.5, 0.75, 1.5) for t in (0.1, 1.0) for r1 in radii for r2 in radii]
    # the runtime target covers the closed-form evaluations; the mpmath oracle is timed separately
    start = time.perf_counter()
    heat = [radial_mode_kernel(nu, t, r1, r2) for nu, t, r1, r2 in cases]
    reg = [radial_mode_kernel(nu, t, r1, r2, eps=t / 2, flavor="schrodinger") for nu, t, r1, r2 in cases]
    runtime = time.perf_counter() - start
    start = time.perf_counter()
    worst = {"heat": 0.0, "regularized": 0.0}
    for (nu, t, r1, r2), h, g in zip(cases, heat, reg):
        ref = weber_quadrature(nu, t, r1, r2).real
        worst["heat"] = max(worst["heat"], abs(h - ref) / abs(ref))
        ref = weber_quadrature(nu, complex(t / 2, t), r1, r2)
        worst["regularized"] = max(worst["regularized"], abs(g - ref) / abs(ref))
    oracle = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-8 and runtime < 30
    verdict(capsys, 2, ok, "closed-form radial kernel vs quadrature of its defining integral to 1e-8",
            [f"heat (tau = t): max rel {worst['heat']:.2e}",
             f"tau = t/2 + i t: max rel {worst['regularized']:.2e}",
             f"runtime {runtime:.2f} s for {2 * len(cases)} kernels, mpmath oracle {oracle:.0f} s"])


def test_criterion_03_path_equivalence(capsys, invsq):
    rng = np.random.default_rng(20240601)
    count = 100
    t = rng.choice([0.5, 1.0, 2.0], count)
    r1 = rng.uniform(0.5, 3.0, count)
    r2 = rng.uniform(0.5, 3.0, count)
    delta = rng.uniform(0.0, math.pi, count)
    worst, worst_rich = 0.0, 0.0
    for tt in (0.5, 1.0, 2.0):
        m = t == tt
        pairs = PairGrid.from_polar(r1[m], r2[m], delta[m], 3)
        a = full_kernel(invsq, tt, pairs, flavor="schrodinger", warn=False).values
        b = full_kernel(invsq, tt, pairs, flavor="schrodinger", method="mbessel_split", warn=False).values
        c = full_kernel(invsq, tt, pairs, flavor="schrodinger", warn=False, eps_limit="richardson").values
        worst = max(worst, float(np.max(np.abs(a - b) / np.abs(b))))
        worst_rich = max(worst_rich, float(np.max(np.abs(c - b) / np.abs(b))))
    verdict(capsys, 3, worst <= 1e-6, "Weber path vs split path on 100 random points (a = -3/16) to 1e-6",
            [f"max rel difference {worst:.2e}",
             f"eps-extrapolated Weber path (h = 1e-3 |t|) for comparison: {worst_rich:.2e}"])


def test_criterion_04_spectral_exactness(capsys):
    s2 = spectrum_for(builtin_potential("free", 3), basis_size=16, closed_form=False)
    expect = np.concatenate([np.full(2 * l + 1, l * (l + 1.0)) for l in range(8)])
    err_s2 = float(np.max(np.abs(s2.mu[:64] - expect)))
    mult_ok = s2.mu[64] > 56 + 0.5
    ab = spectrum_for(builtin_potential("ab_flux:0.5", 2), basis_size=24, closed_form=False)
    k = np.arange(-10, 11)
    expect_ab = np.sort((k + 0.5) ** 2)
    err_ab = float(np.max(np.abs(np.sort(ab.mu[:21]) - expect_ab)))
    ok = err_s2 <= 1e-8 and mult_ok and err_ab <= 1e-10
    verdict(capsys, 4, ok, "Galerkin S^2 free spectrum (l <= 7) and S^1 AB spectrum (Phi = 0.5, |k| <= 10)",
            [f"S^2 max |mu - l(l+1)| {err_s2:.2e}, next eigenvalue {s2.mu[64]:.6g}",
             f"S^1 max |mu - (k+Phi)^2| {err_ab:.2e}"])


def test_criterion_05_unitarity_and_conservation(capsys):
    grid = RadialGrid(3, 1e-3, 30.0, 0.25)
    rho = RadialGrid(3, 1e-3, 12.0, 0.1)
    worst_u, worst_c = 0.0, 0.0
    for nu in (0.25, 0.5, 1.5):
        f = bump(grid.nodes, 2.0, 0.5)
        worst_u = max(worst_u, abs(grid.norm(hankel_forward(nu, f, grid)) / grid.norm(f) - 1))
        for data in (ModeCoefficient(0, nu, f, grid), gaussian_mode(nu, grid)):
            for t in (0.1, 1.0, 10.0):
                out = evolve(data, t, rho)
                norm = math.sqrt(float(np.sum(np.abs(out.values) ** 2 * out.weights)))
                worst_c = max(worst_c, abs(norm / data.norm() - 1))
    ok = worst_u <= 1e-6 and worst_c <= 1e-6
    verdict(capsys, 5, ok, "Hankel unitarity and per-mode L^2 conservation to 1e-6",
            [f"max |‖H f‖/‖f‖ - 1| {worst_u:.2e}", f"max |‖e^{{itL}} c‖/‖c‖ - 1| {worst_c:.2e}"])


def test_criterion_06_weight_saturation(capsys, invsq):
    rep = dispersive_scan_small(invsq, [0.5, 1.0, 2.0, 4.0], [1e-4, 1e-3, 1e-2, 1e-1],
                                np.linspace(0, math.pi, 5))
    z_ok = abs(rep.observed["z_slope_unweighted"] + 0.25) <= 0.05 and rep.observed["z_slope_max_dev"] <= 0.05
    t_ok = abs(rep.observed["t_slope"] + 1.5) <= 0.02 and rep.observed["t_slope_max_dev"] <= 0.02
    verdict(capsys, 6, z_ok and t_ok, "small-z slope -1/4 +- 0.05 and time slope -3/2 +- 0.02 (a = -3/16)",
            [f"z slope {rep.observed['z_slope_unweighted']:.4f} (worst t: dev {rep.observed['z_slope_max_dev']:.2e})",
             f"t slope {rep.observed['t_slope']:.4f} (worst z: dev {rep.observed['t_slope_max_dev']:.2e})",
             f"scan verdict {rep.verdict}"])


def test_criterion_07_localized_boundedness(capsys, invsq):
    z = [2.0, 5.0, 10.0, 20.0]
    rep = dispersive_scan_localized(invsq, [0.5, 1.0], z, cutoffs=(64, 128))
    auto = dispersive_scan_localized(invsq, [0.5, 1.0], z, cutoffs=None)
    details = [f"K = 64 -> 128: sup {rep.observed['sup_coarse']:.4g} -> {rep.observed['sup_fine']:.4g}, "
               f"variation {rep.observed['variation']:.2f}, verdict {rep.verdict}",
               f"adaptive cutoff {auto_cutoff(invsq, 20.0)} -> doubled: variation {auto.observed['variation']:.1e}, "
               f"verdict {auto.verdict}"]
    verdict(capsys, 7, rep.verdict == "bounded", "patch sup stable to 10% under K = 64 -> 128 for z in [2, 20]",
            details)


def test_criterion_08_heat_bound(capsys, free, invsq):
    t_list = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
    details, ok = [], True
    for name, s in (("free", free), ("a = -3/16", invsq)):
        rep = heat_bound_scan(s, t_list, R_GRID, DELTA_GRID, c=8.0)
        ok &= rep.verdict == "bounded"
        details.append(f"{name}: sup ratio {rep.observed['sup_ratio']:.4g} (raw {rep.observed['sup_ratio_raw']:.3g}), "
                       f"refinement variation {rep.observed['refinement_variation']:.1e}, "
                       f"pairs below rounding {rep.observed['pairs_below_rounding']}, verdict {rep.verdict}")
    verdict(capsys, 8, ok, "heat ratio bounded with c = 8 for t in [0.05, 2], free and a = -3/16", details)


def test_criterion_09_counterexample(capsys, invsq):
    start = time.perf_counter()
    eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
    power = counterexample_blowup(invsq, 24.0, eps)
    log = counterexample_blowup(invsq, 12.0, eps)
    bounded = counterexample_blowup(invsq, 6.0, eps)
    runtime = time.perf_counter() - start
    ok = (abs(power.observed["slope_P"] - (-0.25 + 3 / 24)) <= 0.02 and log.observed["r2_p_power"] > 0.99
          and bounded.observed["variation_P"] < 0.05 and runtime < 120)
    verdict(capsys, 9, ok, "blow-up slope at p = 24, log growth at p = 12, boundedness at p = 6", [
        f"p = 24: slope {power.observed['slope_P']:.4f} (target {-0.25 + 3 / 24:.4f}), "
        f"Z slope {power.observed['slope_Z']:.4f}",
        f"p = 12: R^2 of ||P||^p against ln(1/eps) {log.observed['r2_p_power']:.5f}",
        f"p = 6: variation {bounded.observed['variation_P']:.2e} (Z {bounded.observed['variation_Z']:.2e})",
        f"runtime {runtime:.1f} s"])


def test_criterion_10_tnu_decay(capsys):
    t_list = [1, 2, 4, 8, 16, 32]
    details, ok = [], True
    for p in (4.0, 8.0):
        rep = tnu_decay_check(0.25, 3, p, t_list)
        target = -(3 / 2) * (1 - 2 / p)
        ok &= abs(rep.observed["slope"] - target) <= 0.1
        details.append(f"p = {p:g}: slope {rep.observed['slope']:.3f} (target {target:.3f}), "
                       f"slope over t >= 8 {rep.observed['slope_late']:.3f}")
    verdict(capsys, 10, ok, "T_nu decay exponent -(n/2)(1 - 2/p) +- 0.1 for nu = 1/4, p in {4, 8}", details)


def _set_relation(s, summary):
    pairs = enumerate_pairs(s, summary, count=33)
    if not pairs or not any(p.in_restricted_set for p in pairs):
        return "empty"
    return "equal" if all(p.in_restricted_set for p in pairs) else "strict"


def test_criterion_11_admissible_trichotomy(capsys):
    details, ok = [], True
    for nu0 in (0.25, 0.5):
        s = spectrum_for(builtin_potential(f"constant_a:{nu0 ** 2 - 0.25:g}", 3), lmax=40)
        grid = {"equal": np.linspace(0.0, 0.5 + nu0, 12, endpoint=False),
                "strict": np.linspace(0.5 + nu0, 1 + nu0, 8, endpoint=False),
                "empty": [1.0 + nu0]}
        for expected, values in grid.items():
            got = [_set_relation(v, s) for v in values]
            direct = [classify_admissible(v, 3, s.alpha) for v in values]
            bad = [f"{v:.3g}:{g}" for v, g in zip(values, got) if g != expected]
            ok &= not bad and got == direct
            details.append(f"nu0 = {nu0:g}, expected {expected}: {'all match' if not bad else 'mismatch at ' + ', '.join(bad)}")
        first_strict = min(v for v in np.linspace(0, 1 + nu0, 401) if _set_relation(v, s) != "equal")
        details.append(f"nu0 = {nu0:g}: first s with a removed pair {first_strict:.4f}")
    verdict(capsys, 11, ok, "restricted admissible set equal / strict / empty across s", details)


def _run_scenarios(out):
    for name in ("free3d", "invsq_m316"):
        subprocess.run([sys.executable, "-m", "dispersive_lab.cli", "run", str(ROOT / "configs" / f"{name}.json"),
                        "--out", str(out / name), "--threads", "4"], check=False, capture_output=True)


def test_criterion_12_determinism(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run_scenarios(a)
    _run_scenarios(b)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name != "runtime.json")
    differ = [str(f) for f in files if not (b / f).exists() or (a / f).read_bytes() != (b / f).read_bytes()]
    reports = [f for f in files if f.parts[1] == "reports" and f.suffix == ".json"]
    for f in reports:
        json.loads((a / f).read_text())
    ok = bool(reports) and not differ
    verdict(capsys, 12, ok, "two runs of the shipped scenarios give byte-identical artifacts", [
        f"{len(files)} files compared ({len(reports)} reports), {len(differ)} differ"
        + (": " + ", ".join(differ[:5]) if differ else "")])
