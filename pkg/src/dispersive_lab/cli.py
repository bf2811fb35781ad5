"""Command-line batch runner.

    dispersive-lab run <config> [--out DIR] [--threads N] [--verbose]
    dispersive-lab spectrum <config>
    dispersive-lab list-builtins

Exit status: 0 when every verdict passes (or is report-only/inconclusive),
1 when a scan fails, 2 for malformed configs, 3 for scenario errors such as
a non-positive angular operator.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import logging
import math
import os
from pathlib import Path
import sys
import time
import warnings

import numpy as np

from . import estimates as est
from .angular import BUILTINS, builtin_potential, potential_from_coefficients, spectrum_for
from .config import ConfigError, load_scenario
from .errors import LabError, PositivityError
from .propagator import PairGrid, full_kernel

log = logging.getLogger("dispersive_lab")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SCENARIO = 0, 1, 2, 3
PASSING = {"pass", "bounded", "report-only"}


class ScenarioFailure(LabError):
    pass


def build_spectrum(scenario):
    pot_cfg = scenario.potential
    try:
        if pot_cfg.builtin is not None:
            pot = builtin_potential(pot_cfg.builtin, scenario.n)
        else:
            pot = potential_from_coefficients(scenario.n, pot_cfg.coefficients, label=f"{scenario.name}:coefficients")
    except LabError as exc:
        raise ScenarioFailure(f"potential: {exc}") from exc
    return spectrum_for(pot, scenario.basis_size, lmax=scenario.lmax)


def _angles(value):
    if isinstance(value, int):
        return np.linspace(0.0, math.pi, value)
    return np.asarray(value, dtype=float)


def _get(params, key, default):
    v = params.get(key)
    return default if v is None else v


def _as_list(v):
    return v if isinstance(v, list) else [v]


def run_scan(scan, summary, scenario):
    """Dispatch one scan; returns a list of reports."""
    p = scan.params
    kind = scan.type
    cutoff = _get(p, "cutoff", scenario.cutoff)
    if kind == "dispersive_small":
        return [est.dispersive_scan_small(summary, _get(p, "t", [0.5, 1, 2, 4]), _get(p, "z", [1e-4, 1e-3, 1e-2, 1e-1]),
                                          _angles(_get(p, "angles", 5)), cutoff)]
    if kind == "dispersive_localized":
        cuts = p.get("cutoffs", [64, 128])
        return [est.dispersive_scan_localized(summary, _get(p, "t", [0.5, 1.0]), _get(p, "z", [2, 5, 10, 20]),
                                              _get(p, "cap_radius", 3 * math.pi / 8),
                                              None if cuts is None else tuple(int(c) for c in cuts))]
    if kind == "antipodal_contrast":
        return [est.antipodal_contrast(summary, _get(p, "t", 1.0), _get(p, "z", [2, 5, 10]), cutoff=cutoff)]
    if kind == "heat_bound":
        return [est.heat_bound_scan(summary, _get(p, "t", [0.05, 0.1, 0.25, 0.5, 1, 2]),
                                    _get(p, "r", np.linspace(0.25, 3, 10).tolist()),
                                    _get(p, "delta", np.linspace(0, math.pi, 8).tolist()), _get(p, "c", 8.0), cutoff)]
    if kind == "heat_small_z":
        return [est.heat_small_z_scan(summary, _get(p, "z", np.logspace(-4, -1, 7).tolist()), _get(p, "t", 1.0))]
    if kind == "mode_sum_growth":
        return [est.mode_sum_growth_scan(summary, _get(p, "z", [2, 4, 8, 16, 32]),
                                         _get(p, "delta", np.linspace(0, math.pi / 2, 7).tolist()), _get(p, "n_max", 8.0))]
    if kind == "strichartz":
        qs, ps = _as_list(_get(p, "q", 2.0)), _as_list(_get(p, "p", 6.0))
        if len(qs) != len(ps):
            raise ScenarioFailure("strichartz: q and p lists differ in length")
        return [est.strichartz_bump_scan(summary, q, pp, _get(p, "center", 2.0), _get(p, "width", 0.5),
                                         tuple(_get(p, "window", [1e-2, 1e2]))) for q, pp in zip(qs, ps)]
    if kind == "counterexample":
        eps = _get(p, "eps", [1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
        if min(eps) <= 0:
            raise ScenarioFailure("counterexample: eps values must be positive")
        return [est.counterexample_blowup(summary, pp, eps, _get(p, "q", 2.0))
                for pp in _as_list(_get(p, "p", [24.0, 12.0, 6.0]))]
    if kind == "tnu":
        nus = _as_list(_get(p, "nu", summary.nu0))
        return [est.tnu_decay_check(nu, summary.n, pp, _get(p, "t", [1, 2, 4, 8, 16, 32]))
                for nu in nus for pp in _as_list(_get(p, "p", [4.0, 8.0]))]
    if kind == "admissible":
        return [est.admissible_scan(summary, _get(p, "s", [0.0, 0.5, 1.0]), int(_get(p, "count", 9)))]
    raise ScenarioFailure(f"unknown scan type {kind!r}")


def _kernel_field(kspec, summary, scenario):
    pairs = PairGrid.product(kspec.r1, kspec.r2, kspec.delta, summary.n)
    cutoff = kspec.cutoff if kspec.cutoff is not None else scenario.cutoff
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return full_kernel(summary, kspec.t, pairs, cutoff, kspec.flavor, kspec.eps, kspec.method,
                           eps_limit=kspec.eps_limit)


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _spectrum_json(summary):
    return json.dumps(est._clean(summary.to_dict(max_modes=200)), sort_keys=True, indent=1)


def _fmt_p(p):
    return "inf" if math.isinf(p) else f"{p:g}"


def run_scenario(scenario, out_dir, threads=1):
    """Execute a scenario and write its artifact tree; returns (exit status, reports)."""
    out = Path(out_dir)
    started = time.perf_counter()
    summary = build_spectrum(scenario)
    _write(out / "spectrum.json", _spectrum_json(summary))
    runtimes = {}
    for i, ks in enumerate(scenario.kernels):
        t0 = time.perf_counter()
        fieldk = _kernel_field(ks, summary, scenario)
        stem = f"kernel_{i:02d}_{ks.flavor}"
        _write(out / "kernels" / f"{stem}.csv", fieldk.to_csv())
        runtimes[stem] = time.perf_counter() - t0

    def job(scan):
        return run_scan(scan, summary, scenario)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(job, scenario.scans))
        else:
            results = [job(s) for s in scenario.scans]

    reports = [r for group in results for r in group]
    names = {}
    lines = [f"scenario: {scenario.name}", f"potential: {summary.label}", f"n = {summary.n}",
             f"nu0 = {summary.nu0:.12g}", f"alpha = {summary.alpha:.12g}", f"p(alpha) = {_fmt_p(summary.p_alpha)}",
             f"modes = {len(summary)}", ""]
    for rep in reports:
        k = names.get(rep.name, 0)
        names[rep.name] = k + 1
        stem = rep.name if k == 0 else f"{rep.name}_{k}"
        _write(out / "reports" / f"{stem}.json", rep.to_json() + "\n")
        if rep.samples:
            _write(out / "reports" / f"{stem}.csv", rep.samples_csv())
        runtimes[stem] = rep.runtime
        lines += [rep.to_table(), ""]
    verdicts = [r.verdict for r in reports]
    inconclusive = [r.name for r in reports if r.verdict in ("inconclusive", "unstable")]
    failed = [r.name for r in reports if r.verdict == "fail"]
    if inconclusive:
        lines.append("WARNING: inconclusive verdicts: " + ", ".join(inconclusive))
    if failed:
        lines.append("FAILED: " + ", ".join(failed))
    lines.append(f"verdicts: {len([v for v in verdicts if v in PASSING])} passing, "
                 f"{len(inconclusive)} inconclusive, {len(failed)} failing")
    _write(out / "summary.txt", "\n".join(lines) + "\n")
    runtimes["total"] = time.perf_counter() - started
    _write(out / "runtime.json", json.dumps(runtimes, sort_keys=True, indent=1) + "\n")
    return (EXIT_FAIL if failed else EXIT_OK), reports


def _cmd_run(args):
    scenario = load_scenario(args.config)
    out = args.out or scenario.output or os.path.join("runs", scenario.name)
    status, reports = run_scenario(scenario, out, max(1, args.threads))
    for rep in reports:
        print(f"{rep.name}: {rep.verdict}")
    print(f"artifacts in {out}")
    return status


def _cmd_spectrum(args):
    scenario = load_scenario(args.config)
    summary = build_spectrum(scenario)
    print(f"{summary.label}: nu0 = {summary.nu0:.12g}, alpha = {summary.alpha:.12g}, "
          f"p(alpha) = {_fmt_p(summary.p_alpha)}")
    for m in summary.modes[:12]:
        print(f"  k = {m.k:3d}  mu = {m.mu_k:.12g}  nu = {m.nu_k:.12g}")
    return EXIT_OK


def _cmd_list(args):
    for name in sorted(BUILTINS):
        print(f"{name:18s} {BUILTINS[name]}")
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="dispersive-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write artifacts")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--threads", type=int, default=1, help="worker threads for independent scans")
    run.add_argument("--verbose", action="store_true")
    run.set_defaults(func=_cmd_run)
    spectrum = sub.add_parser("spectrum", help="compute and print the angular spectrum only")
    spectrum.add_argument("config")
    spectrum.add_argument("--verbose", action="store_true")
    spectrum.set_defaults(func=_cmd_spectrum)
    lst = sub.add_parser("list-builtins", help="list built-in potentials")
    lst.set_defaults(func=_cmd_list)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PositivityError as exc:
        print(f"scenario error: {exc}; the shifted angular operator must be strictly positive", file=sys.stderr)
        return EXIT_SCENARIO
    except LabError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
