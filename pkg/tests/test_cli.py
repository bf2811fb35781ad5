import json

import pytest

from dispersive_lab.cli import main
from dispersive_lab.config import ConfigError, load_scenario, parse_scenario

SMALL = {
    "name": "small",
    "n": 3,
    "potential": "constant_a:-0.1875",
    "lmax": 120,
    "kernels": [{"t": 0.5, "flavor": "heat", "r1": [0.5, 1.0], "r2": [1.0], "delta": [0.0, 1.0]},
                {"t": 0.5, "flavor": "schrodinger", "r1": [1.0], "r2": [1.0], "delta": [0.0]}],
    "scans": [{"type": "heat_small_z", "z": [1e-4, 1e-3, 1e-2]},
              {"type": "admissible", "s": [0.0, 1.0], "count": 5},
              {"type": "mode_sum_growth", "z": [2, 4], "delta": [0.0, 0.5]}],
}


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, SMALL), "--out", str(out)]) == 0
    for rel in ("spectrum.json", "summary.txt", "runtime.json", "kernels/kernel_00_heat.csv",
                "kernels/kernel_01_schrodinger.csv", "reports/heat_small_z.json", "reports/admissible.json",
                "reports/mode_sum_growth.json"):
        assert (out / rel).exists(), rel
    summary = (out / "summary.txt").read_text()
    assert "nu0 = 0.25" in summary and "p(alpha) = 12" in summary


def test_reports_are_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(a)]) == 0
    assert main(["run", cfg, "--out", str(b), "--threads", "3"]) == 0
    for f in sorted((a / "reports").iterdir()):
        assert f.read_bytes() == (b / "reports" / f.name).read_bytes(), f.name
    assert (a / "spectrum.json").read_bytes() == (b / "spectrum.json").read_bytes()
    assert (a / "kernels" / "kernel_00_heat.csv").read_bytes() == (b / "kernels" / "kernel_00_heat.csv").read_bytes()


def test_failing_scan_exit_status(tmp_path):
    # far from the small-z regime the fitted slope is not alpha
    cfg = dict(SMALL, kernels=[], scans=[{"type": "heat_small_z", "z": [5.0, 10.0, 20.0]}])
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1
    assert "FAILED: heat_small_z" in (tmp_path / "o" / "summary.txt").read_text()


def test_nonpositive_operator_exit_status(tmp_path, capsys):
    cfg = dict(SMALL, potential="constant_a:-0.25", kernels=[], scans=[])
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3
    assert "strictly positive" in capsys.readouterr().err


def test_malformed_json_reports_location(tmp_path, capsys):
    path = write(tmp_path, '{"name": "x",\n "n": 3,\n "potential": free}')
    assert main(["run", path]) == 2
    assert f"{path}:3:" in capsys.readouterr().err


@pytest.mark.parametrize("patch, where", [
    ({"n": 1}, "n"),
    ({"bogus": 1}, "unknown key"),
    ({"scans": [{"type": "nope"}]}, "scans[0].type"),
    ({"scans": [{"type": "heat_bound", "t": [1.0, -2.0]}]}, "scans[0].t[1]"),
    ({"kernels": [{"t": 1.0, "flavor": "wave"}]}, "kernels[0].flavor"),
    ({"kernels": [{"flavor": "heat"}]}, "kernels[0]"),
])
def test_config_errors_name_location(patch, where):
    with pytest.raises(ConfigError) as info:
        parse_scenario(dict(SMALL, **patch))
    assert where in str(info.value)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "absent.json")
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_unknown_builtin_is_scenario_error(tmp_path):
    cfg = dict(SMALL, potential="no_such_potential", kernels=[], scans=[])
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


def test_list_builtins(capsys):
    assert main(["list-builtins"]) == 0
    out = capsys.readouterr().out
    for name in ("free", "constant_a", "ab_flux"):
        assert name in out


def test_spectrum_command(tmp_path, capsys):
    assert main(["spectrum", write(tmp_path, SMALL)]) == 0
    out = capsys.readouterr().out
    assert "nu0 = 0.25" in out and "alpha = -0.25" in out


def test_shipped_configs_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "configs"
    for path in sorted(root.glob("*.json")):
        load_scenario(path)
