"""Scenario configuration: JSON files parsed into dataclasses.

Structural problems (bad JSON, unknown keys, wrong types, non-positive
numbers) raise ``ConfigError`` with the location of the offending entry.
"""

from dataclasses import dataclass, field
import json
import math

from .errors import LabError

SCAN_TYPES = {
    "dispersive_small": {"t", "z", "angles", "cutoff"},
    "dispersive_localized": {"t", "z", "cap_radius", "cutoffs"},
    "antipodal_contrast": {"t", "z"},
    "heat_bound": {"t", "r", "delta", "c", "cutoff"},
    "heat_small_z": {"t", "z"},
    "mode_sum_growth": {"z", "delta", "n_max"},
    "strichartz": {"q", "p", "center", "width", "window"},
    "counterexample": {"p", "eps", "q"},
    "tnu": {"nu", "p", "t"},
    "admissible": {"s", "count"},
}

TOP_KEYS = {"name", "n", "potential", "basis_size", "cutoff", "lmax", "kernels", "scans", "output", "seed"}
KERNEL_KEYS = {"t", "flavor", "r1", "r2", "delta", "eps", "cutoff", "method", "eps_limit"}
# entries that may legitimately be zero or negative
SIGNED = {"delta", "angles", "eps", "s", "seed", "a", "coefficients"}


class ConfigError(LabError):
    """Malformed scenario file; ``location`` names the offending entry."""

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


@dataclass
class PotentialSpec:
    builtin: str | None = None
    coefficients: list | None = None


@dataclass
class KernelSpec:
    t: float
    flavor: str = "heat"
    r1: list = field(default_factory=lambda: [1.0])
    r2: list = field(default_factory=lambda: [1.0])
    delta: list = field(default_factory=lambda: [0.0])
    eps: float = 0.0
    cutoff: int | None = None
    method: str = "weber"
    eps_limit: str = "direct"


@dataclass
class ScanSpec:
    type: str
    params: dict


@dataclass
class Scenario:
    name: str
    n: int
    potential: PotentialSpec
    basis_size: int = 16
    cutoff: int | None = None
    lmax: int = 160
    kernels: list = field(default_factory=list)
    scans: list = field(default_factory=list)
    output: str | None = None
    seed: int = 0


def _numbers(value, loc, allow_inf=False):
    vals = value if isinstance(value, list) else [value]
    out = []
    for i, v in enumerate(vals):
        where = f"{loc}[{i}]" if isinstance(value, list) else loc
        if isinstance(v, str) and allow_inf and v in ("inf", "infinity"):
            out.append(math.inf)
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(where, f"expected a number, got {v!r}")
        out.append(float(v))
    return out


def _check_positive(key, value, loc):
    if key in SIGNED or value is None:
        return
    vals = value if isinstance(value, list) else [value]
    for i, v in enumerate(vals):
        if isinstance(v, (int, float)) and not isinstance(v, bool) and v <= 0:
            where = f"{loc}[{i}]" if isinstance(value, list) else loc
            raise ConfigError(where, f"must be positive, got {v!r}")


def _unknown(keys, allowed, loc):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(loc, f"unknown key(s) {extra}; allowed: {sorted(allowed)}")


def _parse_potential(obj, loc):
    if isinstance(obj, str):
        return PotentialSpec(builtin=obj)
    if not isinstance(obj, dict):
        raise ConfigError(loc, "expected a built-in name or an object")
    _unknown(obj, {"builtin", "coefficients"}, loc)
    if ("builtin" in obj) == ("coefficients" in obj):
        raise ConfigError(loc, "give exactly one of 'builtin' or 'coefficients'")
    if "builtin" in obj:
        if not isinstance(obj["builtin"], str):
            raise ConfigError(f"{loc}.builtin", "expected a string")
        return PotentialSpec(builtin=obj["builtin"])
    coeffs = obj["coefficients"]
    if not isinstance(coeffs, list) or not coeffs:
        raise ConfigError(f"{loc}.coefficients", "expected a non-empty list of [l, m, c] or [k, c]")
    for i, term in enumerate(coeffs):
        _numbers(term, f"{loc}.coefficients[{i}]")
    return PotentialSpec(coefficients=coeffs)


def _parse_kernel(obj, loc):
    if not isinstance(obj, dict):
        raise ConfigError(loc, "expected an object")
    _unknown(obj, KERNEL_KEYS, loc)
    if "t" not in obj:
        raise ConfigError(loc, "missing 't'")
    kw = {}
    for key, value in obj.items():
        where = f"{loc}.{key}"
        if key in ("flavor", "method", "eps_limit"):
            if not isinstance(value, str):
                raise ConfigError(where, "expected a string")
            kw[key] = value
            continue
        if key == "cutoff":
            kw[key] = None if value is None else int(_numbers(value, where)[0])
        elif key in ("r1", "r2", "delta"):
            kw[key] = _numbers(value, where)
        else:
            kw[key] = _numbers(value, where)[0]
        if key != "t":
            _check_positive(key, value, where)
    if kw.get("flavor", "heat") not in ("heat", "schrodinger"):
        raise ConfigError(f"{loc}.flavor", "expected 'heat' or 'schrodinger'")
    if kw.get("eps_limit", "direct") not in ("direct", "richardson"):
        raise ConfigError(f"{loc}.eps_limit", "expected 'direct' or 'richardson'")
    if kw["t"] == 0 or (kw.get("flavor", "heat") == "heat" and kw["t"] < 0):
        raise ConfigError(f"{loc}.t", "heat needs t > 0 and Schrodinger t != 0")
    return KernelSpec(**kw)


def _parse_scan(obj, loc):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(loc, "expected an object with a 'type'")
    kind = obj["type"]
    if kind not in SCAN_TYPES:
        raise ConfigError(f"{loc}.type", f"unknown scan {kind!r}; known: {sorted(SCAN_TYPES)}")
    params = {k: v for k, v in obj.items() if k != "type"}
    _unknown(params, SCAN_TYPES[kind], loc)
    out = {}
    for key, value in params.items():
        where = f"{loc}.{key}"
        if value is None:
            out[key] = None
            continue
        if key == "angles" and isinstance(value, int) and not isinstance(value, bool):
            if value < 1:
                raise ConfigError(where, "angle count must be >= 1")
            out[key] = value
            continue
        vals = _numbers(value, where, allow_inf=key in ("p", "q"))
        _check_positive(key, value, where)
        out[key] = vals if isinstance(value, list) else vals[0]
    return ScanSpec(kind, out)


def parse_scenario(obj, source="<config>"):
    """Validate a decoded JSON object and build a ``Scenario``."""
    if not isinstance(obj, dict):
        raise ConfigError(source, "top level must be an object")
    _unknown(obj, TOP_KEYS, source)
    for key in ("name", "n", "potential"):
        if key not in obj:
            raise ConfigError(source, f"missing required key {key!r}")
    if not isinstance(obj["name"], str) or not obj["name"]:
        raise ConfigError("name", "expected a non-empty string")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise ConfigError("n", f"expected an integer >= 2, got {n!r}")
    kw = {"name": obj["name"], "n": n, "potential": _parse_potential(obj["potential"], "potential")}
    for key in ("basis_size", "lmax", "cutoff", "seed"):
        if key in obj and obj[key] is not None:
            v = obj[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(key, f"expected an integer, got {v!r}")
            _check_positive(key, v, key)
            kw[key] = v
    if "output" in obj and obj["output"] is not None:
        if not isinstance(obj["output"], str):
            raise ConfigError("output", "expected a path string")
        kw["output"] = obj["output"]
    for key, parse in (("kernels", _parse_kernel), ("scans", _parse_scan)):
        items = obj.get(key, [])
        if not isinstance(items, list):
            raise ConfigError(key, "expected a list")
        kw[key] = [parse(item, f"{key}[{i}]") for i, item in enumerate(items)]
    return Scenario(**kw)


def load_scenario(path):
    """Read and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return parse_scenario(obj, str(path))
