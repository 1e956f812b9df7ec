"""Run configuration: an INI file with sections, plus ``--section.key=value`` overrides."""

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .expressions import ExpressionError, evaluate_real, parse

DEFAULTS = {
    "model": {"name": "two-level-pt"},
    "path": {"type": "latitude", "theta": "pi/2", "samples": "4000", "tau": "2*pi"},
    "scan": {
        "beta_min": "0.1", "beta_max": "5", "beta_steps": "100",
        "theta_min": "0", "theta_max": "pi", "theta_steps": "100",
        "log_beta": "false", "loop_samples": "1000",
    },
    "output": {"format": "csv", "path": "-", "critical_path": ""},
    "oracle": {"ramp_factors": "10, 50, 200", "level": "1", "samples": "256", "ramp_factor": "50"},
    "critical": {"tol": "1e-4"},
    "tolerances": {},
}

TOLERANCES = {
    "pseudo_hermiticity": 1e-10,
    "biorthonormality": 1e-10,
    "completeness": 1e-9,
    "metric_pairing": 1e-9,
    "partner_hermiticity": 1e-8,
    "properness": 1e-4,
    "berry": 1e-5,
}

MODEL_KEYS_TEXT = {"name", "hamiltonian", "metric", "coords"}


@dataclass
class RunConfig:
    model_name: str
    model_params: dict
    path_type: str
    theta: float
    samples: int
    tau: float
    vertices: list = None
    scan: dict = field(default_factory=dict)
    output_format: str = "csv"
    output_path: str = "-"
    critical_path: str = ""
    oracle: dict = field(default_factory=dict)
    critical_tol: float = 1e-4
    tolerances: dict = field(default_factory=dict)

    def beta_grid(self):
        s = self.scan
        if s["log_beta"]:
            return np.logspace(np.log10(s["beta_min"]), np.log10(s["beta_max"]), s["beta_steps"])
        return np.linspace(s["beta_min"], s["beta_max"], s["beta_steps"])

    def theta_grid(self):
        s = self.scan
        return np.linspace(s["theta_min"], s["theta_max"], s["theta_steps"])


def _number(section, key, text):
    try:
        return evaluate_real(text)
    except (ExpressionError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _integer(section, key, text):
    v = _number(section, key, text)
    if v != int(v):
        raise ConfigError(f"[{section}] {key} must be an integer, got {text!r}")
    return int(v)


def _boolean(section, key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key} must be a boolean, got {text!r}")


def parse_overrides(args):
    """Turn ``--section.key=value`` tokens into ``{(section, key): value}``."""
    out = {}
    it = iter(args)
    for tok in it:
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognized argument {tok!r}; overrides look like --section.key=value")
        body = tok[2:]
        if "=" in body:
            name, value = body.split("=", 1)
        else:
            name = body
            value = next(it, None)
            if value is None:
                raise ConfigError(f"missing value for {tok}")
        section, key = name.split(".", 1)
        out[(section, key)] = value
    return out


def load(path, overrides=None):
    """Read and validate a run configuration.

    Raises
    ------
    ConfigError
        On unreadable files, syntax errors or invalid values.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        try:
            parser.read_string(text, source=str(p))
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    for (section, key), value in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    known = set(DEFAULTS) | {"DEFAULT"}
    unknown = [s for s in parser.sections() if s not in known]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    return _build(parser)


def _build(cp):
    model = dict(cp["model"])
    name = model.pop("name")
    params = {}
    if name == "custom":
        if "hamiltonian" not in model:
            raise ConfigError("[model] custom models need a hamiltonian")
        for key in ("hamiltonian", "metric"):
            if key in model:
                try:
                    parse(model[key])
                except ExpressionError as exc:
                    raise ConfigError(f"[model] {key}: {exc}") from exc
        extra = {k: _number("model", k, v) for k, v in model.items() if k not in MODEL_KEYS_TEXT}
        params = {
            "hamiltonian": model["hamiltonian"],
            "metric": model.get("metric"),
            "coords": tuple(c.strip() for c in model.get("coords", "theta, phi").split(",")),
            "params": extra,
        }
    else:
        params = {k: _number("model", k, v) for k, v in model.items()}

    path = cp["path"]
    ptype = path["type"].strip()
    if ptype not in ("latitude", "custom-polyline"):
        raise ConfigError(f"[path] type must be latitude or custom-polyline, got {ptype!r}")
    samples = _integer("path", "samples", path["samples"])
    if samples < 64:
        raise ConfigError("[path] samples must be at least 64")
    vertices = None
    if ptype == "custom-polyline":
        if "vertices" not in path:
            raise ConfigError("[path] custom-polyline needs vertices")
        vertices = _vertices(path["vertices"])

    sc = cp["scan"]
    scan = {k: _number("scan", k, sc[k]) for k in ("beta_min", "beta_max", "theta_min", "theta_max")}
    for k in ("beta_steps", "theta_steps", "loop_samples"):
        scan[k] = _integer("scan", k, sc[k])
    scan["log_beta"] = _boolean("scan", "log_beta", sc["log_beta"])
    if scan["beta_steps"] < 1 or scan["theta_steps"] < 1:
        raise ConfigError("[scan] grids must be non-empty")
    if scan["beta_min"] <= 0 or scan["beta_max"] < scan["beta_min"]:
        raise ConfigError("[scan] need 0 < beta_min <= beta_max")
    if scan["theta_max"] < scan["theta_min"]:
        raise ConfigError("[scan] need theta_min <= theta_max")
    if scan["loop_samples"] < 64:
        raise ConfigError("[scan] loop_samples must be at least 64")

    out = cp["output"]
    fmt = out["format"].strip().lower()
    if fmt not in ("csv", "json"):
        raise ConfigError(f"[output] format must be csv or json, got {fmt!r}")

    orc = cp["oracle"]
    oracle = {
        "ramp_factors": [_number("oracle", "ramp_factors", x) for x in orc["ramp_factors"].split(",")],
        "level": _integer("oracle", "level", orc["level"]),
        "samples": _integer("oracle", "samples", orc["samples"]),
        "ramp_factor": _number("oracle", "ramp_factor", orc["ramp_factor"]),
    }
    if any(r < 1 for r in oracle["ramp_factors"] + [oracle["ramp_factor"]]):
        raise ConfigError("[oracle] ramp factors must be at least 1")

    tolerances = dict(TOLERANCES)
    for k, v in cp["tolerances"].items():
        if k not in TOLERANCES:
            raise ConfigError(f"[tolerances] unknown key {k!r}; known: {', '.join(TOLERANCES)}")
        tolerances[k] = _number("tolerances", k, v)

    return RunConfig(
        model_name=name, model_params=params, path_type=ptype,
        theta=_number("path", "theta", path["theta"]), samples=samples,
        tau=_number("path", "tau", path["tau"]), vertices=vertices, scan=scan,
        output_format=fmt, output_path=out["path"].strip(), critical_path=out["critical_path"].strip(),
        oracle=oracle, critical_tol=_number("critical", "tol", cp["critical"]["tol"]), tolerances=tolerances,
    )


def _vertices(text):
    rows = [r for r in text.replace("\n", ";").split(";") if r.strip()]
    try:
        pts = [[evaluate_real(x) for x in r.split(",")] for r in rows]
    except ExpressionError as exc:
        raise ConfigError(f"[path] vertices: {exc}") from exc
    if len(pts) < 2 or len({len(p) for p in pts}) != 1:
        raise ConfigError("[path] vertices need at least two points of equal length")
    return pts
