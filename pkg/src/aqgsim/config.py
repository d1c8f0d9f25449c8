"""Run configuration: one JSON document, validated against every module
precondition before any computation, echoed back into each output directory."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .grid import GridSpec
from .operators import DissipParams


class ConfigError(Exception):
    """Invalid configuration; `path` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config error at {path}: {message}")


DEFAULTS = {
    "grid": {"n1": 64, "n2": 64},
    "params": {"alpha": 0.75, "beta": 0.75, "mu": 1.0, "nu": 1.0, "s": 1.0},
    "init": {"kind": "random", "seed": 0, "kmax": 10, "spectrum_slope": 2.0,
             "amplitude": 1.0, "normalize": None, "modes": [], "path": None},
    "time": {"T": 1.0, "cfl": 0.4, "trace_stride": 1, "rtol": 1e-8, "atol": 1e-12,
             "dt_fixed": None, "dt_max": None, "nonlinear": True,
             "checkpoint_times": []},
    "picard": {"n_nodes": 32, "max_iter": 40, "tol": 1e-10, "weighted": False, "T": None},
    "constants": {"mode": "calibrate", "samples": 8, "seed": 0,
                  "C1": None, "C2": None, "C3": None, "C4": None},
    "output": {"directory": "out", "formats": ["csv"]},
    "lemmas": {"seed": 0, "count": 100, "kmax": 10, "spectrum_slope": 2.0,
               "grid_density": 1000},
    "sweep": {"alphas": [0.6, 0.75, 0.9], "betas": [0.6, 0.75, 0.9],
              "T_short": 0.05, "n_nodes": 9},
}


@dataclass
class RunConfig:
    grid: dict
    params: dict
    init: dict
    time: dict
    picard: dict
    constants: dict
    output: dict
    lemmas: dict
    sweep: dict
    raw: dict = field(default_factory=dict)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid["n1"], self.grid["n2"])

    def dissip_params(self) -> DissipParams:
        q = self.params
        return DissipParams(q["alpha"], q["beta"], q["mu"], q["nu"], q["s"])


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate_config(data: dict) -> RunConfig:
    """Merge with defaults and check every field; unknown keys are rejected."""
    _require(isinstance(data, dict), "<root>", "top level must be an object")
    merged = {}
    for section, defaults in DEFAULTS.items():
        given = data.get(section, {})
        _require(isinstance(given, dict), section, "must be an object")
        for key in given:
            _require(key in defaults, f"{section}.{key}", "unknown key")
        merged[section] = {**defaults, **given}
    for section in data:
        _require(section in DEFAULTS, section, "unknown section")

    g = merged["grid"]
    for key in ("n1", "n2"):
        _require(isinstance(g[key], int) and g[key] >= 8 and g[key] % 2 == 0,
                 f"grid.{key}", "must be an even integer >= 8")

    q = merged["params"]
    _require(_is_num(q["alpha"]) and 0.0 < q["alpha"] < 1.0, "params.alpha",
             "must lie in (0, 1)")
    _require(_is_num(q["beta"]) and 0.0 < q["beta"] < 1.0, "params.beta",
             "must lie in (0, 1)")
    _require(_is_num(q["mu"]) and q["mu"] > 0.0, "params.mu", "must be positive")
    _require(_is_num(q["nu"]) and q["nu"] > 0.0, "params.nu", "must be positive")
    _require(_is_num(q["s"]), "params.s", "must be a number")

    init = merged["init"]
    _require(init["kind"] in ("random", "modes", "file"), "init.kind",
             "must be one of random|modes|file")
    _require(isinstance(init["seed"], int), "init.seed", "must be an integer")
    band = min(g["n1"] // 3, g["n2"] // 3)
    _require(isinstance(init["kmax"], int) and 1 <= init["kmax"] <= band,
             "init.kmax", f"must be an integer in [1, {band}] for this grid")
    _require(_is_num(init["spectrum_slope"]), "init.spectrum_slope", "must be a number")
    _require(_is_num(init["amplitude"]), "init.amplitude", "must be a number")
    _require(init["normalize"] in (None, "hs", "l2"), "init.normalize",
             "must be null, 'hs', or 'l2'")
    if init["kind"] == "modes":
        _require(isinstance(init["modes"], list) and init["modes"], "init.modes",
                 "must be a nonempty list for kind=modes")
        for i, m in enumerate(init["modes"]):
            path = f"init.modes[{i}]"
            _require(isinstance(m, dict), path, "must be an object")
            k = m.get("k")
            _require(isinstance(k, list) and len(k) == 2
                     and all(isinstance(v, int) for v in k), f"{path}.k",
                     "must be a pair of integers")
            _require(_is_num(m.get("amplitude", 1.0)), f"{path}.amplitude",
                     "must be a number")
            _require(_is_num(m.get("phase", 0.0)), f"{path}.phase", "must be a number")
    if init["kind"] == "file":
        _require(isinstance(init["path"], str) and init["path"], "init.path",
                 "must be a path for kind=file")

    t = merged["time"]
    _require(_is_num(t["T"]) and t["T"] > 0.0, "time.T", "must be positive")
    _require(_is_num(t["cfl"]) and t["cfl"] > 0.0, "time.cfl", "must be positive")
    _require(isinstance(t["trace_stride"], int) and t["trace_stride"] >= 1,
             "time.trace_stride", "must be a positive integer")
    _require(_is_num(t["rtol"]) and t["rtol"] > 0.0, "time.rtol", "must be positive")
    _require(_is_num(t["atol"]) and t["atol"] >= 0.0, "time.atol", "must be nonnegative")
    for key in ("dt_fixed", "dt_max"):
        _require(t[key] is None or (_is_num(t[key]) and t[key] > 0.0),
                 f"time.{key}", "must be null or positive")
    _require(isinstance(t["nonlinear"], bool), "time.nonlinear", "must be a boolean")
    _require(isinstance(t["checkpoint_times"], list)
             and all(_is_num(x) and 0.0 < x <= t["T"] for x in t["checkpoint_times"]),
             "time.checkpoint_times", "must be times in (0, T]")

    pc = merged["picard"]
    _require(isinstance(pc["n_nodes"], int) and pc["n_nodes"] >= 2, "picard.n_nodes",
             "must be an integer >= 2")
    _require(isinstance(pc["max_iter"], int) and pc["max_iter"] >= 1, "picard.max_iter",
             "must be a positive integer")
    _require(_is_num(pc["tol"]) and pc["tol"] > 0.0, "picard.tol", "must be positive")
    _require(isinstance(pc["weighted"], bool), "picard.weighted", "must be a boolean")
    _require(pc["T"] is None or (_is_num(pc["T"]) and pc["T"] > 0.0), "picard.T",
             "must be null or positive")

    cs = merged["constants"]
    _require(cs["mode"] in ("calibrate", "explicit"), "constants.mode",
             "must be calibrate|explicit")
    _require(isinstance(cs["samples"], int) and cs["samples"] >= 1, "constants.samples",
             "must be a positive integer")
    _require(isinstance(cs["seed"], int), "constants.seed", "must be an integer")
    if cs["mode"] == "explicit":
        for key in ("C1", "C2", "C3", "C4"):
            _require(_is_num(cs[key]) and cs[key] > 0.0, f"constants.{key}",
                     "must be positive in explicit mode")

    out = merged["output"]
    _require(isinstance(out["directory"], str) and out["directory"], "output.directory",
             "must be a nonempty string")
    _require(isinstance(out["formats"], list) and out["formats"]
             and all(f in ("csv", "txt") for f in out["formats"]), "output.formats",
             "must be a nonempty list drawn from csv|txt")

    lm = merged["lemmas"]
    _require(isinstance(lm["seed"], int), "lemmas.seed", "must be an integer")
    _require(isinstance(lm["count"], int) and lm["count"] >= 1, "lemmas.count",
             "must be a positive integer")
    _require(isinstance(lm["kmax"], int) and 1 <= lm["kmax"] <= band, "lemmas.kmax",
             f"must be an integer in [1, {band}] for this grid")
    _require(_is_num(lm["spectrum_slope"]), "lemmas.spectrum_slope", "must be a number")
    _require(isinstance(lm["grid_density"], int) and lm["grid_density"] >= 10,
             "lemmas.grid_density", "must be an integer >= 10")

    sw = merged["sweep"]
    for key in ("alphas", "betas"):
        _require(isinstance(sw[key], list) and sw[key]
                 and all(_is_num(x) and 0.0 < x < 1.0 for x in sw[key]),
                 f"sweep.{key}", "must be a nonempty list of values in (0, 1)")
    _require(_is_num(sw["T_short"]) and sw["T_short"] > 0.0, "sweep.T_short",
             "must be positive")
    _require(isinstance(sw["n_nodes"], int) and sw["n_nodes"] >= 2, "sweep.n_nodes",
             "must be an integer >= 2")

    return RunConfig(**merged, raw=data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return validate_config(data)


def echo_config(cfg: RunConfig, out_dir: Path) -> None:
    """Write the fully merged configuration next to the outputs, for provenance."""
    doc = {section: getattr(cfg, section)
           for section in ("grid", "params", "init", "time", "picard",
                           "constants", "output", "lemmas", "sweep")}
    (out_dir / "config.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
