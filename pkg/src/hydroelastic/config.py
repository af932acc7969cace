"""Run configuration: defaults, JSON loading and field-level validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .elasticity import PhysicalParams, StoredEnergyModel, make_canonical_energy, validate_hypotheses
from .errors import HydroelasticError
from .spectral import Discretization

DEFAULTS = {
    "g": 9.81,
    "g_rho": 1.0,
    "model": {"a": 4.0, "b": 1.0, "c3": 0.0, "c4": 0.0, "d1": 0.0},
    "discretization": {"n_modes": 32, "oversampling_factor": 4, "newton_tol": 1e-12,
                       "newton_max_iter": 30, "fd_step_scale": 1e-6},
    "seed": 0,
    "workers": 1,
    "csv_coeffs": 8,
    "dispersion": {"k_min": 1, "k_max": 7, "n_samples": 400,
                   "windows": {"zoom": [[3.96, 4.10], [0.0, 330.0]],
                               "far": [[0.0, 30.0], [0.0, 30.0]]}},
    "double_points": {"k_max": 5, "l_max": 5},
    "branch": {"k": 1, "lambda1": 5.0, "t_max": 1e-3, "n_grid": 11, "free": "lambda2"},
    "sheet": {"kind": "general", "k": 2, "l": 3, "lambda1": None, "t_max": 2e-3,
              "n_grid": 21},
    "profile": {"sheet": None, "index": None, "n_plot": 256},
}


class ConfigError(HydroelasticError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in self.problems))


def _merge(base: dict, over: dict, path: str, problems: list) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key == "rho":
            out["rho"] = val
            continue
        if key not in base:
            problems.append(f"{path}{key}: unknown field")
            continue
        if isinstance(base[key], dict) and key != "windows":
            if not isinstance(val, dict):
                problems.append(f"{path}{key}: expected an object")
                continue
            out[key] = _merge(base[key], val, f"{path}{key}.", problems)
        else:
            out[key] = val
    return out


@dataclass
class RunConfig:
    data: dict

    @property
    def params_base(self) -> PhysicalParams:
        """Physical constants with placeholder speeds (1, 1)."""
        return PhysicalParams(self.data["g"], self.rho, 1.0, 1.0)

    @property
    def rho(self) -> float:
        if self.data.get("rho") is not None:
            return float(self.data["rho"])
        return float(self.data["g_rho"]) / float(self.data["g"])

    @property
    def model(self) -> StoredEnergyModel:
        return make_canonical_energy(**self.data["model"])

    @property
    def disc(self) -> Discretization:
        return Discretization(**self.data["discretization"])

    def section(self, name: str) -> dict:
        return self.data[name]

    def to_dict(self) -> dict:
        out = copy.deepcopy(self.data)
        out["rho"] = self.rho
        return out


def _number(problems, path, v, positive=False, integer=False, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{path}: expected a number, got {v!r}")
        return
    if not math.isfinite(v):
        problems.append(f"{path}: must be finite")
    elif integer and int(v) != v:
        problems.append(f"{path}: must be an integer")
    elif positive and not v > 0:
        problems.append(f"{path}: must be positive, got {v}")
    elif minimum is not None and v < minimum:
        problems.append(f"{path}: must be >= {minimum}, got {v}")


def build_config(overrides: dict | None = None) -> RunConfig:
    """Merge ``overrides`` into the defaults and validate every field."""
    problems: list = []
    data = _merge(DEFAULTS, overrides or {}, "", problems)
    for key in ("g", "g_rho"):
        _number(problems, key, data[key], positive=True)
    if data.get("rho") is not None:
        _number(problems, "rho", data["rho"], positive=True)
    for key, val in data["model"].items():
        _number(problems, f"model.{key}", val, positive=key in ("a", "b"))
    d = data["discretization"]
    _number(problems, "discretization.n_modes", d["n_modes"], integer=True, minimum=2)
    _number(problems, "discretization.oversampling_factor", d["oversampling_factor"],
            integer=True, minimum=2)
    _number(problems, "discretization.newton_tol", d["newton_tol"], positive=True)
    _number(problems, "discretization.newton_max_iter", d["newton_max_iter"], integer=True,
            minimum=1)
    _number(problems, "discretization.fd_step_scale", d["fd_step_scale"], positive=True)
    _number(problems, "seed", data["seed"], integer=True, minimum=0)
    _number(problems, "workers", data["workers"], integer=True, minimum=1)
    _number(problems, "csv_coeffs", data["csv_coeffs"], integer=True, minimum=0)
    disp = data["dispersion"]
    _number(problems, "dispersion.k_min", disp["k_min"], integer=True, minimum=1)
    _number(problems, "dispersion.k_max", disp["k_max"], integer=True, minimum=1)
    _number(problems, "dispersion.n_samples", disp["n_samples"], integer=True, minimum=2)
    if not isinstance(disp["windows"], dict) or not disp["windows"]:
        problems.append("dispersion.windows: expected a non-empty object")
    else:
        for name, win in disp["windows"].items():
            try:
                (x0, x1), (y0, y1) = win
                if not (x0 < x1 and y0 < y1):
                    raise ValueError
            except (TypeError, ValueError):
                problems.append(f"dispersion.windows.{name}: expected [[x0, x1], [y0, y1]] "
                                "with increasing bounds")
    for key in ("k_max", "l_max"):
        _number(problems, f"double_points.{key}", data["double_points"][key], integer=True,
                minimum=1)
    br = data["branch"]
    _number(problems, "branch.k", br["k"], integer=True, minimum=1)
    _number(problems, "branch.lambda1", br["lambda1"], positive=True)
    _number(problems, "branch.t_max", br["t_max"], positive=True)
    _number(problems, "branch.n_grid", br["n_grid"], integer=True, minimum=1)
    if br["free"] not in ("lambda1", "lambda2"):
        problems.append("branch.free: must be 'lambda1' or 'lambda2'")
    sh = data["sheet"]
    if sh["kind"] not in ("simple", "special", "general"):
        problems.append("sheet.kind: must be 'simple', 'special' or 'general'")
    _number(problems, "sheet.k", sh["k"], integer=True, minimum=1)
    _number(problems, "sheet.l", sh["l"], integer=True, minimum=1)
    if sh["lambda1"] is not None:
        _number(problems, "sheet.lambda1", sh["lambda1"], positive=True)
    _number(problems, "sheet.t_max", sh["t_max"], positive=True)
    _number(problems, "sheet.n_grid", sh["n_grid"], integer=True, minimum=1)
    if not problems:
        data["discretization"] = {k: (int(v) if k in ("n_modes", "oversampling_factor",
                                                      "newton_max_iter") else float(v))
                                  for k, v in d.items()}
        try:
            Discretization(**data["discretization"])
        except HydroelasticError as exc:
            problems.append(f"discretization: {exc}")
        for sec in ("branch", "sheet"):
            if data[sec]["lambda1"] is not None and data[sec]["lambda1"] == data["model"]["a"]:
                problems.append(f"{sec}.lambda1: must differ from E11 = {data['model']['a']}")
        try:
            report = validate_hypotheses(make_canonical_energy(**data["model"]))
            for name, value, msg in report.failures:
                problems.append(f"model: {name} = {value:.6g} {msg}")
        except HydroelasticError as exc:
            problems.append(f"model: {exc}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file: not valid JSON ({exc.msg} at line {exc.lineno})"]) \
            from None
    if not isinstance(data, dict):
        raise ConfigError(["config file: top level must be an object"])
    return build_config(data)
