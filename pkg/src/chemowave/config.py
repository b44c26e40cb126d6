"""Experiment configuration: YAML tree merged over documented defaults."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .errors import ChemoWaveError, DomainError
from .params import ModelParams

MODES = ("speeds", "wave", "evolve", "verify", "eig", "sweep")

# (default, description) for every key; nested dicts are sections
SCHEMA: Dict[str, Any] = {
    "mode": ("speeds", "one of speeds | wave | evolve | verify | eig | sweep"),
    "seed": (0, "seed for randomized inputs (initial perturbations)"),
    "params": {
        "a": (1.0, "logistic growth rate"),
        "b": (1.0, "logistic damping"),
        "chi": (0.1, "chemotactic sensitivity"),
        "tau": (0.5, "time constant of the chemical"),
    },
    "grid": {
        "x_min": (None, "left end (null: mode default)"),
        "x_max": (None, "right end (null: mode default)"),
        "dx": (None, "spacing (null: mode default)"),
    },
    "tolerances": {
        "inner": (1e-8, "sup-norm change per unit time ending the frozen-field relaxation"),
        "outer": (1e-6, "sup-norm change ending the Picard iteration"),
        "left_state_rel": (0.01, "relative tolerance on the left state against a/b"),
        "decay_rate_rel": (0.02, "relative tolerance on the fitted decay rate"),
        "decay_ratio_abs": (0.02, "tolerance on |U e^{mu x} - 1| in the decay window"),
        "bound_abs": (1e-3, "slack on the global sup bound of the evolution"),
        "stability_abs": (1e-3, "distance to (a/b, a/b) required at t_end"),
        "front_rel": (0.05, "relative slack below 2 sqrt(a) for the spreading speed"),
        "eig_abs": (1e-4, "eigenvalue tolerance against the constructed lambda0"),
    },
    "wave": {
        "c": ("mid", "speed, or 'mid' for the midpoint of (c*, c**)"),
        "k_max": (200, "Picard iteration budget"),
        "t_max": (1000.0, "time budget of one relaxation"),
        "max_points": (2_000_000, "largest grid the wave solver may allocate"),
        "probe": (False, "also run speeds outside the admissible window (tagged outside_theory)"),
    },
    "evolve": {
        "c": (0.0, "frame speed (0: lab frame)"),
        "t_end": (100.0, "final time"),
        "dt": (0.05, "time step"),
        "record_every": (1.0, "recording interval"),
        "initial": ("perturbed", "perturbed | step"),
        "amplitude": (3.0, "perturbed: u0 = amplitude (a/b)(1 + eta), |eta| <= perturbation"),
        "perturbation": (0.1, "perturbed: size of the random Fourier perturbation"),
        "step_width": (10.0, "step: u0 = a/b on [x_min, x_min + step_width], 0 elsewhere"),
        "front_level": (1e-2, "level set tracked for the spreading speed"),
    },
    "verify": {
        "fractions": ([0.3, 0.7], "positions of mu inside (mu**, mu*)"),
        "b_scale": (1.0, "evaluate the residuals with b replaced by b_scale * b"),
    },
    "eig": {
        "c": (0.0, "drift"),
        "bc": ("DD", "DD | ND"),
        "lambda0": (None, "target eigenvalue (null: midpoint of the allowed range)"),
        "n": (2000, "grid points"),
        "certificate": (False, "also run the certificate on a synthetic front at speed c"),
        "eps": ([1e-2, 1e-3], "certificate smallness levels"),
    },
    "sweep": {
        "task": ("speeds", "speeds | wave | eig run for every row"),
        "chi": ({"log": [-1, -4, 4]}, "list, or {log: [start_exp, stop_exp, num]} / {lin: [start, stop, num]}"),
        "tau": ([0.5], "list or range spec"),
        "c": ([None], "list or range spec (null: task default)"),
    },
    "output": {
        "plot": (True, "emit a gnuplot script next to the data files"),
    },
}


class ConfigError(ChemoWaveError, ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def defaults(schema: Optional[dict] = None) -> dict:
    schema = SCHEMA if schema is None else schema
    return {k: defaults(v) if isinstance(v, dict) else copy.deepcopy(v[0])
            for k, v in schema.items()}


def schema_document() -> dict:
    """JSON-serialisable description of every key with its default."""
    def walk(s):
        out = {}
        for k, v in s.items():
            if isinstance(v, dict):
                out[k] = {"type": "section", "keys": walk(v)}
            else:
                out[k] = {"default": v[0], "description": v[1]}
        return out
    return {"title": "chemowave experiment configuration", "keys": walk(SCHEMA)}


def _merge(base: dict, new: dict, schema: dict, path: str = "") -> dict:
    for k, v in new.items():
        where = f"{path}.{k}" if path else k
        if k not in schema:
            raise ConfigError(where, "unknown key")
        if isinstance(schema[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(where, "expected a mapping")
            _merge(base[k], v, schema[k], where)
        else:
            base[k] = v
    return base


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (1e-7)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"))


def _load_yaml(text):
    return yaml.load(text, Loader=_Loader)


def _parse_scalar(text: str):
    return _load_yaml(text)


def set_path(tree: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node, schema = tree, SCHEMA
    for i, k in enumerate(keys):
        where = ".".join(keys[:i + 1])
        if k not in schema:
            raise ConfigError(where, "unknown key")
        if i == len(keys) - 1:
            if isinstance(schema[k], dict):
                raise ConfigError(where, "cannot assign a whole section")
            node[k] = value
        else:
            if not isinstance(schema[k], dict):
                raise ConfigError(where, "not a section")
            node, schema = node[k], schema[k]


def expand_range(spec, where: str) -> List:
    """List, scalar or {log|lin: [start, stop, num]} into a list of values."""
    if spec is None or isinstance(spec, (int, float)):
        return [spec]
    if isinstance(spec, list):
        return list(spec)
    if isinstance(spec, dict) and len(spec) == 1:
        kind, args = next(iter(spec.items()))
        if kind in ("log", "lin") and isinstance(args, list) and len(args) == 3:
            start, stop, num = args
            if not isinstance(num, int) or num < 0:
                raise ConfigError(where, "num must be a nonnegative integer")
            vals = np.logspace(start, stop, num) if kind == "log" else np.linspace(start, stop, num)
            return [float(v) for v in vals]
    raise ConfigError(where, "expected a list, a scalar or {log|lin: [start, stop, num]}")


@dataclass
class ExperimentConfig:
    tree: dict

    @property
    def mode(self) -> str:
        return self.tree["mode"]

    @property
    def params(self) -> ModelParams:
        p = self.tree["params"]
        return ModelParams(float(p["a"]), float(p["b"]), float(p["chi"]), float(p["tau"]))

    @property
    def tol(self) -> dict:
        return self.tree["tolerances"]

    def section(self, name: str) -> dict:
        return self.tree[name]

    def canonical(self) -> str:
        return json.dumps(self.tree, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def ranges(self) -> dict:
        s = self.tree["sweep"]
        return {k: expand_range(s[k], f"sweep.{k}") for k in ("chi", "tau", "c")}

    def validate(self) -> "ExperimentConfig":
        t = self.tree
        if t["mode"] not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
        for k, v in t["params"].items():
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ConfigError(f"params.{k}", "must be a number")
        try:
            self.params
        except DomainError as e:
            raise ConfigError("params", str(e)) from e
        for k, v in t["tolerances"].items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0 \
                    or not math.isfinite(v):
                raise ConfigError(f"tolerances.{k}", "must be a positive number")
        g = t["grid"]
        for k in ("x_min", "x_max", "dx"):
            if g[k] is not None and not isinstance(g[k], (int, float)):
                raise ConfigError(f"grid.{k}", "must be a number or null")
        if g["dx"] is not None and not g["dx"] > 0:
            raise ConfigError("grid.dx", "must be positive")
        if g["x_min"] is not None and g["x_max"] is not None and not g["x_max"] > g["x_min"]:
            raise ConfigError("grid.x_max", "must exceed grid.x_min")
        c = t["wave"]["c"]
        if not (c == "mid" or isinstance(c, (int, float))):
            raise ConfigError("wave.c", "must be a number or 'mid'")
        if not isinstance(t["wave"]["probe"], bool):
            raise ConfigError("wave.probe", "must be true or false")
        if t["eig"]["bc"] not in ("DD", "ND"):
            raise ConfigError("eig.bc", "must be DD or ND")
        if t["evolve"]["initial"] not in ("perturbed", "step"):
            raise ConfigError("evolve.initial", "must be perturbed or step")
        for k in ("t_end", "dt", "record_every"):
            if not t["evolve"][k] > 0:
                raise ConfigError(f"evolve.{k}", "must be positive")
        if t["sweep"]["task"] not in ("speeds", "wave", "eig"):
            raise ConfigError("sweep.task", "must be speeds, wave or eig")
        self.ranges()
        return self


def load_config(path: Optional[str] = None, mode: Optional[str] = None,
                sets: Optional[List[str]] = None,
                tol_overrides: Optional[List[str]] = None) -> ExperimentConfig:
    tree = defaults()
    if path is not None:
        try:
            with open(path) as f:
                raw = _load_yaml(f) or {}
        except OSError as e:
            raise ConfigError("--config", str(e)) from e
        except yaml.YAMLError as e:
            raise ConfigError("--config", f"not valid YAML: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "expected a mapping")
        _merge(tree, raw, SCHEMA)
    if mode is not None:
        tree["mode"] = mode
    for item in sets or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected KEY=VALUE")
        set_path(tree, key.strip(), _parse_scalar(val))
    for item in tol_overrides or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected K=V")
        set_path(tree, "tolerances." + key.strip(), _parse_scalar(val))
    return ExperimentConfig(tree).validate()
