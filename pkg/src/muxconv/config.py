"""Run configuration for the search command: JSON file, flag overrides, defaults.

Precedence is flags > config file > built-in defaults. Unknown keys are
rejected by the bundled JSON schema.
"""

import copy
import json
import os
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import jsonschema

from .exceptions import ConfigError
from .network import DEFAULT_SKELETON, NetworkSkeleton
from .objectives import (
    DEFAULT_BOUNDS,
    AnalyticEvaluator,
    NormalizationBounds,
    SyntheticEvaluator,
    TabularEvaluator,
    load_tabular,
)

__all__ = ["DEFAULTS", "RESULT_NEUTRAL_KEYS", "RunConfig", "load_schema", "load_config", "build_evaluator"]

# Four targets with error 0; params and MAdds at the midpoints of four equal
# slices of 1.5M-5M and 60M-300M.
_DEFAULT_TARGETS = [
    [0.0, 1.5e6 + (i + 0.5) * 3.5e6 / 4, 60e6 + (i + 0.5) * 240e6 / 4] for i in range(4)
]

DEFAULTS = {
    "algorithm": "moead",
    "evaluator": "analytic",
    "reference_targets": _DEFAULT_TARGETS,
    "population_size": 40,
    "iterations": 100,
    "mutation_rate": None,
    "crossover_probability": 0.9,
    "neighborhood_size": 2,
    "neighbor_mating_probability": 0.2,
    "theta": 5.0,
    "epsilon": 1e-6,
    "top_k": 5,
    "re": {"population_size": 20, "sample_size": 5, "budget": None},
    "normalization": None,
    "resolution": 224,
    "skeleton": DEFAULT_SKELETON.to_dict(),
    "synthetic_n_var": 12,
    "seed": 0,
    "workers": None,
    "out": "run",
}

# Execution details that cannot change results; left out of the echoed config
# so artifacts stay byte-identical across worker counts and output locations.
RESULT_NEUTRAL_KEYS = ("workers", "out")


def load_schema():
    text = resources.files("muxconv").joinpath("data/run_config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def workers(self):
        return self.values["workers"] or os.cpu_count() or 1

    @property
    def normalization_bounds(self) -> Optional[NormalizationBounds]:
        choice = self.values["normalization"]
        return None if choice is None else NormalizationBounds.from_dict(choice)

    @property
    def skeleton(self):
        s = self.values["skeleton"]
        return NetworkSkeleton(**{**s, "stage_channels": tuple(s["stage_channels"])})

    def echo(self):
        """Effective configuration as written into the run summary."""
        return {k: copy.deepcopy(v) for k, v in self.values.items() if k not in RESULT_NEUTRAL_KEYS}

    def search_params(self):
        v = self.values
        common = {
            "reference_targets": [list(t) for t in v["reference_targets"]],
            "mutation_rate": v["mutation_rate"],
            "theta": v["theta"],
            "epsilon": v["epsilon"],
            "normalization_bounds": self.normalization_bounds,
            "top_k": v["top_k"],
            "random_state": v["seed"],
            "n_workers": self.workers,
        }
        if v["algorithm"] == "re":
            budget = v["re"]["budget"] or v["population_size"] * (v["iterations"] + 1)
            return {**common, "population_size": v["re"]["population_size"],
                    "sample_size": v["re"]["sample_size"], "budget": budget}
        return {**common, "population_size": v["population_size"], "iterations": v["iterations"],
                "crossover_probability": v["crossover_probability"],
                "neighborhood_size": v["neighborhood_size"],
                "neighbor_mating_probability": v["neighbor_mating_probability"]}


def load_config(path=None, overrides=None):
    """Merge defaults, an optional JSON file and flag overrides (``None`` values are ignored)."""
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    for name, blob in (("config file", data), ("overrides", flags)):
        try:
            jsonschema.validate(blob, load_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{name}: {where}: {exc.message}") from None
    values = _merge(_merge(DEFAULTS, data), flags)
    cfg = RunConfig(values)
    try:
        cfg.skeleton
        cfg.normalization_bounds
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def build_evaluator(cfg):
    """Evaluator named by ``cfg['evaluator']``; tabular files are read here (OSError propagates)."""
    choice = cfg["evaluator"]
    bounds = cfg.normalization_bounds
    if choice == "analytic":
        return AnalyticEvaluator(resolution=cfg["resolution"], skeleton=cfg.skeleton,
                                 bounds=bounds or DEFAULT_BOUNDS)
    kind, _, arg = choice.partition(":")
    if kind == "tabular":
        return TabularEvaluator(load_tabular(arg), bounds=bounds)
    if kind == "synthetic":
        try:
            ev = SyntheticEvaluator(arg, n_var=cfg["synthetic_n_var"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if bounds is not None:
            ev.bounds = bounds
        return ev
    raise ConfigError(f"unknown evaluator {choice!r}")
