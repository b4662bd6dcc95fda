"""Objective evaluation: analytic complexity, tabular lookup and synthetic problems.

Every evaluator maps a candidate to an objective vector of ``m = 3`` floats,
ordered ``(predictive_error, params, madds)`` for architectures. Evaluators
are pure and read-only, so they may be shared between worker threads.
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rng
from .exceptions import BenchmarkFormatError, GenotypeError, KeyNotFoundError
from .network import DEFAULT_SKELETON, network_complexity
from .search_space import (
    FULL_BOUNDS,
    BoxSpace,
    MuxNetSpace,
    SpaceBounds,
    canonical_key,
    canonicalize,
    decode,
    parse_key,
    random_genotype,
    space_volume,
    validate_genotype,
)

__all__ = [
    "OBJECTIVE_NAMES",
    "NormalizationBounds",
    "DEFAULT_BOUNDS",
    "normalize",
    "denormalize",
    "ObjectiveNormalizer",
    "AnalyticEvaluator",
    "TabularEntry",
    "TabularBenchmark",
    "TabularEvaluator",
    "load_tabular",
    "write_tabular",
    "BENCHMARK_SPACE",
    "synthetic_accuracy",
    "generate_benchmark",
    "dtlz2",
    "SYNTHETIC_PROBLEMS",
    "synthetic_objective",
    "SyntheticEvaluator",
    "evaluate",
]

OBJECTIVE_NAMES = ("error", "params", "madds")


@dataclass(frozen=True)
class NormalizationBounds:
    """Per-objective ``(min, max)`` used to map raw objectives onto [0, 1].

    ``clip=False`` keeps the affine map but skips clamping, for problems whose
    objectives routinely leave the box (see :class:`SyntheticEvaluator`).
    """

    lower: tuple
    upper: tuple
    clip: bool = True

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper bounds must have the same non-zero length")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
                raise ValueError(f"objective {i}: need finite min < max, got ({a}, {b})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "clip", bool(self.clip))

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper), "clip": self.clip}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["lower"]), tuple(data["upper"]), data.get("clip", True))


# Error over [0, 1]; params and MAdds span the preference ranges of the reference targets.
DEFAULT_BOUNDS = NormalizationBounds((0.0, 1.5e6, 60e6), (1.0, 5e6, 300e6))


def normalize(F, bounds):
    """``(F - min) / (max - min)`` per objective, clamped to [0, 1] unless ``bounds.clip`` is off."""
    F = np.asarray(F, dtype=np.float64)
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    scaled = (F - lo) / (hi - lo)
    return np.clip(scaled, 0.0, 1.0) if bounds.clip else scaled


def denormalize(F_norm, bounds):
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    return lo + np.asarray(F_norm, dtype=np.float64) * (hi - lo)


class ObjectiveNormalizer(TransformerMixin, BaseEstimator):
    """Min-max normalizer for objective matrices with clamping.

    Bounds given at construction are used as-is; otherwise ``fit`` takes them
    from the data.
    """

    def __init__(self, lower=None, upper=None):
        self.lower = lower
        self.upper = upper

    def fit(self, F, y=None):
        F = np.atleast_2d(np.asarray(F, dtype=np.float64))
        lo = F.min(axis=0) if self.lower is None else np.asarray(self.lower, dtype=np.float64)
        hi = F.max(axis=0) if self.upper is None else np.asarray(self.upper, dtype=np.float64)
        self.bounds_ = NormalizationBounds(tuple(lo), tuple(hi))
        self.n_features_in_ = F.shape[1]
        return self

    def transform(self, F):
        check_is_fitted(self, "bounds_")
        return normalize(F, self.bounds_)

    def inverse_transform(self, F_norm):
        check_is_fitted(self, "bounds_")
        return denormalize(F_norm, self.bounds_)


def _objective_vector(error, params, madds):
    F = np.array([float(error), float(params), float(madds)])
    if not np.all(np.isfinite(F)) or not 0.0 <= F[0] <= 1.0:
        raise ValueError(f"invalid objective vector {F}")
    return F


class AnalyticEvaluator:
    """Objectives from the analytic complexity model; error is a fixed placeholder.

    ``placeholder_accuracy`` defaults to 1, which gives error 0 for every
    candidate so that only compactness and efficiency drive the search.
    """

    name = "analytic"

    def __init__(self, resolution=224, skeleton=DEFAULT_SKELETON, placeholder_accuracy=1.0,
                 bounds=DEFAULT_BOUNDS, search_bounds=FULL_BOUNDS):
        if not 0.0 <= placeholder_accuracy <= 1.0:
            raise ValueError("placeholder_accuracy must lie in [0, 1]")
        self.resolution = resolution
        self.skeleton = skeleton
        self.placeholder_accuracy = float(placeholder_accuracy)
        self.bounds = bounds
        self.space = MuxNetSpace(search_bounds)

    def evaluate(self, genotype):
        genotype = validate_genotype(genotype)
        params, madds = network_complexity(decode(genotype), self.resolution, self.skeleton)
        return _objective_vector(1.0 - self.placeholder_accuracy, params, madds)


# --------------------------------------------------------------------------- tabular benchmark


@dataclass(frozen=True)
class TabularEntry:
    accuracy: float
    params: int
    madds: int
    train_time: float


@dataclass
class TabularBenchmark:
    """Map from canonical key to measured accuracy and cost."""

    entries: Dict[str, TabularEntry]
    name: str = "benchmark"
    bounds: Optional[NormalizationBounds] = None
    space: SpaceBounds = FULL_BOUNDS
    duplicates: int = 0
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def lookup(self, genotype):
        key = canonical_key(genotype)
        try:
            return self.entries[key]
        except KeyError:
            raise KeyNotFoundError(f"no benchmark entry for {key}") from None

    def objective_bounds(self):
        """Stored bounds, or the tight bounds of the entries."""
        if self.bounds is not None:
            return self.bounds
        F = np.array([[1.0 - e.accuracy, e.params, e.madds] for e in self.entries.values()])
        lo, hi = F.min(axis=0), F.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        return NormalizationBounds(tuple(lo), tuple(hi))


def _check_entry(record, line):
    missing = {"key", "accuracy", "params", "madds", "train_time"} - set(record)
    if missing:
        raise BenchmarkFormatError(f"missing fields {sorted(missing)}", line=line)
    key = record["key"]
    try:
        parse_key(key)
    except (GenotypeError, AttributeError) as exc:
        raise BenchmarkFormatError(f"invalid key {key!r}: {exc}", line=line, key=key) from None
    acc = record["accuracy"]
    if not isinstance(acc, (int, float)) or isinstance(acc, bool) or not 0.0 <= acc <= 1.0:
        raise BenchmarkFormatError(f"accuracy {acc!r} outside [0, 1] for {key}", line=line, key=key)
    for name in ("params", "madds"):
        v = record[name]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise BenchmarkFormatError(f"{name} must be a non-negative integer for {key}", line=line, key=key)
    t = record["train_time"]
    if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t) or t < 0:
        raise BenchmarkFormatError(f"train_time must be a non-negative number for {key}", line=line, key=key)
    return key, TabularEntry(float(acc), record["params"], record["madds"], float(t))


def load_tabular(path):
    """Read a JSONL benchmark; later duplicates overwrite earlier ones and are counted.

    Lines starting with ``#`` are comments; ``#meta {...}`` carries metadata
    (name, objective bounds, searched space).
    """
    entries, duplicates, meta = {}, 0, {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            if text.startswith("#"):
                if text.startswith("#meta"):
                    try:
                        meta = json.loads(text[len("#meta"):])
                    except json.JSONDecodeError as exc:
                        raise BenchmarkFormatError(f"bad metadata: {exc.msg}", line=lineno) from None
                continue
            try:
                record = json.loads(text)
            except json.JSONDecodeError as exc:
                raise BenchmarkFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise BenchmarkFormatError("each entry must be a JSON object", line=lineno)
            key, entry = _check_entry(record, lineno)
            if key in entries:
                duplicates += 1
            entries[key] = entry
    bounds = NormalizationBounds.from_dict(meta["bounds"]) if "bounds" in meta else None
    space = SpaceBounds.from_dict(meta["space"]) if "space" in meta else FULL_BOUNDS
    return TabularBenchmark(entries, name=meta.get("name", Path(path).stem), bounds=bounds, space=space,
                            duplicates=duplicates, metadata=meta)


def write_tabular(benchmark, path):
    meta = dict(benchmark.metadata)
    meta["name"] = benchmark.name
    meta["space"] = benchmark.space.to_dict()
    meta["bounds"] = benchmark.objective_bounds().to_dict()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#meta " + json.dumps(meta) + "\n")
        for key, e in benchmark.entries.items():
            record = {"key": key, "accuracy": e.accuracy, "params": e.params, "madds": e.madds,
                      "train_time": e.train_time}
            fh.write(json.dumps(record) + "\n")


class TabularEvaluator:
    """Objectives looked up in a tabular benchmark; error is ``1 - accuracy``."""

    name = "tabular"

    def __init__(self, benchmark, bounds=None):
        self.benchmark = benchmark
        self.bounds = bounds if bounds is not None else benchmark.objective_bounds()
        self.space = MuxNetSpace(benchmark.space)

    def evaluate(self, genotype):
        genotype = validate_genotype(genotype)
        e = self.benchmark.lookup(genotype)
        return _objective_vector(1.0 - e.accuracy, e.params, e.madds)


_STAGE_STARTS = (0, 7, 15, 23)
_BENCHMARK_FREE = {start + offset for start in _STAGE_STARTS for offset in (5, 6)}

# Repetitions and leave-out ratio free in every stage, all other genes at their first option.
BENCHMARK_SPACE = SpaceBounds(tuple(
    FULL_BOUNDS.choices[i] if i in _BENCHMARK_FREE else (0,) for i in range(len(FULL_BOUNDS.choices))
))


def synthetic_accuracy(blueprint, params, madds):
    """Smooth accuracy surface: saturating in log-size and log-MAdds, with a depth bonus.

    Not a model of any real dataset; it only provides a known trade-off
    between accuracy and cost for search experiments.
    """
    capacity = 0.45 * math.log(params / 1e6) + 0.55 * math.log(madds / 1e8)
    depth = sum(st.repetitions * (1.0 - 0.5 * st.leave_out) for st in blueprint.stages)
    early_leave = blueprint.stages[0].leave_out if blueprint.stages[0].repetitions else 0.0
    acc = 0.955 - 0.28 * math.exp(-1.6 * (capacity + 0.9)) + 0.004 * depth - 0.015 * early_leave
    return min(max(acc, 0.0), 1.0)


def _enumerate_canonical(bounds):
    seen = {}
    for genes in itertools.product(*bounds.choices):
        canon = canonicalize(genes)
        if canon not in seen:
            seen[canon] = None
    return list(seen)


def generate_benchmark(count, random_state=None, bounds=BENCHMARK_SPACE, resolution=224,
                       skeleton=DEFAULT_SKELETON, noise=0.004, name="synthetic-muxnet"):
    """Synthetic tabular benchmark with ``count`` distinct canonical architectures.

    If ``count`` covers the canonical volume of ``bounds`` the table is
    exhaustive; otherwise a uniform sample without replacement is taken.
    """
    rng = check_rng(random_state)
    if count < 1:
        raise ValueError("count must be at least 1")
    volume = space_volume(bounds, canonical=True)
    if count > volume:
        raise ValueError(f"count {count} exceeds the {volume} distinct architectures in the space")
    if volume <= 200_000:
        pool = _enumerate_canonical(bounds)
        if count < len(pool):
            picks = np.sort(rng.choice(len(pool), size=count, replace=False))
            pool = [pool[i] for i in picks]
    else:
        found = {}
        while len(found) < count:
            canon = canonicalize(random_genotype(rng, bounds))
            found.setdefault(canon, None)
        pool = list(found)
    entries = {}
    for genes in pool:
        bp = decode(genes)
        params, madds = network_complexity(bp, resolution, skeleton)
        acc = synthetic_accuracy(bp, params, madds) + noise * rng.standard_normal()
        acc = round(min(max(acc, 0.0), 1.0), 6)
        train_time = round(madds / 1e6 * 0.9 * (1.0 + 0.05 * rng.standard_normal()), 3)
        entries[canonical_key(genes)] = TabularEntry(acc, params, madds, max(train_time, 0.0))
    meta = {"resolution": resolution, "skeleton": skeleton.to_dict(), "noise": noise}
    bench = TabularBenchmark(entries, name=name, space=bounds, metadata=meta)
    bench.bounds = bench.objective_bounds()
    return bench


# --------------------------------------------------------------------------- synthetic problems


def dtlz2(x, n_obj=3):
    """DTLZ2: concave front on the unit sphere octant, reached when ``x[n_obj-1:] == 0.5``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < n_obj:
        raise ValueError(f"dtlz2 needs a vector with at least {n_obj} variables")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("dtlz2 variables must lie in [0, 1]")
    g = np.sum((x[n_obj - 1:] - 0.5) ** 2)
    angles = x[:n_obj - 1] * (np.pi / 2)
    f = np.full(n_obj, 1.0 + g)
    for i in range(n_obj):
        f[i] *= np.prod(np.cos(angles[:n_obj - 1 - i]))
        if i > 0:
            f[i] *= np.sin(angles[n_obj - 1 - i])
    return f


SYNTHETIC_PROBLEMS = {"dtlz2": dtlz2}


def synthetic_objective(problem_id, x):
    try:
        fn = SYNTHETIC_PROBLEMS[problem_id]
    except KeyError:
        raise ValueError(f"unknown synthetic problem {problem_id!r}; choose from {sorted(SYNTHETIC_PROBLEMS)}") from None
    return fn(x)


class SyntheticEvaluator:
    """A box-constrained test problem with a known Pareto front.

    Normalization is the identity on the unit cube without clamping: off-front
    points have objectives up to ``1 + g`` and clamping them would flatten the
    region where reference rays leave the cube into a plateau the search
    cannot climb off.
    """

    name = "synthetic"

    def __init__(self, problem="dtlz2", n_var=12, n_obj=3):
        if problem not in SYNTHETIC_PROBLEMS:
            raise ValueError(f"unknown synthetic problem {problem!r}")
        self.problem = problem
        self.n_var = n_var
        self.n_obj = n_obj
        self.bounds = NormalizationBounds((0.0,) * n_obj, (1.0,) * n_obj, clip=False)
        self.space = BoxSpace(n_var)

    def evaluate(self, x):
        return SYNTHETIC_PROBLEMS[self.problem](np.asarray(x, dtype=np.float64), self.n_obj)


def evaluate(evaluator, candidate):
    """Objective vector of ``candidate`` under ``evaluator``."""
    return evaluator.evaluate(candidate)
