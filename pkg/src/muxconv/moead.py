"""Reference-guided decomposition search with PBI scalarization.

Each user-supplied reference target defines one subproblem whose direction
runs from the shared ideal point ``z*`` to the target. Candidates are scored
with the penalty-based boundary intersection

    g = d1 + theta * d2,
    d1 = |(F - z*) . w| / ||w||,
    d2 = ||F - (z* + d1 * w / ||w||)||,

on normalized objectives. :class:`DecompositionSearch` evolves one
sub-population per target, with occasional mating across neighbouring
subproblems; :class:`RegularizedEvolution` is the aging-evolution baseline and
solves one target at a time.

Randomness is drawn only in the sequential orchestration loop. Candidate
evaluations within a generation may run on worker threads; results are merged
in candidate order, so outputs do not depend on the number of workers.
"""

import csv
import json
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_nonnegative_int, check_positive_int, check_probability, check_rng
from .exceptions import EvaluationError, GenotypeError
from .objectives import NormalizationBounds, normalize

__all__ = [
    "PbiParams",
    "IdealPoint",
    "pbi",
    "update_ideal",
    "reference_direction",
    "EvaluationRecord",
    "SubproblemResult",
    "SearchResult",
    "DecompositionSearch",
    "RegularizedEvolution",
    "search",
    "regularized_evolution",
    "LOG_COLUMNS",
]


@dataclass(frozen=True)
class PbiParams:
    theta: float = 5.0

    def __post_init__(self):
        if not self.theta >= 0:
            raise ValueError(f"theta must be non-negative, got {self.theta}")


@dataclass(frozen=True)
class IdealPoint:
    """Running ideal point kept ``epsilon`` below every observed objective."""

    z_star: Tuple[float, ...]
    epsilon: float = 1e-6

    @classmethod
    def fresh(cls, n_obj, epsilon=1e-6):
        return cls((math.inf,) * n_obj, epsilon)

    @property
    def array(self):
        return np.asarray(self.z_star, dtype=np.float64)

    @property
    def is_set(self):
        return all(math.isfinite(v) for v in self.z_star)


def _ideal_array(z):
    return z.array if isinstance(z, IdealPoint) else np.asarray(z, dtype=np.float64)


def pbi(F, w, z, params=PbiParams()):
    """Return ``(d1, d2, g)`` of objective vector ``F`` along direction ``w`` from ideal ``z``."""
    F = np.asarray(F, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    z = _ideal_array(z)
    theta = params.theta if isinstance(params, PbiParams) else float(params)
    norm_w = np.linalg.norm(w)
    if not norm_w > 0:
        raise ValueError("reference direction must be non-zero")
    unit = w / norm_w
    d1 = abs(float(np.dot(F - z, unit)))
    d2 = float(np.linalg.norm(F - (z + d1 * unit)))
    return d1, d2, d1 + theta * d2


def update_ideal(z, F):
    """Lower ``z*`` componentwise to ``F - epsilon`` where ``F`` improves on it."""
    cur = z.array
    new = np.minimum(cur, np.asarray(F, dtype=np.float64) - z.epsilon)
    return IdealPoint(tuple(float(v) for v in new), z.epsilon)


def reference_direction(target, z):
    """Unit vector from the ideal point to a reference target."""
    diff = np.asarray(target, dtype=np.float64) - _ideal_array(z)
    norm = np.linalg.norm(diff)
    if not norm > 0:
        raise ValueError("reference target coincides with the ideal point")
    return diff / norm


# --------------------------------------------------------------------------- results


LOG_COLUMNS = ("iteration", "subproblem", "key", "f1_raw", "f2_raw", "f3_raw",
               "f1_norm", "f2_norm", "f3_norm", "d1", "d2", "g", "failed")


@dataclass(frozen=True)
class EvaluationRecord:
    evaluation: int
    iteration: int
    subproblem: int
    key: str
    candidate: tuple
    F_raw: Optional[Tuple[float, ...]]
    F_norm: Tuple[float, ...]
    d1: float
    d2: float
    g: float
    failed: bool = False


@dataclass
class SubproblemResult:
    index: int
    target: Tuple[float, ...]
    target_normalized: Tuple[float, ...]
    direction: Tuple[float, ...]
    population: List[EvaluationRecord]
    best: Optional[EvaluationRecord]
    best_trace: List[float]
    top_k: List[dict] = field(default_factory=list)


def _fmt(v):
    return repr(float(v))


@dataclass
class SearchResult:
    """Evaluation log, final populations and top-k candidates per subproblem."""

    algorithm: str
    records: List[EvaluationRecord]
    subproblems: List[SubproblemResult]
    ideal_point: IdealPoint
    bounds: NormalizationBounds
    theta: float
    describe: object = field(default=None, repr=False)

    @property
    def n_evaluations(self):
        return len(self.records)

    @property
    def n_failed(self):
        return sum(r.failed for r in self.records)

    def rescore(self, F_norm_rows, subproblem, z=None):
        """PBI values of normalized rows for a subproblem under ideal point ``z`` (default: final)."""
        z = self.ideal_point if z is None else z
        sp = self.subproblems[subproblem]
        w = reference_direction(sp.target_normalized, z)
        return [pbi(F, w, z, self.theta) for F in F_norm_rows]

    def write_log(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LOG_COLUMNS)
            for r in self.records:
                raw = [_fmt(v) for v in r.F_raw] if r.F_raw is not None else ["", "", ""]
                writer.writerow([r.iteration, r.subproblem, r.key, *raw, *(_fmt(v) for v in r.F_norm),
                                 _fmt(r.d1), _fmt(r.d2), _fmt(r.g), int(r.failed)])

    def summary(self, config=None, seed=None):
        describe = self.describe or (lambda c: list(c))
        subs = []
        for sp in self.subproblems:
            subs.append({
                "index": sp.index,
                "target": list(sp.target),
                "target_normalized": list(sp.target_normalized),
                "direction": list(sp.direction),
                "best_g_trace": [v if math.isfinite(v) else None for v in sp.best_trace],
                "top_k": [dict(item, candidate=describe(item["candidate"])) for item in sp.top_k],
            })
        return {
            "algorithm": self.algorithm,
            "seed": seed,
            "n_evaluations": self.n_evaluations,
            "n_failed": self.n_failed,
            "theta": self.theta,
            "ideal_point": [v if math.isfinite(v) else None for v in self.ideal_point.z_star],
            "epsilon": self.ideal_point.epsilon,
            "normalization": self.bounds.to_dict(),
            "subproblems": subs,
            "config": config,
        }

    def write_summary(self, path, config=None, seed=None):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.summary(config, seed), fh, indent=2)
            fh.write("\n")


# --------------------------------------------------------------------------- shared machinery


class _Evaluations:
    """Batch evaluation with optional worker threads; output order follows input order."""

    def __init__(self, evaluator, bounds, n_workers):
        self.evaluator = evaluator
        self.bounds = bounds
        self.n_workers = max(1, int(n_workers or 1))

    def _one(self, candidate):
        try:
            F = np.asarray(self.evaluator.evaluate(candidate), dtype=np.float64)
        except (EvaluationError, GenotypeError):
            return None
        if F.shape != (len(self.bounds.lower),) or not np.all(np.isfinite(F)):
            return None
        return F

    def run(self, candidates):
        if self.n_workers == 1 or len(candidates) < 2:
            return [self._one(c) for c in candidates]
        with ThreadPoolExecutor(max_workers=self.n_workers) as pool:
            return list(pool.map(self._one, candidates))


def _scale_targets(targets, bounds):
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    return (np.asarray(targets, dtype=np.float64) - lo) / (hi - lo)


def _check_targets(targets, n_obj):
    arr = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[1] != n_obj or arr.shape[0] < 1:
        raise ValueError(f"reference_targets must be a non-empty list of {n_obj}-vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError("reference targets must be finite")
    return arr


def _partition(total, parts):
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


class _Subproblem:
    def __init__(self, index, target_raw, target_norm):
        self.index = index
        self.target_raw = target_raw
        self.target_norm = target_norm
        self.direction = None
        self.members: List[EvaluationRecord] = []
        self.best: Optional[EvaluationRecord] = None
        self.best_trace: List[float] = []
        self.archive = {}

    def keys(self):
        return {m.key for m in self.members}


class _SearchState:
    """Ideal point, directions and bookkeeping shared by both algorithms."""

    def __init__(self, targets_raw, bounds, theta, epsilon, space):
        self.bounds = bounds
        self.theta = float(theta)
        self.space = space
        norm = _scale_targets(targets_raw, bounds)
        self.subs = [_Subproblem(i, tuple(map(float, t)), tuple(map(float, tn)))
                     for i, (t, tn) in enumerate(zip(targets_raw, norm))]
        self.ideal = IdealPoint.fresh(norm.shape[1], epsilon)
        self.records: List[EvaluationRecord] = []
        self.refresh_directions()

    @property
    def scoring_ideal(self):
        # until something is observed, the lower corner of the normalized box stands in
        if self.ideal.is_set:
            return self.ideal
        return IdealPoint((-self.ideal.epsilon,) * len(self.ideal.z_star), self.ideal.epsilon)

    def refresh_directions(self):
        z = self.scoring_ideal
        for sp in self.subs:
            sp.direction = reference_direction(sp.target_norm, z)

    def score(self, F_norm, sp):
        return pbi(F_norm, sp.direction, self.scoring_ideal, self.theta)

    def absorb(self, candidate, F_raw, sp, iteration):
        """Log one evaluated candidate against subproblem ``sp``; returns its record."""
        failed = F_raw is None
        if failed:
            F_norm = np.ones(len(self.bounds.lower))
        else:
            F_norm = normalize(F_raw, self.bounds)
            new_ideal = update_ideal(self.ideal, F_norm)
            if new_ideal != self.ideal:
                self.ideal = new_ideal
                self.refresh_directions()
        d1, d2, g = self.score(F_norm, sp)
        rec = EvaluationRecord(
            evaluation=len(self.records), iteration=iteration, subproblem=sp.index,
            key=self.space.key(candidate), candidate=tuple(candidate),
            F_raw=None if failed else tuple(float(v) for v in F_raw),
            F_norm=tuple(float(v) for v in F_norm), d1=d1, d2=d2, g=g, failed=failed,
        )
        self.records.append(rec)
        if not failed:
            sp.archive.setdefault(rec.key, rec)
            if sp.best is None or rec.g < sp.best.g:
                sp.best = rec
        return rec

    def member_scores(self, sp):
        return [self.score(m.F_norm, sp)[2] for m in sp.members]

    def tournament(self, sp, scores, rng):
        n = len(sp.members)
        if n == 1:
            return sp.members[0]
        i, j = rng.choice(n, size=2, replace=False)
        a, b = sp.members[i], sp.members[j]
        sa, sb = scores[i], scores[j]
        if sa < sb or (sa == sb and a.evaluation < b.evaluation):
            return a
        return b

    def result(self, algorithm, top_k):
        out = []
        for sp in self.subs:
            archive = list(sp.archive.values())
            scored = []
            for rec in archive:
                d1, d2, g = self.score(rec.F_norm, sp)
                scored.append((g, rec.evaluation, d1, d2, rec))
            scored.sort(key=lambda t: (t[0], t[1]))
            top = [{
                "key": rec.key, "candidate": rec.candidate, "evaluation": rec.evaluation,
                "objectives": list(rec.F_raw), "objectives_normalized": list(rec.F_norm),
                "d1": d1, "d2": d2, "g": g,
            } for g, _, d1, d2, rec in scored[:top_k]]
            out.append(SubproblemResult(
                index=sp.index, target=sp.target_raw, target_normalized=sp.target_norm,
                direction=tuple(float(v) for v in sp.direction), population=list(sp.members),
                best=sp.best, best_trace=list(sp.best_trace), top_k=top,
            ))
        return SearchResult(algorithm, self.records, out, self.ideal, self.bounds, self.theta,
                            describe=getattr(self.space, "describe", None))


def _unique_samples(space, n, rng, taken=(), tries=100):
    keys = set(taken)
    out = []
    for _ in range(n):
        cand = space.sample(rng)
        for _ in range(tries):
            if space.key(cand) not in keys:
                break
            cand = space.sample(rng)
        keys.add(space.key(cand))
        out.append(cand)
    return out


# --------------------------------------------------------------------------- estimators


class _SearchEstimator(BaseEstimator):
    def _bounds(self, evaluator):
        if self.normalization_bounds is None:
            return evaluator.bounds
        b = self.normalization_bounds
        return b if isinstance(b, NormalizationBounds) else NormalizationBounds(*b)

    def _space(self, evaluator):
        return self.space if self.space is not None else evaluator.space

    @property
    def best_candidates_(self):
        """Top-ranked candidate of every subproblem."""
        check_is_fitted(self, "result_")
        return [sp.top_k[0]["candidate"] if sp.top_k else None for sp in self.result_.subproblems]


class DecompositionSearch(_SearchEstimator):
    """Tri-objective search decomposed into one PBI subproblem per reference target.

    Parameters
    ----------
    reference_targets : array-like of shape (n_targets, 3)
        Preference points in raw objective units.
    population_size : int
        Global population, split as evenly as possible over the targets.
    iterations : int
        Generations after initialization; each produces one child per member,
        so the budget is ``population_size * (iterations + 1)`` evaluations.
    mutation_rate : float or None
        Per-gene mutation probability; ``None`` uses one over the number of
        free genes of the space.
    crossover_probability : float
    neighborhood_size : int
        Number of nearest subproblems (by direction, itself included) from
        which mates can be drawn.
    neighbor_mating_probability : float
        Chance that the second parent comes from a neighbouring subproblem.
    theta, epsilon : float
        PBI penalty and ideal-point margin (normalized units).
    normalization_bounds : NormalizationBounds or None
        Defaults to the evaluator's bounds.
    top_k : int
    space : object or None
        Variation operators; defaults to ``evaluator.space``.
    n_workers : int
        Threads used to evaluate the children of one generation.
    random_state : int, Generator or None
    """

    def __init__(self, reference_targets=None, population_size=40, iterations=100, mutation_rate=None,
                 crossover_probability=0.9, neighborhood_size=2, neighbor_mating_probability=0.2,
                 theta=5.0, epsilon=1e-6, normalization_bounds=None, top_k=5, space=None, n_workers=1,
                 random_state=None):
        self.reference_targets = reference_targets
        self.population_size = population_size
        self.iterations = iterations
        self.mutation_rate = mutation_rate
        self.crossover_probability = crossover_probability
        self.neighborhood_size = neighborhood_size
        self.neighbor_mating_probability = neighbor_mating_probability
        self.theta = theta
        self.epsilon = epsilon
        self.normalization_bounds = normalization_bounds
        self.top_k = top_k
        self.space = space
        self.n_workers = n_workers
        self.random_state = random_state

    def _neighbourhoods(self, state):
        dirs = np.array([sp.direction for sp in state.subs])
        cos = dirs @ dirs.T
        out = []
        for i in range(len(dirs)):
            order = sorted(range(len(dirs)), key=lambda j: (-cos[i, j] if j != i else -math.inf, j))
            out.append([j for j in order[:self.neighborhood_size] if j != i])
        return out

    def fit(self, evaluator, y=None):
        """Run the search against ``evaluator``; results land in ``result_``."""
        rng = check_rng(self.random_state)
        bounds = self._bounds(evaluator)
        targets = _check_targets(self.reference_targets, len(bounds.lower))
        pop_size = check_positive_int(self.population_size, "population_size")
        if pop_size < len(targets):
            raise ValueError(f"population_size {pop_size} is smaller than the number of targets {len(targets)}")
        iterations = check_nonnegative_int(self.iterations, "iterations")
        cx_prob = check_probability(self.crossover_probability, "crossover_probability")
        nb_prob = check_probability(self.neighbor_mating_probability, "neighbor_mating_probability")
        check_positive_int(self.neighborhood_size, "neighborhood_size")
        check_positive_int(self.top_k, "top_k")
        PbiParams(self.theta)
        space = self._space(evaluator)
        rate = space.default_mutation_rate if self.mutation_rate is None else check_probability(
            self.mutation_rate, "mutation_rate")

        state = _SearchState(targets, bounds, self.theta, self.epsilon, space)
        runner = _Evaluations(evaluator, bounds, self.n_workers)
        sizes = _partition(pop_size, len(targets))

        batch = []
        taken = set()
        for sp, n in zip(state.subs, sizes):
            cands = _unique_samples(space, n, rng, taken)
            taken.update(space.key(c) for c in cands)
            batch.extend((sp, c) for c in cands)
        for (sp, cand), F in zip(batch, runner.run([c for _, c in batch])):
            rec = state.absorb(cand, F, sp, 0)
            sp.members.append(rec)
        self._rescore_initial(state)
        for sp in state.subs:
            sp.best_trace.append(sp.best.g if sp.best is not None else math.inf)
        neighbours = self._neighbourhoods(state)

        for it in range(1, iterations + 1):
            scores = [state.member_scores(sp) for sp in state.subs]
            batch = []
            for sp, n in zip(state.subs, sizes):
                held = sp.keys()
                for _ in range(n):
                    p1 = state.tournament(sp, scores[sp.index], rng)
                    if neighbours[sp.index] and rng.random() < nb_prob:
                        nb = state.subs[neighbours[sp.index][rng.integers(len(neighbours[sp.index]))]]
                        p2 = state.tournament(nb, scores[nb.index], rng)
                    else:
                        p2 = state.tournament(sp, scores[sp.index], rng)
                    child = p1.candidate
                    if rng.random() < cx_prob:
                        child = space.crossover(p1.candidate, p2.candidate, rng)
                    base = child
                    child = space.mutate(base, rate, rng)
                    # known members would be rejected anyway; spend the evaluation on something new
                    for _ in range(10):
                        if space.key(child) not in held:
                            break
                        child = space.mutate(base, rate, rng)
                    held.add(space.key(child))
                    batch.append((sp, child))
            for (sp, cand), F in zip(batch, runner.run([c for _, c in batch])):
                rec = state.absorb(cand, F, sp, it)
                if rec.failed or rec.key in sp.keys():
                    continue
                member_g = state.member_scores(sp)
                worst = max(range(len(sp.members)), key=lambda i: (member_g[i], sp.members[i].evaluation))
                if rec.g < member_g[worst]:
                    sp.members[worst] = rec
            for sp in state.subs:
                sp.best_trace.append(sp.best.g if sp.best is not None else math.inf)

        self.result_ = state.result("moead", self.top_k)
        self.ideal_point_ = state.ideal
        self.n_evaluations_ = len(state.records)
        return self

    @staticmethod
    def _rescore_initial(state):
        """Initial records were scored while the ideal point was still forming; rescore the bests."""
        for sp in state.subs:
            sp.best = None
            for rec in sp.archive.values():
                g = state.score(rec.F_norm, sp)[2]
                if sp.best is None or g < sp.best.g:
                    d1, d2, _ = state.score(rec.F_norm, sp)
                    sp.best = EvaluationRecord(rec.evaluation, rec.iteration, rec.subproblem, rec.key,
                                               rec.candidate, rec.F_raw, rec.F_norm, d1, d2, g, rec.failed)


class RegularizedEvolution(_SearchEstimator):
    """Aging evolution run independently for each reference target.

    The total ``budget`` is split evenly over the targets (the first targets
    absorb any remainder). Each run keeps a FIFO population, picks the parent
    as the best of ``sample_size`` random members by PBI value against its
    target, mutates it and discards the oldest member.
    """

    def __init__(self, reference_targets=None, population_size=20, sample_size=5, budget=1000,
                 mutation_rate=None, theta=5.0, epsilon=1e-6, normalization_bounds=None, top_k=5,
                 space=None, n_workers=1, random_state=None):
        self.reference_targets = reference_targets
        self.population_size = population_size
        self.sample_size = sample_size
        self.budget = budget
        self.mutation_rate = mutation_rate
        self.theta = theta
        self.epsilon = epsilon
        self.normalization_bounds = normalization_bounds
        self.top_k = top_k
        self.space = space
        self.n_workers = n_workers
        self.random_state = random_state

    def fit(self, evaluator, y=None):
        rng = check_rng(self.random_state)
        bounds = self._bounds(evaluator)
        targets = _check_targets(self.reference_targets, len(bounds.lower))
        pop_size = check_positive_int(self.population_size, "population_size")
        sample_size = check_positive_int(self.sample_size, "sample_size")
        budget = check_positive_int(self.budget, "budget")
        if budget < len(targets):
            raise ValueError("budget must allow at least one evaluation per target")
        check_positive_int(self.top_k, "top_k")
        PbiParams(self.theta)
        space = self._space(evaluator)
        rate = space.default_mutation_rate if self.mutation_rate is None else check_probability(
            self.mutation_rate, "mutation_rate")
        runner = _Evaluations(evaluator, bounds, self.n_workers)

        records, subs, ideals = [], [], []
        for t_index, (target, run_budget) in enumerate(zip(targets, _partition(budget, len(targets)))):
            state = _SearchState(target[None, :], bounds, self.theta, self.epsilon, space)
            state.records = records
            sp = state.subs[0]
            sp.index = t_index
            self._run(state, sp, run_budget, pop_size, sample_size, rate, runner, rng)
            res = state.result("re", self.top_k)
            subs.append(res.subproblems[0])
            ideals.append(state.ideal)

        # the reported ideal point is the componentwise minimum over the independent runs
        z = np.min([z.array for z in ideals], axis=0)
        ideal = IdealPoint(tuple(float(v) for v in z), self.epsilon)
        self.result_ = SearchResult("re", records, subs, ideal, bounds, float(self.theta),
                                    describe=getattr(space, "describe", None))
        self.ideal_point_ = ideal
        self.n_evaluations_ = len(records)
        return self

    @staticmethod
    def _run(state, sp, budget, pop_size, sample_size, rate, runner, rng):
        space = state.space
        n_init = min(pop_size, budget)
        init = [space.sample(rng) for _ in range(n_init)]
        queue = deque()
        for cand, F in zip(init, runner.run(init)):
            rec = state.absorb(cand, F, sp, 0)
            queue.append(rec)
        DecompositionSearch._rescore_initial(state)
        sp.best_trace.append(sp.best.g if sp.best is not None else math.inf)
        for step in range(1, budget - n_init + 1):
            alive = [r for r in queue if not r.failed] or list(queue)
            k = min(sample_size, len(alive))
            picks = rng.choice(len(alive), size=k, replace=False)
            contenders = [alive[i] for i in sorted(picks)]
            scored = [(state.score(r.F_norm, sp)[2], r.evaluation, r) for r in contenders]
            parent = min(scored, key=lambda t: (t[0], t[1]))[2]
            child = space.mutate(parent.candidate, rate, rng)
            for _ in range(10):
                if space.key(child) != parent.key:
                    break
                child = space.mutate(parent.candidate, rate, rng)
            (F,) = runner.run([child])
            rec = state.absorb(child, F, sp, step)
            queue.append(rec)
            if len(queue) > pop_size:
                queue.popleft()
            sp.best_trace.append(sp.best.g if sp.best is not None else math.inf)
        sp.members = list(queue)


def search(evaluator, reference_targets, random_state=None, **params):
    """Functional form of :class:`DecompositionSearch`; returns the :class:`SearchResult`."""
    est = DecompositionSearch(reference_targets=reference_targets, random_state=random_state, **params)
    return est.fit(evaluator).result_


def regularized_evolution(evaluator, reference_targets, random_state=None, **params):
    est = RegularizedEvolution(reference_targets=reference_targets, random_state=random_state, **params)
    return est.fit(evaluator).result_
