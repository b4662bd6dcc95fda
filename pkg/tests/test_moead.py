import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from muxconv.exceptions import KeyNotFoundError
from muxconv.moead import (
    LOG_COLUMNS,
    DecompositionSearch,
    IdealPoint,
    PbiParams,
    RegularizedEvolution,
    pbi,
    reference_direction,
    regularized_evolution,
    search,
    update_ideal,
)
from muxconv.objectives import SyntheticEvaluator, TabularEvaluator, generate_benchmark

unit = st.floats(0, 1)
vec3 = st.tuples(unit, unit, unit)
R2 = math.sqrt(2)
TARGETS3 = [(0.8, 0.4, 0.4), (0.4, 0.8, 0.4), (0.4, 0.4, 0.8)]


@pytest.fixture(scope="module")
def bench_eval():
    return TabularEvaluator(generate_benchmark(2000, random_state=1))


class TestPbi:
    def test_on_ray(self):
        d1, d2, g = pbi((1.0, 1.0), (1 / R2, 1 / R2), IdealPoint((0.0, 0.0)))
        assert abs(d1 - R2) <= 1e-12 and abs(d2) <= 1e-12 and abs(g - R2) <= 1e-12

    def test_off_ray(self):
        d1, d2, g = pbi((1.0, 0.0), (1 / R2, 1 / R2), IdealPoint((0.0, 0.0)), PbiParams(5.0))
        assert abs(d1 - 0.70711) < 1e-5 and abs(d2 - 0.70711) < 1e-5 and abs(g - 4.24264) < 1e-5
        assert abs(g - 6 / R2) <= 1e-12

    def test_at_ideal(self):
        assert pbi((0.3, 0.2, 0.1), (1, 0, 0), (0.3, 0.2, 0.1)) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
    def test_ray_property(self, t):
        z = np.array([0.1, -0.2, 0.3])
        w = reference_direction((1.0, 0.5, 0.9), z)
        _, d2, g = pbi(z + t * w, w, z)
        assert abs(d2) <= 1e-12 and abs(g - t) <= 1e-12

    @given(vec3, vec3, st.floats(0.01, 100))
    def test_scale_invariance(self, F, w, s):
        assume(np.linalg.norm(w) > 1e-3)
        z = np.zeros(3) - 1e-6
        a = pbi(F, w, z)
        b = pbi(F, s * np.asarray(w), z)
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12)

    @given(vec3, st.floats(0, 10))
    def test_zero_iff_ideal(self, F, theta):
        z = np.array(F)
        assert pbi(F, (1, 1, 1), z, theta)[2] == 0.0
        F2 = np.array(F) + np.array([0.01, 0.0, 0.0])
        assert pbi(F2, (1, 1, 1), z, max(theta, 0.1))[2] > 0

    @given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5), st.floats(0, 20))
    def test_scalarization_consistency(self, a1, a2, b1, b2, theta):
        assume(a1 < b1 and a2 < b2)
        assert a1 + theta * a2 < b1 + theta * b2

    def test_invalid_theta_and_direction(self):
        with pytest.raises(ValueError):
            PbiParams(-1.0)
        with pytest.raises(ValueError):
            pbi((1, 1), (0, 0), (0, 0))


class TestIdeal:
    def test_fresh_then_update(self):
        z = update_ideal(IdealPoint.fresh(3, 1e-6), (0.5, 0.2, 0.9))
        assert np.allclose(z.array, [0.499999, 0.199999, 0.899999], rtol=0, atol=1e-15)
        assert z.is_set and not IdealPoint.fresh(3).is_set

    def test_unchanged_when_no_improvement(self):
        z = IdealPoint((0.1, 0.1, 0.1))
        assert update_ideal(z, (0.5, 0.5, 0.5)) == z

    @given(st.lists(vec3, min_size=1, max_size=30))
    def test_strictly_below_and_monotone(self, seq):
        z = IdealPoint.fresh(3)
        prev = z.array
        for F in seq:
            z = update_ideal(z, F)
            assert np.all(z.array <= prev)
            prev = z.array
        assert np.all(z.array < np.min(seq, axis=0))


class TestDirection:
    def test_examples(self):
        assert np.allclose(reference_direction((1, 1, 1), (0, 0, 0)), np.ones(3) / math.sqrt(3), atol=1e-15)
        assert np.array_equal(reference_direction((1, 0, 0), (0, 0, 0)), [1, 0, 0])

    @given(vec3, vec3, st.floats(-5, 5))
    def test_translation_invariance_and_unit(self, t, z, c):
        assume(np.linalg.norm(np.subtract(t, z)) > 1e-3)
        w = reference_direction(t, z)
        assert abs(np.linalg.norm(w) - 1) <= 1e-12
        assert np.allclose(reference_direction(np.add(t, c), np.add(z, c)), w, atol=1e-9)

    def test_degenerate(self):
        with pytest.raises(ValueError, match="coincides"):
            reference_direction((0.2, 0.2, 0.2), IdealPoint((0.2, 0.2, 0.2)))


def _small(evaluator, **kw):
    params = dict(reference_targets=TARGETS3, population_size=12, iterations=5, random_state=3)
    params.update(kw)
    return DecompositionSearch(**params).fit(evaluator)


class TestDecompositionSearch:
    def test_iterations_zero(self):
        est = _small(SyntheticEvaluator(), iterations=0)
        res = est.result_
        assert res.n_evaluations == 12
        assert all(r.iteration == 0 for r in res.records)
        for sp in res.subproblems:
            assert len(sp.best_trace) == 1 and len(sp.population) == 4
            assert sp.best.g == min(r[2] for r in res.rescore([m.F_norm for m in sp.population], sp.index))

    def test_budget_and_log(self, tmp_path):
        res = _small(SyntheticEvaluator(), population_size=13, iterations=4).result_
        assert res.n_evaluations == 13 * 5
        assert [len(sp.population) for sp in res.subproblems] == [5, 4, 4]
        res.write_log(tmp_path / "log.csv")
        lines = (tmp_path / "log.csv").read_text().splitlines()
        assert lines[0] == ",".join(LOG_COLUMNS) and len(lines) == 66

    def test_deterministic(self, tmp_path, bench_eval):
        a = _small(bench_eval, iterations=8).result_
        b = _small(bench_eval, iterations=8).result_
        a.write_log(tmp_path / "a.csv")
        b.write_log(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert a.summary() == b.summary()
        c = _small(bench_eval, iterations=8, random_state=4).result_
        assert [r.key for r in c.records] != [r.key for r in a.records]

    @pytest.mark.parametrize("seed", range(3))
    def test_elitism_and_invariants(self, seed, bench_eval):
        res = _small(bench_eval, iterations=15, random_state=seed).result_
        ok = np.array([r.F_norm for r in res.records if not r.failed])
        assert np.all(res.ideal_point.array < ok.min(axis=0))
        for sp in res.subproblems:
            assert all(a >= b for a, b in zip(sp.best_trace, sp.best_trace[1:]))
            assert abs(np.linalg.norm(sp.direction) - 1) <= 1e-12
            gs = [item["g"] for item in sp.top_k]
            assert gs == sorted(gs) and len(gs) == 5
            keys = [m.key for m in sp.population]
            assert len(keys) == len(set(keys))

    def test_workers_do_not_change_results(self, bench_eval):
        a = _small(bench_eval, iterations=6, n_workers=1).result_
        b = _small(bench_eval, iterations=6, n_workers=4).result_
        assert a.records == b.records

    def test_failed_evaluations(self):
        class Flaky(SyntheticEvaluator):
            def evaluate(self, x):
                if x[0] < 0.3:
                    raise KeyNotFoundError("missing")
                return super().evaluate(x)

        res = _small(Flaky(), iterations=6).result_
        failed = [r for r in res.records if r.failed]
        assert failed and res.n_failed == len(failed)
        assert all(r.F_raw is None and r.F_norm == (1.0, 1.0, 1.0) for r in failed)
        bad = {r.key for r in failed}
        for sp in res.subproblems:
            assert not bad & {item["key"] for item in sp.top_k}
        assert res.n_evaluations == 12 * 7

    def test_functional_wrapper(self):
        res = search(SyntheticEvaluator(), TARGETS3, random_state=0, population_size=6, iterations=2)
        assert res.algorithm == "moead" and res.n_evaluations == 18

    def test_validation(self):
        with pytest.raises(ValueError):
            _small(SyntheticEvaluator(), population_size=2)
        with pytest.raises(ValueError):
            _small(SyntheticEvaluator(), reference_targets=[(1, 2)])
        with pytest.raises(ValueError):
            _small(SyntheticEvaluator(), theta=-1)
        assert DecompositionSearch().get_params()["population_size"] == 40

    def test_summary_shape(self, bench_eval):
        s = _small(bench_eval).result_.summary(config={"a": 1}, seed=3)
        assert s["seed"] == 3 and s["config"] == {"a": 1} and s["theta"] == 5.0
        assert len(s["subproblems"]) == 3 and len(s["subproblems"][0]["best_g_trace"]) == 6
        assert isinstance(s["subproblems"][0]["top_k"][0]["candidate"], list)


class TestRegularizedEvolution:
    def test_budget_equal_population_is_random_search(self, bench_eval):
        res = RegularizedEvolution(TARGETS3[:1], population_size=20, budget=20, random_state=5).fit(bench_eval).result_
        assert res.n_evaluations == 20 and all(r.iteration == 0 for r in res.records)
        rng = np.random.default_rng(5)
        expected = [bench_eval.space.key(bench_eval.space.sample(rng)) for _ in range(20)]
        assert [r.key for r in res.records] == expected

    def test_determinism_and_split(self, bench_eval):
        kw = dict(reference_targets=TARGETS3, budget=100, random_state=2)
        a = RegularizedEvolution(**kw).fit(bench_eval).result_
        b = RegularizedEvolution(**kw).fit(bench_eval).result_
        assert a.records == b.records
        counts = [sum(r.subproblem == i for r in a.records) for i in range(3)]
        assert counts == [34, 33, 33]

    def test_trace_monotone(self, bench_eval):
        res = regularized_evolution(bench_eval, TARGETS3[:1], random_state=0, budget=1000)
        trace = res.subproblems[0].best_trace
        assert len(trace) == 1000 - 20 + 1
        assert all(a >= b for a, b in zip(trace, trace[1:]))
        assert len(res.subproblems[0].population) == 20

    def test_ideal_is_min_over_runs(self, bench_eval):
        res = RegularizedEvolution(TARGETS3, budget=90, random_state=1).fit(bench_eval).result_
        ok = np.array([r.F_norm for r in res.records if not r.failed])
        assert np.allclose(res.ideal_point.array, ok.min(axis=0) - 1e-6, rtol=0, atol=1e-15)
