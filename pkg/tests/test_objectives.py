import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muxconv.exceptions import BenchmarkFormatError, GenotypeError, KeyNotFoundError
from muxconv.network import network_complexity
from muxconv.objectives import (
    DEFAULT_BOUNDS,
    AnalyticEvaluator,
    NormalizationBounds,
    ObjectiveNormalizer,
    SyntheticEvaluator,
    TabularEvaluator,
    denormalize,
    dtlz2,
    evaluate,
    generate_benchmark,
    load_tabular,
    normalize,
    synthetic_objective,
    write_tabular,
)
from muxconv.search_space import FULL_BOUNDS, parse_key, space_volume

FIXTURES = Path(__file__).parent / "fixtures"
Z = parse_key("muxg1-" + "-".join(["0"] * 30))


class TestNormalize:
    bounds = NormalizationBounds((0.0, 1.5e6, 60e6), (1.0, 5e6, 300e6))

    def test_endpoints_and_midpoint(self):
        assert np.array_equal(normalize((0.0, 1.5e6, 60e6), self.bounds), [0, 0, 0])
        assert np.array_equal(normalize((1.0, 5e6, 300e6), self.bounds), [1, 1, 1])
        assert np.array_equal(normalize((0.5, 3.25e6, 180e6), self.bounds), [0.5, 0.5, 0.5])

    def test_clamped(self):
        assert np.array_equal(normalize((0.2, 9e6, 1e6), self.bounds), [0.2, 1.0, 0.0])

    def test_unclamped(self):
        b = NormalizationBounds((0.0,), (1.0,), clip=False)
        assert normalize((1.5,), b)[0] == 1.5
        assert NormalizationBounds.from_dict(b.to_dict()) == b

    @given(st.lists(st.floats(-1e7, 1e9, allow_nan=False), min_size=3, max_size=3),
           st.lists(st.floats(-1e7, 1e9, allow_nan=False), min_size=3, max_size=3))
    def test_monotone_and_idempotent(self, a, b):
        na, nb = normalize(a, self.bounds), normalize(b, self.bounds)
        for x, y, u, v in zip(a, b, na, nb):
            if x <= y:
                assert u <= v
        unit = NormalizationBounds((0.0,) * 3, (1.0,) * 3)
        assert np.array_equal(normalize(na, unit), na)

    def test_denormalize_inverse(self):
        F = np.array([0.3, 2e6, 1e8])
        assert np.allclose(denormalize(normalize(F, self.bounds), self.bounds), F, rtol=1e-15)

    @pytest.mark.parametrize("lo, hi", [((0.0,), (0.0,)), ((1.0,), (0.0,)), ((0.0, 1.0), (1.0,)), ((), ())])
    def test_invalid_bounds(self, lo, hi):
        with pytest.raises(ValueError):
            NormalizationBounds(lo, hi)

    def test_estimator(self):
        F = np.array([[0.1, 2e6, 1e8], [0.3, 4e6, 2e8]])
        est = ObjectiveNormalizer().fit(F)
        assert np.array_equal(est.transform(F), [[0, 0, 0], [1, 1, 1]])
        assert np.allclose(est.inverse_transform(est.transform(F)), F)


class TestAnalytic:
    def test_placeholder_error_zero(self):
        ev = AnalyticEvaluator()
        F = evaluate(ev, Z)
        assert F[0] == 0.0
        assert tuple(F[1:]) == network_complexity(Z, 224)
        assert np.array_equal(F, ev.evaluate(Z))

    def test_configured_placeholder(self):
        assert AnalyticEvaluator(placeholder_accuracy=0.75).evaluate(Z)[0] == 0.25
        with pytest.raises(ValueError):
            AnalyticEvaluator(placeholder_accuracy=1.5)

    def test_invalid_genotype_is_not_key_error(self):
        with pytest.raises(GenotypeError):
            AnalyticEvaluator().evaluate([9] * 30)


class TestTabular:
    def test_fixture(self):
        bench = load_tabular(FIXTURES / "bench3.jsonl")
        assert len(bench) == 3 and bench.duplicates == 0
        ev = TabularEvaluator(bench)
        F = ev.evaluate(Z)
        assert F.tolist() == [1 - 0.712345, 1596696.0, 62591936.0]
        g = [0] * 30
        g[5] = 2
        assert ev.evaluate(g).tolist() == [1 - 0.7, 1.7e6, 8e7]

    def test_duplicate_last_wins(self):
        bench = load_tabular(FIXTURES / "bench_dup.jsonl")
        assert len(bench) == 2 and bench.duplicates == 1
        assert bench.lookup(Z).accuracy == 0.8

    def test_bad_accuracy_line(self):
        with pytest.raises(BenchmarkFormatError) as info:
            load_tabular(FIXTURES / "bench_bad_accuracy.jsonl")
        assert info.value.line == 2
        assert "1.2" in str(info.value) and "line 2" in str(info.value)

    def test_bad_json_and_key(self, tmp_path):
        p = tmp_path / "b.jsonl"
        p.write_text('{"key": "nope", "accuracy": 0.5, "params": 1, "madds": 1, "train_time": 1}\n')
        with pytest.raises(BenchmarkFormatError) as info:
            load_tabular(p)
        assert info.value.key == "nope"
        p.write_text("\n{not json\n")
        with pytest.raises(BenchmarkFormatError) as info:
            load_tabular(p)
        assert info.value.line == 2

    def test_missing_key_distinct(self):
        ev = TabularEvaluator(load_tabular(FIXTURES / "bench3.jsonl"))
        with pytest.raises(KeyNotFoundError):
            ev.evaluate((1,) * 29 + (0,))
        with pytest.raises(GenotypeError):
            ev.evaluate((7,) * 30)

    def test_round_trip(self, tmp_path):
        bench = generate_benchmark(200, random_state=3)
        path = tmp_path / "bench.jsonl"
        write_tabular(bench, path)
        back = load_tabular(path)
        assert back.entries == bench.entries
        assert back.bounds == bench.bounds and back.space == bench.space
        write_tabular(back, tmp_path / "again.jsonl")
        assert (tmp_path / "again.jsonl").read_bytes() == path.read_bytes()

    def test_generator(self):
        a = generate_benchmark(300, random_state=1)
        assert a.entries == generate_benchmark(300, random_state=1).entries
        assert len(a) == 300
        assert all(0.0 <= e.accuracy <= 1.0 for e in a.entries.values())
        for key, e in list(a.entries.items())[:20]:
            assert (e.params, e.madds) == network_complexity(parse_key(key), 224)

    def test_generator_exhaustive_subspace(self):
        bench = generate_benchmark(10_000, random_state=1)
        assert len(bench) == space_volume(bench.space, canonical=True) == 10_000

    def test_generator_full_space(self):
        bench = generate_benchmark(50, random_state=0, bounds=FULL_BOUNDS)
        assert len(bench) == 50

    def test_thread_safe_lookup(self):
        bench = generate_benchmark(500, random_state=2)
        ev = TabularEvaluator(bench)
        keys = [parse_key(k) for k in bench.entries]
        serial = [ev.evaluate(g).tolist() for g in keys]
        with ThreadPoolExecutor(4) as pool:
            assert list(r.tolist() for r in pool.map(ev.evaluate, keys)) == serial


class TestSynthetic:
    def test_front(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = np.concatenate([rng.random(2), np.full(10, 0.5)])
            assert abs(np.linalg.norm(dtlz2(x)) - 1) <= 1e-12

    def test_extremes(self):
        x = np.full(12, 0.5)
        x[:2] = 0.0
        assert np.allclose(dtlz2(x), [1, 0, 0], atol=1e-15)
        x[:2] = 1.0
        F = dtlz2(x)
        assert np.allclose(sorted(F), [0, 0, 1], atol=1e-15)

    @given(st.lists(st.floats(0, 1), min_size=12, max_size=12))
    def test_dominates_projection(self, x):
        F = dtlz2(np.array(x))
        proj = F / np.linalg.norm(F)
        assert np.all(F >= proj - 1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            synthetic_objective("dtlz2", np.full(12, 1.5))
        with pytest.raises(ValueError):
            synthetic_objective("zdt9", np.full(12, 0.5))

    def test_evaluator(self):
        ev = SyntheticEvaluator()
        assert ev.bounds.clip is False and ev.space.n_var == 12
        assert math.isclose(np.linalg.norm(ev.evaluate(np.full(12, 0.5))), 1.0)


def test_default_bounds():
    assert DEFAULT_BOUNDS.lower == (0.0, 1.5e6, 60e6) and DEFAULT_BOUNDS.upper == (1.0, 5e6, 300e6)
