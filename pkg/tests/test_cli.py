import csv
import io
import json
import subprocess
import sys

import pytest

from muxconv.cli import main
from muxconv.config import DEFAULTS, load_config
from muxconv.exceptions import ConfigError
from muxconv.network import network_complexity
from muxconv.objectives import generate_benchmark, write_tabular

ZERO = "-".join(["0"] * 30)
ONES = "-".join(["1"] * 30)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCodecCommands:
    def test_decode_encode_round_trip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "decode", ONES)
        assert code == 0
        bp = json.loads(out)
        assert bp["key"] == "muxg1-" + ONES and bp["stages"][1]["spatial"] == [-1, 0, 0]
        path = tmp_path / "bp.json"
        path.write_text(out)
        code, out, _ = run(capsys, "encode", str(path))
        assert (code, out.strip()) == (0, ONES)
        code, out, _ = run(capsys, "encode", json.dumps({"stages": bp["stages"]}))
        assert out.strip() == ONES

    def test_decode_wrong_length(self, capsys):
        code, _, err = run(capsys, "decode", ZERO + "-0")
        assert code == 2 and "30 genes, got 31" in err

    def test_decode_out_of_range(self, capsys):
        code, _, err = run(capsys, "decode", "9-" + "-".join(["0"] * 29))
        assert code == 2 and "gene 0" in err

    def test_encode_bad_json(self, capsys):
        assert run(capsys, "encode", "{nope")[0] == 2
        assert run(capsys, "encode", "/no/such/file.json")[0] == 3


class TestComplexity:
    def test_csv_total(self, capsys):
        code, out, _ = run(capsys, "complexity", ONES, "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        total = rows[-1]
        assert code == 0 and total["layer"] == "total"
        assert (int(total["params"]), int(total["madds"])) == network_complexity(ONES.split("-"), 224)
        assert sum(int(r["params"]) for r in rows[:-1]) == int(total["params"])

    def test_text_total(self, capsys):
        code, out, _ = run(capsys, "complexity", ZERO, "--resolution", "32")
        params, madds = network_complexity([0] * 30, 32)
        assert code == 0 and out.splitlines()[-1].split()[1:] == [str(params), str(madds)]

    def test_bad_resolution(self, capsys):
        code, _, err = run(capsys, "complexity", ZERO, "--resolution", "100")
        assert code == 2 and "divisible" in err


class TestSearch:
    def test_iterations_zero(self, capsys, tmp_path):
        out = tmp_path / "r"
        code, stdout, _ = run(capsys, "search", "--iterations", "0", "--population-size", "8", "--out", str(out))
        assert code == 0
        lines = (out / "log.csv").read_text().splitlines()
        assert len(lines) == 9
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_evaluations"] == 8 and summary["algorithm"] == "moead"
        assert "workers" not in summary["config"] and "out" not in summary["config"]
        assert "subproblem 0" in stdout

    def test_deterministic(self, capsys, tmp_path):
        args = ["search", "--evaluator", "synthetic:dtlz2", "--iterations", "3", "--population-size", "9"]
        run(capsys, *args, "--out", str(tmp_path / "a"), "--workers", "1")
        run(capsys, *args, "--out", str(tmp_path / "b"), "--workers", "3")
        for name in ("log.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_regularized_evolution(self, capsys, tmp_path):
        code, _, _ = run(capsys, "search", "--algo", "re", "--budget", "60", "--evaluator", "synthetic:dtlz2",
                         "--out", str(tmp_path))
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert code == 0 and summary["algorithm"] == "re" and summary["n_evaluations"] == 60
        assert summary["config"]["re"]["budget"] == 60

    def test_tabular(self, capsys, tmp_path):
        path = tmp_path / "bench.jsonl"
        write_tabular(generate_benchmark(500, random_state=0), path)
        code, _, _ = run(capsys, "search", "--evaluator", f"tabular:{path}", "--iterations", "2",
                         "--population-size", "8", "--out", str(tmp_path / "r"))
        assert code == 0
        summary = json.loads((tmp_path / "r" / "summary.json").read_text())
        assert summary["n_failed"] > 0  # the 500-entry table leaves holes in the subspace

    def test_missing_benchmark(self, capsys, tmp_path):
        code, _, err = run(capsys, "search", "--evaluator", "tabular:/no/such.jsonl", "--out", str(tmp_path))
        assert code == 3 and "/no/such.jsonl" in err

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"population": 10}))
        code, _, err = run(capsys, "search", "--config", str(cfg), "--out", str(tmp_path))
        assert code == 2 and "population" in err

    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["search", "--algo", "nsga"])
        assert info.value.code == 2


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"population_size": 20, "iterations": 7, "re": {"sample_size": 3}}))
        c = load_config(cfg, {"iterations": 2, "seed": None})
        assert c["population_size"] == 20 and c["iterations"] == 2 and c["seed"] == DEFAULTS["seed"]
        assert c["re"] == {"population_size": 20, "sample_size": 3, "budget": None}

    def test_defaults(self):
        c = load_config()
        targets = c["reference_targets"]
        assert len(targets) == 4 and all(t[0] == 0 for t in targets)
        assert all(1.5e6 < t[1] < 5e6 and 60e6 < t[2] < 300e6 for t in targets)
        assert c.search_params()["population_size"] == 40 and c["theta"] == 5.0

    def test_rejects(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(None, {"theta": -1})
        with pytest.raises(ConfigError):
            load_config(None, {"evaluator": "magic"})
        bad = tmp_path / "c.json"
        bad.write_text("{")
        with pytest.raises(ConfigError, match="line 1"):
            load_config(bad)


class TestVerify:
    def test_clean(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0 and "FAILED" not in out
        assert all(name in out for name in ("roundtrip", "conv_oracle", "pbi", "formula_parity", "codec"))

    def test_fault_hook(self, capsys):
        code, out, err = run(capsys, "verify", "--inject-fault", "subpixel")
        assert code == 1 and "roundtrip" in err


class TestGenbench:
    def test_deterministic(self, capsys, tmp_path):
        for name in ("a", "b"):
            code, out, _ = run(capsys, "genbench", "--seed", "4", "--count", "150", "--out", str(tmp_path / name))
            assert code == 0 and "150 entries" in out
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_bad_count(self, capsys, tmp_path):
        assert run(capsys, "genbench", "--count", "0", "--out", str(tmp_path / "x"))[0] == 2
        assert run(capsys, "genbench", "--count", "20000", "--out", str(tmp_path / "x"))[0] == 2


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "muxconv.cli", "decode", ZERO], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["key"] == "muxg1-" + ZERO
