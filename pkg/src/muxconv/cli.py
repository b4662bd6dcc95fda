"""``muxconv`` command line: genotype codec, complexity reports, searches, self-checks, benchmarks.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 I/O error.
"""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .config import load_config, build_evaluator
from .exceptions import BenchmarkFormatError, ConfigError, GenotypeError, ShapeError
from .moead import DecompositionSearch, RegularizedEvolution
from .network import DEFAULT_SKELETON, complexity_table, network_complexity
from .objectives import BENCHMARK_SPACE, generate_benchmark, load_tabular, write_tabular
from .search_space import FULL_BOUNDS, Blueprint, canonical_key, canonicalize, decode, encode, format_genotype, parse_genotype
from .verify import FAULTS, run_suites

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _err(msg):
    print(f"muxconv: error: {msg}", file=sys.stderr)


def _genotype_arg(text):
    try:
        return parse_genotype(text)
    except GenotypeError as exc:
        raise UsageError(str(exc)) from exc


def cmd_decode(args):
    genes = _genotype_arg(args.genotype)
    out = {"key": canonical_key(genes)}
    out.update(decode(genes).to_dict())
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_encode(args):
    text = args.blueprint
    if not text.lstrip().startswith("{"):
        try:
            text = Path(text).read_text(encoding="utf-8")
        except OSError as exc:
            _err(f"cannot read {args.blueprint}: {exc.strerror}")
            return EXIT_IO
    try:
        bp = Blueprint.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise UsageError(f"blueprint is not valid JSON: {exc.msg}") from exc
    except (TypeError, GenotypeError) as exc:
        raise UsageError(str(exc)) from exc
    print(format_genotype(canonicalize(encode(bp))))
    return EXIT_OK


def cmd_complexity(args):
    genes = _genotype_arg(args.genotype)
    try:
        rows = complexity_table(genes, args.resolution, DEFAULT_SKELETON)
        params, madds = network_complexity(genes, args.resolution, DEFAULT_SKELETON)
    except ShapeError as exc:
        raise UsageError(str(exc)) from exc
    cols = ("layer", "type", "input", "params", "madds", "ratio")
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            writer.writerow([r[c] if c != "ratio" or r[c] is None else repr(r[c]) for c in cols])
        writer.writerow(["total", "", "", params, madds, ""])
    else:
        print(f"{'layer':<20} {'type':<26} {'input':>9} {'params':>10} {'madds':>14} {'ratio':>20}")
        for r in rows:
            ratio = "" if r["ratio"] is None else repr(r["ratio"])
            print(f"{r['layer']:<20} {r['type']:<26} {r['input']:>9} {r['params']:>10} {r['madds']:>14} {ratio:>20}")
        print(f"{'total':<20} {'':<26} {'':>9} {params:>10} {madds:>14}")
    return EXIT_OK


def _print_top_k(result):
    for sp in result.subproblems:
        print(f"subproblem {sp.index} target={list(sp.target)}")
        for rank, item in enumerate(sp.top_k, start=1):
            objs = ", ".join(repr(v) for v in item["objectives"])
            print(f"  {rank}. g={item['g']!r} d1={item['d1']!r} d2={item['d2']!r} F=[{objs}] {item['key']}")


def cmd_search(args):
    overrides = {
        "algorithm": args.algo,
        "evaluator": args.evaluator,
        "seed": args.seed,
        "iterations": args.iterations,
        "population_size": args.population_size,
        "workers": args.workers,
        "out": args.out,
        "top_k": args.top_k,
    }
    if args.budget is not None:
        overrides["re"] = {"budget": args.budget}
    cfg = load_config(args.config, overrides)
    evaluator = build_evaluator(cfg)
    params = cfg.search_params()
    est_cls = RegularizedEvolution if cfg["algorithm"] == "re" else DecompositionSearch
    try:
        est = est_cls(**params)
        est.fit(evaluator)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = est.result_
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    result.write_log(out / "log.csv")
    result.write_summary(out / "summary.json", config=cfg.echo(), seed=cfg["seed"])
    _print_top_k(result)
    print(f"{result.n_evaluations} evaluations ({result.n_failed} failed); artifacts in {out}")
    return EXIT_OK


def cmd_verify(args):
    start = time.perf_counter()
    results = run_suites(seed=args.seed, fault=args.inject_fault)
    for r in results:
        status = "ok" if r.ok else "FAILED"
        print(f"{r.name:<16} {r.checks:>5} checks  {status}  ({r.seconds:.2f}s)")
        for msg in r.failures[:5]:
            print(f"    {msg}")
    failed = [r.name for r in results if not r.ok]
    total = sum(r.checks for r in results)
    print(f"{len(results)} suites, {total} checks, {time.perf_counter() - start:.2f}s")
    if failed:
        _err(f"verification failed in suite(s): {', '.join(failed)}")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_genbench(args):
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    space = FULL_BOUNDS if args.full_space else BENCHMARK_SPACE
    try:
        bench = generate_benchmark(args.count, random_state=args.seed, bounds=space, noise=args.noise)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_tabular(bench, out)
    check = load_tabular(out)
    print(f"wrote {len(check)} entries ({check.duplicates} duplicates) to {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="muxconv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="print the blueprint of a genotype as JSON")
    d.add_argument("genotype", help="30 hyphen-separated option indices (a 'muxg1-' key also works)")
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("encode", help="print the canonical genotype of a blueprint JSON (file or inline)")
    e.add_argument("blueprint")
    e.set_defaults(func=cmd_encode)

    c = sub.add_parser("complexity", help="per-layer and total params/MAdds of a genotype")
    c.add_argument("genotype")
    c.add_argument("--resolution", type=int, default=224, help="input resolution, divisible by 32")
    c.add_argument("--format", choices=("text", "csv"), default="text")
    c.set_defaults(func=cmd_complexity)

    s = sub.add_parser(
        "search", help="run a reference-guided search",
        description="One iteration is one generation: every population member produces one child. "
                    "A decomposition run evaluates population_size * (iterations + 1) candidates; "
                    "a regularized-evolution run defaults to the same budget split over the targets.",
    )
    s.add_argument("--config", help="JSON run configuration")
    s.add_argument("--algo", choices=("moead", "re"))
    s.add_argument("--evaluator", help="analytic | tabular:PATH | synthetic:dtlz2")
    s.add_argument("--seed", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--population-size", type=int)
    s.add_argument("--budget", type=int, help="total evaluations for --algo re")
    s.add_argument("--top-k", type=int)
    s.add_argument("--workers", type=int, help="evaluation threads (default: CPU count)")
    s.add_argument("--out", help="output directory for log.csv and summary.json")
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify", help="run the built-in invariant suites")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-fault", choices=FAULTS, help="test hook: corrupt a primitive before checking")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("genbench", help="write a synthetic tabular benchmark (JSONL)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=10000)
    g.add_argument("--noise", type=float, default=0.004, help="accuracy noise standard deviation")
    g.add_argument("--full-space", action="store_true", help="sample the whole genotype space")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_genbench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, GenotypeError, ShapeError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except BenchmarkFormatError as exc:
        _err(f"benchmark file: {exc}")
        return EXIT_IO
    except OSError as exc:
        name = f" {exc.filename}" if exc.filename else ""
        _err(f"I/O error{name}: {exc.strerror or exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
