"""ptopk command line.

Exit codes: 0 success, 2 usage, 3 unreadable or invalid input,
4 infeasible configuration or enumeration cap.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import bench
from .datagen import GenConfig, generate_with_report
from .errors import PtopkError
from .queries import answer_to_csv, answer_to_json
from .worlds import DEFAULT_WORLD_CAP, dumps_worlds
from .xrelation import XRelation, dumps_xrelation, load_xrelation

EXIT_USAGE = 2
EXIT_INPUT = 3

_SEMANTICS = {
    "ukranks": "ukranks",
    "globaltopk": "global_topk",
    "ptk": "ptk",
    "pktopk": "pk_topk",
}


def _read(path: str, fmt: Optional[str]) -> XRelation:
    if fmt is None:
        fmt = "json" if path.lower().endswith(".json") else "csv"
    if path == "-":
        return load_xrelation(sys.stdin.buffer.read(), fmt)
    with open(path, "rb") as fh:
        return load_xrelation(fh, fmt)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_gen(args) -> int:
    cfg = GenConfig(args.mem_p, args.rule_size, args.n_tuples, args.n_rules, args.seed, args.strict)
    rel, report = generate_with_report(cfg)
    _emit(dumps_xrelation(rel, args.format), args.out)
    print(
        f"generated {rel.n} tuples in {len(rel.xtuples)} x-tuples; raw mean prob "
        f"{report.raw_mean_prob:.4f}; {report.rescaled_xtuples} x-tuples rescaled",
        file=sys.stderr,
    )
    return 0


def cmd_rank(args) -> int:
    rel = _read(args.input, args.format)
    pij, res = bench.run_rank(rel, args.algo, args.k)
    _emit(pij.to_csv(), args.out)
    print(
        f"algo={res.algo} n={res.n} k={res.k} checksum={res.checksum:.9f} "
        f"op_count={res.op_count} wall_time={res.wall_time:.4f}s",
        file=sys.stderr,
    )
    return 0


def cmd_query(args) -> int:
    rel = _read(args.input, args.format)
    ans = bench.run_query(
        rel, _SEMANTICS[args.semantics], args.k, args.threshold, args.early_stop, args.algo
    )
    _emit(answer_to_json(ans) if args.json else answer_to_csv(ans), args.out)
    return 0


def cmd_bench(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in bench.ALGOS:
            raise _Usage(f"unknown algo {a!r}; choose from {', '.join(bench.ALGOS)}")
    results = bench.run_sweep(
        args.vary, algos, args.reps, args.full_scale, workers=args.workers,
        seed=args.seed, out_dir=args.out_dir,
    )
    for r in results:
        print(
            f"{r.param_name}={r.param_value:g} algo={r.algo} rep={r.rep} n={r.n} k={r.k} "
            f"ops={r.op_count} time={r.wall_time:.4f}s checksum={r.checksum:.9f}"
        )
    print(f"wrote {args.out_dir}/bench_{args.vary}.csv and plot.py", file=sys.stderr)
    return 0


def cmd_worlds(args) -> int:
    rel = _read(args.input, args.format)
    _emit(dumps_worlds(rel, args.cap), args.out)
    return 0


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ptopk", description="Rank probabilities and top-k queries over x-Relations.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic x-Relation")
    g.add_argument("--mem-p", type=float, default=0.5)
    g.add_argument("--rule-size", type=int, default=10)
    g.add_argument("--n-tuples", type=int, default=2000)
    g.add_argument("--n-rules", type=int, default=200)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--strict", action="store_true",
                   help="refuse configs whose expected x-tuple mass exceeds 1")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    def io_args(p):
        p.add_argument("--in", dest="input", required=True, help="input file, or - for stdin")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="input format (default: by file suffix)")
        p.add_argument("--out", default=None)

    r = sub.add_parser("rank", help="compute p_ij for every tuple and rank j <= k")
    r.add_argument("--algo", choices=bench.ALGOS, default="cp")
    r.add_argument("--k", type=int, required=True)
    io_args(r)
    r.set_defaults(func=cmd_rank)

    q = sub.add_parser("query", help="answer a top-k query")
    q.add_argument("--semantics", choices=tuple(_SEMANTICS), required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--threshold", type=float, default=None)
    q.add_argument("--early-stop", action="store_true")
    q.add_argument("--algo", choices=bench.ALGOS, default="cp")
    q.add_argument("--json", action="store_true", help="JSON envelope instead of CSV")
    io_args(q)
    q.set_defaults(func=cmd_query)

    b = sub.add_parser("bench", help="sweep one parameter and record timings")
    b.add_argument("--vary", choices=bench.AXES, required=True)
    b.add_argument("--algos", default="cp,baseline")
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--out-dir", default="bench_out")
    b.add_argument("--full-scale", action="store_true")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--seed", type=int, default=42)
    b.set_defaults(func=cmd_bench)

    w = sub.add_parser("worlds", help="dump every possible world (small inputs only)")
    w.add_argument("--cap", type=int, default=DEFAULT_WORLD_CAP)
    io_args(w)
    w.set_defaults(func=cmd_worlds)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except PtopkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
