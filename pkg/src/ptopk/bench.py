"""Benchmark plumbing: run rankers and queries, sweep the parameter grid."""

from __future__ import annotations

import csv
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Union

from .baseline import BaselineStats, baseline_pij
from .condprob import CondProbStats, condprob_pij
from .datagen import GenConfig, generate
from .errors import InfeasibleConfig, QueryError, WorldCapExceeded
from .queries import (
    QueryAnswer,
    global_topk,
    pk_topk,
    ptk,
    ptk_scan,
    topk_generator,
    ukranks,
)
from .rankmatrix import RankMatrix
from .worlds import count_worlds, oracle_pij
from .xrelation import XRelation, read_xrelation

__all__ = [
    "ALGOS",
    "AXES",
    "BenchResult",
    "grid",
    "load_input",
    "run_rank",
    "run_query",
    "run_sweep",
    "write_results",
    "write_plot_script",
]

ALGOS = ("cp", "baseline", "oracle")
AXES = ("mem-p", "rule", "k", "p", "tuples", "rules")

# desk scale: the reference grid with #tuple, #rule and k shrunk 10x
_DESK = {
    "mem-p": [0.1, 0.3, 0.5, 0.7, 0.9],
    "p": [0.1, 0.3, 0.5, 0.7, 0.9],
    "k": [20, 40, 60, 80, 100],
    "rule": [5, 10, 15, 20, 25],
    "tuples": [2000, 4000, 6000, 8000, 10000],
    "rules": [50, 100, 150, 200, 250],
}
_DESK_DEFAULT = {"mem-p": 0.5, "p": 0.3, "k": 20, "rule": 10, "tuples": 2000, "rules": 200}
_SCALED = ("k", "tuples", "rules")


def grid(full_scale: bool = False) -> tuple[dict[str, list], dict[str, float]]:
    """(values per axis, default per axis)."""
    f = 10 if full_scale else 1
    values = {a: [v * f if a in _SCALED else v for v in vs] for a, vs in _DESK.items()}
    default = {a: (v * f if a in _SCALED else v) for a, v in _DESK_DEFAULT.items()}
    return values, default


@dataclass
class BenchResult:
    algo: str
    param_name: str
    param_value: float
    k: int
    n: int
    rep: int
    wall_time: float
    op_count: int
    checksum: float


Source = Union[str, Path, GenConfig, XRelation]


def load_input(source: Source) -> XRelation:
    if isinstance(source, XRelation):
        return source
    if isinstance(source, GenConfig):
        return generate(source)
    return read_xrelation(source)


def run_rank(
    source: Source,
    algo: str,
    k: int,
    param_name: str = "",
    param_value: float = 0.0,
    rep: int = 0,
) -> tuple[RankMatrix, BenchResult]:
    """Compute the rank matrix with ``algo``; time it and count arithmetic steps."""
    rel = load_input(source)
    if algo == "cp":
        stats = CondProbStats()
        t0 = time.perf_counter()
        pij = condprob_pij(rel, k, stats=stats)
        ops = stats.op_count
    elif algo == "baseline":
        stats = BaselineStats()
        t0 = time.perf_counter()
        pij = baseline_pij(rel, k, stats)
        ops = stats.op_count
    elif algo == "oracle":
        t0 = time.perf_counter()
        pij = oracle_pij(rel, k)
        ops = count_worlds(rel) * rel.n
    else:
        raise ValueError(f"unknown algo {algo!r}; choose from {ALGOS}")
    wall = time.perf_counter() - t0
    return pij, BenchResult(algo, param_name, param_value, k, rel.n, rep, wall, ops, pij.checksum())


def run_query(
    source: Source,
    semantics: str,
    k: int,
    threshold: Optional[float] = None,
    early_stop: bool = False,
    algo: str = "cp",
) -> QueryAnswer:
    rel = load_input(source)
    if semantics == "ptk" and threshold is None:
        raise QueryError("ptk needs a threshold")
    if semantics != "ptk" and threshold is not None:
        raise QueryError(f"threshold only applies to ptk, not {semantics}")
    if not 1 <= k <= rel.n:
        raise QueryError(f"k={k} outside 1..{rel.n}")
    if early_stop:
        if semantics == "global_topk":
            return topk_generator(rel, k)
        if semantics == "pk_topk":
            if not rel.is_independent:
                raise QueryError("pk_topk requires independent tuples")
            ans = topk_generator(rel, k)
            ans.semantics = "pk_topk"
            return ans
        if semantics == "ptk":
            return ptk_scan(rel, k, threshold)
        raise QueryError(f"early stop is not available for {semantics}")
    pij, _ = run_rank(rel, algo, k)
    if semantics == "ukranks":
        return ukranks(pij, k)
    if semantics == "global_topk":
        return global_topk(pij, k)
    if semantics == "ptk":
        return ptk(pij, k, threshold)
    if semantics == "pk_topk":
        return pk_topk(pij, k)
    raise QueryError(f"unknown semantics {semantics!r}")


def _point_config(axis: str, value, default: dict, seed: int) -> tuple[GenConfig, int, Optional[float]]:
    params = dict(default)
    params[axis] = value
    cfg = GenConfig(
        mem_p=params["mem-p"],
        rule_size=int(params["rule"]),
        n_tuples=int(params["tuples"]),
        n_rules=int(params["rules"]),
        seed=seed,
    )
    return cfg, int(params["k"]), (params["p"] if axis == "p" else None)


def _run_point(args) -> list[BenchResult]:
    axis, value, default, algos, reps, seed = args
    cfg, k, threshold = _point_config(axis, value, default, seed)
    try:
        cfg.validate()
    except InfeasibleConfig as exc:
        warnings.warn(f"skipping {axis}={value}: {exc}")
        return []
    rel = generate(cfg)
    out = []
    for algo in algos:
        for rep in range(reps):
            try:
                pij, res = run_rank(rel, algo, k, axis, value, rep)
            except WorldCapExceeded as exc:
                warnings.warn(f"skipping {algo} at {axis}={value}: {exc}")
                break
            if threshold is not None:
                t0 = time.perf_counter()
                ptk(pij, k, threshold)
                res.wall_time += time.perf_counter() - t0
            out.append(res)
    return out


def run_sweep(
    vary: str,
    algos: Iterable[str] = ("cp", "baseline"),
    reps: int = 1,
    full_scale: bool = False,
    values: Optional[list] = None,
    workers: int = 1,
    seed: int = 42,
    out_dir: Union[str, Path, None] = None,
) -> list[BenchResult]:
    """One result per (grid point, algo, repetition) along axis ``vary``.

    The other parameters sit at their defaults.  Points on the ``p`` axis
    rank and then answer a PT-k query with that threshold; the query time is
    included in ``wall_time``.  With ``out_dir`` the results
    CSV and a plot script are written there.
    """
    if vary not in AXES:
        raise ValueError(f"unknown axis {vary!r}; choose from {AXES}")
    algos = tuple(algos)
    for a in algos:
        if a not in ALGOS:
            raise ValueError(f"unknown algo {a!r}")
    grid_values, default = grid(full_scale)
    points = [(vary, v, default, algos, reps, seed) for v in (values or grid_values[vary])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, points))
    else:
        chunks = [_run_point(p) for p in points]
    results = [r for chunk in chunks for r in chunk]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_results(results, out_dir / f"bench_{vary}.csv")
        write_plot_script(out_dir / "plot.py")
    return results


def write_results(results: list[BenchResult], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=[f.name for f in fields(BenchResult)], lineterminator="\n")
        w.writeheader()
        for r in results:
            w.writerow(asdict(r))


_PLOT_SCRIPT = '''\
"""Plot every bench_*.csv in this directory: time and op count per algorithm.

Usage: python plot.py [directory]   (needs matplotlib)
"""
import csv
import glob
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

AXES = ["mem-p", "rule", "k", "p", "tuples", "rules"]
LABELS = {"mem-p": "mem-p", "rule": "|rule|", "k": "k", "p": "p",
          "tuples": "#tuple", "rules": "#rule"}

here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
data = {}
for path in glob.glob(os.path.join(here, "bench_*.csv")):
    with open(path) as fh:
        for row in csv.DictReader(fh):
            data.setdefault(row["param_name"], []).append(row)

for metric, ylabel in (("wall_time", "time (s)"), ("op_count", "arithmetic steps")):
    fig, axes = plt.subplots(3, 2, figsize=(9, 10))
    for ax, axis in zip(axes.ravel(), AXES):
        curves = defaultdict(lambda: defaultdict(list))
        for row in data.get(axis, []):
            curves[row["algo"]][float(row["param_value"])].append(float(row[metric]))
        for algo, pts in sorted(curves.items()):
            xs = sorted(pts)
            ax.plot(xs, [sum(pts[x]) / len(pts[x]) for x in xs], marker="o", label=algo)
        ax.set_xlabel(LABELS[axis])
        ax.set_ylabel(ylabel)
        ax.set_yscale("log")
        if curves:
            ax.legend()
        else:
            ax.set_title("no data")
    fig.tight_layout()
    fig.savefig(os.path.join(here, metric + ".png"), dpi=120)
    print("wrote", os.path.join(here, metric + ".png"))
'''


def write_plot_script(path: Union[str, Path]) -> None:
    Path(path).write_text(_PLOT_SCRIPT)
