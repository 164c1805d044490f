"""Top-k semantics over rank probabilities, plus the early-stopping generator.

Ties are resolved by the scan order everywhere: higher score first, then
smaller tuple_id.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .condprob import CondProbScanner
from .errors import QueryError
from .rankmatrix import RankMatrix
from .xrelation import XRelation

__all__ = [
    "SEMANTICS",
    "QueryAnswer",
    "ukranks",
    "global_topk",
    "ptk",
    "ptk_scan",
    "pk_topk",
    "upper_bound",
    "topk_generator",
    "answer_to_csv",
    "answer_to_json",
]

SEMANTICS = ("ukranks", "global_topk", "ptk", "pk_topk")


@dataclass
class QueryAnswer:
    semantics: str
    k: int
    results: list[tuple[str, float]]
    scan_depth: int
    threshold: Optional[float] = None
    bounds: list[float] = field(default_factory=list, repr=False)

    @property
    def tuple_ids(self) -> list[str]:
        return [tid for tid, _ in self.results]


def _check_k(pij: RankMatrix, k: int) -> None:
    if not 1 <= k <= pij.k:
        raise QueryError(f"k={k} outside 1..{pij.k} (matrix width)")


def _check_threshold(threshold: float) -> None:
    if not (isinstance(threshold, (int, float)) and 0.0 < threshold <= 1.0):
        raise QueryError(f"threshold {threshold!r} outside (0, 1]")


def _by_tkp(tkp: np.ndarray) -> np.ndarray:
    # stable sort on -tkp keeps scan order among equal values
    return np.argsort(-tkp, kind="stable")


def ukranks(pij: RankMatrix, k: int) -> QueryAnswer:
    """Per rank j, the tuple with the largest p_{i,j}; a tuple may win several ranks."""
    _check_k(pij, k)
    winners = np.argmax(pij.values[:, :k], axis=0)
    results = [(pij.tuple_ids[i], float(pij.values[i, j])) for j, i in enumerate(winners)]
    return QueryAnswer("ukranks", k, results, pij.n)


def global_topk(pij: RankMatrix, k: int) -> QueryAnswer:
    _check_k(pij, k)
    tkp = pij.values[:, :k].sum(axis=1)
    top = _by_tkp(tkp)[:k]
    return QueryAnswer("global_topk", k, [(pij.tuple_ids[i], float(tkp[i])) for i in top], pij.n)


def ptk(pij: RankMatrix, k: int, threshold: float) -> QueryAnswer:
    """Every tuple whose top-k probability is at least ``threshold``."""
    _check_k(pij, k)
    _check_threshold(threshold)
    tkp = pij.values[:, :k].sum(axis=1)
    keep = [i for i in _by_tkp(tkp) if tkp[i] >= threshold]
    return QueryAnswer(
        "ptk", k, [(pij.tuple_ids[i], float(tkp[i])) for i in keep], pij.n, threshold
    )


def pk_topk(pij: RankMatrix, k: int) -> QueryAnswer:
    """Global top-k restricted to relations of independent tuples."""
    if not pij.independent:
        raise QueryError("pk_topk requires independent tuples; relation has multi-alternative x-tuples")
    ans = global_topk(pij, k)
    ans.semantics = "pk_topk"
    return ans


def upper_bound(r, k: Optional[int] = None) -> float:
    """Sum of r_0..r_{k-1}: no unscanned tuple has a larger top-k probability."""
    r = np.asarray(r, dtype=np.float64)
    return float(r[: (r.shape[0] if k is None else k)].sum())


def topk_generator(rel: XRelation, k: int) -> QueryAnswer:
    """Global top-k by scanning in score order until the bound rules out the rest.

    Keeps a size-k min-heap keyed by (tkp, -position); stops as soon as the
    heap is full and its minimum is >= the current upper bound.
    ``bounds`` on the answer lists the bound seen before each consumed tuple.
    """
    if not 1 <= k <= rel.n:
        raise QueryError(f"k={k} outside 1..{rel.n}")
    scan = CondProbScanner(rel, k)
    heap: list[tuple[float, int, str]] = []
    bounds = []
    while not scan.done:
        bound = upper_bound(scan.r)
        if len(heap) == k and heap[0][0] >= bound:
            break
        bounds.append(bound)
        pos = scan.position
        t, row = scan.advance()
        item = (float(row.sum()), -pos, t.tuple_id)
        if len(heap) < k:
            heapq.heappush(heap, item)
        elif item[:2] > heap[0][:2]:
            heapq.heapreplace(heap, item)
    ranked = sorted(heap, key=lambda e: (-e[0], -e[1]))
    return QueryAnswer(
        "global_topk", k, [(tid, tkp) for tkp, _, tid in ranked], scan.position, bounds=bounds
    )


def ptk_scan(rel: XRelation, k: int, threshold: float) -> QueryAnswer:
    """PT-k with early stop: quit once the bound drops below ``threshold``."""
    if not 1 <= k <= rel.n:
        raise QueryError(f"k={k} outside 1..{rel.n}")
    _check_threshold(threshold)
    scan = CondProbScanner(rel, k)
    hits = []
    bounds = []
    while not scan.done:
        bound = upper_bound(scan.r)
        if bound < threshold:
            break
        bounds.append(bound)
        pos = scan.position
        t, row = scan.advance()
        tkp = float(row.sum())
        if tkp >= threshold:
            hits.append((-tkp, pos, t.tuple_id))
    hits.sort()
    return QueryAnswer(
        "ptk", k, [(tid, -neg) for neg, _, tid in hits], scan.position, threshold, bounds
    )


def answer_to_csv(ans: QueryAnswer) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rank", "tuple_id", "probability", "scan_depth"))
    for rank, (tid, prob) in enumerate(ans.results, start=1):
        w.writerow((rank, tid, repr(prob), ans.scan_depth))
    return buf.getvalue()


def answer_to_json(ans: QueryAnswer) -> str:
    doc = {
        "semantics": ans.semantics,
        "k": ans.k,
        "threshold": ans.threshold,
        "scan_depth": ans.scan_depth,
        "results": [
            {"rank": rank, "tuple_id": tid, "probability": prob}
            for rank, (tid, prob) in enumerate(ans.results, start=1)
        ],
    }
    return json.dumps(doc, indent=1) + "\n"
