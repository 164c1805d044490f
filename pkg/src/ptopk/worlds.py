"""Exact brute force over possible worlds; ground truth at desk scale."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import WorldCapExceeded
from .rankmatrix import RankMatrix
from .xrelation import XRelation

__all__ = [
    "PossibleWorld",
    "DEFAULT_WORLD_CAP",
    "count_worlds",
    "enumerate_worlds",
    "oracle_pij",
    "oracle_tkp",
    "dumps_worlds",
]

DEFAULT_WORLD_CAP = 2**24


@dataclass(frozen=True)
class PossibleWorld:
    chosen: dict[str, Optional[str]]
    prob: float

    @property
    def members(self) -> frozenset[str]:
        return frozenset(t for t in self.chosen.values() if t is not None)


def _branches(rel: XRelation):
    """Per x-tuple: list of (tuple position or -1 for none, factor), zero factors dropped."""
    pos = {t.tuple_id: i for i, t in enumerate(rel.sorted_order)}
    out = []
    for xt in rel.xtuples:
        opts = [(pos[t.tuple_id], t.prob) for t in xt.alternatives]
        none = 1.0 - xt.prob
        if none > 0.0:
            opts.append((-1, none))
        out.append(opts)
    return out


def count_worlds(rel: XRelation) -> int:
    return math.prod(len(opts) for opts in _branches(rel))


def _walk(rel: XRelation, cap: int) -> Iterator[tuple[list[int], float]]:
    branches = _branches(rel)
    total = math.prod(len(opts) for opts in branches)
    if total > cap:
        raise WorldCapExceeded(
            f"{total} possible worlds exceed the cap of {cap}; use an analytic ranker"
        )
    m = len(branches)
    chosen: list[int] = []

    def rec(level: int, prob: float):
        if level == m:
            yield chosen, prob
            return
        for idx, factor in branches[level]:
            if idx >= 0:
                chosen.append(idx)
            yield from rec(level + 1, prob * factor)
            if idx >= 0:
                chosen.pop()

    yield from rec(0, 1.0)


def enumerate_worlds(rel: XRelation, cap: int = DEFAULT_WORLD_CAP) -> Iterator[PossibleWorld]:
    """Yield every world with positive probability.

    Raises WorldCapExceeded before yielding anything when the world count is
    above ``cap``.
    """
    order = rel.sorted_order
    walker = _walk(rel, cap)
    for idxs, prob in walker:
        chosen: dict[str, Optional[str]] = {xt.xtuple_id: None for xt in rel.xtuples}
        for i in idxs:
            chosen[order[i].xtuple_id] = order[i].tuple_id
        yield PossibleWorld(chosen, prob)


def oracle_pij(rel: XRelation, k: int, cap: int = DEFAULT_WORLD_CAP) -> RankMatrix:
    """p_{i,j} by summing Pr(I) over worlds where t_i holds rank j."""
    if not 1 <= k <= rel.n:
        raise ValueError(f"k={k} outside 1..{rel.n}")
    values = np.zeros((rel.n, k))
    for idxs, prob in _walk(rel, cap):
        for rank, i in enumerate(sorted(idxs)[:k]):
            values[i, rank] += prob
    return RankMatrix.from_relation(rel, values)


def oracle_tkp(rel: XRelation, k: int, cap: int = DEFAULT_WORLD_CAP) -> dict[str, float]:
    """Top-k probability per tuple, summed directly over worlds (not via p_{i,j})."""
    if not 1 <= k <= rel.n:
        raise ValueError(f"k={k} outside 1..{rel.n}")
    acc = [0.0] * rel.n
    for idxs, prob in _walk(rel, cap):
        for i in sorted(idxs)[:k]:
            acc[i] += prob
    return {t.tuple_id: acc[i] for i, t in enumerate(rel.sorted_order)}


def dumps_worlds(rel: XRelation, cap: int = DEFAULT_WORLD_CAP) -> str:
    """CSV ``members,prob``; members are tuple ids in score order joined by ';'."""
    order = rel.sorted_order
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("members", "prob"))
    for idxs, prob in _walk(rel, cap):
        w.writerow((";".join(order[i].tuple_id for i in sorted(idxs)), repr(prob)))
    return buf.getvalue()
