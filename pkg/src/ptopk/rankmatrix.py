from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .xrelation import XRelation

__all__ = ["RankMatrix"]


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """Position probabilities ``p[i, j-1] = p_{i,j}`` for tuples in score order."""

    tuple_ids: tuple[str, ...]
    xtuple_ids: tuple[str, ...]
    scores: np.ndarray
    probs: np.ndarray
    values: np.ndarray

    @classmethod
    def from_relation(cls, rel: XRelation, values: np.ndarray) -> "RankMatrix":
        order = rel.sorted_order
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != len(order):
            raise ValueError(f"values shape {values.shape} does not match n={len(order)}")
        return cls(
            tuple_ids=tuple(t.tuple_id for t in order),
            xtuple_ids=tuple(t.xtuple_id for t in order),
            scores=np.array([t.score for t in order]),
            probs=np.array([t.prob for t in order]),
            values=values,
        )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def independent(self) -> bool:
        return len(set(self.xtuple_ids)) == len(self.xtuple_ids)

    def index(self, tuple_id: str) -> int:
        return self.tuple_ids.index(tuple_id)

    def p(self, tuple_id: str, j: int) -> float:
        """p_{i,j} with 1-based rank ``j``."""
        if not 1 <= j <= self.k:
            raise IndexError(f"rank {j} outside 1..{self.k}")
        return float(self.values[self.index(tuple_id), j - 1])

    def row(self, tuple_id: str) -> np.ndarray:
        return self.values[self.index(tuple_id)]

    def tkp(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def tkp_by_id(self) -> dict[str, float]:
        return dict(zip(self.tuple_ids, map(float, self.tkp())))

    def checksum(self) -> float:
        return round(math.fsum(self.values.ravel().tolist()), 9)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("tuple_id", "j", "p_ij"))
        for tid, row in zip(self.tuple_ids, self.values):
            for j, v in enumerate(row, start=1):
                w.writerow((tid, j, repr(float(v))))
        return buf.getvalue()
