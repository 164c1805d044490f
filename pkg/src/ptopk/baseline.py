"""O(kn^2) reference ranker.

Scan tuples by score, maintain the exclusion set S and the count
distribution r.  When a tuple's x-tuple already has alternatives in the
prefix, the distribution with that x-tuple removed (r') is refolded from
scratch over S.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numba
import numpy as np

from .rankmatrix import RankMatrix
from .xrelation import EXCLUSIVITY_SLACK, XRelation

__all__ = ["BaselineStats", "dp_step", "recompute_r", "baseline_pij"]


@dataclass
class BaselineStats:
    recompute_calls: int = 0
    op_count: int = 0


def dp_step(r, p: float) -> np.ndarray:
    """Fold one independent tuple of probability ``p`` into the count distribution.

    Accumulated x-tuple masses may exceed 1 by rounding; up to the
    exclusivity slack they are treated as 1.
    """
    if not 0.0 < p <= 1.0 + EXCLUSIVITY_SLACK:
        raise ValueError(f"probability {p!r} outside (0, 1]")
    p = min(p, 1.0)
    r = np.asarray(r, dtype=np.float64)
    out = np.empty_like(r)
    out[0] = (1.0 - p) * r[0]
    out[1:] = p * r[:-1] + (1.0 - p) * r[1:]
    return out


def recompute_r(
    S: Mapping[str, float],
    excluded: Optional[str],
    k: int,
    trace: Optional[list] = None,
) -> np.ndarray:
    """r' over the x-tuples of ``S`` (insertion order) with ``excluded`` left out.

    If ``trace`` is a list, the base vector and every intermediate fold are
    appended to it.
    """
    r = np.zeros(k)
    r[0] = 1.0
    if trace is not None:
        trace.append(r.copy())
    for xid, q in S.items():
        if xid == excluded:
            continue
        r = dp_step(r, q)
        if trace is not None:
            trace.append(r.copy())
    return r


@numba.njit(cache=True)
def _fold(r, p):
    k = r.shape[0]
    q = 1.0 - p
    for j in range(k - 1, 0, -1):
        r[j] = p * r[j - 1] + q * r[j]
    r[0] = q * r[0]


@numba.njit(cache=True)
def _baseline_kernel(probs, xidx, n_x, k):
    n = probs.shape[0]
    out = np.zeros((n, k))
    acc = np.zeros(n_x)
    seen = np.zeros(n_x, dtype=np.bool_)
    r = np.zeros(k)
    r[0] = 1.0
    rp = np.zeros(k)
    n_seen = 0
    recomputes = 0
    ops = 0
    for i in range(n):
        p = probs[i]
        x = xidx[i]
        if seen[x]:
            # x-tuples are numbered by first appearance, so 0..n_seen-1 is
            # exactly S in insertion order.
            rp[:] = 0.0
            rp[0] = 1.0
            for y in range(n_seen):
                if y != x:
                    _fold(rp, acc[y])
                    ops += k
            recomputes += 1
            for j in range(k):
                out[i, j] = p * rp[j]
            acc[x] += p
            r[:] = rp
            _fold(r, acc[x])
            ops += k
        else:
            seen[x] = True
            n_seen += 1
            for j in range(k):
                out[i, j] = p * r[j]
            acc[x] = p
            _fold(r, p)
            ops += k
    return out, recomputes, ops


def baseline_pij(rel: XRelation, k: int, stats: Optional[BaselineStats] = None) -> RankMatrix:
    """All p_{i,j}, j <= k, by the quadratic rescan method."""
    if not 1 <= k <= rel.n:
        raise ValueError(f"k={k} outside 1..{rel.n}")
    probs, xidx, n_x = rel.scan_arrays
    values, recomputes, ops = _baseline_kernel(probs, xidx, n_x, k)
    if stats is not None:
        stats.recompute_calls += int(recomputes)
        stats.op_count += int(ops)
    return RankMatrix.from_relation(rel, values)
