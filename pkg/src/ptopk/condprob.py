"""O(kn) ranker: recover the conditional distribution c from r, one step per tuple.

Writing rho for the prefix mass of the current tuple's x-tuple, the count
distribution r of the scanned prefix relates to the distribution c with that
x-tuple removed by a lower-bidiagonal system

    r_0 = (1 - rho) c_0,    r_j = (1 - rho) c_j + rho c_{j-1}.

Solving it for c gives p_{i,j} = p(t_i) c_{j-1}, and re-applying the system
with rho + p(t_i) advances r.  Each step is O(k).

Forward substitution divides by (1 - rho) at every index, so a rounding error
introduced at index j reaches index j + m multiplied by (rho / (1 - rho))^m.
For rho > 1/2 that is exponential growth, and on realistic relations (tens of
alternatives per x-tuple, k of a few dozen) the literal recurrence produces
garbage in double precision.  ``condprob_pij`` therefore runs a guarded
variant by default:

* vectors carry a guard band (length K = 2k) and exact support truncation
  (c_j = 0 whenever j exceeds the number of other scanned x-tuples);
* the forward solve is tried first, then a top-down solve whose error
  shrinks by (1 - rho) / rho per index;
* each solve carries a couple of shadow error vectors: they run through the
  same linear recurrences as the data, with fresh random-sign perturbations
  of the local rounding size injected at every operation.  Their magnitude
  estimates the accumulated error of r and of the emitted row;
* a step whose estimate exceeds the budget, or whose output leaves [0, 1],
  is redone exactly by refolding the exclusion set (the O(|S| k) rescan).

``method="literal"`` runs the unguarded recurrence, falling back to the
rescan only when rho > 1 - EPS_SOLVE.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import MutableMapping, Optional

import numba
import numpy as np

from .baseline import recompute_r
from .errors import IllConditioned
from .rankmatrix import RankMatrix
from .xrelation import TupleRecord, XRelation

__all__ = [
    "EPS_SOLVE",
    "CondProbStats",
    "StepOutput",
    "solve_c",
    "apply_rc",
    "cond_step",
    "condprob_pij",
    "CondProbScanner",
]

EPS_SOLVE = 1e-9
DUST = 1e-9

# guarded-kernel tuning
ERROR_BUDGET = 1e-12
SAFETY = 30.0
N_SHADOW = 2
_U = 2.0**-53


@dataclass
class CondProbStats:
    forward: int = 0
    backward: int = 0
    fallback: int = 0
    identity: int = 0
    op_count: int = 0


@dataclass
class StepOutput:
    p_row: np.ndarray
    r_next: np.ndarray
    rho_after: float
    c: np.ndarray = field(repr=False, default=None)


def _clamp(c: np.ndarray) -> np.ndarray:
    bad = (c < -DUST) | (c > 1.0 + DUST)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise IllConditioned(
            f"conditional distribution entry c[{j}]={c[j]!r} outside [0, 1]; "
            "back-substitution has lost precision"
        )
    return np.clip(c, 0.0, 1.0)


def _forward(r: np.ndarray, rho: float) -> np.ndarray:
    c = np.empty_like(r)
    inv = 1.0 / (1.0 - rho)
    prev = 0.0
    for j in range(r.shape[0]):
        prev = c[j] = (r[j] - rho * prev) * inv
    return c


def _downward(r: np.ndarray, rho: float, top: float) -> np.ndarray:
    c = np.empty_like(r)
    c[-1] = top
    q = 1.0 - rho
    for j in range(r.shape[0] - 2, -1, -1):
        c[j] = (r[j + 1] - q * c[j + 1]) / rho
    return c


def _top_down(r: np.ndarray, rho: float) -> np.ndarray:
    # c_0 is affine in the unknown top entry; pick the top entry (within
    # [0, 1]) that makes the first equation hold.
    a = _downward(r, rho, 0.0)
    b = _downward(r, rho, 1.0)
    slope = b[0] - a[0]
    top = 0.5
    if slope != 0.0:
        t = (r[0] / (1.0 - rho) - a[0]) / slope
        if np.isfinite(t):
            top = min(1.0, max(0.0, t))
    return _downward(r, rho, top)


def _residual(c: np.ndarray, r: np.ndarray, rho: float) -> float:
    with np.errstate(all="ignore"):
        d = np.abs(apply_rc(c, rho) - r)
    return float(d.max()) if np.isfinite(d).all() else np.inf


def solve_c(r, rho: float, clamp: bool = True, direction: str = "auto") -> np.ndarray:
    """Solve the bidiagonal system for c given r and the excluded mass ``rho``.

    ``direction="forward"`` is plain forward substitution.  Its error grows
    like (rho / (1 - rho))^j, so ``"auto"`` (the default) also tries a
    top-down solve when the forward result does not reproduce r, and keeps
    whichever has the smaller residual.  When the two disagree the top
    entries of c are not determined by r to double precision anyway.

    With ``clamp``, entries within 1e-9 outside [0, 1] are clamped and larger
    violations raise IllConditioned.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho={rho!r} outside [0, 1]")
    if rho > 1.0 - EPS_SOLVE:
        raise IllConditioned(f"1 - rho = {1.0 - rho:.3g} below {EPS_SOLVE}")
    if direction not in ("auto", "forward"):
        raise ValueError(f"unknown direction {direction!r}")
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(all="ignore"):
        c = _forward(r, rho)
    if direction == "auto" and rho > 0.0 and r.shape[0] > 1:
        res = _residual(c, r, rho)
        if res > 64 * _U * max(1.0, float(np.abs(r).max())):
            alt = _top_down(r, rho)
            if _residual(alt, r, rho) < res:
                c = alt
    return _clamp(c) if clamp else c


def apply_rc(c, rho: float) -> np.ndarray:
    """r from c: the forward map of the bidiagonal system."""
    c = np.asarray(c, dtype=np.float64)
    r = np.empty_like(c)
    r[0] = (1.0 - rho) * c[0]
    r[1:] = (1.0 - rho) * c[1:] + rho * c[:-1]
    return r


def cond_step(
    S: MutableMapping[str, float], r_prev, t: TupleRecord, clamp: bool = True
) -> StepOutput:
    """One literal step; updates ``S[t.xtuple_id]`` in place.

    Raises IllConditioned when the solve is refused, leaving ``S`` untouched.
    """
    rho = S.get(t.xtuple_id, 0.0)
    c = solve_c(r_prev, rho, clamp=clamp, direction="forward")
    rho_after = rho + t.prob
    S[t.xtuple_id] = rho_after
    return StepOutput(t.prob * c, apply_rc(c, rho_after), rho_after, c)


def _literal(rel: XRelation, k: int, stats: CondProbStats, trace: Optional[list]) -> np.ndarray:
    S: dict[str, float] = {}
    r = np.zeros(k)
    r[0] = 1.0
    out = np.zeros((rel.n, k))
    for i, t in enumerate(rel.sorted_order):
        rho = S.get(t.xtuple_id, 0.0)
        try:
            step = cond_step(S, r, t)
            stats.forward += 1
            stats.op_count += 2 * k
        except IllConditioned:
            if rho <= 1.0 - EPS_SOLVE:
                raise
            c = recompute_r(S, t.xtuple_id, k)
            stats.fallback += 1
            stats.op_count += k * len(S) + k
            S[t.xtuple_id] = rho + t.prob
            step = StepOutput(t.prob * c, apply_rc(c, rho + t.prob), rho + t.prob, c)
        if rho == 0.0:
            stats.identity += 1
        if trace is not None:
            trace.append({"tuple_id": t.tuple_id, "rho": rho, "r_prev": r, "c": step.c,
                          "r_next": step.r_next})
        out[i] = step.p_row
        r = step.r_next
    return out


# -- guarded kernel ---------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _sign(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return 1.0 if (x * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(63) else -1.0


@numba.njit(cache=True)
def _attempt(r, D, rho, rn, m, K, forward, c, Dc, rnew, Dn, rng):
    """Solve for c and re-apply with ``rn``; False if the direction is unusable."""
    nS = D.shape[0]
    c[:] = 0.0
    Dc[:, :] = 0.0
    top = min(K - 1, m)
    if forward:
        if rho > 1.0 - EPS_SOLVE:
            return False
        inv = 1.0 / (1.0 - rho)
        prev = 0.0
        for j in range(top + 1):
            c[j] = (r[j] - rho * prev) * inv
            loc = 2.0 * _U * (abs(r[j]) + rho * abs(prev)) * inv
            for s in range(nS):
                dp = Dc[s, j - 1] if j > 0 else 0.0
                Dc[s, j] = (D[s, j] - rho * dp) * inv + loc * _sign(rng)
            prev = c[j]
    else:
        if rho <= 0.0:
            return False
        inv = 1.0 / rho
        q = 1.0 - rho
        if m + 1 <= K - 1:
            T = m
            c[T] = r[T + 1] * inv
            est = _U * abs(c[T])
            for s in range(nS):
                Dc[s, T] = D[s, T + 1] * inv + est * _sign(rng)
        else:
            T = K - 1
            hi = 1.0
            if q > 1e-300:
                hi = min(1.0, max(0.0, r[T]) / q)
            c[T] = 0.5 * hi
            for s in range(nS):
                Dc[s, T] = 0.5 * hi * _sign(rng)
        for j in range(T - 1, -1, -1):
            c[j] = (r[j + 1] - q * c[j + 1]) * inv
            loc = 2.0 * _U * (abs(r[j + 1]) + q * abs(c[j + 1])) * inv
            for s in range(nS):
                Dc[s, j] = (D[s, j + 1] - q * Dc[s, j + 1]) * inv + loc * _sign(rng)
        top = T
    rnew[:] = 0.0
    Dn[:, :] = 0.0
    for j in range(min(K, top + 2)):
        cj = c[j] if j <= top else 0.0
        cp = c[j - 1] if j > 0 else 0.0
        rnew[j] = (1.0 - rn) * cj + rn * cp
        for s in range(nS):
            dj = Dc[s, j] if j <= top else 0.0
            dp = Dc[s, j - 1] if j > 0 else 0.0
            Dn[s, j] = (1.0 - rn) * dj + rn * dp + _U * rnew[j] * _sign(rng)
    return True


@numba.njit(cache=True)
def _accept(p, k, Dc, rnew, Dn, lim):
    nS = Dn.shape[0]
    err = 0.0
    for s in range(nS):
        for j in range(k):
            err = max(err, abs(Dn[s, j]), p * abs(Dc[s, j]))
    if not err <= lim:
        return False
    for j in range(k):
        t = rnew[j]
        if not ((0.0 <= t <= 1.0 + DUST) or abs(t) < 1e-12):
            return False
    return True


@numba.njit(cache=True)
def _step(p, x, k, lim, r, D, acc, seen, nseen, rng, counts, row, c, Dc, rnew, Dn):
    """Advance the scan by one tuple, writing p_{i,1..k} into ``row``.

    counts: [forward, backward, fallback, identity, ops].  ``nseen`` is a
    one-element array holding |S|; x-tuples are numbered by first appearance
    so S in insertion order is 0..|S|-1.
    """
    K = r.shape[0]
    nS = D.shape[0]
    rho = acc[x] if seen[x] else 0.0
    rn = rho + p
    m = nseen[0] - (1 if seen[x] else 0)
    if rho == 0.0:
        counts[3] += 1
    ok = False
    for attempt in range(2):
        forward = attempt == 0
        if not _attempt(r, D, rho, rn, m, K, forward, c, Dc, rnew, Dn, rng):
            continue
        counts[4] += K * (1 + nS)
        if _accept(p, k, Dc, rnew, Dn, lim):
            counts[0 if forward else 1] += 1
            ok = True
            break
    if ok:
        for j in range(K):
            if not (-1.0 < rnew[j] < 2.0):
                rnew[j] = 0.5
    else:
        # exact rescan of S without x
        c[:] = 0.0
        c[0] = 1.0
        for y in range(nseen[0]):
            if y == x:
                continue
            q = acc[y]
            for j in range(K - 1, 0, -1):
                c[j] = q * c[j - 1] + (1.0 - q) * c[j]
            c[0] = (1.0 - q) * c[0]
        rnew[0] = (1.0 - rn) * c[0]
        for j in range(1, K):
            rnew[j] = (1.0 - rn) * c[j] + rn * c[j - 1]
        Dn[:, :] = 0.0
        counts[2] += 1
        counts[4] += K * nseen[0] + K
    for j in range(k):
        row[j] = p * min(1.0, max(0.0, c[j]))
    r[:] = rnew
    D[:, :] = Dn
    if not seen[x]:
        seen[x] = True
        nseen[0] += 1
    acc[x] = rn


@numba.njit(cache=True)
def _scan(probs, xidx, n_x, k, K, lim, seed):
    n = probs.shape[0]
    out = np.zeros((n, k))
    r = np.zeros(K)
    r[0] = 1.0
    D = np.zeros((N_SHADOW, K))
    acc = np.zeros(n_x)
    seen = np.zeros(n_x, dtype=np.bool_)
    nseen = np.zeros(1, dtype=np.int64)
    rng = np.full(1, seed, dtype=np.uint64)
    counts = np.zeros(5, dtype=np.int64)
    c = np.zeros(K)
    Dc = np.zeros((N_SHADOW, K))
    rnew = np.zeros(K)
    Dn = np.zeros((N_SHADOW, K))
    for i in range(n):
        _step(probs[i], xidx[i], k, lim, r, D, acc, seen, nseen, rng,
              counts, out[i], c, Dc, rnew, Dn)
    return out, counts


_SEED = np.uint64(0x9E3779B97F4A7C15)


def _guard_length(k: int) -> int:
    return 2 * k


def _fill_stats(stats: CondProbStats, counts) -> None:
    stats.forward += int(counts[0])
    stats.backward += int(counts[1])
    stats.fallback += int(counts[2])
    stats.identity += int(counts[3])
    stats.op_count += int(counts[4])


def condprob_pij(
    rel: XRelation,
    k: int,
    method: str = "guarded",
    stats: Optional[CondProbStats] = None,
    trace: Optional[list] = None,
) -> RankMatrix:
    """All p_{i,j}, j <= k, in O(k) amortized work per tuple.

    ``method``: "guarded" (default) or "literal".  ``trace`` is only filled
    by the literal method, with one dict per step (rho, r_prev, c, r_next).
    """
    if not 1 <= k <= rel.n:
        raise ValueError(f"k={k} outside 1..{rel.n}")
    stats = stats if stats is not None else CondProbStats()
    if method == "literal":
        return RankMatrix.from_relation(rel, _literal(rel, k, stats, trace))
    if method != "guarded":
        raise ValueError(f"unknown method {method!r}")
    probs, xidx, n_x = rel.scan_arrays
    values, counts = _scan(probs, xidx, n_x, k, _guard_length(k),
                           ERROR_BUDGET / SAFETY, _SEED)
    _fill_stats(stats, counts)
    return RankMatrix.from_relation(rel, values)


class CondProbScanner:
    """Incremental form of the guarded scan, one tuple per ``advance`` call.

    After each call ``r`` holds the count distribution of the scanned
    prefix (first k entries).
    """

    def __init__(self, rel: XRelation, k: int):
        if not 1 <= k <= rel.n:
            raise ValueError(f"k={k} outside 1..{rel.n}")
        self.rel = rel
        self.k = k
        K = _guard_length(k)
        self._probs, self._xidx, n_x = rel.scan_arrays
        self._r = np.zeros(K)
        self._r[0] = 1.0
        self._D = np.zeros((N_SHADOW, K))
        self._acc = np.zeros(n_x)
        self._seen = np.zeros(n_x, dtype=np.bool_)
        self._nseen = np.zeros(1, dtype=np.int64)
        self._rng = np.full(1, _SEED, dtype=np.uint64)
        self._counts = np.zeros(5, dtype=np.int64)
        self._c = np.zeros(K)
        self._Dc = np.zeros((N_SHADOW, K))
        self._rnew = np.zeros(K)
        self._Dn = np.zeros((N_SHADOW, K))
        self._lim = ERROR_BUDGET / SAFETY
        self.position = 0

    @property
    def r(self) -> np.ndarray:
        return self._r[: self.k].copy()

    @property
    def c(self) -> np.ndarray:
        """Conditional distribution used by the last ``advance`` (first k entries)."""
        return self._c[: self.k].copy()

    @property
    def done(self) -> bool:
        return self.position >= self.rel.n

    def advance(self) -> tuple[TupleRecord, np.ndarray]:
        """Consume the next tuple; return it with its row p_{i,1..k}."""
        if self.done:
            raise StopIteration
        i = self.position
        row = np.zeros(self.k)
        _step(self._probs[i], self._xidx[i], self.k, self._lim, self._r, self._D,
              self._acc, self._seen, self._nseen, self._rng, self._counts, row,
              self._c, self._Dc, self._rnew, self._Dn)
        self.position += 1
        return self.rel.sorted_order[i], row

    def stats(self) -> CondProbStats:
        s = CondProbStats()
        _fill_stats(s, self._counts)
        return s
