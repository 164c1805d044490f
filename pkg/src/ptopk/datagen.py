"""Synthetic x-Relations over the (mem-p, |rule|, #tuple, #rule) parameter space.

The generator is fully specified so other implementations can reproduce
its output bit for bit:

* RNG: xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D) whose
  state is the first output of splitmix64 applied to the seed (a zero state
  is replaced by 1).  A uniform double is ``(next() >> 11) * 2**-53``.
* Membership: T = min(#tuple, #rule * |rule|) tuples are partitioned into
  #rule x-tuples.  Tuple g < #rule goes to rule g, every other tuple g < T to
  rule ``floor(u * #rule)``; tuples T..#tuple-1 are singletons.
* Probability of each tuple: uniform on (mem_p - w, mem_p + w) with
  w = min(mem_p, 1 - mem_p), redrawn if it lands on 0.  The mean is mem_p.
* An x-tuple whose probabilities sum above 1 is scaled by (1 - 1e-6) / sum.
* Score: uniform in [0, 1e6), redrawn until distinct from all earlier scores.

Draw order per tuple g = 0..#tuple-1: rule (only when #rule <= g < T),
probability, score.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InfeasibleConfig
from .xrelation import TupleRecord, XRelation, XTuple

__all__ = ["GenConfig", "GenReport", "XorShift64Star", "generate", "generate_with_report", "DEFAULTS"]

_MASK = (1 << 64) - 1
RESCALE_TARGET = 1.0 - 1e-6
SCORE_RANGE = 1e6


def splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        self.state = splitmix64(seed & _MASK) or 1

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)


@dataclass(frozen=True)
class GenConfig:
    mem_p: float = 0.5
    rule_size: int = 10
    n_tuples: int = 20000
    n_rules: int = 2000
    seed: int = 42
    strict: bool = False

    def validate(self) -> None:
        if not 0.0 < self.mem_p < 1.0:
            raise InfeasibleConfig(f"mem_p={self.mem_p!r} outside (0, 1)")
        if self.rule_size < 1 or self.n_tuples < 1 or self.n_rules < 0:
            raise InfeasibleConfig("rule_size and n_tuples must be >= 1, n_rules >= 0")
        if self.n_rules > self.n_tuples:
            raise InfeasibleConfig(
                f"{self.n_rules} rules need at least as many tuples, got {self.n_tuples}"
            )
        if not 0 <= self.seed <= _MASK:
            raise InfeasibleConfig(f"seed {self.seed} is not a 64-bit unsigned integer")
        if self.strict and self.n_rules and self.mem_p * self.rule_size > 1.0:
            raise InfeasibleConfig(
                f"mem_p={self.mem_p} with |rule|={self.rule_size} expects x-tuple mass "
                f"{self.mem_p * self.rule_size:.3g} > 1; feasible mem_p ceiling is "
                f"{1.0 / self.rule_size:.6g}"
            )


# the reference parameter grid, full scale
DEFAULTS = GenConfig()


@dataclass(frozen=True)
class GenReport:
    raw_mean_prob: float
    rescaled_xtuples: int


def generate_with_report(cfg: GenConfig) -> tuple[XRelation, GenReport]:
    cfg.validate()
    rng = XorShift64Star(cfg.seed)
    n = cfg.n_tuples
    T = min(n, cfg.n_rules * cfg.rule_size) if cfg.n_rules else 0
    w = min(cfg.mem_p, 1.0 - cfg.mem_p)
    lo = cfg.mem_p - w
    width = len(str(n - 1))
    rwidth = len(str(max(cfg.n_rules - 1, 0)))

    groups: dict[str, list[tuple[str, float, float]]] = {}
    for r in range(cfg.n_rules):
        groups[f"r{r:0{rwidth}d}"] = []
    used_scores: set[float] = set()
    raw_sum = 0.0
    for g in range(n):
        if g < cfg.n_rules:
            xid = f"r{g:0{rwidth}d}"
        elif g < T:
            xid = f"r{rng.below(cfg.n_rules):0{rwidth}d}"
        else:
            xid = f"s{g:0{width}d}"
            groups[xid] = []
        p = 0.0
        while p <= 0.0:
            p = lo + 2.0 * w * rng.uniform()
        raw_sum += p
        score = rng.uniform() * SCORE_RANGE
        while score in used_scores:
            score = rng.uniform() * SCORE_RANGE
        used_scores.add(score)
        groups[xid].append((f"t{g:0{width}d}", score, p))

    rescaled = 0
    xtuples = []
    for xid, alts in groups.items():
        total = sum(p for _, _, p in alts)
        if total > 1.0:
            f = RESCALE_TARGET / total
            alts = [(tid, s, p * f) for tid, s, p in alts]
            rescaled += 1
        xtuples.append(XTuple(xid, tuple(TupleRecord(tid, xid, s, p) for tid, s, p in alts)))
    return XRelation(xtuples), GenReport(raw_sum / n, rescaled)


def generate(cfg: GenConfig) -> XRelation:
    """Deterministic relation for ``cfg``; see the module docstring for the algorithm."""
    return generate_with_report(cfg)[0]
