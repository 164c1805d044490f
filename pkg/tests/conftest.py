import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ptopk.samples import four_tuple_relation, paired_relation
from ptopk.xrelation import XRelation

settings.register_profile(
    "default", deadline=None, max_examples=150, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_relation(rng: np.random.Generator, n: int, tie_scores: bool = False) -> XRelation:
    """Arbitrary x-tuple structure on n tuples.

    Groups are a random partition; each group's mass is drawn in (0, 1], with
    about one group in six made certain.  ``tie_scores`` draws scores from a
    tiny integer range so ties are common.
    """
    n_groups = int(rng.integers(1, n + 1))
    labels = rng.integers(0, n_groups, size=n)
    labels[:n_groups] = rng.permutation(n_groups)[: min(n_groups, n)]
    rows = []
    for g in np.unique(labels):
        members = np.flatnonzero(labels == g)
        w = rng.random(len(members)) + 0.05
        mass = 1.0 if rng.random() < 1 / 6 else rng.uniform(0.05, 1.0)
        probs = w / w.sum() * mass
        for i, p in zip(members, probs):
            rows.append((f"x{g}", f"t{i:02d}", 0.0, float(min(p, 1.0))))
    if tie_scores:
        scores = rng.integers(0, 4, size=n).astype(float)
    else:
        scores = rng.permutation(n).astype(float) * 1.5 + rng.random()
    rows = [(x, t, float(scores[int(t[1:])]), p) for x, t, _, p in rows]
    return XRelation.from_rows(rows)


@st.composite
def relations(draw, min_n=1, max_n=12):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    ties = draw(st.booleans())
    return random_relation(np.random.default_rng(seed), n, ties)


@pytest.fixture
def fig_rel():
    return four_tuple_relation()


@pytest.fixture
def pair_rel():
    return paired_relation()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
