import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptopk.datagen import DEFAULTS, GenConfig, XorShift64Star, generate, generate_with_report
from ptopk.errors import InfeasibleConfig
from ptopk.xrelation import dumps_xrelation, load_xrelation


def _numpy_reference(seed, count):
    # same documented algorithm written against wrapping uint64 arithmetic
    u = np.uint64
    with np.errstate(over="ignore"):
        z = u(seed) + u(0x9E3779B97F4A7C15)
        z = (z ^ (z >> u(30))) * u(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> u(27))) * u(0x94D049BB133111EB)
        x = z ^ (z >> u(31))
        out = []
        for _ in range(count):
            x ^= x >> u(12)
            x ^= x << u(25)
            x ^= x >> u(27)
            out.append(int(x * u(0x2545F4914F6CDD1D)))
    return out


def test_rng_reference_values():
    rng = XorShift64Star(42)
    got = [rng.next() for _ in range(3)]
    assert got == [3580622183945639842, 10378725325292465923, 8967075514996744559]
    for seed in (0, 1, 42, 2**64 - 1):
        rng = XorShift64Star(seed)
        assert [rng.next() for _ in range(20)] == _numpy_reference(seed, 20)
    assert XorShift64Star(7).uniform() == (_numpy_reference(7, 1)[0] >> 11) * 2.0**-53


def test_defaults_match_reference_grid():
    assert (DEFAULTS.mem_p, DEFAULTS.rule_size, DEFAULTS.n_tuples, DEFAULTS.n_rules, DEFAULTS.seed) == (
        0.5, 10, 20000, 2000, 42
    )


def test_default_config_is_valid():
    rel, report = generate_with_report(DEFAULTS)
    assert rel.n == 20000
    assert len(rel.xtuples) == 2000
    assert abs(report.raw_mean_prob - 0.5) < 0.02
    assert report.rescaled_xtuples > 0
    scores = [t.score for t in rel]
    assert len(set(scores)) == len(scores)


def test_degenerate_single_tuple():
    rel = generate(GenConfig(n_tuples=1, n_rules=0))
    assert rel.n == 1 and rel.is_independent


def test_deterministic_bytes():
    cfg = GenConfig(n_tuples=500, n_rules=40, seed=9)
    assert dumps_xrelation(generate(cfg)) == dumps_xrelation(generate(cfg))
    assert dumps_xrelation(generate(cfg)) != dumps_xrelation(generate(GenConfig(n_tuples=500, n_rules=40, seed=10)))


def test_rules_are_multi_alternative_and_rest_singletons():
    rel = generate(GenConfig(mem_p=0.05, rule_size=5, n_tuples=1000, n_rules=50, seed=3))
    sizes = sorted(len(xt.alternatives) for xt in rel.xtuples)
    assert sum(1 for xt in rel.xtuples if xt.xtuple_id.startswith("r")) == 50
    assert sum(len(xt.alternatives) for xt in rel.xtuples if xt.xtuple_id.startswith("r")) == 250
    assert sizes.count(1) >= 1000 - 250
    assert np.mean([len(xt.alternatives) for xt in rel.xtuples if xt.xtuple_id.startswith("r")]) == 5


def test_infeasible_configs():
    with pytest.raises(InfeasibleConfig):
        generate(GenConfig(n_tuples=10, n_rules=11))
    with pytest.raises(InfeasibleConfig):
        generate(GenConfig(mem_p=1.0))
    with pytest.raises(InfeasibleConfig, match="ceiling is 0.1"):
        generate(GenConfig(mem_p=0.5, rule_size=10, n_tuples=100, n_rules=10, strict=True))
    generate(GenConfig(mem_p=0.1, rule_size=10, n_tuples=100, n_rules=10, strict=True))


@pytest.mark.parametrize("mem_p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_raw_mean_tracks_mem_p(mem_p):
    _, report = generate_with_report(GenConfig(mem_p=mem_p, n_tuples=20000, n_rules=2000, seed=1))
    assert abs(report.raw_mean_prob - mem_p) < 0.02


@given(
    st.floats(0.01, 0.99),
    st.integers(1, 12),
    st.integers(1, 300),
    st.integers(0, 40),
    st.integers(0, 2**64 - 1),
)
def test_generated_relations_validate(mem_p, rule_size, n, n_rules, seed):
    n_rules = min(n_rules, n)
    rel = generate(GenConfig(mem_p, rule_size, n, n_rules, seed))
    assert rel.n == n
    back = load_xrelation(dumps_xrelation(rel))
    assert back == rel
    for xt in rel.xtuples:
        assert xt.prob <= 1.0
    assert len({t.score for t in rel}) == n
