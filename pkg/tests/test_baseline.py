import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptopk.baseline import BaselineStats, baseline_pij, dp_step, recompute_r
from ptopk.worlds import oracle_pij
from ptopk.xrelation import relation_from_probs

from conftest import relations


def test_dp_step_examples():
    assert dp_step([1.0, 0.0], 0.3) == pytest.approx([0.7, 0.3], abs=1e-15)
    assert dp_step([0.7, 0.3], 0.5) == pytest.approx([0.35, 0.5], abs=1e-15)
    assert list(dp_step([1.0, 0.0, 0.0], 1.0)) == [0.0, 1.0, 0.0]


def test_dp_step_rejects_bad_probability():
    for p in (0.0, -0.2, 1.01):
        with pytest.raises(ValueError):
            dp_step([1.0, 0.0], p)


def test_recompute_examples():
    S = {"x1": 0.3, "x2": 0.5, "x3": 0.5}
    assert recompute_r(S, "x1", 2) == pytest.approx([0.25, 0.5], abs=1e-15)
    assert list(recompute_r({}, "x9", 2)) == [1.0, 0.0]
    assert recompute_r({"x1": 0.3, "x2": 0.5}, None, 2) == pytest.approx([0.35, 0.5], abs=1e-15)


def test_recompute_trace_lists_every_fold():
    trace = []
    recompute_r({"x1": 0.3, "x2": 0.5, "x3": 0.5}, "x1", 2, trace)
    assert [list(v) for v in trace] == [[1.0, 0.0], [0.5, 0.5], [0.25, 0.5]]


def test_paired_rows(pair_rel):
    m = baseline_pij(pair_rel, 2)
    want = [[0.3, 0.0], [0.35, 0.15], [0.175, 0.25], [0.1, 0.2]]
    assert np.abs(m.values[:4] - want).max() < 1e-12
    assert m.p("t4", 1) == pytest.approx(0.1, abs=1e-12)


def test_four_tuple_matches_oracle(fig_rel):
    assert np.abs(baseline_pij(fig_rel, 2).values - oracle_pij(fig_rel, 2).values).max() < 1e-12


def test_singletons_never_recompute():
    stats = BaselineStats()
    baseline_pij(relation_from_probs([0.2, 0.9, 0.5, 0.4]), 3, stats)
    assert stats.recompute_calls == 0
    assert stats.op_count == 4 * 3


def test_k_range(fig_rel):
    for k in (0, 5):
        with pytest.raises(ValueError):
            baseline_pij(fig_rel, k)


@given(relations())
def test_matches_oracle(rel):
    for k in {1, max(1, rel.n // 2), rel.n}:
        assert np.abs(baseline_pij(rel, k).values - oracle_pij(rel, k).values).max() <= 1e-9


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=40))
def test_dp_step_preserves_total_mass(ps):
    r = np.zeros(len(ps) + 1)
    r[0] = 1.0
    prefix = [1.0]
    for p in ps:
        r = dp_step(r, p)
        assert r.sum() == pytest.approx(1.0, abs=1e-12)
        assert (r >= 0).all()
        prefix.append(r[:3].sum())
    assert all(b <= a + 1e-12 for a, b in zip(prefix, prefix[1:]))
