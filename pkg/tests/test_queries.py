import json
import math

import numpy as np
import pytest
from hypothesis import given

from ptopk.condprob import CondProbScanner, condprob_pij
from ptopk.datagen import GenConfig, generate
from ptopk.errors import QueryError
from ptopk.queries import (
    answer_to_csv,
    answer_to_json,
    global_topk,
    pk_topk,
    ptk,
    ptk_scan,
    topk_generator,
    ukranks,
    upper_bound,
)
from ptopk.worlds import oracle_pij, oracle_tkp
from ptopk.xrelation import XRelation, relation_from_probs

from conftest import random_relation, relations


def test_ukranks_four_tuple(fig_rel):
    ans = ukranks(condprob_pij(fig_rel, 2), 2)
    assert ans.tuple_ids == ["t2", "t3"]
    assert [p for _, p in ans.results] == pytest.approx([0.7, 0.5], abs=1e-12)


def test_ukranks_certain_tuple():
    ans = ukranks(condprob_pij(relation_from_probs([1.0]), 1), 1)
    assert ans.results == [("t1", 1.0)]


def test_ukranks_paired_first_position(pair_rel):
    pij = condprob_pij(pair_rel, 2)
    ans = ukranks(pij, 2)
    assert ans.results[0][0] == "t2"
    assert ans.results[0][1] == pytest.approx(0.35, abs=1e-12)
    o = oracle_pij(pair_rel, 2).values
    assert ans.results[0][0] == pij.tuple_ids[int(np.argmax(o[:, 0]))]


def test_ukranks_allows_repeats():
    # one dominant certain tuple below a long tail of unlikely ones wins
    # several positions at once
    rel = relation_from_probs([0.05, 0.05, 1.0, 0.01])
    ans = ukranks(condprob_pij(rel, 3), 3)
    assert ans.tuple_ids[:2] == ["t3", "t3"]


def test_global_topk_four_tuple(fig_rel):
    pij = condprob_pij(fig_rel, 2)
    ans = global_topk(pij, 2)
    assert dict(ans.results) == pytest.approx({"t2": 1.0, "t3": 0.5}, abs=1e-12)
    tkp = pij.tkp_by_id()
    rest = sorted((v for t, v in tkp.items() if t not in ("t2", "t3")), reverse=True)
    assert rest[0] == pytest.approx(0.3, abs=1e-12) and tkp["t1"] == rest[0]
    assert tkp["t4"] == pytest.approx(0.16, abs=1e-12)


def test_global_topk_certain():
    rel = relation_from_probs([1.0, 1.0, 1.0])
    ans = global_topk(condprob_pij(rel, 2), 2)
    assert ans.results == [("t1", 1.0), ("t2", 1.0)]


def test_ptk_thresholds(fig_rel):
    pij = condprob_pij(fig_rel, 2)
    assert ptk(pij, 2, 0.6).tuple_ids == ["t2"]
    assert ptk(pij, 2, 0.4).tuple_ids == ["t2", "t3"]
    assert set(ptk(pij, 2, 1e-12).tuple_ids) == {"t1", "t2", "t3", "t4"}
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(QueryError):
            ptk(pij, 2, bad)


def test_pk_topk(fig_rel):
    indep = XRelation.from_rows((f"s{t.tuple_id}", t.tuple_id, t.score, t.prob) for t in fig_rel)
    ans = pk_topk(condprob_pij(indep, 2), 2)
    want = oracle_tkp(indep, 2)
    best = sorted(want, key=lambda t: -want[t])[:2]
    assert ans.tuple_ids == best
    assert pk_topk(condprob_pij(relation_from_probs([1.0, 1.0]), 1), 1).results == [("t1", 1.0)]
    with pytest.raises(QueryError):
        pk_topk(condprob_pij(fig_rel, 2), 2)


def test_k_wider_than_matrix(fig_rel):
    with pytest.raises(QueryError):
        global_topk(condprob_pij(fig_rel, 2), 3)


def test_upper_bound_examples():
    assert upper_bound([0.075, 0.325]) == pytest.approx(0.4)
    assert upper_bound([1.0, 0.0, 0.0]) == 1.0


def test_upper_bound_is_tight():
    # next tuple certain and new: its top-k probability equals the bound
    rel = relation_from_probs([0.4, 0.7, 1.0, 0.5])
    k = 2
    scan = CondProbScanner(rel, k)
    scan.advance()
    scan.advance()
    bound = upper_bound(scan.r)
    assert oracle_tkp(rel, k)["t3"] == pytest.approx(bound, abs=1e-12)


def test_generator_stops_after_certain_prefix():
    rel = relation_from_probs([1.0, 1.0, 1.0, 0.5, 0.9, 0.3])
    ans = topk_generator(rel, 3)
    assert ans.scan_depth == 3
    assert ans.tuple_ids == ["t1", "t2", "t3"]


def test_generator_four_tuple(fig_rel):
    ans = topk_generator(fig_rel, 2)
    assert ans.tuple_ids == global_topk(condprob_pij(fig_rel, 2), 2).tuple_ids == ["t2", "t3"]
    assert ans.scan_depth <= 4


@pytest.mark.parametrize("seed", range(5))
def test_generator_matches_full_on_generated(seed):
    rel = generate(GenConfig(n_tuples=200, n_rules=20, seed=seed))
    k = 10
    full = global_topk(condprob_pij(rel, k), k)
    ans = topk_generator(rel, k)
    assert ans.tuple_ids == full.tuple_ids
    assert [p for _, p in ans.results] == pytest.approx([p for _, p in full.results], abs=1e-9)
    assert ans.scan_depth <= rel.n


@given(relations(max_n=40))
def test_bound_is_valid_and_monotone(rel):
    k = max(1, rel.n // 3)
    tkp = condprob_pij(rel, k).tkp()
    scan = CondProbScanner(rel, k)
    prev = math.inf
    while not scan.done:
        bound = upper_bound(scan.r)
        assert bound <= prev + 1e-12
        assert tkp[scan.position] <= bound + 1e-9
        prev = bound
        scan.advance()


@given(relations(max_n=40))
def test_early_stop_soundness(rel):
    k = max(1, rel.n // 3)
    full = global_topk(condprob_pij(rel, k), k)
    ans = topk_generator(rel, k)
    got = dict(ans.results)
    want = dict(full.results)
    # the generator may stop among tkp ties; compare values, and sets when untied
    assert sorted(got.values()) == pytest.approx(sorted(want.values()), abs=1e-9)
    tkp = condprob_pij(rel, k).tkp_by_id()
    for tid, v in got.items():
        assert tkp[tid] == pytest.approx(v, abs=1e-9)


@given(relations(max_n=40))
def test_ptk_scan_matches_full(rel):
    k = max(1, rel.n // 3)
    for th in (0.1, 0.5, 0.9):
        assert ptk_scan(rel, k, th).tuple_ids == ptk(condprob_pij(rel, k), k, th).tuple_ids


@given(relations())
def test_argmax_invariant_under_monotone_scores(rel):
    warped = XRelation.from_rows(
        (t.xtuple_id, t.tuple_id, 2.0 * t.score + 5.0, t.prob) for t in rel
    )
    k = max(1, rel.n // 2)
    assert ukranks(condprob_pij(rel, k), k).tuple_ids == ukranks(condprob_pij(warped, k), k).tuple_ids
    assert global_topk(condprob_pij(rel, k), k).tuple_ids == global_topk(condprob_pij(warped, k), k).tuple_ids


def test_heap_never_evicts_for_equal_tkp():
    # equal tkp everywhere: the earliest-scanned tuples are kept
    rel = XRelation.from_rows([("a", "a", 3, 1.0), ("b", "b", 2, 1.0), ("c", "c", 1, 1.0)])
    assert topk_generator(rel, 3).tuple_ids == ["a", "b", "c"]


def test_serialization(fig_rel):
    ans = ptk(condprob_pij(fig_rel, 2), 2, 0.4)
    lines = answer_to_csv(ans).splitlines()
    assert lines[0] == "rank,tuple_id,probability,scan_depth"
    assert lines[1].startswith("1,t2,")
    doc = json.loads(answer_to_json(ans))
    assert doc["semantics"] == "ptk" and doc["k"] == 2 and doc["threshold"] == 0.4
    assert [r["tuple_id"] for r in doc["results"]] == ["t2", "t3"]


def test_random_relations_thousand_soundness():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        rel = random_relation(rng, n)
        k = int(rng.integers(1, n + 1))
        full = global_topk(condprob_pij(rel, k), k)
        ans = topk_generator(rel, k)
        assert sorted(v for _, v in ans.results) == pytest.approx(
            sorted(v for _, v in full.results), abs=1e-9
        )
