import json

import pytest

from hypernibble.generators import GenSpec, fano, gen_simple, gen_simple_triangle_free, loose_cycle
from hypernibble.hypergraph import NotSimpleError, build, induced
from hypernibble.partition import (Lemma1Config, Lemma2Config, check_partition, covered_pair_digraph,
                                   lemma1_bounds, lemma1_partition, lemma2_bounds, lemma2_partition,
                                   triangle_free_refine)
from oracles import brute_triangles


def test_lemma1_single_part_is_identity():
    H = fano()
    res = lemma1_partition(H, Lemma1Config(m=1))
    assert res.assignment == [0] * 7
    assert res.parts[0].max_degree == 3 and res.parts[0].triangles == 28
    assert check_partition(H, res)["consistent"]


def test_many_parts_leave_no_edge():
    H = loose_cycle(4, 3)
    res = lemma2_partition(H, Lemma2Config(ell=200, seed=1))
    assert res.certified
    assert all(p.max_degree == 0 for p in res.parts)
    assert check_partition(H, res)["within_bounds"]


def test_lemma1_relaxed_run_certifies():
    H = gen_simple(GenSpec(3, 500, 32, seed=1))
    res = lemma1_partition(H, Lemma1Config(m=2, seed=0))
    assert res.certified and res.rounds <= 50
    rep = check_partition(H, res)
    assert rep["consistent"] and rep["within_bounds"]


def test_uncertified_result_is_best_effort():
    H = gen_simple(GenSpec(3, 300, 20, seed=1))
    res = lemma1_partition(H, Lemma1Config(m=4, degree_factor=0.1, max_rounds=5, restart_after=2))
    assert not res.certified
    rep = check_partition(H, res)
    assert rep["consistent"] and not rep["within_bounds"]


def test_default_bounds():
    H = gen_simple(GenSpec(3, 200, 16, seed=1))
    b = lemma1_bounds(H, Lemma1Config())
    assert b.parts == 3  # ceil(16 ** 0.35)
    assert b.max_degree == pytest.approx(2 * 16 / 9)
    assert b.max_covered_pairs == pytest.approx(9 * 256 / 3 ** 5)
    b2 = lemma2_bounds(H, Lemma2Config())
    assert b2.max_covered_pairs == 200 * 9 - 1
    with pytest.raises(ValueError):
        lemma2_bounds(H, Lemma2Config(delta=0.6))


def test_lemma2_loose_triangle_split():
    H = loose_cycle(3, 3)
    for seed in range(20):
        res = lemma2_partition(H, Lemma2Config(ell=2, seed=seed))
        rep = check_partition(H, res)
        assert rep["consistent"]
        if res.certified:
            assert rep["within_bounds"]


def test_tampered_stats_are_flagged():
    H = gen_simple(GenSpec(3, 100, 6, seed=1))
    res = lemma1_partition(H, Lemma1Config(m=2))
    res.parts[0].triangles += 1
    rep = check_partition(H, res)
    assert not rep["consistent"] and "triangles" in rep["mismatches"][0]


def test_empty_hypergraph():
    H = build(3, 0, [])
    res = lemma1_partition(H, Lemma1Config(m=2))
    assert res.certified and check_partition(H, res)["consistent"]


def test_non_simple_rejected():
    H = build(3, 4, [[0, 1, 2], [0, 1, 3]])
    with pytest.raises(NotSimpleError):
        lemma1_partition(H)
    with pytest.raises(NotSimpleError):
        triangle_free_refine(H)


def test_jsonl_records():
    H = fano()
    res = lemma1_partition(H, Lemma1Config(m=2, seed=3))
    recs = [json.loads(x) for x in res.to_jsonl().splitlines()]
    assert [r["part"] for r in recs] == [0, 1]
    assert sorted(v for r in recs for v in r["vertices"]) == list(range(7))


@pytest.mark.parametrize("H", [fano(), loose_cycle(3, 3), gen_simple(GenSpec(3, 60, 6, seed=2))],
                         ids=["fano", "triangle", "random"])
def test_refine_classes_are_triangle_free(H):
    ref = triangle_free_refine(H)
    assert sorted(v for c in ref.classes for v in c) == list(range(H.n))
    for cls in ref.classes:
        sub, _ = induced(H, cls)
        assert brute_triangles(sub) == []
    assert len(ref.classes) <= 2 * ref.max_out_degree + 1
    assert len(ref.classes) <= ref.degeneracy + 1


def test_refine_triangle_free_and_edgeless():
    H = gen_simple_triangle_free(GenSpec(3, 100, 5, seed=1))
    assert len(triangle_free_refine(H).classes) == 1
    assert covered_pair_digraph(H).number_of_edges() == 0
    assert len(triangle_free_refine(build(3, 5, [])).classes) == 1


def test_refine_splits_loose_triangle():
    assert len(triangle_free_refine(loose_cycle(3, 3)).classes) >= 2


def test_partition_deterministic():
    H = gen_simple(GenSpec(3, 200, 10, seed=3))
    a = lemma1_partition(H, Lemma1Config(seed=7))
    b = lemma1_partition(H, Lemma1Config(seed=7))
    assert a.assignment == b.assignment
