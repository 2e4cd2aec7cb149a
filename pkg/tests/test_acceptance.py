"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line
in the terminal summary (see conftest.py).

The raw sweep CSV of criterion 9 is written to ``$ACCEPTANCE_ARTIFACTS``
(default ``acceptance_artifacts/`` next to this directory).
"""

import functools
import itertools
import math
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from engine_fixtures import case_a_fixture, case_b_fixture, survival_fixtures
from hypernibble.cli import main
from hypernibble.engine import init_state, params_from, q_u, run_round, simulate_round
from hypernibble.finisher import FinisherConfig, ResampleCapExceeded, lll_palette, moser_tardos_color
from hypernibble.generators import GenSpec, fano, generate, loose_cycle, single_edge, sunflower
from hypernibble.hypergraph import (build, covered_pairs, find_i_cycles, find_triangles, girth, induced,
                                    verify_coloring)
from hypernibble.partition import (Lemma1Config, Lemma2Config, check_partition, lemma1_partition,
                                   lemma2_partition, triangle_free_refine)
from hypernibble.pipeline import SWEEP_COLUMNS, RunConfig, color_instance, csv_text, sweep
from hypernibble.probes import PolySystem, covered_pair_polysystem, exact_chromatic, kimvu_stats
from hypernibble.telemetry import naive_snapshot
from oracles import brute_expectation, brute_girth, brute_i_cycles, brute_m1, brute_partial_derivative, brute_triangles

SEEDS = range(20)
ARTIFACTS = Path(os.environ.get("ACCEPTANCE_ARTIFACTS", Path(__file__).resolve().parent.parent / "acceptance_artifacts"))


@functools.lru_cache(maxsize=None)
def suite_instance(n, delta, seed):
    return generate(GenSpec(3, n, delta, triangle_free=True, seed=seed)).hypergraph


# -- 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1, "soundness suite: direct-mode colourings are proper, each run < 60 s")
def test_soundness_suite(record_property):
    worst, runs = 0.0, 0
    for n, delta, seed in itertools.product((200, 1000), (8, 16, 32, 64), SEEDS):
        H = suite_instance(n, delta, seed)
        start = time.perf_counter()
        res = color_instance(H, RunConfig(mode="direct", seed=seed))
        elapsed = time.perf_counter() - start
        worst = max(worst, elapsed)
        runs += 1
        assert verify_coloring(H, res.colors).monochromatic_edges == [], (n, delta, seed)
        assert elapsed < 60, (n, delta, seed, elapsed)
    record_property("detail", f"{runs} runs, slowest {worst:.2f} s")


# -- 2 ---------------------------------------------------------------------------


def _random_small(rng):
    n = int(rng.integers(3, 10))
    m = int(rng.integers(0, 7))
    triples = list(itertools.combinations(range(n), 3))
    pick = rng.choice(len(triples), size=min(m, len(triples)), replace=False)
    edges = [triples[i] for i in pick]
    if rng.random() < 0.5:  # bias half the corpus towards simple instances
        keep = []
        for e in edges:
            if all(len(set(e) & set(f)) <= 1 for f in keep):
                keep.append(e)
        edges = keep
    return build(3, n, edges)


@pytest.mark.criterion(2, "structure oracles: i-cycles, girth, triangles match exhaustive enumeration")
def test_structure_oracles(record_property):
    rng = np.random.default_rng(2024)
    corpus = [_random_small(rng) for _ in range(1000)]
    corpus += [fano(), single_edge(3), loose_cycle(3, 3), loose_cycle(4, 3), loose_cycle(5, 3),
               sunflower(3, 3), sunflower(4, 3)]
    simple = 0
    for H in corpus:
        for i in range(2, max(H.m, 2) + 1):
            assert find_i_cycles(H, i) == brute_i_cycles(H, i), (H.edges, i)
        assert girth(H, 7) == brute_girth(H, 7), H.edges
        if H.is_simple:
            simple += 1
            assert find_triangles(H) == brute_triangles(H), H.edges
    record_property("detail", f"{len(corpus)} instances, {simple} simple")


# -- 3 ---------------------------------------------------------------------------

T = 100_000


@pytest.mark.criterion(3, "survival probability q_u(c) matches Monte Carlo within 4 sigma")
@pytest.mark.parametrize("idx", range(5))
def test_survival_probability(idx, record_property):
    name, state, u, c = survival_fixtures()[idx]
    want = q_u(state, u, c)
    kept = sum(int((~L[:, u, c]).sum()) for L, _ in simulate_round(state, T, seed=100 + idx))
    emp = kept / T
    tol = 4 * math.sqrt(want * (1 - want) / T)
    record_property("detail", f"{name}: |{emp:.5f} - {want:.5f}| <= {tol:.5f}")
    assert abs(emp - want) <= tol


# -- 4 ---------------------------------------------------------------------------


@pytest.mark.criterion(4, "martingale: mean of p'_u(c) equals p_u(c) within 4 standard errors")
@pytest.mark.parametrize("case", ["A", "B"])
def test_martingale(case, record_property):
    state, u, c = case_a_fixture() if case == "A" else case_b_fixture()
    ratio = state.p[u, c] / q_u(state, u, c)
    assert (ratio < state.params.p_hat) == (case == "A")
    vals = np.concatenate([P[:, u, c] for _, P in simulate_round(state, T, seed=7)])
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(T)
    record_property("detail", f"case {case}: mean {mean:.5f} vs p {state.p[u, c]:.5f}, se {se:.5f}")
    assert abs(mean - state.p[u, c]) <= 4 * se


# -- 5 ---------------------------------------------------------------------------


def _kimvu_corpus():
    out = [PolySystem.uniform([{0, 1}], Fraction(1, 2))]
    tri = build(3, 6, [[0, 1, 3], [0, 2, 4], [1, 2, 5]])
    for m in (2, 3):
        out.append(covered_pair_polysystem(tri, 0, m))
        out += [covered_pair_polysystem(fano(), v, m) for v in range(7)]
    rng = np.random.default_rng(5)
    while len(out) < 40:
        W = int(rng.integers(2, 11))
        fam = []
        for _ in range(int(rng.integers(1, 8))):
            size = int(rng.integers(1, 4))
            fam.append(frozenset(rng.choice(W, size=min(size, W), replace=False).tolist()))
        probs = {w: Fraction(int(rng.integers(0, 6)), 5) for w in range(W)}
        out.append(PolySystem(tuple(range(W)), tuple(fam), probs))
    # a larger covered-pair system (|W| = 16 is the enumeration limit)
    H = build(3, 17, [[0, 1, 2], [0, 3, 4], [0, 5, 6], [1, 3, 7], [2, 5, 8], [4, 6, 9],
                      [1, 10, 11], [3, 12, 13], [2, 14, 15], [5, 16, 14]])
    out.append(covered_pair_polysystem(H, 0, 2))
    return out


@pytest.mark.criterion(5, "Kim-Vu statistics equal outcome enumeration; covered-pair E(Z) = r/m^(3k-4)")
def test_kimvu(record_property):
    checked = 0
    for s in _kimvu_corpus():
        assert len(s.ground) <= 16
        st = kimvu_stats(s, [f for f in s.family][:3])
        assert st.expectation == brute_expectation(s)
        for A, val in st.m_table.items():
            assert val == brute_partial_derivative(s, A)
        if len(s.ground) <= 10:
            assert st.m1 == brute_m1(s)
        checked += 1
    for H in (fano(), build(3, 6, [[0, 1, 3], [0, 2, 4], [1, 2, 5]])):
        for v in range(H.n):
            for m in (2, 3, 5):
                s = covered_pair_polysystem(H, v, m)
                r = len(covered_pairs(H, v))
                assert len(s.family) == r
                assert kimvu_stats(s).expectation == Fraction(r, m ** (3 * H.k - 4))
    record_property("detail", f"{checked} systems")


# -- 6 ---------------------------------------------------------------------------


@pytest.mark.criterion(6, "finisher: LLL palette succeeds within cap on the suite; Fano needs 3 colours")
def test_finisher(record_property):
    worst = 0
    count = 0
    instances = [((n, d, s), suite_instance(n, d, s))
                 for n, d, s in itertools.product((200, 1000), (8, 16, 32, 64), SEEDS)]
    for s in SEEDS:
        spec = GenSpec(3, 1000, 128, triangle_free=True, method="ap", seed=s)
        instances.append(((spec.n, 128, s), generate(spec).hypergraph))
    for key, H in instances:
        cfg = FinisherConfig(palette=lll_palette(H.max_degree, H.k), seed=key[2])
        res = moser_tardos_color(H, cfg)
        assert verify_coloring(H, res.coloring).proper, key
        worst = max(worst, res.resamples / max(H.m, 1))
        count += 1
    with pytest.raises(ResampleCapExceeded):
        moser_tardos_color(fano(), FinisherConfig(palette=2))
    assert exact_chromatic(fano()) == 3
    record_property("detail", f"{count} instances, worst resamples/|E| = {worst:.3f}")


# -- 7 ---------------------------------------------------------------------------


def _no_triangles(sub):
    return (brute_triangles(sub) if sub.m <= 120 else find_triangles(sub)) == []


@pytest.mark.criterion(7, "partitions pass check_partition when certified; refinement classes triangle-free")
def test_partition_certification(record_property):
    certified = total = classes = 0
    jobs = []
    for s in range(5):
        H = generate(GenSpec(3, 500, 32, seed=s)).hypergraph
        jobs.append((H, Lemma1Config(m=2, seed=s)))
        jobs.append((H, Lemma1Config(seed=s)))
    for s in range(3):
        jobs.append((generate(GenSpec(3, 200, 12, seed=10 + s)).hypergraph, Lemma1Config(m=3, seed=s)))
    jobs.append((fano(), Lemma1Config(seed=1)))
    for H, cfg in jobs:
        P1 = lemma1_partition(H, cfg)
        rep = check_partition(H, P1)
        assert rep["consistent"], rep["mismatches"]
        total += 1
        if P1.certified:
            certified += 1
            assert rep["within_bounds"], rep["violations"]
        for ps in P1.parts:
            Hi, _ = induced(H, ps.vertices)
            P2 = lemma2_partition(Hi, Lemma2Config(seed=ps.part))
            rep2 = check_partition(Hi, P2)
            assert rep2["consistent"], rep2["mismatches"]
            total += 1
            if P2.certified:
                certified += 1
                assert rep2["within_bounds"], rep2["violations"]
            for ps2 in P2.parts:
                L, _ = induced(Hi, ps2.vertices)
                ref = triangle_free_refine(L)
                assert len(ref.classes) <= 2 * ref.max_out_degree + 1
                for cls in ref.classes:
                    assert _no_triangles(induced(L, cls)[0])
                    classes += 1
    record_property("detail", f"{certified}/{total} partitions certified, {classes} classes scanned")


# -- 8 ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "telemetry snapshot equals naive recomputation on sampled rounds")
def test_telemetry_oracle(record_property):
    rng = np.random.default_rng(8)
    compared = 0
    for r in range(10):
        k = 3 if r < 7 else 4
        H = generate(GenSpec(k, 150, 8, triangle_free=True, seed=r)).hypergraph
        prm = params_from(k, H.max_degree, 0.5, seed=r, handoff_exponent=None)
        picks = set(rng.choice(np.arange(1, prm.t0 + 1), size=min(10, prm.t0), replace=False).tolist())
        st = init_state(H, prm)
        while st.t < prm.t0:
            st, snap = run_round(st)
            if st.t in picks:
                bad = snap.compare(naive_snapshot(st), rtol=1e-9)
                assert bad == [], (r, st.t, bad)
                compared += 1
    record_property("detail", f"{compared} rounds compared")


# -- 9 ---------------------------------------------------------------------------


@pytest.mark.criterion(9, "trend: median colours/(D/ln D)^(1/2) at D=128 <= at D=16")
def test_trend(record_property):
    rows, medians = sweep(RunConfig(grid=[16, 32, 64, 128], seeds=10))
    ARTIFACTS.mkdir(parents=True, exist_ok=True)
    (ARTIFACTS / "sweep.csv").write_text(csv_text(rows, SWEEP_COLUMNS))
    (ARTIFACTS / "sweep_medians.csv").write_text(
        csv_text(medians, ["delta", "runs", "median_colors", "median_ratio"]))
    assert len(rows) == 40 and all(not r["error"] and r["proper"] for r in rows)
    ratio = {m["delta"]: m["median_ratio"] for m in medians}
    record_property("detail", "median ratio " + ", ".join(f"D={d}: {ratio[d]:.3f}" for d in sorted(ratio))
                    + f"; csv at {ARTIFACTS / 'sweep.csv'}")
    assert ratio[128] <= ratio[16]


# -- 10 --------------------------------------------------------------------------


def _run_twice(tmp_path, args, tag):
    dirs = []
    for i in range(2):
        out = tmp_path / f"{tag}{i}"
        assert main([*args, "--out", str(out)]) == 0
        dirs.append(out)
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == sorted(p.name for p in dirs[1].iterdir())
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), (tag, name)
    return names


@pytest.mark.criterion(10, "determinism: repeated runs give byte-identical files")
def test_determinism(tmp_path, capsys, record_property):
    files = 0
    files += len(_run_twice(tmp_path, ["gen", "--k", "3", "--n", "300", "--max-degree", "8",
                                       "--triangle-free", "--seed", "5"], "gen"))
    got = _run_twice(tmp_path, ["color", "--n", "300", "--k", "3", "--max-degree", "8", "--triangle-free",
                                "--seed", "5"], "direct")
    assert {"instance.txt", "coloring.jsonl", "telemetry.csv", "summary.json"} <= set(got)
    files += len(got)
    files += len(_run_twice(tmp_path, ["color", "--fixture", "fano", "--seed", "2"], "full"))
    files += len(_run_twice(tmp_path, ["color", "--n", "200", "--k", "3", "--max-degree", "6",
                                       "--mode", "full", "--seed", "1"], "fullgen"))
    files += len(_run_twice(tmp_path, ["sweep", "--grid", "8,16", "--seeds", "2", "--n", "100"], "sweep"))
    files += len(_run_twice(tmp_path, ["probe", "--fixture", "fano", "--trials", "3000"], "probe"))
    capsys.readouterr()
    record_property("detail", f"{files} files compared")
