"""Random vertex partitions certified against per-part degree and
covered-pair bounds, and the triangle-free refinement of a part.

The existence arguments behind these partitions are replaced by
detect-and-resample loops in the style of Moser and Tardos: draw a random part
for every vertex, find the vertices whose bound fails, redraw the parts of the
vertices those failures depend on, repeat.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np

from .hypergraph import Hypergraph, covered_pairs, find_triangles, induced, _iter_bits
from .rng import stream


@dataclass
class Lemma1Config:
    m: int | None = None  # default ceil(D^(2/(3k-4) - eps))
    eps: float = 0.05
    degree_factor: float = 2.0
    covered_pair_factor: float | None = None  # default k^2
    max_rounds: int = 50
    restart_after: int = 10
    seed: int = 0


@dataclass
class Lemma2Config:
    ell: int | None = None  # default ceil(d^(1/(k-1) - delta))
    delta: float = 0.1
    degree_factor: float = 2.0
    covered_pair_cap: int | None = None  # violation at >= cap; default 200 k^2
    max_rounds: int = 50
    restart_after: int = 10
    seed: int = 0


@dataclass
class Bounds:
    parts: int
    max_degree: float  # inclusive
    max_covered_pairs: float  # inclusive


@dataclass
class PartStats:
    part: int
    vertices: list[int]
    max_degree: int
    max_covered_pairs: int
    triangles: int


@dataclass
class PartitionResult:
    assignment: list[int]
    parts: list[PartStats]
    bounds: Bounds
    rounds: int
    restarts: int
    certified: bool

    def to_jsonl(self) -> str:
        lines = []
        for ps in self.parts:
            rec = asdict(ps)
            lines.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")


def lemma1_bounds(H: Hypergraph, cfg: Lemma1Config) -> Bounds:
    k, D = H.k, max(H.max_degree, 1)
    m = cfg.m if cfg.m is not None else math.ceil(D ** (2 / (3 * k - 4) - cfg.eps))
    m = max(1, m)
    cpf = cfg.covered_pair_factor if cfg.covered_pair_factor is not None else k * k
    return Bounds(m, cfg.degree_factor * D / m ** (k - 1), cpf * D * D / m ** (3 * k - 4))


def lemma2_bounds(L: Hypergraph, cfg: Lemma2Config) -> Bounds:
    k, d = L.k, max(L.max_degree, 1)
    if not 0 < cfg.delta < 1 / (k - 1):
        raise ValueError(f"delta must lie in (0, 1/(k-1)), got {cfg.delta}")
    ell = cfg.ell if cfg.ell is not None else math.ceil(d ** (1 / (k - 1) - cfg.delta))
    ell = max(1, ell)
    cap = cfg.covered_pair_cap if cfg.covered_pair_cap is not None else 200 * k * k
    return Bounds(ell, cfg.degree_factor * d / ell ** (k - 1), cap - 1)


def _part_profile(H: Hypergraph, assign: np.ndarray):
    """In-part degree and covered-pair count of every vertex."""
    E = np.asarray(H.edges, dtype=np.int64).reshape(-1, H.k)
    inside = (assign[E] == assign[E[:, :1]]).all(axis=1) if len(E) else np.zeros(0, bool)
    deg = np.zeros(H.n, dtype=np.int64)
    if len(E):
        np.add.at(deg, E[inside].ravel(), 1)
    bits = [0] * H.n
    kept = [H.edges[i] for i in np.flatnonzero(inside)]
    for e in kept:
        mask = 0
        for u in e:
            mask |= 1 << u
        for u in e:
            bits[u] |= mask & ~(1 << u)
    cp = np.zeros(H.n, dtype=np.int64)
    for g in kept:
        gmask = 0
        for u in g:
            gmask |= 1 << u
        for x, y in itertools.combinations(g, 2):
            for v in _iter_bits(bits[x] & bits[y] & ~gmask):
                cp[v] += 1
    return deg, cp


def _dependency_sets(H: Hypergraph):
    """Vertices each vertex's degree event and covered-pair event depend on."""
    nb = H._neighbors
    deg_vars = [frozenset(nb[v]) | {v} for v in range(H.n)]
    cp_vars = []
    for v in range(H.n):
        s = set(deg_vars[v])
        for x, y, w in covered_pairs(H, v).pairs:
            s.update(H.edges[w])
        cp_vars.append(frozenset(s))
    return deg_vars, cp_vars


def _resample_partition(H: Hypergraph, bounds: Bounds, max_rounds: int, restart_after: int,
                        seed: int, label: str) -> PartitionResult:
    H.require_simple()
    parts = bounds.parts
    n = H.n
    assign = stream(seed, label, "init").integers(parts, size=n)
    deg_vars = cp_vars = None
    best = None
    stale = 0
    restarts = 0
    rounds = 0
    while True:
        deg, cp = _part_profile(H, assign)
        bad_deg = np.flatnonzero(deg > bounds.max_degree + 1e-9)
        bad_cp = np.flatnonzero(cp > bounds.max_covered_pairs + 1e-9)
        score = len(bad_deg) + len(bad_cp)
        if best is None or score < best[0]:
            best = (score, assign.copy())
            stale = 0
        else:
            stale += 1
        if score == 0 or rounds >= max_rounds:
            break
        rounds += 1
        rng = stream(seed, label, "round", rounds)
        if stale >= restart_after:
            assign = rng.integers(parts, size=n)
            restarts += 1
            stale = 0
            continue
        if deg_vars is None:
            deg_vars, cp_vars = _dependency_sets(H)
        redo = set()
        for v in bad_deg:
            redo |= deg_vars[v]
        for v in bad_cp:
            redo |= cp_vars[v]
        idx = np.array(sorted(redo), dtype=np.int64)
        assign = assign.copy()
        assign[idx] = rng.integers(parts, size=len(idx))
    score, assign = best
    return _result(H, assign, bounds, rounds, restarts, score == 0)


def _result(H, assign, bounds, rounds, restarts, certified) -> PartitionResult:
    stats = []
    for part in range(bounds.parts):
        verts = np.flatnonzero(assign == part).tolist()
        sub, _ = induced(H, verts)
        stats.append(_stats_of(sub, part, verts))
    return PartitionResult([int(x) for x in assign], stats, bounds, rounds, restarts, bool(certified))


def _stats_of(sub: Hypergraph, part: int, verts: list[int]) -> PartStats:
    from .hypergraph import covered_pair_counts

    cps = covered_pair_counts(sub) if sub.m else [0] * sub.n
    return PartStats(part, verts, sub.max_degree, max(cps, default=0), len(find_triangles(sub)) if sub.m else 0)


def lemma1_partition(H: Hypergraph, cfg: Lemma1Config | None = None) -> PartitionResult:
    """Partition so each part has small degree and few covered pairs per vertex."""
    cfg = cfg or Lemma1Config()
    bounds = lemma1_bounds(H, cfg)
    return _resample_partition(H, bounds, cfg.max_rounds, cfg.restart_after, cfg.seed, "lemma1")


def lemma2_partition(L: Hypergraph, cfg: Lemma2Config | None = None) -> PartitionResult:
    """Partition so each part has degree <= factor*d/ell^(k-1) and every
    vertex sees fewer than the covered-pair cap."""
    cfg = cfg or Lemma2Config()
    bounds = lemma2_bounds(L, cfg)
    return _resample_partition(L, bounds, cfg.max_rounds, cfg.restart_after, cfg.seed, "lemma2")


# -- triangle-free refinement -------------------------------------------------


@dataclass
class RefineResult:
    classes: list[list[int]]
    max_out_degree: int
    degeneracy: int
    arcs: int = field(default=0)


def covered_pair_digraph(L: Hypergraph) -> nx.DiGraph:
    """Arc v -> x and v -> y for every covered pair {x, y} at v."""
    L.require_simple()
    D = nx.DiGraph()
    D.add_nodes_from(range(L.n))
    for v in range(L.n):
        for x, y, _ in covered_pairs(L, v).pairs:
            D.add_edge(v, x)
            D.add_edge(v, y)
    return D


def triangle_free_refine(L: Hypergraph) -> RefineResult:
    """Split the vertices into classes that each induce a triangle-free graph.

    Colours the underlying graph of the covered-pair digraph greedily in
    smallest-last order; a triangle inside one class would put a vertex and
    a member of one of its covered pairs into the same class.
    """
    D = covered_pair_digraph(L)
    G = nx.Graph()
    G.add_nodes_from(range(L.n))
    G.add_edges_from(sorted(tuple(sorted(a)) for a in D.edges()))
    colouring = nx.greedy_color(G, strategy="smallest_last") if L.n else {}
    ncls = max(colouring.values(), default=-1) + 1
    classes = [[] for _ in range(ncls)]
    for v in range(L.n):
        classes[colouring[v]].append(v)
    max_out = max((d for _, d in D.out_degree()), default=0)
    degeneracy = max(nx.core_number(G).values(), default=0) if L.n else 0
    for cls in classes:
        sub, _ = induced(L, cls)
        if sub.m and find_triangles(sub, limit=1):
            raise AssertionError("refinement class contains a triangle")
    if ncls > 2 * max_out + 1:
        raise AssertionError(f"{ncls} classes exceed 2*{max_out}+1")
    return RefineResult(classes, max_out, degeneracy, D.number_of_edges())


# -- certification -----------------------------------------------------------


def check_partition(H: Hypergraph, result: PartitionResult, bounds: Bounds | None = None) -> dict:
    """Recompute every part statistic from scratch and compare.

    Uses the per-vertex covered-pair query (not the edge-first counter the
    partitioner uses) so the two paths are independent.
    """
    bounds = bounds or result.bounds
    mismatches, violations = [], []
    seen = sorted(v for ps in result.parts for v in ps.vertices)
    if seen != list(range(H.n)):
        mismatches.append("parts do not form a partition of V")
    for ps in result.parts:
        if any(result.assignment[v] != ps.part for v in ps.vertices):
            mismatches.append(f"part {ps.part}: assignment disagrees with vertex list")
        sub, _ = induced(H, ps.vertices)
        max_deg = max((len(x) for x in sub.incidence), default=0)
        max_cp = max((len(covered_pairs(sub, v)) for v in range(sub.n)), default=0)
        tri = len(find_triangles(sub))
        for name, mine, theirs in (("max_degree", max_deg, ps.max_degree),
                                   ("max_covered_pairs", max_cp, ps.max_covered_pairs),
                                   ("triangles", tri, ps.triangles)):
            if mine != theirs:
                mismatches.append(f"part {ps.part}: {name} reported {theirs}, recomputed {mine}")
        if max_deg > bounds.max_degree + 1e-9:
            violations.append(f"part {ps.part}: degree {max_deg} > {bounds.max_degree:g}")
        if max_cp > bounds.max_covered_pairs + 1e-9:
            violations.append(f"part {ps.part}: {max_cp} covered pairs > {bounds.max_covered_pairs:g}")
    return {
        "consistent": not mismatches,
        "within_bounds": not violations,
        "certified_ok": (not result.certified) or not violations,
        "mismatches": mismatches,
        "violations": violations,
    }
