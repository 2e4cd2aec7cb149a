"""Seeded instance generators and named fixtures."""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass

from .hypergraph import Hypergraph, HypergraphError, build
from .rng import stream

log = logging.getLogger(__name__)

FANO_LINES = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]


@dataclass(frozen=True)
class GenSpec:
    k: int
    n: int
    max_degree: int
    triangle_free: bool = False
    density: float = 1.0
    seed: int = 0
    max_attempts: int = 5000  # consecutive rejections before giving up
    method: str = "greedy"  # or "ap" (k=3 only, needs triangle_free)

    def __post_init__(self):
        if self.k < 2:
            raise HypergraphError("k must be >= 2")
        if self.max_degree < 1:
            raise HypergraphError("max_degree must be >= 1")
        if not 0.0 <= self.density <= 1.0:
            raise HypergraphError("density must lie in [0, 1]")
        if self.max_attempts < 1:
            raise HypergraphError("max_attempts must be >= 1")
        if self.method not in ("greedy", "ap"):
            raise HypergraphError(f"unknown generation method {self.method!r}")
        if self.method == "ap" and (self.k != 3 or not self.triangle_free):
            raise HypergraphError("method 'ap' builds triangle-free 3-graphs only")

    @property
    def degree_budget(self) -> int:
        return self.n * self.max_degree // self.k

    def to_dict(self):
        return asdict(self)


@dataclass
class GenResult:
    hypergraph: Hypergraph
    target_edges: int
    attempts: int
    shortfall: bool

    def summary(self):
        H = self.hypergraph
        return {
            "edges": H.m,
            "target_edges": self.target_edges,
            "attempts": self.attempts,
            "max_degree": H.max_degree,
            "shortfall": self.shortfall,
        }


def generate(spec: GenSpec) -> GenResult:
    """Random greedy packing of k-sets.

    A uniformly random k-set of vertices still below the degree cap is
    accepted iff none of its pairs already lies in an edge and, in
    triangle-free mode, no two of its vertices have a common neighbour (that
    is exactly the condition for the new edge to close a triangle).  Stops at
    the density target or after ``max_attempts`` consecutive rejections.
    """
    if spec.method == "ap":
        return _generate_ap(spec)
    k, n, cap = spec.k, spec.n, spec.max_degree
    if n < k:
        raise HypergraphError(f"need n >= k, got n={n}, k={k}")
    target = int(spec.density * spec.degree_budget)
    rng = stream(spec.seed, "gen", k, n, cap, int(spec.triangle_free))

    avail = list(range(n))
    pos = list(range(n))
    deg = [0] * n
    nbrs: list[set[int]] = [set() for _ in range(n)]
    edges: list[tuple[int, ...]] = []
    attempts = 0
    fails = 0
    batch = None
    bi = 0

    while len(edges) < target and fails < spec.max_attempts and len(avail) >= k:
        if batch is None or bi >= len(batch):
            batch = rng.random((4096, k))
            bi = 0
        row = batch[bi]
        bi += 1
        attempts += 1
        size = len(avail)
        cand = {avail[int(x * size)] for x in row}
        if len(cand) < k:
            fails += 1
            continue
        e = sorted(cand)
        ok = True
        for a in range(k):
            na = nbrs[e[a]]
            for b in range(a + 1, k):
                if e[b] in na or (spec.triangle_free and not na.isdisjoint(nbrs[e[b]])):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            fails += 1
            continue
        fails = 0
        edges.append(tuple(e))
        for v in e:
            nbrs[v].update(e)
            nbrs[v].discard(v)
            deg[v] += 1
            if deg[v] == cap:
                # swap-remove from the available list
                i = pos[v]
                last = avail[-1]
                avail[i] = last
                pos[last] = i
                avail.pop()

    if target > 0 and not edges:
        raise HypergraphError("parameters infeasible: no edge could be placed")
    shortfall = len(edges) < 0.5 * spec.density * spec.degree_budget
    if shortfall:
        log.warning("generator shortfall: %d edges, target %d", len(edges), target)
    return GenResult(build(k, n, edges), target, attempts, shortfall)


def _is_prime(x: int) -> bool:
    if x < 2:
        return False
    f = 2
    while f * f <= x:
        if x % f == 0:
            return False
        f += 1
    return True


def ap_free_set(size: int) -> list[int]:
    """The ``size`` smallest non-negative integers written with base-3 digits 0/1.

    No three of them form an arithmetic progression.
    """
    out = []
    for j in range(size):
        x, place = 0, 1
        while j:
            x += (j & 1) * place
            j >>= 1
            place *= 3
        out.append(x)
    return out


def _generate_ap(spec: GenSpec) -> GenResult:
    """Arithmetic triangle-free 3-graph with every degree equal to ``max_degree``.

    Vertices are three copies of Z_p; the edges are ``(x, x+d, x+2d)`` for
    every x and every difference d of a 3-AP-free set D (scaled by a random
    unit).  Two vertices of an edge fix (x, d), so the result is simple, and a
    triangle would force three differences of D into an arithmetic
    progression.  ``n`` is a lower bound: the output has ``3p`` vertices for
    the least prime ``p > 2 max D`` with ``3p >= n``.  With ``density < 1``
    a seeded random subset of the edges is kept.
    """
    D = ap_free_set(spec.max_degree)
    p = max(2 * D[-1] + 1, -(-spec.n // 3), 3)
    while not _is_prime(p):
        p += 1
    rng = stream(spec.seed, "gen-ap", spec.max_degree, p)
    unit = int(rng.integers(1, p))
    diffs = sorted({(unit * d) % p for d in D})
    perm = rng.permutation(3 * p)
    edges = []
    for x in range(p):
        for d in diffs:
            edges.append((int(perm[x]), int(perm[p + (x + d) % p]), int(perm[2 * p + (x + 2 * d) % p])))
    budget = 3 * p * spec.max_degree // 3
    target = int(spec.density * budget)
    if target < len(edges):
        keep = sorted(rng.choice(len(edges), size=target, replace=False).tolist())
        edges = [edges[j] for j in keep]
    if target > 0 and not edges:
        raise HypergraphError("parameters infeasible: no edge could be placed")
    return GenResult(build(3, 3 * p, edges), target, len(edges), False)


def gen_simple(spec: GenSpec) -> Hypergraph:
    if spec.triangle_free:
        spec = GenSpec(**{**spec.to_dict(), "triangle_free": False})
    return generate(spec).hypergraph


def gen_simple_triangle_free(spec: GenSpec) -> Hypergraph:
    if not spec.triangle_free:
        spec = GenSpec(**{**spec.to_dict(), "triangle_free": True})
    return generate(spec).hypergraph


# -- fixtures --------------------------------------------------------------


def fano() -> Hypergraph:
    return build(3, 7, FANO_LINES)


def single_edge(k: int = 3) -> Hypergraph:
    return build(k, k, [range(k)])


def loose_cycle(i: int = 3, k: int = 3) -> Hypergraph:
    """i edges, consecutive ones sharing exactly one vertex, closed up."""
    if i < 2:
        raise HypergraphError("loose cycle needs i >= 2")
    n = i * (k - 1)
    edges = [[(j * (k - 1) + t) % n for t in range(k)] for j in range(i)]
    return build(k, n, edges)


def sunflower(d: int = 3, k: int = 3) -> Hypergraph:
    """d edges through vertex 0 with pairwise disjoint petals."""
    edges = [[0] + [1 + j * (k - 1) + t for t in range(k - 1)] for j in range(d)]
    return build(k, 1 + d * (k - 1), edges)


_FIXTURES = {"fano": fano, "single_edge": single_edge, "loose_cycle": loose_cycle, "sunflower": sunflower}


def fixture(name: str, *args: int) -> Hypergraph:
    """Named fixture; arguments may also be given inline, e.g. ``"loose_cycle(3,3)"``."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\(([\d,\s]*)\))?\s*", name)
    if not m or m.group(1) not in _FIXTURES:
        raise HypergraphError(f"unknown fixture {name!r}")
    if m.group(2):
        args = tuple(int(x) for x in m.group(2).split(",") if x.strip()) + args
    return _FIXTURES[m.group(1)](*args)
