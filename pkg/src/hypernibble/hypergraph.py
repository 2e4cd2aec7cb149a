"""Immutable k-uniform hypergraphs and the structural queries the colouring
pipeline relies on (simplicity, cycles, triangles, covered pairs).

Vertices are the integers ``0..n-1``.  Edges are stored as sorted tuples in
lexicographic order, so edge ids and every iteration order derived from them
are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

UNCOLORED = -1


class HypergraphError(ValueError):
    """Malformed input or a query whose precondition does not hold."""


class NotSimpleError(HypergraphError):
    pass


class Hypergraph:
    __slots__ = ("k", "n", "edges", "incidence", "__dict__")

    def __init__(self, k: int, n: int, edges: Sequence[tuple[int, ...]]):
        # Use build(); this constructor trusts its input.
        self.k = k
        self.n = n
        self.edges: tuple[tuple[int, ...], ...] = tuple(edges)
        inc: list[list[int]] = [[] for _ in range(n)]
        for eid, e in enumerate(self.edges):
            for v in e:
                inc[v].append(eid)
        self.incidence: tuple[tuple[int, ...], ...] = tuple(tuple(x) for x in inc)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.k, self.n, self.edges) == (other.k, other.n, other.edges)

    def __hash__(self):
        return hash((self.k, self.n, self.edges))

    def __repr__(self):
        return f"Hypergraph(k={self.k}, n={self.n}, m={self.m})"

    # -- cached indices -------------------------------------------------

    @cached_property
    def pair_index(self) -> dict[tuple[int, int], int]:
        """Map each co-occurring vertex pair to the least edge id containing it."""
        idx: dict[tuple[int, int], int] = {}
        for eid, e in enumerate(self.edges):
            for pair in itertools.combinations(e, 2):
                idx.setdefault(pair, eid)
        return idx

    @cached_property
    def is_simple(self) -> bool:
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            for pair in itertools.combinations(e, 2):
                if pair in seen:
                    return False
                seen.add(pair)
        return True

    @cached_property
    def _neighbors(self) -> tuple[frozenset[int], ...]:
        out = []
        for v in range(self.n):
            s: set[int] = set()
            for eid in self.incidence[v]:
                s.update(self.edges[eid])
            s.discard(v)
            out.append(frozenset(s))
        return tuple(out)

    @cached_property
    def _neighbor_bits(self) -> tuple[int, ...]:
        """Neighbourhoods as Python-int bitsets (bit u set iff u in N(v))."""
        import numpy as np

        out: list[int] = []
        pairs = np.array([pr for e in self.edges for pr in itertools.permutations(e, 2)],
                         dtype=np.int64).reshape(-1, 2)
        if len(pairs):
            pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        starts = np.searchsorted(pairs[:, 0], np.arange(self.n + 1)) if len(pairs) else np.zeros(self.n + 1, int)
        nbytes = (self.n + 7) // 8
        for v in range(self.n):
            row = np.zeros(nbytes * 8, dtype=bool)
            row[pairs[starts[v]:starts[v + 1], 1]] = True
            out.append(int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little"))
        return tuple(out)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(x) for x in self.incidence)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    def require_simple(self):
        if not self.is_simple:
            raise NotSimpleError("operation requires a simple hypergraph")


def build(k: int, n: int, edge_list: Iterable[Iterable[int]]) -> Hypergraph:
    """Validate and canonicalise an edge list.

    Raises HypergraphError on a wrong-arity edge, an out-of-range vertex or a
    duplicated edge.
    """
    if k < 2:
        raise HypergraphError(f"uniformity k must be >= 2, got {k}")
    if n < 0:
        raise HypergraphError(f"vertex count must be >= 0, got {n}")
    edges = []
    for raw in edge_list:
        e = tuple(sorted(int(v) for v in raw))
        if len(e) != k or len(set(e)) != k:
            raise HypergraphError(f"edge {list(raw)} is not a {k}-set")
        if e[0] < 0 or e[-1] >= n:
            raise HypergraphError(f"edge {e} has a vertex outside [0, {n})")
        edges.append(e)
    edges.sort()
    for a, b in zip(edges, edges[1:]):
        if a == b:
            raise HypergraphError(f"duplicate edge {a}")
    return Hypergraph(k, n, edges)


def _check_vertex(H: Hypergraph, v: int):
    if not 0 <= v < H.n:
        raise HypergraphError(f"vertex {v} out of range [0, {H.n})")


def degree(H: Hypergraph, v: int) -> int:
    _check_vertex(H, v)
    return len(H.incidence[v])


def neighborhood(H: Hypergraph, v: int) -> frozenset[int]:
    _check_vertex(H, v)
    return H._neighbors[v]


def is_simple(H: Hypergraph) -> bool:
    return H.is_simple


# -- cycles ----------------------------------------------------------------


def _span(H: Hypergraph, eids: Iterable[int]) -> int:
    s: set[int] = set()
    for e in eids:
        s.update(H.edges[e])
    return len(s)


def _edge_adjacency(H: Hypergraph) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(H.m)]
    for inc in H.incidence:
        for a, b in itertools.combinations(inc, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _connected_families(H: Hypergraph, size: int, adj: list[set[int]]):
    """Yield every connected edge set of exactly ``size`` edges once.

    Edges are connected when they share a vertex.  Each set is grown from its
    least edge id (ESU-style extension), so no set is produced twice.
    """
    def extend(sub, ext, root, border):
        if len(sub) == size:
            yield tuple(sorted(sub))
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new_ext = set(ext)
            for x in adj[w]:
                if x > root and x not in sub and x not in border:
                    new_ext.add(x)
            yield from extend(sub | {w}, new_ext, root, border | adj[w])

    for root in range(H.m):
        ext = {x for x in adj[root] if x > root}
        yield from extend(frozenset([root]), ext, root, adj[root] | {root})


def find_i_cycles(H: Hypergraph, i: int, limit: int | None = None) -> list[tuple[int, ...]]:
    """All sets of ``i`` distinct edges spanning at most ``i*(k-1)`` vertices.

    The count ``i*k - span`` (the excess) is additive over connected
    components, so a disconnected cycle is assembled from vertex-disjoint
    connected families whose excesses sum to at least ``i``.  Exponential in
    ``i``; meant for ``i <= 4``.
    """
    if i < 2:
        raise HypergraphError("cycle length i must be >= 2")
    k = H.k
    if i == 2:
        # two edges span <= 2k-2 vertices iff they share >= 2 vertices
        pairs: set[tuple[int, int]] = set()
        for v_pair_edges in _pair_buckets(H).values():
            for a, b in itertools.combinations(v_pair_edges, 2):
                pairs.add((a, b))
        out = sorted(pairs)
        return out[:limit] if limit is not None else out

    adj = _edge_adjacency(H)
    comps: dict[int, list[tuple[tuple[int, ...], int, frozenset[int]]]] = {}
    for s in range(1, i + 1):
        fams = []
        for fam in _connected_families(H, s, adj):
            verts = frozenset(v for e in fam for v in H.edges[e])
            fams.append((fam, s * k - len(verts), verts))
        comps[s] = fams
    # best_total[r]: largest surplus (excess - size) any r further edges can add
    best = {s: max((x - s for _, x, _ in comps[s]), default=None) for s in comps}
    best_total = [0] + [None] * i
    for r in range(1, i + 1):
        cands = [best[s] + best_total[r - s] for s in range(1, r + 1)
                 if best[s] is not None and best_total[r - s] is not None]
        best_total[r] = max(cands, default=None)

    found: set[tuple[int, ...]] = set()

    def combine(remaining, surplus, used_verts, min_edge, chosen):
        if remaining == 0:
            if surplus >= 0:
                found.add(tuple(sorted(chosen)))
            return
        if best_total[remaining] is None or surplus + best_total[remaining] < 0:
            return
        for s in range(1, remaining + 1):
            for fam, exc, verts in comps[s]:
                if fam[0] <= min_edge or verts & used_verts:
                    continue
                combine(remaining - s, surplus + exc - s, used_verts | verts, fam[0], chosen + fam)

    for fam, exc, verts in comps[i]:
        if exc >= i:
            found.add(fam)
    # disconnected families: first component carries the least edge id
    for s in range(1, i):
        for fam, exc, verts in comps[s]:
            combine(i - s, exc - s, verts, fam[0], fam)
    out = sorted(found)
    return out[:limit] if limit is not None else out


def _pair_buckets(H: Hypergraph) -> dict[tuple[int, int], list[int]]:
    buckets: dict[tuple[int, int], list[int]] = {}
    for eid, e in enumerate(H.edges):
        for pair in itertools.combinations(e, 2):
            buckets.setdefault(pair, []).append(eid)
    return {p: b for p, b in buckets.items() if len(b) > 1}


def girth(H: Hypergraph, cap: int = 4) -> int | None:
    """Least i >= 2 with an i-cycle, or None meaning "girth >= cap".

    A disconnected i-cycle always contains a connected j-cycle with j < i,
    so only connected families are searched here.
    """
    if cap <= 2:
        return None
    if not H.is_simple:
        return 2
    if cap > 3 and find_triangles(H, limit=1):
        return 3
    if cap <= 4:
        return None
    adj = _edge_adjacency(H)
    for i in range(4, cap):
        for fam in _connected_families(H, i, adj):
            if _span(H, fam) <= i * (H.k - 1):
                return i
    return None


def find_triangles(H: Hypergraph, limit: int | None = None) -> list[tuple[int, int, int]]:
    """Edge triples pairwise meeting in one vertex with empty common part.

    Only defined for simple hypergraphs.  Every triangle is seen from each of
    its three corner vertices through the third edge's vertex pairs.
    """
    H.require_simple()
    pidx = H.pair_index
    bits = H._neighbor_bits
    out: set[tuple[int, int, int]] = set()
    for gid, g in enumerate(H.edges):
        gmask = 0
        for u in g:
            gmask |= 1 << u
        for x, y in itertools.combinations(g, 2):
            common = bits[x] & bits[y] & ~gmask
            for v in _iter_bits(common):
                f = pidx[(min(v, x), max(v, x))]
                h = pidx[(min(v, y), max(v, y))]
                out.add(tuple(sorted((f, h, gid))))
                if limit is not None and len(out) >= limit:
                    return sorted(out)[:limit]
    return sorted(out)


def _iter_bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


# -- covered pairs ---------------------------------------------------------


@dataclass
class CoveredPairReport:
    center: int
    pairs: list[tuple[int, int, int]] = field(default_factory=list)  # (x, y, witness edge id)
    link: dict[int, tuple[int, ...]] = field(default_factory=dict)  # x -> T_v(x)

    def __len__(self):
        return len(self.pairs)

    def t_set(self, x: int) -> tuple[int, ...]:
        return self.link[x]


def covered_pairs(H: Hypergraph, v: int) -> CoveredPairReport:
    """Pairs x < y in N(v) lying together in an edge that avoids v."""
    _check_vertex(H, v)
    H.require_simple()
    link: dict[int, tuple[int, ...]] = {}
    for eid in H.incidence[v]:
        t = tuple(u for u in H.edges[eid] if u != v)
        for x in t:
            link[x] = t
    pidx = H.pair_index
    pairs = []
    for x, y in itertools.combinations(sorted(link), 2):
        w = pidx.get((x, y))
        if w is not None and v not in H.edges[w]:
            pairs.append((x, y, w))
    return CoveredPairReport(v, pairs, link)


def covered_pair_counts(H: Hypergraph) -> list[int]:
    """Covered-pair count at every vertex, computed edge-first."""
    H.require_simple()
    bits = H._neighbor_bits
    counts = [0] * H.n
    for g in H.edges:
        gmask = 0
        for u in g:
            gmask |= 1 << u
        for x, y in itertools.combinations(g, 2):
            for v in _iter_bits(bits[x] & bits[y] & ~gmask):
                counts[v] += 1
    return counts


# -- subhypergraphs and colourings ----------------------------------------


def induced(H: Hypergraph, vertex_subset: Iterable[int]) -> tuple[Hypergraph, dict[int, int]]:
    """Sub-hypergraph on ``vertex_subset`` relabelled to ``0..|S|-1``.

    Returns the hypergraph and the old->new vertex map (sorted order kept).
    """
    verts = sorted(set(vertex_subset))
    for v in verts:
        _check_vertex(H, v)
    remap = {v: j for j, v in enumerate(verts)}
    seen: set[int] = set()
    edges = []
    for v in verts:
        for eid in H.incidence[v]:
            if eid in seen:
                continue
            seen.add(eid)
            e = H.edges[eid]
            if all(u in remap for u in e):
                edges.append(tuple(remap[u] for u in e))
    edges.sort()
    return Hypergraph(H.k, len(verts), edges), remap


@dataclass
class Coloring:
    colors: list[int]
    palette_size: int

    def __post_init__(self):
        for c in self.colors:
            if c != UNCOLORED and not 0 <= c < self.palette_size:
                raise HypergraphError(f"color {c} outside palette of size {self.palette_size}")

    @property
    def used(self) -> int:
        return len({c for c in self.colors if c != UNCOLORED})


@dataclass
class VerificationReport:
    proper: bool
    monochromatic_edges: list[int]

    def as_dict(self):
        return {"proper": self.proper, "monochromatic_edges": self.monochromatic_edges}


def verify_coloring(H: Hypergraph, coloring: Coloring | Sequence[int]) -> VerificationReport:
    colors = coloring.colors if isinstance(coloring, Coloring) else list(coloring)
    if len(colors) != H.n:
        raise HypergraphError(f"coloring has {len(colors)} entries for {H.n} vertices")
    for v, c in enumerate(colors):
        if c == UNCOLORED:
            raise HypergraphError(f"vertex {v} is uncolored")
    bad = [eid for eid, e in enumerate(H.edges) if len({colors[u] for u in e}) == 1]
    return VerificationReport(not bad, bad)


def verify_partial(H: Hypergraph, colors: Sequence[int]) -> VerificationReport:
    """Check only edges whose vertices are all colored."""
    bad = []
    for eid, e in enumerate(H.edges):
        cs = {colors[u] for u in e}
        if len(cs) == 1 and UNCOLORED not in cs:
            bad.append(eid)
    return VerificationReport(not bad, bad)


# -- text format -----------------------------------------------------------


def format_instance(H: Hypergraph) -> str:
    lines = [f"{H.k} {H.n} {H.m}"]
    lines.extend(" ".join(map(str, e)) for e in H.edges)
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Hypergraph:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            nums = [int(tok) for tok in line.split()]
        except ValueError:
            raise HypergraphError(f"line {lineno}: non-integer token") from None
        if header is None:
            if len(nums) != 3:
                raise HypergraphError(f"line {lineno}: header must be 'k n m'")
            header = nums
            continue
        if len(nums) != header[0]:
            raise HypergraphError(f"line {lineno}: expected {header[0]} vertices, got {len(nums)}")
        edges.append(nums)
    if header is None:
        raise HypergraphError("empty instance file")
    k, n, m = header
    if len(edges) != m:
        raise HypergraphError(f"header declares {m} edges, found {len(edges)}")
    return build(k, n, edges)


def read_instance(path) -> Hypergraph:
    with open(path) as fh:
        return parse_instance(fh.read())


def write_instance(H: Hypergraph, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_instance(H))
