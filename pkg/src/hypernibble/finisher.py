"""Moser-Tardos resampling for proper colourings, and the hand-off from the
nibble to a fresh palette."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import UNCOLORED, Coloring, Hypergraph, induced
from .rng import stream


class ResampleCapExceeded(RuntimeError):
    def __init__(self, resamples: int, palette: int):
        super().__init__(f"no proper colouring after {resamples} resamples with {palette} colours")
        self.resamples = resamples
        self.palette = palette


def lll_palette(max_degree: int, k: int) -> int:
    """ceil(4 D^(1/(k-1))) + 1 colours, enough for the symmetric local lemma."""
    return math.ceil(4 * max_degree ** (1 / (k - 1))) + 1


@dataclass
class FinisherConfig:
    palette: int | None = None  # default: lll_palette of the input
    cap: int | None = None  # default: 1000 * |E|
    seed: int = 0

    def resolve(self, H: Hypergraph) -> tuple[int, int]:
        palette = self.palette if self.palette is not None else lll_palette(H.max_degree, H.k)
        cap = self.cap if self.cap is not None else 1000 * H.m
        if palette < 1:
            raise ValueError("palette must be >= 1")
        if cap < H.m:
            raise ValueError("resample cap must be at least |E|")
        return palette, cap


@dataclass
class FinisherResult:
    coloring: Coloring
    resamples: int
    palette: int
    extra: dict = field(default_factory=dict)


def moser_tardos_color(H: Hypergraph, config: FinisherConfig | None = None, lists=None) -> FinisherResult:
    """Random colouring repaired by resampling the least monochromatic edge.

    With ``lists``, vertex v draws uniformly from ``lists[v]`` (colour labels)
    instead of from ``range(palette)``.  Raises ResampleCapExceeded when the
    cap is hit.
    """
    config = config or FinisherConfig()
    palette, cap = config.resolve(H)
    rng = stream(config.seed, "moser-tardos")
    n, k = H.n, H.k
    if lists is not None:
        choices = [np.asarray(sorted(lst), dtype=np.int64) for lst in lists]
        if any(len(c) == 0 for c in choices):
            raise ValueError("empty colour list")
        sizes = np.array([len(c) for c in choices])
    buf = rng.random(4096)
    pos = 0

    def draw(v):
        nonlocal buf, pos
        if pos == len(buf):
            buf = rng.random(4096)
            pos = 0
        x = buf[pos]
        pos += 1
        if lists is None:
            return int(x * palette)
        return int(choices[v][int(x * sizes[v])])

    colors = [draw(v) for v in range(n)]
    edges = H.edges
    inc = H.incidence

    def mono(eid):
        e = edges[eid]
        c = colors[e[0]]
        return all(colors[u] == c for u in e[1:])

    heap = [eid for eid in range(H.m) if mono(eid)]
    heapq.heapify(heap)
    resamples = 0
    while heap:
        eid = heapq.heappop(heap)
        if not mono(eid):
            continue
        if resamples >= cap:
            raise ResampleCapExceeded(resamples, palette)
        resamples += 1
        for u in edges[eid]:
            colors[u] = draw(u)
        touched = set()
        for u in edges[eid]:
            touched.update(inc[u])
        for f in touched:
            if mono(f):
                heapq.heappush(heap, f)
    size = palette if lists is None else max((int(c.max()) for c in choices), default=-1) + 1
    return FinisherResult(Coloring(colors, max(size, 1)), resamples, palette)


def finish_palette(residual: Hypergraph, q: int) -> int:
    """min(q, LLL palette of the residual), but never fewer than 2 colours
    when the residual still has an edge (one colour cannot be proper)."""
    if residual.m == 0:
        return 1
    return max(2, min(q, lll_palette(residual.max_degree, residual.k)))


def finish(H: Hypergraph, colors, q: int, seed: int = 0, lists=None, offset: int | None = None,
           cap: int | None = None):
    """Colour the still-uncoloured vertices with fresh colours.

    ``colors`` holds nibble colour labels (or -1).  Fresh colours start at
    ``offset`` (default q) so the finisher palette is disjoint from the
    nibble's.  In list mode each vertex draws from its own leftover list.
    Returns (merged colour list, FinisherResult).
    """
    colors = list(colors)
    U = [v for v, c in enumerate(colors) if c == UNCOLORED]
    residual, remap = induced(H, U)
    offset = q if offset is None else offset
    sub_lists = None
    palette = finish_palette(residual, q)
    if lists is not None:
        sub_lists = [lists[v] for v in U]
    res = moser_tardos_color(residual, FinisherConfig(palette=palette, cap=cap, seed=seed), lists=sub_lists)
    for v in U:
        c = res.coloring.colors[remap[v]]
        colors[v] = c if lists is not None else c + offset
    res.extra = {"residual_vertices": residual.n, "residual_edges": residual.m,
                 "residual_max_degree": residual.max_degree}
    return colors, res
