"""Colouring sparse uniform hypergraphs with a semi-random nibble.

The modules stack bottom-up: ``hypergraph`` (structure and verification),
``generators`` (instances), ``partition`` (degree and triangle-free
partitions), ``engine`` and ``telemetry`` (the nibble rounds), ``finisher``
(Moser-Tardos), ``probes`` (concentration statistics) and ``pipeline`` /
``cli`` (runs).
"""

from .engine import EngineParams, init_state, params_from, run, run_round
from .finisher import moser_tardos_color
from .generators import GenSpec, fano, generate, loose_cycle, single_edge
from .hypergraph import Coloring, Hypergraph, build, find_triangles, girth, verify_coloring
from .partition import lemma1_partition, lemma2_partition, triangle_free_refine
from .probes import exact_chromatic, kimvu_stats

__all__ = [
    "Coloring", "EngineParams", "GenSpec", "Hypergraph", "build", "exact_chromatic", "fano",
    "find_triangles", "generate", "girth", "init_state", "kimvu_stats", "lemma1_partition",
    "lemma2_partition", "loose_cycle", "moser_tardos_color", "params_from", "run", "run_round",
    "single_edge", "triangle_free_refine", "verify_coloring",
]
