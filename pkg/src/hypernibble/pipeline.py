"""End-to-end colouring runs: direct (nibble + finisher) and the full
partition reduction, sweeps over a degree grid, and run-directory output."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .engine import init_state, params_from, run, state_jsonl
from .finisher import finish
from .generators import GenSpec, fixture, generate
from .hypergraph import (Hypergraph, HypergraphError, find_triangles, format_instance, induced,
                         read_instance, verify_coloring)
from .partition import Lemma1Config, Lemma2Config, lemma1_partition, lemma2_partition, triangle_free_refine
from .rng import child_seed


class ConfigError(ValueError):
    """Malformed or inconsistent RunConfig (a usage error)."""


@dataclass
class RunConfig:
    """Everything a run depends on.  A run is a pure function of this object."""

    command: str = "color"
    instance: str | None = None  # path to an instance file
    fixture: str | None = None  # e.g. "fano" or "loose_cycle(3,3)"
    gen: dict | None = None  # GenSpec fields
    mode: str = "auto"  # auto | direct | full
    engine: dict = field(default_factory=dict)  # eps, mode, q_scale, p_hat_scale, theta, ...
    lemma1: dict = field(default_factory=dict)
    lemma2: dict = field(default_factory=dict)
    finisher: dict = field(default_factory=dict)  # cap
    out: str | None = None
    seed: int = 0
    repetitions: int = 1
    coloring: str | None = None  # verify: path to coloring JSONL
    grid: list = field(default_factory=lambda: [16, 32, 64, 128])
    seeds: int = 10
    vertex: int = 0
    m: int = 2
    trials: int = 10000
    lambdas: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 3.0])
    girth_cap: int = 5

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.check()
        return cfg

    def check(self):
        if self.mode not in ("auto", "direct", "full"):
            raise ConfigError(f"mode must be auto, direct or full, got {self.mode!r}")
        if self.repetitions < 1 or self.seeds < 1:
            raise ConfigError("repetitions and seeds must be >= 1")
        for key in self.finisher:
            if key != "cap":
                raise ConfigError(f"unknown finisher option {key!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def echo(self) -> dict:
        """Config as written into the run directory (minus its own location)."""
        d = self.to_dict()
        del d["out"]
        return d


def load_instance(cfg: RunConfig) -> Hypergraph:
    given = [x is not None for x in (cfg.instance, cfg.fixture, cfg.gen)]
    if sum(given) != 1:
        raise ConfigError("give exactly one of instance, fixture, gen")
    try:
        if cfg.instance is not None:
            return read_instance(cfg.instance)
        if cfg.fixture is not None:
            return fixture(cfg.fixture)
    except HypergraphError as exc:  # unreadable input is a usage error
        raise ConfigError(f"{cfg.instance or cfg.fixture}: {exc}") from None
    return generate(GenSpec(**cfg.gen)).hypergraph


# -- colouring ---------------------------------------------------------------


@dataclass
class BlockOutcome:
    """Colouring of one triangle-free block by nibble + finisher."""

    colors: list[int]
    colors_used: int
    q: int
    rounds: int
    stop_reason: str
    uncolored_at_handoff: int
    finisher_palette: int
    resamples: int
    telemetry: list = field(default_factory=list)
    final_state: str = ""  # nibble state dump, JSONL

    def stats(self) -> dict:
        return {key: getattr(self, key) for key in ("colors_used", "q", "rounds", "stop_reason",
                "uncolored_at_handoff", "finisher_palette", "resamples")}


def color_block(H: Hypergraph, engine: dict, seed: int, cap: int | None = None,
                check: bool = True) -> BlockOutcome:
    """Nibble rounds then Moser-Tardos on the leftovers, colours relabelled 0..c-1."""
    if H.m == 0:
        return BlockOutcome([0] * H.n, 1 if H.n else 0, 0, 0, "edgeless", 0, 0, 0)
    opts = dict(engine)
    eps = opts.pop("eps", 0.5)
    mode = opts.pop("mode", "practical")
    params = params_from(H.k, H.max_degree, eps, mode, seed=seed, **opts)
    res = run(init_state(H, params, check=check))
    labels = res.state.colors()
    left = sum(1 for c in labels if c < 0)
    merged, fin = finish(H, labels, params.q, seed=child_seed(seed, "finish"), cap=cap)
    relabel = {c: j for j, c in enumerate(sorted(set(merged)))}
    colors = [relabel[c] for c in merged]
    return BlockOutcome(colors, len(relabel), params.q, res.state.t, res.stop_reason, left,
                        fin.palette, fin.resamples, res.telemetry, state_jsonl(res.state))


@dataclass
class ColorOutcome:
    colors: list[int]
    colors_used: int
    mode: str
    proper: bool
    blocks: list[dict]
    telemetry_rows: list[dict]
    partitions: list[str] = field(default_factory=list)  # JSONL chunks
    final_state: str = ""

    def summary(self, H: Hypergraph) -> dict:
        return {
            "n": H.n, "m": H.m, "k": H.k, "max_degree": H.max_degree,
            "mode": self.mode, "colors_used": self.colors_used, "proper": self.proper,
            "blocks": self.blocks,
        }


def _rows(label: str, series) -> list[dict]:
    out = []
    for snap in series:
        out.append({"block": label, **snap.row()})
    return out


def color_instance(H: Hypergraph, cfg: RunConfig) -> ColorOutcome:
    """Colour H in the configured mode and verify the merged colouring."""
    mode = cfg.mode
    triangle_free = None
    if mode in ("auto", "direct"):
        triangle_free = H.is_simple and not find_triangles(H, limit=1)
        if mode == "auto":
            mode = "direct" if triangle_free else "full"
    cap = cfg.finisher.get("cap")
    if mode == "direct":
        if not triangle_free:
            raise HypergraphError("direct mode needs a simple triangle-free instance")
        b = color_block(H, cfg.engine, child_seed(cfg.seed, "direct"), cap, check=False)
        rep = verify_coloring(H, b.colors)
        return ColorOutcome(b.colors, b.colors_used, mode, rep.proper,
                            [{"block": "direct", **b.stats()}], _rows("direct", b.telemetry),
                            final_state=b.final_state)
    return _color_full(H, cfg, cap)


def _color_full(H: Hypergraph, cfg: RunConfig, cap) -> ColorOutcome:
    """Lemma-1 parts, Lemma-2 parts of each, triangle-free classes of each;
    every class gets its own block of fresh colours."""
    colors = [-1] * H.n
    offset = 0
    blocks, rows, parts_jsonl = [], [], []
    P1 = lemma1_partition(H, Lemma1Config(seed=child_seed(cfg.seed, "lemma1"), **cfg.lemma1))
    parts_jsonl.append(P1.to_jsonl())
    for ps in P1.parts:
        Hi, _ = induced(H, ps.vertices)
        P2 = lemma2_partition(Hi, Lemma2Config(seed=child_seed(cfg.seed, "lemma2", ps.part), **cfg.lemma2))
        for ps2 in P2.parts:
            L, _ = induced(Hi, ps2.vertices)
            ref = triangle_free_refine(L)
            for s, cls in enumerate(ref.classes):
                C, _ = induced(L, cls)
                label = f"{ps.part}.{ps2.part}.{s}"
                b = color_block(C, cfg.engine, child_seed(cfg.seed, "class", ps.part, ps2.part, s), cap,
                                check=False)
                for local, c in enumerate(b.colors):
                    colors[ps.vertices[ps2.vertices[cls[local]]]] = offset + c
                offset += b.colors_used
                blocks.append({"block": label, "lemma1_certified": P1.certified,
                               "lemma2_certified": P2.certified, **b.stats()})
                rows.extend(_rows(label, b.telemetry))
    rep = verify_coloring(H, colors)
    return ColorOutcome(colors, offset, "full", rep.proper, blocks, rows, parts_jsonl)


# -- sweeps -------------------------------------------------------------------


SWEEP_COLUMNS = ["delta", "seed", "n", "m", "max_degree", "colors", "q", "uncolored_at_handoff",
                 "finisher_palette", "ratio", "proper", "error"]


def sweep_scale(delta: int, k: int) -> float:
    return (delta / math.log(delta)) ** (1 / (k - 1))


def sweep_run(cfg: RunConfig, delta: int, s: int) -> dict:
    gen = dict(cfg.gen or {})
    gen.setdefault("k", 3)
    gen.setdefault("n", 1000)
    gen.setdefault("triangle_free", True)
    gen.setdefault("method", "ap")
    gen.update(max_degree=delta, seed=s)
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(delta=delta, seed=s)
    try:
        H = generate(GenSpec(**gen)).hypergraph
        sub = RunConfig(**{**cfg.to_dict(), "gen": gen, "seed": child_seed(cfg.seed, "sweep", delta, s),
                           "mode": "direct" if cfg.mode == "auto" else cfg.mode})
        res = color_instance(H, sub)
        b = res.blocks[0]
        row.update(n=H.n, m=H.m, max_degree=H.max_degree, colors=res.colors_used,
                   q=b["q"], uncolored_at_handoff=b["uncolored_at_handoff"],
                   finisher_palette=b["finisher_palette"],
                   ratio=res.colors_used / sweep_scale(H.max_degree, H.k) if H.max_degree >= 3 else "",
                   proper=res.proper)
    except Exception as exc:  # a failed run is a flagged row, not a crashed sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(cfg: RunConfig) -> tuple[list[dict], list[dict]]:
    rows = [sweep_run(cfg, int(d), s) for d in cfg.grid for s in range(cfg.seeds)]
    medians = []
    for d in cfg.grid:
        ok = [r for r in rows if r["delta"] == d and not r["error"] and r["ratio"] != ""]
        medians.append({
            "delta": d,
            "runs": len(ok),
            "median_colors": statistics.median(r["colors"] for r in ok) if ok else "",
            "median_ratio": statistics.median(r["ratio"] for r in ok) if ok else "",
        })
    return rows, medians


def csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns})
    return buf.getvalue()


# -- output directories --------------------------------------------------------


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def coloring_jsonl(colors) -> str:
    return "".join(json.dumps({"v": v, "color": c}) + "\n" for v, c in enumerate(colors))


def read_coloring(path) -> list[int]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[int(rec["v"])] = int(rec["color"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad coloring record ({exc})") from None
    if sorted(out) != list(range(len(out))):
        raise ValueError(f"{path}: vertex ids must be 0..n-1")
    return [out[v] for v in range(len(out))]


def write_run(out: str | Path, files: dict[str, str]) -> Path:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (d / name).write_text(text)
    return d


def color_files(H: Hypergraph, cfg: RunConfig, res: ColorOutcome) -> dict[str, str]:
    files = {
        "config.json": dump_json(cfg.echo()),
        "instance.txt": format_instance(H),
        "coloring.jsonl": coloring_jsonl(res.colors),
        "telemetry.csv": _telemetry_text(res.telemetry_rows),
        "summary.json": dump_json(res.summary(H)),
    }
    if res.partitions:
        files["partition.jsonl"] = "".join(res.partitions)
    if res.final_state:
        files["nibble_state.jsonl"] = res.final_state
    return files


def _telemetry_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        for c in r:
            if c not in cols:
                cols.append(c)
    return csv_text([{c: r.get(c, "") for c in cols} for r in rows], cols)

