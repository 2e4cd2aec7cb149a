"""Command-line front end: gen | color | verify | sweep | probe | stats.

Every command prints one JSON summary on stdout.  Exit status 0 means
success, 1 a contract failure (improper colouring, resample cap, invalid
instance for the requested mode), 2 a usage, parse or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter

from .engine import EngineError
from .finisher import ResampleCapExceeded
from .generators import GenSpec, generate
from .hypergraph import HypergraphError, find_triangles, format_instance, girth, verify_coloring
from .pipeline import (SWEEP_COLUMNS, ConfigError, RunConfig, color_files, color_instance, csv_text,
                       dump_json, load_instance, read_coloring, sweep, write_run)
from .probes import BudgetExceeded, covered_pair_polysystem, empirical_tail, exact_chromatic, kimvu_stats

OK, CONTRACT, USAGE = 0, 1, 2


class ContractFailure(Exception):
    def __init__(self, summary: dict):
        super().__init__(summary.get("error", "contract failure"))
        self.summary = summary


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypernibble", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        sp.add_argument("--config", help="JSON RunConfig; explicit flags override it")
        sp.add_argument("--out", help="run directory")
        sp.add_argument("--seed", type=int)
        if instance:
            sp.add_argument("--instance", help="instance file")
            sp.add_argument("--fixture", help="named fixture, e.g. fano or loose_cycle(3,3)")
        return sp

    def gen_flags(sp):
        sp.add_argument("--k", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--max-degree", type=int)
        sp.add_argument("--triangle-free", action="store_true", default=None)
        sp.add_argument("--density", type=float)
        sp.add_argument("--method", choices=["greedy", "ap"])

    def engine_flags(sp):
        sp.add_argument("--mode", choices=["auto", "direct", "full"])
        sp.add_argument("--eps", type=float)
        sp.add_argument("--engine-mode", choices=["practical", "theory"])
        sp.add_argument("--q-scale", type=float)
        sp.add_argument("--cap", type=int, help="finisher resample cap")

    gen_flags(common(sub.add_parser("gen", help="generate an instance"), instance=False))
    sp = common(sub.add_parser("color", help="colour an instance"))
    gen_flags(sp)
    engine_flags(sp)
    sp = common(sub.add_parser("verify", help="check a colouring"))
    sp.add_argument("--coloring", help="coloring JSONL (or a run directory)")
    sp = common(sub.add_parser("sweep", help="colour generated instances over a degree grid"), instance=False)
    gen_flags(sp)
    engine_flags(sp)
    sp.add_argument("--grid", type=lambda s: [int(x) for x in s.split(",")])
    sp.add_argument("--seeds", type=int)
    sp = common(sub.add_parser("probe", help="concentration probe of the covered-pair polynomial"))
    gen_flags(sp)
    sp.add_argument("--vertex", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--lambdas", type=lambda s: [float(x) for x in s.split(",")])
    sp = common(sub.add_parser("stats", help="structural statistics"))
    gen_flags(sp)
    sp.add_argument("--girth-cap", type=int)
    return p


_GEN_KEYS = {"k": "k", "n": "n", "max_degree": "max_degree", "triangle_free": "triangle_free",
             "density": "density", "method": "method"}
_ENGINE_KEYS = {"eps": "eps", "engine_mode": "mode", "q_scale": "q_scale"}


def config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    base["command"] = args.command
    ns = vars(args)
    for key in ("out", "seed", "instance", "fixture", "mode", "coloring", "grid", "seeds", "vertex",
                "m", "trials", "lambdas", "girth_cap"):
        if ns.get(key) is not None:
            base[key] = ns[key]
    gen = {v: ns[k] for k, v in _GEN_KEYS.items() if ns.get(k) is not None}
    if gen:
        base["gen"] = {**(base.get("gen") or {}), **gen}
    if ns.get("seed") is not None and base.get("gen") is not None and args.command == "gen":
        base["gen"].setdefault("seed", ns["seed"])
    eng = {v: ns[k] for k, v in _ENGINE_KEYS.items() if ns.get(k) is not None}
    if eng:
        base["engine"] = {**base.get("engine", {}), **eng}
    if ns.get("cap") is not None:
        base["finisher"] = {**base.get("finisher", {}), "cap": ns["cap"]}
    try:
        return RunConfig.from_dict(base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- commands -----------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> dict:
    if cfg.gen is None:
        raise ConfigError("gen needs generator parameters (--k --n --max-degree or config 'gen')")
    res = generate(GenSpec(**cfg.gen))
    summary = {"command": "gen", **res.summary(), "n": res.hypergraph.n}
    if cfg.out:
        write_run(cfg.out, {"config.json": dump_json(cfg.echo()),
                            "instance.txt": format_instance(res.hypergraph),
                            "summary.json": dump_json(summary)})
    return summary


def cmd_color(cfg: RunConfig) -> dict:
    H = load_instance(cfg)
    res = color_instance(H, cfg)
    summary = {"command": "color", **res.summary(H)}
    if cfg.out:
        write_run(cfg.out, color_files(H, cfg, res))
    if not res.proper:
        raise ContractFailure({**summary, "error": "colouring is not proper"})
    return summary


def cmd_verify(cfg: RunConfig) -> dict:
    if cfg.coloring is None:
        raise ConfigError("verify needs --coloring")
    from pathlib import Path

    path = Path(cfg.coloring)
    if path.is_dir():
        if cfg.instance is None and cfg.fixture is None and cfg.gen is None:
            cfg.instance = str(path / "instance.txt")
        path = path / "coloring.jsonl"
    H = load_instance(cfg)
    colors = read_coloring(path)
    if len(colors) != H.n:
        raise ContractFailure({"command": "verify", "error": f"coloring has {len(colors)} vertices, instance {H.n}"})
    try:
        rep = verify_coloring(H, colors)
    except HypergraphError as exc:
        raise ContractFailure({"command": "verify", "proper": False, "error": str(exc)}) from None
    summary = {"command": "verify", "colors_used": len(set(colors)), **rep.as_dict()}
    if not rep.proper:
        raise ContractFailure(summary)
    return summary


def cmd_sweep(cfg: RunConfig) -> dict:
    rows, medians = sweep(cfg)
    ratios = [m["median_ratio"] for m in medians]
    trend = None
    if len(ratios) >= 2 and "" not in (ratios[0], ratios[-1]):
        trend = ratios[-1] <= ratios[0]
    summary = {"command": "sweep", "runs": len(rows), "failed": sum(1 for r in rows if r["error"]),
               "medians": medians, "trend_holds": trend}
    if cfg.out:
        write_run(cfg.out, {"config.json": dump_json(cfg.echo()),
                            "sweep.csv": csv_text(rows, SWEEP_COLUMNS),
                            "medians.csv": csv_text(medians, ["delta", "runs", "median_colors", "median_ratio"]),
                            "summary.json": dump_json(summary)})
    if summary["failed"]:
        raise ContractFailure(summary)
    return summary


def cmd_probe(cfg: RunConfig) -> dict:
    H = load_instance(cfg)
    sysm = covered_pair_polysystem(H, cfg.vertex, cfg.m)
    st = kimvu_stats(sysm)
    tail = empirical_tail(sysm, cfg.trials, cfg.lambdas, seed=cfg.seed)
    summary = {
        "command": "probe", "vertex": cfg.vertex, "m": cfg.m, "covered_pairs": len(sysm.family),
        "rank": st.rank, "expectation": str(st.expectation), "M0": str(st.m0), "M1": str(st.m1),
        "sample_mean": tail.mean, "sample_stderr": tail.stderr, "tail_monotone": tail.monotone,
    }
    if cfg.out:
        write_run(cfg.out, {"config.json": dump_json(cfg.echo()), "tail.csv": tail.to_csv(),
                            "summary.json": dump_json(summary)})
    return summary


def cmd_stats(cfg: RunConfig) -> dict:
    H = load_instance(cfg)
    hist = Counter(len(x) for x in H.incidence)
    summary = {
        "command": "stats", "k": H.k, "n": H.n, "m": H.m, "max_degree": H.max_degree,
        "degree_histogram": {str(d): hist[d] for d in sorted(hist)},
        "simple": H.is_simple, "triangles": len(find_triangles(H)) if H.is_simple else None,
    }
    g = girth(H, cfg.girth_cap)
    summary["girth"] = g if g is not None else f">={cfg.girth_cap}"
    if H.n <= 15:
        try:
            summary["chromatic_number"] = exact_chromatic(H)
        except BudgetExceeded:
            summary["chromatic_number"] = "unknown"
    if cfg.out:
        write_run(cfg.out, {"config.json": dump_json(cfg.echo()), "summary.json": dump_json(summary)})
    return summary


COMMANDS = {"gen": cmd_gen, "color": cmd_color, "verify": cmd_verify, "sweep": cmd_sweep,
            "probe": cmd_probe, "stats": cmd_stats}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        cfg = config_from_args(args)
        summary = COMMANDS[cfg.command](cfg)
    except ContractFailure as exc:
        print(json.dumps(exc.summary, sort_keys=True))
        return CONTRACT
    except (ResampleCapExceeded, EngineError, HypergraphError) as exc:
        print(json.dumps({"command": args.command, "error": f"{type(exc).__name__}: {exc}"}, sort_keys=True))
        return CONTRACT
    except (ConfigError, OSError, ValueError, TypeError) as exc:
        print(json.dumps({"command": args.command, "error": f"{type(exc).__name__}: {exc}"}, sort_keys=True))
        return USAGE
    print(json.dumps(summary, sort_keys=True))
    return OK


if __name__ == "__main__":
    sys.exit(main())
