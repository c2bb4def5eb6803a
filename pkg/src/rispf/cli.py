"""Command-line entry point: ``rispf {run,fig3,tcts,heatmap,bound}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analysis import BoundParams, required_tc_slots
from .config import ConfigError, load_config, preset
from .export import ExportError, export, export_trace, write_csv, write_metadata
from .ris_controller import codebook_rows
from .scenarios import Table, scenario_fig3, scenario_heatmap, scenario_run, scenario_tcts
from .simulate import drop_for_seed, run_trajectory, trial_seed

DEFAULT_PRESET = {"run": "theory", "fig3": "fig3", "tcts": "lab", "heatmap": "heatmap"}


def _common(p):
    p.add_argument("--config", type=Path, help="INI config file (defaults to a built-in preset)")
    p.add_argument("--seed", type=int, help="base seed; trial i uses (seed, i)")
    p.add_argument("--trials", type=int, help="number of independent trials")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--mode", choices=("theory", "nr"), help="override the simulation mode")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--slots", type=int, help="override n_slots")


def build_parser():
    ap = argparse.ArgumentParser(prog="rispf", description=__doc__)
    ap.add_argument("--version", action="version", version=f"rispf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="trials of a single configuration")
    _common(p)
    p.add_argument("--trace", action="store_true", help="also write the per-slot trace of trial 0")
    p = sub.add_parser("fig3", help="throughput and gap vs T_c for each T_s and scheduler")
    _common(p)
    p = sub.add_parser("tcts", help="NR-mode PF throughput over the T_c x T_s grid")
    _common(p)
    p = sub.add_parser("heatmap", help="RIS on/off throughput per UE angle and distance")
    _common(p)
    p = sub.add_parser("bound", help="minimum EWMA window (slots) for the concentration bound")
    p.add_argument("--eps1", type=float, default=0.1)
    p.add_argument("--eps2", type=float, default=0.1)
    p.add_argument("--eta1", type=float, default=0.1)
    p.add_argument("--eta2", type=float, default=0.1)
    p.add_argument("--L", type=int, default=10, dest="n_states")
    p.add_argument("--K", type=int, default=10, dest="n_ues")
    p.add_argument("--ts", type=int, default=1, help="switching interval in slots")
    p.add_argument("--out", type=Path, help="also write bound.csv to this directory")
    return ap


def resolve_config(args):
    cfg = load_config(args.config) if args.config else preset(DEFAULT_PRESET[args.command])
    overrides = {}
    for flag, key in (("seed", "seed"), ("trials", "n_trials"), ("mode", "mode"),
                      ("workers", "workers"), ("slots", "n_slots")):
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = val
    if "n_slots" in overrides and cfg.warmup_slots >= overrides["n_slots"]:
        overrides["warmup_slots"] = 0
    try:
        return cfg.single(**overrides)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _cmd_run(cfg, args):
    table, res = scenario_run(cfg)
    out = args.out
    paths = [export(table, out / "run.csv", cfg)]
    rows = []
    for i, r in enumerate(res):
        for k in range(len(r.per_ue_throughput)):
            rows.append((i, k, float(r.per_ue_throughput[k]), float(r.optimal_per_ue[k]),
                         float(r.q_hat[k]), float(r.aligned_fraction[k]),
                         float(r.misaligned_fraction[k]), float(r.final_ewma[k])))
    per_ue = Table(("trial", "ue", "throughput", "optimal_throughput", "q_hat", "aligned_fraction",
                    "misaligned_fraction", "final_ewma"), rows)
    paths.append(export(per_ue, out / "per_ue.csv", cfg))
    drop = drop_for_seed(cfg, trial_seed(cfg.seed, 0))
    cb = Table(("state", "centroid_u", "centroid_v", "prob"), codebook_rows(drop.codebook, drop.pmf))
    paths.append(export(cb, out / "codebook.csv", cfg, extra={"content": "codebook of trial 0"}))
    if args.trace:
        single = cfg.single(tc_slots=cfg.tc_slots[:1], ts_slots=cfg.ts_slots[:1])
        trace, _ = run_trajectory(single, trial_seed(cfg.seed, 0), record_trace=True)
        paths.append(export_trace(trace, out / "trace.csv", single, trial_seed(cfg.seed, 0)))
    return paths


def _cmd_bound(args):
    b = BoundParams(args.eps1, args.eps2, args.eta1, args.eta2, args.n_states, args.n_ues, args.ts)
    tc = required_tc_slots(b)
    print(f"required_tc_slots = {tc}")
    print(f"gap_threshold = {b.gap_threshold:g} (confidence {b.confidence:g})")
    if args.out is not None:
        path = args.out / "bound.csv"
        write_csv(path, ("eps1", "eps2", "eta1", "eta2", "L", "K", "ts_slots", "required_tc_slots",
                         "gap_threshold"),
                  [(b.eps1, b.eps2, b.eta1, b.eta2, b.L, b.K, b.ts_slots, tc, b.gap_threshold)])
        write_metadata(path.with_suffix(".meta.txt"))
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bound":
            try:
                return _cmd_bound(args)
            except ValueError as exc:
                raise ConfigError(f"bound: {exc}") from None
        cfg = resolve_config(args)
        if args.command == "run":
            paths = _cmd_run(cfg, args)
        elif args.command == "fig3":
            paths = [export(scenario_fig3(cfg), args.out / "fig3.csv", cfg)]
        elif args.command == "tcts":
            cfg = cfg.single(mode="nr")
            paths = [export(scenario_tcts(cfg), args.out / "tcts.csv", cfg)]
        else:
            paths = [export(scenario_heatmap(cfg), args.out / "heatmap.csv", cfg)]
    except ConfigError as exc:
        print(f"rispf: config error: {exc}", file=sys.stderr)
        return 2
    except ExportError as exc:
        print(f"rispf: {exc}", file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
