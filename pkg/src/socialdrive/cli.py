"""Command-line entry point: run scenarios, compare planners, run sweeps.

Configuration is layered: built-in defaults, then values from a YAML config
file (--config), then explicit command-line flags. Outputs are JSON-lines
traces plus a JSON summary per run.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .dynamics import DynamicsParams
from .features import RewardParams
from .planner import PlannerConfig
from .scenarios import (
    SCENARIO_NAMES,
    build_scenario,
    control_deviation,
    noise_sweep,
    simulate,
)
from .social import GroupConfig, NormalizationConstants
from .trace import RunSummary, write_summary, write_trace

__all__ = ["main", "build_parser", "load_config", "assemble"]

_CONFIG_SECTIONS = ("scenario", "planner", "reward", "dynamics", "groups")


def _defaults() -> dict:
    return {
        "scenario": {"name": "stalled", "seed": 0},
        "planner": {
            "mode": "cohesive",
            "beta": 1.0,
            "horizon": 5,
            "max_iter": 60,
            "gtol": 1e-6,
            "maxls": 20,
            "warm_start": True,
            "bound_penalty_weight": 400.0,
        },
        "reward": {},
        "dynamics": {},
        "groups": {},
    }


def load_config(path) -> dict:
    data = yaml.safe_load(Path(path).read_text()) or {}
    unknown = set(data) - set(_CONFIG_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return data


def merge_config(base: dict, override: dict) -> dict:
    merged = {k: dict(v) for k, v in base.items()}
    for section, values in override.items():
        merged.setdefault(section, {}).update(values or {})
    return merged


def _apply_flags(cfg: dict, args: argparse.Namespace) -> dict:
    flags: dict = {"scenario": {}, "planner": {}}
    if getattr(args, "scenario", None) is not None:
        flags["scenario"]["name"] = args.scenario
    if getattr(args, "seed", None) is not None:
        flags["scenario"]["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        flags["scenario"]["duration"] = args.steps
    if getattr(args, "noise_sigma", None) is not None:
        flags["scenario"]["noise_sigma"] = args.noise_sigma
    if getattr(args, "planner", None) is not None:
        flags["planner"]["mode"] = args.planner
    if getattr(args, "beta", None) is not None:
        flags["planner"]["beta"] = args.beta
    if getattr(args, "horizon", None) is not None:
        flags["planner"]["horizon"] = args.horizon
    return merge_config(cfg, flags)


def assemble(cfg: dict):
    """Turn a merged config dict into scenario and parameter objects."""
    scen_cfg = dict(cfg.get("scenario", {}))
    name = scen_cfg.pop("name", "stalled")
    scenario = build_scenario(name, **scen_cfg)

    planner_cfg = PlannerConfig(**cfg.get("planner", {}))

    dyn_kwargs = dict(cfg.get("dynamics", {}))
    dyn = DynamicsParams(**dyn_kwargs)

    reward_kwargs = dict(cfg.get("reward", {}))
    reward_kwargs.setdefault("target_lane", scenario.target_lane)
    reward_kwargs.setdefault("target_speed", scenario.target_speed)
    if "theta" in reward_kwargs:
        reward_kwargs["theta"] = np.asarray(reward_kwargs["theta"], dtype=float)
    reward = RewardParams(**reward_kwargs)

    group_kwargs = dict(cfg.get("groups", {}))
    norm_kwargs = {}
    for key in ("position_scale", "heading_scale"):
        if key in group_kwargs:
            norm_kwargs[key] = group_kwargs.pop(key)
    if norm_kwargs:
        group_kwargs["norm"] = NormalizationConstants(**norm_kwargs)
    groups = GroupConfig(**group_kwargs)

    return scenario, planner_cfg, reward, dyn, groups


def _merged_from_args(args: argparse.Namespace) -> dict:
    cfg = _defaults()
    if getattr(args, "config", None):
        cfg = merge_config(cfg, load_config(args.config))
    return _apply_flags(cfg, args)


def _run_once(cfg: dict):
    scenario, planner_cfg, reward, dyn, groups = assemble(cfg)
    start = time.perf_counter()
    result = simulate(scenario, planner_cfg, reward_params=reward, dyn=dyn, group_cfg=groups)
    elapsed = time.perf_counter() - start
    summary = RunSummary(
        scenario=scenario.name,
        planner_mode=planner_cfg.mode,
        beta=planner_cfg.beta,
        seed=scenario.seed,
        metrics=result.metrics,
        wall_clock_seconds=elapsed,
    )
    return result, summary


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _merged_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result, summary = _run_once(cfg)
    stem = f"{summary.scenario}_{summary.planner_mode}"
    write_trace(out_dir / f"{stem}_trace.jsonl", result)
    write_summary(out_dir / f"{stem}_summary.json", summary)
    print(json.dumps(summary.as_dict(), indent=2))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _merged_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = {}
    summaries = {}
    for mode in ("nominal", "cohesive"):
        mode_cfg = merge_config(cfg, {"planner": {"mode": mode}})
        result, summary = _run_once(mode_cfg)
        results[mode] = result
        summaries[mode] = summary
        write_trace(out_dir / f"{summary.scenario}_{mode}_trace.jsonl", result)

    _, dyn = results["nominal"].planner_cfg, DynamicsParams(**cfg.get("dynamics", {}))
    series, max_dev = control_deviation(
        results["cohesive"].applied, results["nominal"].applied, dyn
    )
    name = results["nominal"].scenario.name
    with (out_dir / f"{name}_deviation.jsonl").open("w") as fh:
        for t, row in enumerate(series):
            fh.write(
                json.dumps({"step": t, "steering_dev": row[0], "accel_dev": row[1]}) + "\n"
            )

    import dataclasses

    cohesive_metrics = dataclasses.replace(
        summaries["cohesive"].metrics, max_deviation_from_nominal=max_dev
    )
    summaries["cohesive"] = dataclasses.replace(summaries["cohesive"], metrics=cohesive_metrics)
    for mode, summary in summaries.items():
        write_summary(out_dir / f"{name}_{mode}_summary.json", summary)
        print(json.dumps(summary.as_dict(), indent=2))
    return 0


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_seed_list(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _merged_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sigmas = _parse_float_list(args.sigmas)
    seeds = _parse_seed_list(args.seeds)
    planner_cfg = PlannerConfig(**{**cfg.get("planner", {}), "mode": "cohesive"})
    duration = cfg.get("scenario", {}).get("duration")
    rows = noise_sweep(sigmas, seeds, planner_cfg=planner_cfg, duration=duration)
    with (out_dir / "sweep_results.jsonl").open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    by_sigma: dict[float, list[bool]] = {}
    for row in rows:
        by_sigma.setdefault(row["sigma"], []).append(row["collided"])
    print("sigma  success_rate")
    for sigma in sorted(by_sigma):
        outcomes = by_sigma[sigma]
        rate = 1.0 - sum(outcomes) / len(outcomes)
        print(f"{sigma:5.2f}  {rate:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialdrive",
        description="Drive scripted scenarios with a nominal or cohesion-augmented planner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", choices=SCENARIO_NAMES, help="scenario name")
        p.add_argument("--seed", type=int, help="scenario seed")
        p.add_argument("--steps", type=int, help="override scenario duration")
        p.add_argument("--beta", type=float, help="cohesion trade-off weight")
        p.add_argument("--horizon", type=int, help="planning horizon in steps")
        p.add_argument("--config", help="YAML config file; flags override it")
        p.add_argument("--out", default="out", help="output directory")

    run_p = sub.add_parser("run", help="simulate one scenario with one planner")
    add_common(run_p)
    run_p.add_argument("--planner", choices=("nominal", "cohesive"), help="planner mode")
    run_p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="noisy swerve scale")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="run both planners on one scenario, shared seed")
    add_common(cmp_p)
    cmp_p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="noisy swerve scale")
    cmp_p.set_defaults(func=cmd_compare)

    sweep_p = sub.add_parser("sweep", help="noise sweep over the noisy swerve scenario")
    add_common(sweep_p)
    sweep_p.add_argument("--sigmas", default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    sweep_p.add_argument("--seeds", default="0..9", help="e.g. 0..9 or 0,3,7")
    sweep_p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as err:  # runtime failure -> diagnostic, exit 1
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
