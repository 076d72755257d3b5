"""Machine-readable run traces and summaries.

A trace is newline-delimited JSON: one self-describing header record, one
record per simulation step, and one terminal record with the final states.
The header carries everything needed to recompute the outcome metrics from
the trace alone (road geometry, hidden obstacles, collision threshold), so
summaries can be reproduced exactly by an independent pass.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .features import ExitLane, RoadLayout
from .scenarios import (
    COLLISION_THRESHOLD,
    HiddenObstacle,
    OutcomeMetrics,
    SimulationResult,
    compute_metrics,
)
from .social import SOCIAL_FEATURE_NAMES

__all__ = [
    "RunSummary",
    "write_trace",
    "read_trace",
    "trace_header",
    "metrics_from_trace",
    "write_summary",
    "read_summary",
]


@dataclass(frozen=True)
class RunSummary:
    scenario: str
    planner_mode: str
    beta: float
    seed: int
    metrics: OutcomeMetrics
    wall_clock_seconds: float

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "planner_mode": self.planner_mode,
            "beta": self.beta,
            "seed": self.seed,
            "metrics": self.metrics.as_dict(),
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def _road_to_dict(road: RoadLayout) -> dict:
    exit_dict = None
    if road.exit is not None:
        exit_dict = dataclasses.asdict(road.exit)
    return {
        "lane_count": road.lane_count,
        "lane_width": road.lane_width,
        "origin_x": road.origin_x,
        "exit": exit_dict,
    }


def _road_from_dict(d: dict) -> RoadLayout:
    exit_lane = ExitLane(**d["exit"]) if d.get("exit") else None
    return RoadLayout(
        lane_count=d["lane_count"],
        lane_width=d["lane_width"],
        origin_x=d["origin_x"],
        exit=exit_lane,
    )


def trace_header(result: SimulationResult) -> dict:
    scenario = result.scenario
    return {
        "type": "header",
        "scenario": scenario.name,
        "planner_mode": result.planner_cfg.mode,
        "beta": result.planner_cfg.beta,
        "seed": scenario.seed,
        "noise_sigma": scenario.noise_sigma,
        "duration": scenario.duration,
        "road": _road_to_dict(scenario.road),
        "hidden_obstacles": [dataclasses.asdict(o) for o in scenario.hidden_obstacles],
        "collision_threshold": COLLISION_THRESHOLD,
        "car_ids": [c.car_id for c in scenario.scripted_cars],
        "social_features": list(SOCIAL_FEATURE_NAMES),
        "lambda_layout": "feature-major (k rows of M groups), inactive cells 0",
    }


def write_trace(path, result: SimulationResult) -> None:
    """Write the run as JSON lines: header, one record per step, end record."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps(trace_header(result)) + "\n")
        for rec in result.records:
            fh.write(
                json.dumps(
                    {
                        "type": "step",
                        "step": rec.step,
                        "robot": rec.robot.tolist(),
                        "control": rec.control.tolist(),
                        "objective": rec.objective,
                        "cohesion_penalty": rec.cohesion_penalty,
                        "lambda": rec.precisions.reshape(-1).tolist(),
                        "iterations": rec.iterations,
                        "grad_norm": rec.grad_norm,
                        "cars": rec.car_states.tolist(),
                    }
                )
                + "\n"
            )
        cars = result.scenario.car_array()
        final_cars = cars[:, -1, :].tolist() if cars.shape[0] else []
        fh.write(
            json.dumps(
                {
                    "type": "end",
                    "robot": result.robot_states[-1].tolist(),
                    "cars": final_cars,
                }
            )
            + "\n"
        )


def read_trace(path) -> tuple[dict, list[dict], dict]:
    """Parse a trace file into (header, step records, end record)."""
    header = None
    steps = []
    end = None
    with Path(path).open() as fh:
        for line in fh:
            rec = json.loads(line)
            if rec["type"] == "header":
                header = rec
            elif rec["type"] == "step":
                steps.append(rec)
            elif rec["type"] == "end":
                end = rec
    if header is None or end is None:
        raise ValueError(f"trace {path} missing header or end record")
    steps.sort(key=lambda r: r["step"])
    return header, steps, end


def metrics_from_trace(header: dict, steps: list[dict], end: dict) -> OutcomeMetrics:
    """Recompute outcome metrics from a parsed trace."""
    robot_states = np.array([s["robot"] for s in steps] + [end["robot"]])
    n_cars = len(header["car_ids"])
    if n_cars:
        per_step = [np.asarray(s["cars"]) for s in steps] + [np.asarray(end["cars"])]
        car_states = np.stack(per_step, axis=1)  # (C, D+1, 4)
    else:
        car_states = np.zeros((0, len(steps) + 1, 4))
    road = _road_from_dict(header["road"])
    obstacles = [HiddenObstacle(**o) for o in header["hidden_obstacles"]]
    return compute_metrics(
        robot_states, car_states, road, obstacles, header["collision_threshold"]
    )


def write_summary(path, summary: RunSummary) -> None:
    Path(path).write_text(json.dumps(summary.as_dict(), indent=2) + "\n")


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())
