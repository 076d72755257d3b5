"""Scripted scenario library and the observe / plan / step simulation loop.

All surrounding cars are open-loop scripts that ignore the robot; paired
nominal and cohesive runs therefore see identical traffic and outcome
differences are attributable solely to the planner. Hidden obstacles are
used by the outcome metrics but never appear in the planner's environment
snapshot (they model perception failure).

Numeric scenario constants (positions, speeds, spans) are documented
defaults; the acceptance layer asserts ordinal outcomes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import CarState, ControlInput, DynamicsParams, step
from .features import (
    EnvironmentSnapshot,
    ExitLane,
    RewardParams,
    RoadLayout,
    predict_constant_velocity,
    smoothstep,
)
from .planner import MpcController, PlannerConfig
from .social import (
    GroupConfig,
    GroupStatistics,
    SampleHistory,
    cohesion_penalty,
)

__all__ = [
    "SCENARIO_NAMES",
    "COLLISION_THRESHOLD",
    "ScriptedCar",
    "HiddenObstacle",
    "Scenario",
    "OutcomeMetrics",
    "StepRecord",
    "SimulationResult",
    "build_scenario",
    "simulate",
    "noise_sweep",
    "compute_metrics",
    "control_deviation",
]

SCENARIO_NAMES = (
    "stalled",
    "ambulance",
    "speeding",
    "exit",
    "nothing_to_match",
    "speed_commonality",
    "noisy_swerve",
)

COLLISION_THRESHOLD = 1.0  # meters, center-to-center at lane_width 3.0

# shared geometry: three lanes along +y, centers at x = 0, 3, 6
_ROAD = RoadLayout(lane_count=3, lane_width=3.0, origin_x=0.0)
_DT = 0.1
_HEADING_UP = math.pi / 2.0


@dataclass(frozen=True)
class ScriptedCar:
    car_id: str
    states: np.ndarray  # (duration+1, 4)

    def translated(self, dx: float, dy: float) -> "ScriptedCar":
        moved = self.states.copy()
        moved[:, 0] += dx
        moved[:, 1] += dy
        return ScriptedCar(self.car_id, moved)


@dataclass(frozen=True)
class HiddenObstacle:
    x: float
    y: float
    footprint: float  # radius subtracted from center distance for clearance


@dataclass(frozen=True)
class Scenario:
    name: str
    road: RoadLayout
    robot_start: CarState
    target_lane: int
    target_speed: float
    scripted_cars: tuple[ScriptedCar, ...]
    hidden_obstacles: tuple[HiddenObstacle, ...] = ()
    duration: int = 50
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for car in self.scripted_cars:
            if car.states.shape != (self.duration + 1, 4):
                raise ValueError(
                    f"script for {car.car_id} must cover the full duration: "
                    f"expected {(self.duration + 1, 4)}, got {car.states.shape}"
                )

    def car_array(self) -> np.ndarray:
        """(C, duration+1, 4) stack of all scripted trajectories."""
        if not self.scripted_cars:
            return np.zeros((0, self.duration + 1, 4))
        return np.stack([c.states for c in self.scripted_cars])

    def translated(self, dx: float, dy: float) -> "Scenario":
        return replace(
            self,
            road=self.road.translated(dx, dy),
            robot_start=self.robot_start.translated(dx, dy),
            scripted_cars=tuple(c.translated(dx, dy) for c in self.scripted_cars),
            hidden_obstacles=tuple(
                HiddenObstacle(o.x + dx, o.y + dy, o.footprint) for o in self.hidden_obstacles
            ),
        )


def _derive_script(positions: np.ndarray, dt: float = _DT) -> np.ndarray:
    """States from a (N, 2) position path: heading and speed from forward
    differences, with the last row repeating the previous derivative."""
    n = positions.shape[0]
    states = np.zeros((n, 4))
    states[:, :2] = positions
    dp = np.diff(positions, axis=0)
    heading = np.arctan2(dp[:, 1], dp[:, 0])
    speed = np.hypot(dp[:, 0], dp[:, 1]) / dt
    states[:-1, 2] = heading
    states[:-1, 3] = speed
    states[-1, 2] = heading[-1] if n > 1 else _HEADING_UP
    states[-1, 3] = speed[-1] if n > 1 else 0.0
    return states


def _swerve_offset(y, ramp_start, ramp_len, hold_len, offset):
    """Lateral offset profile: smooth out-ramp, hold, smooth return."""
    out = offset * smoothstep((np.asarray(y) - ramp_start) / ramp_len)
    back_start = ramp_start + ramp_len + hold_len
    back = offset * smoothstep((np.asarray(y) - back_start) / ramp_len)
    return out - back


def _straight_positions(x0, y0, speed, duration, dt=_DT):
    t = np.arange(duration + 1) * dt
    return np.column_stack([np.full(duration + 1, float(x0)), y0 + speed * t])


def _build_stalled(duration: int, car_speed: float, seed: int) -> Scenario:
    # three cars ahead in the robot's lane swerve around a stalled car the
    # robot cannot see, then return to the lane
    lane_x = _ROAD.lane_center(1)
    ramp_start, ramp_len, hold_len = 20.0, 10.0, 8.0
    cars = []
    for i, y0 in enumerate((8.0, 13.0, 18.0)):
        pos = _straight_positions(lane_x, y0, car_speed, duration)
        pos[:, 0] += _swerve_offset(pos[:, 1], ramp_start, ramp_len, hold_len, _ROAD.lane_width)
        cars.append(ScriptedCar(f"car{i}", _derive_script(pos)))
    obstacle = HiddenObstacle(lane_x, ramp_start + ramp_len + 0.5 * hold_len, 0.8)
    return Scenario(
        name="stalled",
        road=_ROAD,
        robot_start=CarState(lane_x, 0.0, _HEADING_UP, car_speed),
        target_lane=1,
        target_speed=car_speed,
        scripted_cars=tuple(cars),
        hidden_obstacles=(obstacle,),
        duration=duration,
        seed=seed,
    )


def _build_ambulance(duration: int, seed: int) -> Scenario:
    # a fast vehicle races up the far-left lane while every other car moves
    # to the rightmost lane at a common lateral speed
    t = np.arange(duration + 1) * _DT
    right_x = _ROAD.lane_center(2)
    cars = [
        ScriptedCar("ambulance", _derive_script(_straight_positions(_ROAD.lane_center(0), -5.0, 12.0, duration)))
    ]
    starts = ((0.0, 16.0), (3.0, 14.0), (0.0, 24.0), (3.0, 22.0))
    lateral_speed = 2.0
    for i, (x0, y0) in enumerate(starts):
        gap = right_x - x0
        move_time = gap / lateral_speed
        pos = _straight_positions(x0, y0, 5.0, duration)
        pos[:, 0] = x0 + gap * smoothstep((t - 0.8) / move_time)
        cars.append(ScriptedCar(f"car{i}", _derive_script(pos)))
    return Scenario(
        name="ambulance",
        road=_ROAD,
        robot_start=CarState(_ROAD.lane_center(1), 10.0, _HEADING_UP, 5.0),
        target_lane=1,
        target_speed=5.0,
        scripted_cars=tuple(cars),
        duration=duration,
        seed=seed,
    )


def _build_speeding(duration: int, common_speed: float, seed: int) -> Scenario:
    # everyone drives straight at a shared speed above the robot's target
    lanes = (0, 1, 2, 0, 2)
    ys = (6.0, 10.0, 14.0, 18.0, 22.0)
    cars = [
        ScriptedCar(
            f"car{i}",
            _derive_script(_straight_positions(_ROAD.lane_center(lane), y0, common_speed, duration)),
        )
        for i, (lane, y0) in enumerate(zip(lanes, ys))
    ]
    return Scenario(
        name="speeding",
        road=_ROAD,
        robot_start=CarState(_ROAD.lane_center(1), 0.0, _HEADING_UP, 5.0),
        target_lane=1,
        target_speed=5.0,
        scripted_cars=tuple(cars),
        duration=duration,
        seed=seed,
    )


def _build_exit(duration: int, car_speed: float, seed: int) -> Scenario:
    # the robot's lane becomes a highway exit; all cars ahead take it
    exit_lane = ExitLane(lane_index=2, y_start=20.0, y_end=32.0, lateral_offset=_ROAD.lane_width)
    road = replace(_ROAD, exit=exit_lane)
    lane_x = road.lane_center(2)
    cars = []
    for i, y0 in enumerate((8.0, 13.0, 18.0)):
        pos = _straight_positions(lane_x, y0, car_speed, duration)
        pos[:, 0] += exit_lane.offset_at(pos[:, 1])
        cars.append(ScriptedCar(f"car{i}", _derive_script(pos)))
    return Scenario(
        name="exit",
        road=road,
        robot_start=CarState(lane_x, 0.0, _HEADING_UP, car_speed),
        target_lane=2,
        target_speed=car_speed,
        scripted_cars=tuple(cars),
        duration=duration,
        seed=seed,
    )


# erratic-traffic layout shared by the two sensitivity scenarios. The road
# is wider there and the cars keep two lanes of separation so the robot's
# collision features barely see them; what cohesion sees flows through the
# road group alone. Wander periods divide the 20-pair recency window so full
# windows hold whole cycles and the windowed sample means of the oscillating
# features cancel instead of dragging the robot around.
_SENS_ROAD = RoadLayout(lane_count=5, lane_width=3.0, origin_x=0.0)
_ERRATIC_CARS = 8
_WANDER_BASE_X = (0.0, 12.0, 0.0, 12.0, 0.0, 12.0, 0.0, 12.0)
_WANDER_BASE_Y = (3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0)
# two lateral harmonics per car; diverse zigzag targets keep the direction
# features broadly spread instead of clustering at one deviation magnitude
_WANDER_PERIOD = (4, 5, 10, 4, 5, 10, 4, 5)  # steps per primary cycle
_WANDER_PERIOD2 = (10, 20, 4, 20, 10, 5, 20, 10)
_WANDER_DEV = (0.65, 0.60, 0.55, 0.50, 0.45, 0.45, 0.50, 0.55)  # rad, heading zigzag
_ERRATIC_SPEEDS = (7.6, 6.9, 6.2, 5.5, 4.5, 3.8, 3.1, 2.4)  # mean exactly 5.0
_ERRATIC_LONG_PERIOD = (5, 10, 4, 5, 10, 4, 5, 10)
_ERRATIC_LONG_AMPL = 0.15  # meters of per-step travel wiggle
_PHASE_SALT = 1  # fixed entropy stream component for phase draws


def _balance_signs(series: list[np.ndarray], lead_steps: int = 10) -> np.ndarray:
    """Pick a +-1 sign per car so the fleet's pooled early drift cancels.

    Minimizes the weighted squared pooled per-step increments over the first
    lead_steps, exhaustively over sign assignments. Flipping a car mirrors
    its wander; each car's series stays independent of the others.
    """
    n = len(series)
    deltas = np.stack([np.diff(s[: lead_steps + 1]) for s in series])  # (n, lead)
    weights = 1.0 / (1.0 + np.arange(deltas.shape[1]))
    best_signs = np.ones(n)
    best_cost = math.inf
    for mask in range(2**n):
        signs = np.array([1.0 if mask & (1 << i) else -1.0 for i in range(n)])
        pooled = signs @ deltas
        cost = float(np.sum(weights * pooled**2))
        if cost < best_cost:
            best_cost = cost
            best_signs = signs
    return best_signs


def _wander_lateral(
    duration: int, per_step_travel: np.ndarray, rng: np.random.Generator
) -> list[np.ndarray]:
    """Per-car lateral paths whose per-step swing yields the target heading
    zigzag at that car's speed; initial drift directions are balanced so the
    crowd carries no aggregate early drift."""
    steps = np.arange(duration + 1)
    waves = []
    for i in range(_ERRATIC_CARS):
        dx_amp = math.tan(_WANDER_DEV[i]) * per_step_travel[i]
        wave = np.zeros(duration + 1)
        for weight, period in ((0.6, _WANDER_PERIOD[i]), (0.4, _WANDER_PERIOD2[i])):
            ampl = weight * dx_amp / (2.0 * math.sin(math.pi / period))
            wave += ampl * np.sin(2.0 * math.pi * steps / period + rng.uniform(0.0, 2.0 * math.pi))
        waves.append(wave)
    signs = _balance_signs(waves)
    return [_WANDER_BASE_X[i] + signs[i] * waves[i] for i in range(_ERRATIC_CARS)]


def _build_nothing_to_match(duration: int, seed: int) -> Scenario:
    # mutually uncorrelated headings and speeds: distinct base speeds plus
    # independent fast lateral and longitudinal oscillations per car
    rng = np.random.default_rng([seed, _PHASE_SALT])
    t = np.arange(duration + 1) * _DT
    steps = np.arange(duration + 1)
    per_step = np.array(_ERRATIC_SPEEDS) * _DT
    laterals = _wander_lateral(duration, per_step, rng)
    wiggles = []
    for i in range(_ERRATIC_CARS):
        period = _ERRATIC_LONG_PERIOD[i]
        ampl = _ERRATIC_LONG_AMPL / (2.0 * math.sin(math.pi / period))
        phase = rng.uniform(0.0, 2.0 * math.pi)
        wiggles.append(ampl * np.sin(2.0 * math.pi * steps / period + phase))
    wiggle_signs = _balance_signs(wiggles)
    cars = []
    for i in range(_ERRATIC_CARS):
        y = _WANDER_BASE_Y[i] + _ERRATIC_SPEEDS[i] * t + wiggle_signs[i] * wiggles[i]
        pos = np.column_stack([laterals[i], y])
        cars.append(ScriptedCar(f"car{i}", _derive_script(pos)))
    return Scenario(
        name="nothing_to_match",
        road=_SENS_ROAD,
        robot_start=CarState(_SENS_ROAD.lane_center(2), 0.0, _HEADING_UP, 5.0),
        target_lane=2,
        target_speed=5.0,
        scripted_cars=tuple(cars),
        duration=duration,
        seed=seed,
    )


def _build_speed_commonality(duration: int, common_speed: float, seed: int) -> Scenario:
    # same erratic lane-change wiggles, but every car covers exactly
    # common_speed * dt per step: the longitudinal displacement is solved
    # from the lateral one so per-step travel is shared across cars
    rng = np.random.default_rng([seed, _PHASE_SALT])
    step_travel = common_speed * _DT
    per_step = np.full(_ERRATIC_CARS, step_travel)
    laterals = _wander_lateral(duration, per_step, rng)
    cars = []
    for i in range(_ERRATIC_CARS):
        x = laterals[i]
        dx = np.diff(x)
        if np.any(np.abs(dx) >= step_travel):
            raise ValueError("lateral wander too fast for the common speed")
        dy = np.sqrt(step_travel**2 - dx**2)
        y = _WANDER_BASE_Y[i] + np.concatenate([[0.0], np.cumsum(dy)])
        pos = np.column_stack([x, y])
        cars.append(ScriptedCar(f"car{i}", _derive_script(pos)))
    return Scenario(
        name="speed_commonality",
        road=_SENS_ROAD,
        robot_start=CarState(_SENS_ROAD.lane_center(2), 0.0, _HEADING_UP, 5.0),
        target_lane=2,
        target_speed=5.0,
        scripted_cars=tuple(cars),
        duration=duration,
        seed=seed,
    )


def _build_noisy_swerve(duration: int, car_speed: float, noise_sigma: float, seed: int) -> Scenario:
    base = _build_stalled(duration, car_speed, seed)
    if noise_sigma == 0.0:
        # physically identical to the stalled scenario
        return replace(base, name="noisy_swerve", noise_sigma=0.0)
    rng = np.random.default_rng(seed)
    noisy_cars = []
    for car in base.scripted_cars:
        positions = car.states[:, :2] + rng.normal(0.0, noise_sigma, size=(duration + 1, 2))
        noisy_cars.append(ScriptedCar(car.car_id, _derive_script(positions)))
    return replace(
        base, name="noisy_swerve", noise_sigma=noise_sigma, scripted_cars=tuple(noisy_cars)
    )


_DEFAULT_DURATIONS = {
    "stalled": 70,
    "ambulance": 60,
    "speeding": 50,
    "exit": 70,
    "nothing_to_match": 50,
    "speed_commonality": 50,
    "noisy_swerve": 70,
}

_ALLOWED_OVERRIDES = {
    "stalled": {"seed", "duration", "car_speed"},
    "ambulance": {"seed", "duration"},
    "speeding": {"seed", "duration", "common_speed"},
    "exit": {"seed", "duration", "car_speed"},
    "nothing_to_match": {"seed", "duration"},
    "speed_commonality": {"seed", "duration", "common_speed"},
    "noisy_swerve": {"seed", "duration", "car_speed", "noise_sigma"},
}


def build_scenario(name: str, **overrides) -> Scenario:
    """Construct one of the named scenarios, applying keyword overrides.

    Raises ValueError for unknown names, unknown override keys, or override
    values that violate scenario invariants.
    """
    if name not in SCENARIO_NAMES:
        raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    unknown = set(overrides) - _ALLOWED_OVERRIDES[name]
    if unknown:
        raise ValueError(f"unsupported overrides for {name}: {sorted(unknown)}")
    seed = int(overrides.get("seed", 0))
    duration = int(overrides.get("duration", _DEFAULT_DURATIONS[name]))
    if duration < 4:
        raise ValueError("duration too short")

    if name == "stalled":
        return _build_stalled(duration, float(overrides.get("car_speed", 5.0)), seed)
    if name == "ambulance":
        return _build_ambulance(duration, seed)
    if name == "speeding":
        return _build_speeding(duration, float(overrides.get("common_speed", 7.5)), seed)
    if name == "exit":
        return _build_exit(duration, float(overrides.get("car_speed", 5.0)), seed)
    if name == "nothing_to_match":
        return _build_nothing_to_match(duration, seed)
    if name == "speed_commonality":
        return _build_speed_commonality(duration, float(overrides.get("common_speed", 7.5)), seed)
    noise_sigma = float(overrides.get("noise_sigma", 0.1))
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be nonnegative")
    return _build_noisy_swerve(duration, float(overrides.get("car_speed", 5.0)), noise_sigma, seed)


# --- outcome metrics ---------------------------------------------------------


@dataclass(frozen=True)
class OutcomeMetrics:
    collided: bool
    min_clearance: float
    final_lane: int
    mean_speed: float  # over the last quarter of the run
    took_exit: bool
    max_deviation_from_nominal: Optional[tuple[float, float]] = None

    def as_dict(self) -> dict:
        return {
            "collided": self.collided,
            "min_clearance": self.min_clearance,
            "final_lane": self.final_lane,
            "mean_speed": self.mean_speed,
            "took_exit": self.took_exit,
            "max_deviation_from_nominal": (
                list(self.max_deviation_from_nominal)
                if self.max_deviation_from_nominal is not None
                else None
            ),
        }


def compute_metrics(
    robot_states: np.ndarray,
    car_states: np.ndarray,
    road: RoadLayout,
    hidden_obstacles: Sequence[HiddenObstacle],
    collision_threshold: float = COLLISION_THRESHOLD,
) -> OutcomeMetrics:
    """Outcome metrics from a simulated robot trajectory.

    robot_states: (D+1, 4); car_states: (C, D+1, 4). Clearance to cars is
    center-to-center distance; clearance to a hidden obstacle subtracts its
    footprint radius (floored at zero).
    """
    robot_xy = robot_states[:, :2]
    min_clearance = math.inf
    if car_states.shape[0]:
        diffs = car_states[:, :, :2] - robot_xy[None, :, :]
        dists = np.hypot(diffs[:, :, 0], diffs[:, :, 1])
        min_clearance = float(dists.min())
    for obs in hidden_obstacles:
        d = np.hypot(robot_xy[:, 0] - obs.x, robot_xy[:, 1] - obs.y) - obs.footprint
        min_clearance = min(min_clearance, float(np.maximum(d, 0.0).min()))
    if not math.isfinite(min_clearance):
        min_clearance = math.inf

    final = robot_states[-1]
    final_lane = road.lane_index(float(final[0]))

    quarter = max(1, robot_states.shape[0] // 4)
    mean_speed = float(robot_states[-quarter:, 3].mean())

    took_exit = False
    if road.exit is not None:
        exit_center = road.lane_center(road.exit.lane_index) + road.exit.lateral_offset
        took_exit = bool(
            final[1] >= road.exit.y_end
            and abs(final[0] - exit_center) <= 0.5 * road.lane_width
        )

    collided = bool(min_clearance < collision_threshold)
    return OutcomeMetrics(
        collided=collided,
        min_clearance=min_clearance,
        final_lane=final_lane,
        mean_speed=mean_speed,
        took_exit=took_exit,
    )


def control_deviation(applied_a: np.ndarray, applied_b: np.ndarray, dyn: DynamicsParams):
    """Per-step and max per-component control deviation, normalized by the
    control bounds so both components share units."""
    series = np.abs(np.asarray(applied_a) - np.asarray(applied_b))
    series[:, 0] /= dyn.steering_max
    series[:, 1] /= dyn.accel_max
    max_dev = series.max(axis=0) if series.size else np.zeros(2)
    return series, (float(max_dev[0]), float(max_dev[1]))


# --- simulation loop ---------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    step: int
    robot: np.ndarray  # (4,)
    control: np.ndarray  # (2,) applied
    objective: float
    cohesion_penalty: float
    precisions: np.ndarray  # (k, M); inactive cells 0
    iterations: int
    grad_norm: float
    car_states: np.ndarray  # (C, 4) scripted states at this step


@dataclass(frozen=True)
class SimulationResult:
    scenario: Scenario
    planner_cfg: PlannerConfig
    robot_states: np.ndarray  # (D+1, 4)
    applied: np.ndarray  # (D, 2)
    records: tuple[StepRecord, ...]
    metrics: OutcomeMetrics

    @property
    def stats_trace(self) -> np.ndarray:
        """(D, k, M) per-step precision matrices."""
        return np.stack([r.precisions for r in self.records])


def simulate(
    scenario: Scenario,
    planner_cfg: PlannerConfig,
    reward_params: Optional[RewardParams] = None,
    dyn: Optional[DynamicsParams] = None,
    group_cfg: Optional[GroupConfig] = None,
) -> SimulationResult:
    """Run the observe -> update statistics -> plan -> step loop.

    Group statistics are rebuilt from scratch each step from the full
    observation history; the planner sees constant-velocity predictions of
    the scripted cars and never the hidden obstacles.
    """
    dyn = dyn or DynamicsParams()
    reward_params = reward_params or RewardParams(
        target_lane=scenario.target_lane, target_speed=scenario.target_speed
    )
    group_cfg = group_cfg or GroupConfig()
    group_cfg.validate()

    cars = scenario.car_array()
    n_cars = cars.shape[0]
    history = SampleHistory(group_cfg.norm)
    mpc = MpcController(planner_cfg, reward_params, dyn, norm=group_cfg.norm)

    robot = scenario.robot_start
    robot_states = np.empty((scenario.duration + 1, 4))
    robot_states[0] = robot.as_array()
    applied = np.empty((scenario.duration, 2))
    records: list[StepRecord] = []

    for t in range(scenario.duration):
        if t >= 1:
            for c in range(n_cars):
                history.add_pair(cars[c, t - 1], cars[c, t], t - 1, scenario.road)
        stats = history.statistics(robot, t, scenario.road, group_cfg)

        current = cars[:, t, :] if n_cars else np.zeros((0, 4))
        previous = cars[:, t - 1, :] if (n_cars and t >= 1) else None
        predicted = predict_constant_velocity(current, previous, planner_cfg.horizon, dyn.dt)
        env = EnvironmentSnapshot(scenario.road, predicted)

        try:
            control = mpc.step(robot, env, stats)
        except Exception as err:
            raise RuntimeError(f"planner failed at step {t}: {err}") from err
        result = mpc.last_result

        next_robot = step(robot, control, dyn)
        penalty = cohesion_penalty(robot, next_robot, stats, group_cfg.norm)
        records.append(
            StepRecord(
                step=t,
                robot=robot.as_array(),
                control=control.as_array(),
                objective=result.objective,
                cohesion_penalty=penalty,
                precisions=stats.precisions(),
                iterations=result.iterations,
                grad_norm=result.grad_norm,
                car_states=current.copy(),
            )
        )
        applied[t] = control.as_array()
        robot = next_robot
        robot_states[t + 1] = robot.as_array()

    metrics = compute_metrics(robot_states, cars, scenario.road, scenario.hidden_obstacles)
    return SimulationResult(
        scenario=scenario,
        planner_cfg=planner_cfg,
        robot_states=robot_states,
        applied=applied,
        records=tuple(records),
        metrics=metrics,
    )


def noise_sweep(
    sigmas: Sequence[float],
    seeds: Sequence[int],
    planner_cfg: Optional[PlannerConfig] = None,
    duration: Optional[int] = None,
) -> list[dict]:
    """One cohesive-planner run of the noisy swerve per (sigma, seed).

    Returns a row per combination with the collision outcome and minimum
    clearance; deterministic given the seeds.
    """
    if any(s < 0 for s in sigmas):
        raise ValueError("sigmas must be nonnegative")
    planner_cfg = planner_cfg or PlannerConfig(mode="cohesive", beta=1.0)
    rows = []
    for sigma in sigmas:
        for seed in seeds:
            overrides = {"noise_sigma": float(sigma), "seed": int(seed)}
            if duration is not None:
                overrides["duration"] = duration
            scenario = build_scenario("noisy_swerve", **overrides)
            result = simulate(scenario, planner_cfg)
            rows.append(
                {
                    "sigma": float(sigma),
                    "seed": int(seed),
                    "collided": result.metrics.collided,
                    "min_clearance": result.metrics.min_clearance,
                }
            )
    return rows
