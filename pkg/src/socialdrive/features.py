"""Nominal driving reward: feature map over (state, control) and its weighted sum.

Feature order (p = 6):

  0 collision   sum over other cars of an unnormalized anisotropic Gaussian
                of the relative displacement, long axis along the other
                car's heading (peak 1 per car)
  1 lane        Gaussian of lateral distance to the target lane center
  2 boundary    quadratic hinge, zero inside the road edges and rising
                smoothly outside (C1)
  3 speed       -(speed - target_speed)^2
  4 steering    -steering^2
  5 accel       -accel^2

All features are C1 in state and control; the planner relies on the
analytic derivatives below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import CarState, ControlInput, DynamicsParams, rollout_array

__all__ = [
    "ExitLane",
    "RoadLayout",
    "RewardParams",
    "EnvironmentSnapshot",
    "FEATURE_NAMES",
    "FEATURE_DIM",
    "phi",
    "phi_array",
    "nominal_reward",
    "predict_constant_velocity",
]

FEATURE_NAMES = ("collision", "lane", "boundary", "speed", "steering", "accel")
FEATURE_DIM = len(FEATURE_NAMES)


def smoothstep(tau):
    """Cubic smoothstep clamped to [0, 1]."""
    t = np.clip(tau, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def smoothstep_deriv(tau):
    t = np.clip(tau, 0.0, 1.0)
    return 6.0 * t * (1.0 - t)


@dataclass(frozen=True)
class ExitLane:
    """A lane that diverges laterally from the road over a longitudinal span."""

    lane_index: int
    y_start: float
    y_end: float
    lateral_offset: float = 3.0

    def validate(self, lane_count: int) -> None:
        if not 0 <= self.lane_index < lane_count:
            raise ValueError(f"exit lane index {self.lane_index} out of range")
        if not self.y_end > self.y_start:
            raise ValueError("exit span must have positive length")

    def offset_at(self, y):
        """Lateral divergence of the exit lane at longitudinal position y."""
        return self.lateral_offset * smoothstep((y - self.y_start) / (self.y_end - self.y_start))

    def offset_deriv_at(self, y):
        span = self.y_end - self.y_start
        return self.lateral_offset * smoothstep_deriv((y - self.y_start) / span) / span


@dataclass(frozen=True)
class RoadLayout:
    """Straight multi-lane road along +y; lane centers are lateral offsets."""

    lane_count: int = 3
    lane_width: float = 3.0
    origin_x: float = 0.0  # lateral position of lane 0's center
    exit: Optional[ExitLane] = None

    def __post_init__(self):
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if self.lane_width <= 0:
            raise ValueError("lane_width must be positive")
        if self.exit is not None:
            self.exit.validate(self.lane_count)

    def lane_center(self, lane_index: int) -> float:
        return self.origin_x + lane_index * self.lane_width

    def lane_index(self, x) -> int:
        """Nearest lane index for a lateral position, clipped to the road."""
        idx = np.rint((np.asarray(x) - self.origin_x) / self.lane_width)
        idx = np.clip(idx, 0, self.lane_count - 1)
        if np.ndim(x) == 0:
            return int(idx)
        return idx.astype(int)

    @property
    def left_edge(self) -> float:
        return self.origin_x - 0.5 * self.lane_width

    @property
    def base_right_edge(self) -> float:
        return self.origin_x + (self.lane_count - 0.5) * self.lane_width

    def right_edge_at(self, y):
        """Right boundary; widens along the exit span so the exit stays on-road."""
        if self.exit is None:
            return np.broadcast_to(self.base_right_edge, np.shape(y)).copy() if np.ndim(y) else self.base_right_edge
        return self.base_right_edge + self.exit.offset_at(y)

    def right_edge_deriv_at(self, y):
        if self.exit is None:
            return np.zeros(np.shape(y)) if np.ndim(y) else 0.0
        return self.exit.offset_deriv_at(y)

    def translated(self, dx: float, dy: float) -> "RoadLayout":
        moved_exit = None
        if self.exit is not None:
            moved_exit = replace(self.exit, y_start=self.exit.y_start + dy, y_end=self.exit.y_end + dy)
        return replace(self, origin_x=self.origin_x + dx, exit=moved_exit)


def _default_theta() -> np.ndarray:
    # Hand-tuned weights; not fit from demonstrations. Signs follow the
    # feature definitions above: proximity and boundary overlap are
    # penalized, lane keeping is rewarded, the remaining features are
    # already negative.
    return np.array([-25.0, 3.0, -40.0, 1.5, 1.0, 0.1])


@dataclass(frozen=True)
class RewardParams:
    """Weights and targets of the nominal driving reward."""

    theta: np.ndarray = field(default_factory=_default_theta)
    horizon: int = 5
    target_speed: float = 5.0
    target_lane: int = 1
    # shape constants of the smooth feature forms
    collision_sigma_long: float = 2.4
    collision_sigma_lat: float = 1.0
    lane_sigma: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.theta.shape != (FEATURE_DIM,):
            raise ValueError(f"theta must have length {FEATURE_DIM}, got {self.theta.shape}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass(frozen=True)
class EnvironmentSnapshot:
    """What the planner sees: the road plus predicted states of other cars.

    others has shape (n_cars, T+1, 4): one predicted state per visible car
    for every step of the planning horizon including the current one.
    Hidden obstacles never appear here.
    """

    road: RoadLayout
    others: np.ndarray  # (C, T+1, 4); C may be 0

    def __post_init__(self):
        arr = np.asarray(self.others, dtype=float)
        if arr.size == 0:
            arr = arr.reshape((0, 0, 4)) if arr.ndim != 3 else arr
        if arr.ndim != 3 or (arr.size and arr.shape[2] != 4):
            raise ValueError("others must have shape (n_cars, T+1, 4)")
        object.__setattr__(self, "others", arr)

    def others_at(self, t: int) -> np.ndarray:
        if self.others.shape[0] == 0:
            return np.zeros((0, 4))
        return self.others[:, t, :]


def predict_constant_velocity(
    current: np.ndarray, previous: Optional[np.ndarray], horizon: int, dt: float
) -> np.ndarray:
    """Constant-velocity extrapolation of other cars over the horizon.

    current/previous: (C, 4) observed states at the present and prior step.
    Positions extrapolate linearly from the last observed displacement;
    heading and speed are held. With no prior observation the cars are
    held in place.
    Returns (C, horizon+1, 4).
    """
    current = np.asarray(current, dtype=float)
    n = current.shape[0]
    out = np.repeat(current[:, None, :], horizon + 1, axis=1)
    if n == 0 or previous is None:
        return out
    delta = current[:, :2] - np.asarray(previous, dtype=float)[:, :2]
    steps = np.arange(horizon + 1)
    out[:, :, 0] += np.outer(delta[:, 0], steps)
    out[:, :, 1] += np.outer(delta[:, 1], steps)
    return out


# --- feature evaluation -----------------------------------------------------


def _collision_terms(state_xy: np.ndarray, others: np.ndarray, params: RewardParams):
    """Per-car Gaussian values and displacement in the other car's frame.

    state_xy: (2,), others: (C, 4). Returns (g, u, v, cos_o, sin_o), each (C,).
    """
    dx = state_xy[0] - others[:, 0]
    dy = state_xy[1] - others[:, 1]
    cos_o = np.cos(others[:, 2])
    sin_o = np.sin(others[:, 2])
    u = cos_o * dx + sin_o * dy  # along the other car's heading
    v = -sin_o * dx + cos_o * dy
    g = np.exp(
        -0.5 * (u / params.collision_sigma_long) ** 2
        - 0.5 * (v / params.collision_sigma_lat) ** 2
    )
    return g, u, v, cos_o, sin_o


def phi_array(
    state: np.ndarray,
    control: np.ndarray,
    others: np.ndarray,
    road: RoadLayout,
    params: RewardParams,
) -> np.ndarray:
    """Feature vector for one (state, control) pair against one env slice."""
    x, y, _, speed = state
    out = np.zeros(FEATURE_DIM)

    if others.shape[0]:
        g, _, _, _, _ = _collision_terms(state[:2], others, params)
        out[0] = float(np.sum(g))

    lane_d = x - road.lane_center(params.target_lane)
    out[1] = math.exp(-0.5 * (lane_d / params.lane_sigma) ** 2)

    left_gap = road.left_edge - x
    right_gap = x - road.right_edge_at(y)
    out[2] = max(left_gap, 0.0) ** 2 + max(right_gap, 0.0) ** 2

    out[3] = -((speed - params.target_speed) ** 2)
    out[4] = -(control[0] ** 2)
    out[5] = -(control[1] ** 2)
    return out


def phi(
    state: CarState,
    control: ControlInput,
    others: Sequence[CarState],
    road: RoadLayout,
    params: RewardParams,
) -> np.ndarray:
    """Public feature map over domain types; see module docstring for order."""
    others_arr = (
        np.stack([o.as_array() for o in others]) if len(others) else np.zeros((0, 4))
    )
    return phi_array(state.as_array(), control.as_array(), others_arr, road, params)


def reward_terms_batch(
    states: np.ndarray,
    controls_used: np.ndarray,
    others: np.ndarray,
    road: RoadLayout,
    params: RewardParams,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Sum of theta . phi over N steps plus per-step gradients.

    states (N, 4); controls_used (N, 2), already expanded so row t is the
    control evaluated with state t; others (C, N, 4). Returns (total,
    dstates (N, 4), dcontrols (N, 2)).
    """
    theta = params.theta
    n = states.shape[0]
    x = states[:, 0]
    y = states[:, 1]
    speed = states[:, 3]
    dstates = np.zeros((n, 4))
    dcontrols = np.zeros((n, 2))
    total = 0.0

    if others.shape[0]:
        dx = x[None, :] - others[:, :, 0]
        dy = y[None, :] - others[:, :, 1]
        cos_o = np.cos(others[:, :, 2])
        sin_o = np.sin(others[:, :, 2])
        u = cos_o * dx + sin_o * dy  # along the other car's heading
        v = -sin_o * dx + cos_o * dy
        inv_l2 = 1.0 / params.collision_sigma_long**2
        inv_s2 = 1.0 / params.collision_sigma_lat**2
        g = np.exp(-0.5 * (u * u * inv_l2 + v * v * inv_s2))
        total += theta[0] * float(g.sum())
        dg_dx = -g * (u * inv_l2 * cos_o - v * inv_s2 * sin_o)
        dg_dy = -g * (u * inv_l2 * sin_o + v * inv_s2 * cos_o)
        dstates[:, 0] += theta[0] * dg_dx.sum(axis=0)
        dstates[:, 1] += theta[0] * dg_dy.sum(axis=0)

    lane_d = x - road.lane_center(params.target_lane)
    lane_g = np.exp(-0.5 * (lane_d / params.lane_sigma) ** 2)
    total += theta[1] * float(lane_g.sum())
    dstates[:, 0] += theta[1] * lane_g * (-lane_d / params.lane_sigma**2)

    hinge_l = np.maximum(road.left_edge - x, 0.0)
    hinge_r = np.maximum(x - road.right_edge_at(y), 0.0)
    total += theta[2] * float((hinge_l**2 + hinge_r**2).sum())
    dstates[:, 0] += theta[2] * (-2.0 * hinge_l + 2.0 * hinge_r)
    if road.exit is not None:
        dstates[:, 1] += theta[2] * 2.0 * hinge_r * (-road.right_edge_deriv_at(y))

    speed_d = speed - params.target_speed
    total += theta[3] * float(-(speed_d**2).sum())
    dstates[:, 3] += theta[3] * (-2.0 * speed_d)

    total += theta[4] * float(-(controls_used[:, 0] ** 2).sum())
    total += theta[5] * float(-(controls_used[:, 1] ** 2).sum())
    dcontrols[:, 0] = theta[4] * (-2.0 * controls_used[:, 0])
    dcontrols[:, 1] = theta[5] * (-2.0 * controls_used[:, 1])

    return total, dstates, dcontrols


def reward_term_and_grads(
    state: np.ndarray,
    control: np.ndarray,
    others: np.ndarray,
    road: RoadLayout,
    params: RewardParams,
) -> tuple[float, np.ndarray, np.ndarray]:
    """theta . phi for one step plus gradients w.r.t. state (4,) and control (2,)."""
    others3 = others[:, None, :] if others.shape[0] else np.zeros((0, 1, 4))
    total, dstates, dcontrols = reward_terms_batch(
        state[None, :], control[None, :], others3, road, params
    )
    return total, dstates[0], dcontrols[0]


def nominal_reward(
    x0: CarState,
    controls: Sequence[ControlInput],
    env: EnvironmentSnapshot,
    params: RewardParams,
    dyn: DynamicsParams,
) -> float:
    """Sum of theta . phi over the horizon: states t = 0..T from the rollout,
    with the control at the terminal index repeating the last one."""
    if len(controls) != params.horizon:
        raise ValueError(
            f"expected {params.horizon} controls, got {len(controls)}"
        )
    control_arr = np.array([c.as_array() for c in controls])
    states = rollout_array(x0.as_array(), control_arr, dyn)
    return nominal_reward_array(states, control_arr, env, params)


def nominal_reward_array(
    states: np.ndarray,
    controls: np.ndarray,
    env: EnvironmentSnapshot,
    params: RewardParams,
) -> float:
    """Reward for a pre-rolled trajectory; controls (T, 2), states (T+1, 4).

    The control at the terminal index repeats the last one.
    """
    controls_used = np.vstack([controls, controls[-1:]])
    total, _, _ = reward_terms_batch(states, controls_used, env.others, env.road, params)
    return total
