"""Pairwise social features of other cars, grouping, and the cohesion penalty.

A social feature vector is computed on two sequential states of another
car's trajectory and captures its change in position and orientation,
normalized so components are comparable across units:

  0 d_x        lateral displacement / position scale
  1 d_y        longitudinal displacement / position scale
  2 d_heading  heading change reduced to (-pi, pi], / heading scale
  3 disp_norm  displacement norm / position scale
  4 dir_x      unit direction of displacement (zero below motion threshold)
  5 dir_y

Samples are grouped by where and when they were generated relative to the
robot (same position at any time / same lane recently / nearby on the road
recently). Per (feature, group) cell we keep streaming mean and unbiased
variance; the penalty is the variance-weighted squared distance between
each active cell mean and the robot's own first-step features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import CarState, wrap_angle
from .features import EnvironmentSnapshot, RewardParams, RoadLayout
from .dynamics import ControlInput, DynamicsParams, rollout_array

__all__ = [
    "SOCIAL_FEATURE_NAMES",
    "SOCIAL_FEATURE_DIM",
    "NUM_GROUPS",
    "MOTION_THRESHOLD",
    "NormalizationConstants",
    "SocialFeatureVector",
    "SocialSample",
    "GroupConfig",
    "GroupStatistics",
    "SampleHistory",
    "compute_psi",
    "psi_array",
    "assign_groups",
    "update_statistics",
    "cohesion_penalty",
    "cohesive_reward",
]

SOCIAL_FEATURE_NAMES = ("d_x", "d_y", "d_heading", "disp_norm", "dir_x", "dir_y")
SOCIAL_FEATURE_DIM = len(SOCIAL_FEATURE_NAMES)
NUM_GROUPS = 3

# below this raw displacement (meters) the direction is considered undefined
MOTION_THRESHOLD = 1e-3


@dataclass(frozen=True)
class NormalizationConstants:
    """Maximum expected difference per raw feature; divides the raw values
    so that a variance in radians is comparable with one in meters."""

    position_scale: float = 4.5  # 1.5 * lane_width * (max_speed * dt) at defaults
    heading_scale: float = math.pi

    def validate(self) -> None:
        if self.position_scale <= 0 or self.heading_scale <= 0:
            raise ValueError("normalization constants must be positive")


@dataclass(frozen=True)
class SocialFeatureVector:
    d_x: float
    d_y: float
    d_heading: float
    disp_norm: float
    dir_x: float
    dir_y: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.d_x, self.d_y, self.d_heading, self.disp_norm, self.dir_x, self.dir_y]
        )

    @staticmethod
    def from_array(arr) -> "SocialFeatureVector":
        return SocialFeatureVector(*(float(v) for v in arr))


@dataclass(frozen=True)
class SocialSample:
    """One pairwise feature vector plus where/when it came from."""

    features: SocialFeatureVector
    source_car: str
    time: int  # step index at which the state pair begins
    source_state: CarState


@dataclass(frozen=True)
class GroupConfig:
    """Membership rules for the three sample groups."""

    position_radius: float = 2.0  # group 1: near the robot's position, any time
    road_radius: float = 25.0  # group 3: nearby on the road, recent
    recency_window: int = 21  # steps; groups 2 and 3 hold the last 20 pairs
    variance_floor: float = 1e-4
    norm: NormalizationConstants = field(default_factory=NormalizationConstants)

    def validate(self) -> None:
        if self.position_radius <= 0 or self.road_radius <= 0:
            raise ValueError("group radii must be positive")
        if self.recency_window <= 0:
            raise ValueError("recency window must be positive")
        if self.variance_floor <= 0:
            raise ValueError("variance floor must be positive")
        self.norm.validate()


def _wrap_scalar(angle: float) -> float:
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def psi_array(s0: np.ndarray, s1: np.ndarray, norm: NormalizationConstants) -> np.ndarray:
    """Social feature vector for a raw state pair."""
    dx = s1[0] - s0[0]
    dy = s1[1] - s0[1]
    dheading = _wrap_scalar(s1[2] - s0[2])
    disp = math.hypot(dx, dy)
    if disp < MOTION_THRESHOLD:
        dir_x = 0.0
        dir_y = 0.0
    else:
        dir_x = dx / disp
        dir_y = dy / disp
    return np.array(
        [
            dx / norm.position_scale,
            dy / norm.position_scale,
            dheading / norm.heading_scale,
            disp / norm.position_scale,
            dir_x,
            dir_y,
        ]
    )


def compute_psi(s0: CarState, s1: CarState, norm: NormalizationConstants) -> SocialFeatureVector:
    a0 = s0.as_array()
    a1 = s1.as_array()
    if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(a1))):
        raise ValueError("non-finite states in social feature computation")
    return SocialFeatureVector.from_array(psi_array(a0, a1, norm))


def psi_jacobian_wrt_s1(
    s0: np.ndarray, s1: np.ndarray, norm: NormalizationConstants
) -> np.ndarray:
    """(6, 4) Jacobian of psi_array w.r.t. the second state.

    Below the motion threshold the direction rows are zero (the features
    are constant there) and the displacement-norm row uses the zero
    subgradient at exactly zero displacement.
    """
    dx = s1[0] - s0[0]
    dy = s1[1] - s0[1]
    disp = math.hypot(dx, dy)
    J = np.zeros((6, 4))
    J[0, 0] = 1.0 / norm.position_scale
    J[1, 1] = 1.0 / norm.position_scale
    J[2, 2] = 1.0 / norm.heading_scale
    if disp > 0.0:
        J[3, 0] = dx / disp / norm.position_scale
        J[3, 1] = dy / disp / norm.position_scale
    if disp >= MOTION_THRESHOLD:
        inv3 = 1.0 / disp**3
        J[4, 0] = dy * dy * inv3
        J[4, 1] = -dx * dy * inv3
        J[5, 0] = -dx * dy * inv3
        J[5, 1] = dx * dx * inv3
    return J


def group_membership(
    sample_xy: np.ndarray,
    sample_lane: np.ndarray,
    sample_time: np.ndarray,
    robot: CarState,
    now: int,
    road: RoadLayout,
    cfg: GroupConfig,
) -> np.ndarray:
    """(N, 3) boolean membership for arrays of sample metadata."""
    d2 = (sample_xy[:, 0] - robot.x) ** 2 + (sample_xy[:, 1] - robot.y) ** 2
    recent = (now - sample_time) < cfg.recency_window
    near_position = d2 <= cfg.position_radius**2
    same_lane = sample_lane == road.lane_index(robot.x)
    on_road = d2 <= cfg.road_radius**2
    return np.column_stack([near_position, same_lane & recent, on_road & recent])


def assign_groups(
    sample: SocialSample, robot: CarState, now: int, road: RoadLayout, cfg: GroupConfig
) -> set[int]:
    """Groups (1-based subset of {1, 2, 3}) the sample belongs to."""
    if sample.time > now:
        raise ValueError("sample from the future")
    xy = np.array([[sample.source_state.x, sample.source_state.y]])
    lane = np.array([road.lane_index(sample.source_state.x)])
    t = np.array([sample.time])
    mask = group_membership(xy, lane, t, robot, now, road, cfg)[0]
    return {j + 1 for j in range(NUM_GROUPS) if mask[j]}


class GroupStatistics:
    """Streaming per-(feature, group) sample mean and unbiased variance.

    Accumulation is Welford's single-pass update, vectorized over the
    feature axis. Variances are lower-clamped to the configured floor;
    cells with fewer than two samples are inactive and excluded from the
    penalty.
    """

    def __init__(self, variance_floor: float):
        self.variance_floor = variance_floor
        self.count = np.zeros((SOCIAL_FEATURE_DIM, NUM_GROUPS), dtype=int)
        self.mean = np.zeros((SOCIAL_FEATURE_DIM, NUM_GROUPS))
        self._m2 = np.zeros((SOCIAL_FEATURE_DIM, NUM_GROUPS))
        self._cache: Optional[tuple[np.ndarray, np.ndarray]] = None

    def push(self, features: np.ndarray, groups: Iterable[int]) -> None:
        """Add one sample's feature vector to each group in `groups` (0-based)."""
        self._cache = None
        for j in groups:
            n = self.count[0, j] + 1
            self.count[:, j] = n
            delta = features - self.mean[:, j]
            self.mean[:, j] += delta / n
            self._m2[:, j] += delta * (features - self.mean[:, j])

    def _active_and_variance(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            act = self.count >= 2
            out = np.full((SOCIAL_FEATURE_DIM, NUM_GROUPS), np.nan)
            raw = self._m2 / np.maximum(self.count - 1, 1)
            out[act] = np.maximum(raw[act], self.variance_floor)
            self._cache = (act, out)
        return self._cache

    @property
    def active(self) -> np.ndarray:
        return self._active_and_variance()[0]

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance clamped to the floor; NaN where inactive."""
        return self._active_and_variance()[1]

    def precisions(self) -> np.ndarray:
        """1 / variance with inactive cells encoded as 0."""
        act, var = self._active_and_variance()
        out = np.zeros((SOCIAL_FEATURE_DIM, NUM_GROUPS))
        out[act] = 1.0 / var[act]
        return out


def update_statistics(
    samples: Iterable[tuple[SocialSample, Iterable[int]]],
    variance_floor: float,
) -> GroupStatistics:
    """Build statistics from (sample, 1-based group subset) pairs."""
    stats = GroupStatistics(variance_floor)
    for sample, groups in samples:
        stats.push(sample.features.as_array(), [g - 1 for g in groups])
    return stats


def cohesion_penalty(
    x0: CarState,
    x1: CarState,
    stats: GroupStatistics,
    norm: NormalizationConstants,
) -> float:
    psi = psi_array(x0.as_array(), x1.as_array(), norm)
    return _penalty_from_psi(psi, stats)


def _penalty_from_psi(psi: np.ndarray, stats: GroupStatistics) -> float:
    act = stats.active
    if not act.any():
        return 0.0
    var = stats.variance
    diff = stats.mean - psi[:, None]
    return float(np.sum((diff[act] ** 2) / var[act]))


def _penalty_grad_wrt_psi(psi: np.ndarray, stats: GroupStatistics) -> np.ndarray:
    act = stats.active
    out = np.zeros(SOCIAL_FEATURE_DIM)
    if not act.any():
        return out
    var = stats.variance
    diff = np.where(act, stats.mean - psi[:, None], 0.0)
    contrib = np.where(act, -2.0 * diff / np.where(act, var, 1.0), 0.0)
    return contrib.sum(axis=1)


def penalty_value_and_grad_wrt_x1(
    x0: np.ndarray, x1: np.ndarray, stats: GroupStatistics, norm: NormalizationConstants
) -> tuple[float, np.ndarray]:
    """Penalty plus its gradient w.r.t. the first rolled-out state (4,)."""
    psi = psi_array(x0, x1, norm)
    value = _penalty_from_psi(psi, stats)
    dpsi = _penalty_grad_wrt_psi(psi, stats)
    J = psi_jacobian_wrt_s1(x0, x1, norm)
    return value, J.T @ dpsi


def cohesive_reward(
    x0: CarState,
    controls: Sequence[ControlInput],
    env: EnvironmentSnapshot,
    params: RewardParams,
    dyn: DynamicsParams,
    stats: GroupStatistics,
    beta: float,
    norm: Optional[NormalizationConstants] = None,
) -> float:
    """Nominal reward minus beta times the cohesion penalty on the first
    planned state pair. With beta == 0 this is exactly the nominal reward."""
    from .features import nominal_reward_array

    if len(controls) != params.horizon:
        raise ValueError(f"expected {params.horizon} controls, got {len(controls)}")
    control_arr = np.array([c.as_array() for c in controls])
    states = rollout_array(x0.as_array(), control_arr, dyn)
    value = nominal_reward_array(states, control_arr, env, params)
    if beta == 0.0:
        return value
    norm = norm or NormalizationConstants()
    penalty = _penalty_from_psi(psi_array(states[0], states[1], norm), stats)
    return value - beta * penalty


class SampleHistory:
    """All observed state pairs of other cars since scenario start.

    Rebuilt statistics each step: group predicates (radius, lane, recency)
    do the filtering against the full history. Single writer per
    simulation; snapshots handed to the planner are read-only.
    """

    def __init__(self, norm: NormalizationConstants):
        self.norm = norm
        self._features: list[np.ndarray] = []
        self._xy: list[tuple[float, float]] = []
        self._lane: list[int] = []
        self._time: list[int] = []
        self._arrays_dirty = True
        self._feat_arr = np.zeros((0, SOCIAL_FEATURE_DIM))
        self._xy_arr = np.zeros((0, 2))
        self._lane_arr = np.zeros(0, dtype=int)
        self._time_arr = np.zeros(0, dtype=int)

    def __len__(self) -> int:
        return len(self._features)

    def add_pair(self, s0: np.ndarray, s1: np.ndarray, time: int, road: RoadLayout) -> None:
        self._features.append(psi_array(s0, s1, self.norm))
        self._xy.append((float(s0[0]), float(s0[1])))
        self._lane.append(road.lane_index(float(s0[0])))
        self._time.append(time)
        self._arrays_dirty = True

    def _refresh(self) -> None:
        if self._arrays_dirty:
            n = len(self._features)
            self._feat_arr = np.array(self._features).reshape(n, SOCIAL_FEATURE_DIM)
            self._xy_arr = np.array(self._xy).reshape(n, 2)
            self._lane_arr = np.array(self._lane, dtype=int)
            self._time_arr = np.array(self._time, dtype=int)
            self._arrays_dirty = False

    def statistics(
        self, robot: CarState, now: int, road: RoadLayout, cfg: GroupConfig
    ) -> GroupStatistics:
        """Assign every sample to groups and stream them into fresh statistics."""
        self._refresh()
        stats = GroupStatistics(cfg.variance_floor)
        if len(self) == 0:
            return stats
        masks = group_membership(
            self._xy_arr, self._lane_arr, self._time_arr, robot, now, road, cfg
        )
        any_group = masks.any(axis=1)
        idx = np.nonzero(any_group)[0]
        for i in idx:
            stats.push(self._feat_arr[i], np.nonzero(masks[i])[0])
        return stats
