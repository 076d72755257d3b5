"""Receding-horizon planner.

At each step the planner locally maximizes the driving reward (optionally
augmented with the cohesion penalty) over a length-T control sequence with
L-BFGS, applies the first control, and re-plans. Gradients are exact
chain-rule derivatives propagated backward through the rollout; control
bounds are enforced by a smooth quadratic penalty outside the box plus
clipping of the applied control.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import minimize

from .dynamics import CarState, ControlInput, DynamicsParams, step_array, step_jacobians
from .features import EnvironmentSnapshot, RewardParams, reward_terms_batch
from .social import (
    GroupStatistics,
    NormalizationConstants,
    penalty_value_and_grad_wrt_x1,
)

__all__ = [
    "PlannerConfig",
    "PlanResult",
    "PlanningError",
    "Objective",
    "plan",
    "gradient",
    "MpcController",
]


class PlanningError(RuntimeError):
    """Raised when the optimizer hits a non-finite objective or gradient."""


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 5
    mode: str = "nominal"  # "nominal" | "cohesive"
    beta: float = 1.0
    max_iter: int = 60
    gtol: float = 1e-3
    maxls: int = 20  # line-search steps per L-BFGS iteration
    warm_start: bool = True
    init_rule: str = "zeros"
    bound_penalty_weight: float = 400.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.mode not in ("nominal", "cohesive"):
            raise ValueError(f"unknown planner mode {self.mode!r}")
        if self.init_rule != "zeros":
            raise ValueError(f"unknown init rule {self.init_rule!r}")


@dataclass(frozen=True)
class PlanResult:
    controls: np.ndarray  # (T, 2) optimized sequence
    objective: float
    iterations: int
    grad_norm: float

    def first_control(self, dyn: DynamicsParams) -> ControlInput:
        """First control clipped to the box; this is what gets applied."""
        steering = float(np.clip(self.controls[0, 0], -dyn.steering_max, dyn.steering_max))
        accel = float(np.clip(self.controls[0, 1], -dyn.accel_max, dyn.accel_max))
        return ControlInput(steering, accel)


class Objective:
    """Reward over a flattened control sequence, with exact gradients.

    The cohesion term applies only to the first planned state pair; with
    beta == 0 (or nominal mode) the penalty branch is skipped entirely so
    the cohesive objective is bit-identical to the nominal one.
    """

    def __init__(
        self,
        x0: CarState,
        env: EnvironmentSnapshot,
        reward_params: RewardParams,
        dyn: DynamicsParams,
        cfg: PlannerConfig,
        stats: Optional[GroupStatistics] = None,
        norm: Optional[NormalizationConstants] = None,
    ):
        self.x0 = x0.as_array()
        self.env = env
        self.reward_params = reward_params
        self.dyn = dyn
        self.cfg = cfg
        self.horizon = cfg.horizon
        self.cohesive = cfg.mode == "cohesive" and cfg.beta > 0.0
        if self.cohesive and stats is None:
            raise ValueError("cohesive objective requires group statistics")
        self.stats = stats
        self.norm = norm or NormalizationConstants()

    @property
    def dim(self) -> int:
        return 2 * self.horizon

    def value(self, u_flat: np.ndarray) -> float:
        return self.value_and_grad(u_flat)[0]

    def gradient(self, u_flat: np.ndarray) -> np.ndarray:
        return self.value_and_grad(u_flat)[1]

    def value_and_grad(self, u_flat: np.ndarray) -> tuple[float, np.ndarray]:
        T = self.horizon
        u = np.asarray(u_flat, dtype=float).reshape(T, 2)
        dyn = self.dyn

        states = np.empty((T + 1, 4))
        states[0] = self.x0
        As = np.empty((T, 4, 4))
        Bs = np.empty((T, 4, 2))
        for t in range(T):
            As[t], Bs[t] = step_jacobians(states[t], u[t], dyn)
            states[t + 1] = step_array(states[t], u[t], dyn)

        # the terminal index repeats the last control
        controls_used = np.empty((T + 1, 2))
        controls_used[:T] = u
        controls_used[T] = u[T - 1]
        total, state_grads, dcontrols = reward_terms_batch(
            states, controls_used, self.env.others, self.env.road, self.reward_params
        )
        du = dcontrols[:T].copy()
        du[T - 1] += dcontrols[T]

        if self.cohesive:
            pval, dp_dx1 = penalty_value_and_grad_wrt_x1(
                states[0], states[1], self.stats, self.norm
            )
            total -= self.cfg.beta * pval
            state_grads[1] -= self.cfg.beta * dp_dx1

        # smooth quadratic penalty outside the control box
        w = self.cfg.bound_penalty_weight
        bounds = np.array([dyn.steering_max, dyn.accel_max])
        over = np.abs(u) - bounds
        mask = over > 0.0
        if mask.any():
            total -= w * float(np.sum(over[mask] ** 2))
            du[mask] -= 2.0 * w * over[mask] * np.sign(u[mask])

        lam = state_grads[T]
        for t in range(T - 1, -1, -1):
            du[t] += Bs[t].T @ lam
            lam = state_grads[t] + As[t].T @ lam

        return total, du.reshape(-1)


def gradient(objective: Union[Objective, Callable[[np.ndarray], float]], controls) -> np.ndarray:
    """Gradient of a scalar objective w.r.t. all control entries, flattened.

    Uses the objective's exact gradient when it provides one; otherwise a
    central finite-difference fallback. Non-finite entries are reported
    with their index.
    """
    u = np.asarray(controls, dtype=float).reshape(-1)
    if hasattr(objective, "gradient"):
        g = np.asarray(objective.gradient(u), dtype=float)
    else:
        g = np.empty_like(u)
        h = 1e-6
        for i in range(u.size):
            up = u.copy()
            um = u.copy()
            up[i] += h
            um[i] -= h
            g[i] = (objective(up) - objective(um)) / (2.0 * h)
    bad = np.nonzero(~np.isfinite(g))[0]
    if bad.size:
        raise PlanningError(f"non-finite gradient entries at indices {bad.tolist()}")
    return g


def plan(
    x0: CarState,
    env: EnvironmentSnapshot,
    stats: Optional[GroupStatistics],
    cfg: PlannerConfig,
    reward_params: RewardParams,
    dyn: DynamicsParams,
    init: Optional[np.ndarray] = None,
    norm: Optional[NormalizationConstants] = None,
) -> PlanResult:
    """Locally maximize the configured reward over a length-T control sequence.

    Returns a sequence whose objective is never below the initialization's;
    terminates when the gradient norm drops under cfg.gtol or the iteration
    budget runs out. Raises PlanningError on non-finite objective values.
    """
    objective = Objective(x0, env, reward_params, dyn, cfg, stats=stats, norm=norm)
    if init is None:
        u0 = np.zeros(objective.dim)
    else:
        u0 = np.asarray(init, dtype=float).reshape(objective.dim).copy()

    def negated(u):
        value, grad = objective.value_and_grad(u)
        if not np.isfinite(value):
            raise PlanningError(f"non-finite objective at iterate {u.tolist()}")
        return -value, -grad

    res = minimize(
        negated,
        u0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iter, "gtol": cfg.gtol, "maxls": cfg.maxls},
    )
    u_star = res.x
    value = -float(res.fun)
    init_value = objective.value(u0)
    if value < init_value:
        # never return a point below the initialization
        u_star = u0
        value = init_value
    grad_norm = float(np.linalg.norm(objective.gradient(u_star)))
    return PlanResult(
        controls=u_star.reshape(cfg.horizon, 2),
        objective=value,
        iterations=int(res.nit),
        grad_norm=grad_norm,
    )


class MpcController:
    """Plan, apply the first control, shift the solution, repeat."""

    def __init__(
        self,
        cfg: PlannerConfig,
        reward_params: RewardParams,
        dyn: DynamicsParams,
        norm: Optional[NormalizationConstants] = None,
    ):
        self.cfg = cfg
        self.reward_params = reward_params
        self.dyn = dyn
        self.norm = norm
        self._warm: Optional[np.ndarray] = None
        self.last_result: Optional[PlanResult] = None

    def reset(self) -> None:
        self._warm = None
        self.last_result = None

    def step(
        self,
        x0: CarState,
        env: EnvironmentSnapshot,
        stats: Optional[GroupStatistics],
    ) -> ControlInput:
        init = self._warm if (self.cfg.warm_start and self._warm is not None) else None
        result = plan(
            x0, env, stats, self.cfg, self.reward_params, self.dyn, init=init, norm=self.norm
        )
        self.last_result = result
        if self.cfg.warm_start:
            shifted = np.roll(result.controls, -1, axis=0)
            shifted[-1] = result.controls[-1]
            self._warm = shifted.reshape(-1)
        return result.first_control(self.dyn)
