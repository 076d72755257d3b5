"""Discrete-time point-mass vehicle dynamics.

State is (x, y, heading, speed): x lateral, y longitudinal, heading
measured from the +x axis, speed a nonnegative scalar. Controls are a
steering-rate coefficient and a longitudinal acceleration.

The step is a semi-implicit Euler discretization of

    (x', y', heading', speed') = (s*cos(h), s*sin(h), s*steering, accel - friction*s)

speed and heading advance with derivatives taken at the input state;
positions then advance using the *updated* speed and heading. The
semi-implicit form is what lets the first control of a planned sequence
move the first-step displacement, which the imitation penalty needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CarState",
    "ControlInput",
    "DynamicsParams",
    "step",
    "rollout",
    "step_jacobians",
    "wrap_angle",
]


def wrap_angle(angle):
    """Reduce an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.remainder(np.asarray(angle) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class CarState:
    """Physical state of one vehicle."""

    x: float
    y: float
    heading: float
    speed: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading, self.speed], dtype=float)

    @staticmethod
    def from_array(arr) -> "CarState":
        return CarState(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))

    def translated(self, dx: float, dy: float) -> "CarState":
        return CarState(self.x + dx, self.y + dy, self.heading, self.speed)


@dataclass(frozen=True)
class ControlInput:
    """Steering-rate coefficient (scaled by speed) and acceleration."""

    steering: float
    accel: float

    def as_array(self) -> np.ndarray:
        return np.array([self.steering, self.accel], dtype=float)

    @staticmethod
    def from_array(arr) -> "ControlInput":
        return ControlInput(float(arr[0]), float(arr[1]))


@dataclass(frozen=True)
class DynamicsParams:
    """Integration step, linear friction and control bounds."""

    dt: float = 0.1
    friction: float = 0.0
    steering_max: float = 1.0
    accel_max: float = 4.0

    def validate(self) -> None:
        if not (self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.friction < 0.0:
            raise ValueError(f"friction must be nonnegative, got {self.friction}")


def _check_finite(name: str, values) -> None:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite {name}: {values}")


def step_array(state: np.ndarray, control: np.ndarray, params: DynamicsParams) -> np.ndarray:
    """One dynamics step on raw arrays. No validation; hot path."""
    dt = params.dt
    x, y, heading, speed = state
    steering, accel = control
    new_speed = speed + dt * (accel - params.friction * speed)
    if new_speed < 0.0:
        new_speed = 0.0
    new_heading = heading + dt * new_speed * steering
    new_x = x + dt * new_speed * math.cos(new_heading)
    new_y = y + dt * new_speed * math.sin(new_heading)
    return np.array([new_x, new_y, new_heading, new_speed])


def step(state: CarState, control: ControlInput, params: DynamicsParams) -> CarState:
    """Advance one vehicle state by one time step.

    Raises ValueError on non-finite inputs or dt <= 0. Control bounds are
    the caller's contract: the planner deliberately evaluates candidate
    controls outside the box and penalizes them smoothly.
    """
    params.validate()
    _check_finite("state", state.as_array())
    _check_finite("control", control.as_array())
    return CarState.from_array(step_array(state.as_array(), control.as_array(), params))


def rollout_array(x0: np.ndarray, controls: np.ndarray, params: DynamicsParams) -> np.ndarray:
    """Roll out T controls from x0, returning a (T+1, 4) state array."""
    T = len(controls)
    states = np.empty((T + 1, 4))
    states[0] = x0
    for t in range(T):
        states[t + 1] = step_array(states[t], controls[t], params)
    return states


def rollout(
    x0: CarState, controls: Sequence[ControlInput], params: DynamicsParams
) -> list[CarState]:
    """Apply a control sequence; returns T+1 states with states[0] == x0."""
    params.validate()
    _check_finite("initial state", x0.as_array())
    states = [x0]
    for t, control in enumerate(controls):
        try:
            states.append(step(states[-1], control, params))
        except ValueError as err:
            raise ValueError(f"rollout failed at control index {t}: {err}") from err
    return states


def step_jacobians(
    state: np.ndarray, control: np.ndarray, params: DynamicsParams
) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of step_array: (d next/d state) 4x4 and (d next/d control) 4x2.

    At the speed clamp (new speed pinned to 0) the speed row uses the
    zero subgradient, matching the clamped value path.
    """
    dt = params.dt
    _, _, heading, speed = state
    steering, accel = control

    raw_speed = speed + dt * (accel - params.friction * speed)
    clamped = raw_speed < 0.0
    new_speed = 0.0 if clamped else raw_speed
    new_heading = heading + dt * new_speed * steering

    # d new_speed / (d speed, d accel); zero when the clamp is active.
    ds_dspeed = 0.0 if clamped else 1.0 - dt * params.friction
    ds_daccel = 0.0 if clamped else dt

    dh_dheading = 1.0
    dh_dspeed = dt * steering * ds_dspeed
    dh_dsteer = dt * new_speed
    dh_daccel = dt * steering * ds_daccel

    cos_h = math.cos(new_heading)
    sin_h = math.sin(new_heading)

    A = np.zeros((4, 4))
    B = np.zeros((4, 2))

    A[0, 0] = 1.0
    A[0, 2] = -dt * new_speed * sin_h * dh_dheading
    A[0, 3] = dt * (ds_dspeed * cos_h - new_speed * sin_h * dh_dspeed)
    A[1, 1] = 1.0
    A[1, 2] = dt * new_speed * cos_h * dh_dheading
    A[1, 3] = dt * (ds_dspeed * sin_h + new_speed * cos_h * dh_dspeed)
    A[2, 2] = dh_dheading
    A[2, 3] = dh_dspeed
    A[3, 3] = ds_dspeed

    B[0, 0] = -dt * new_speed * sin_h * dh_dsteer
    B[0, 1] = dt * (ds_daccel * cos_h - new_speed * sin_h * dh_daccel)
    B[1, 0] = dt * new_speed * cos_h * dh_dsteer
    B[1, 1] = dt * (ds_daccel * sin_h + new_speed * cos_h * dh_daccel)
    B[2, 0] = dh_dsteer
    B[2, 1] = dh_daccel
    B[3, 1] = ds_daccel

    return A, B
