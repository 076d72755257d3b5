import math

import numpy as np
import pytest

from socialdrive import (
    CarState,
    ControlInput,
    DynamicsParams,
    EnvironmentSnapshot,
    RewardParams,
    RoadLayout,
    nominal_reward,
    phi,
    step,
)
from socialdrive.features import (
    FEATURE_DIM,
    predict_constant_velocity,
    reward_term_and_grads,
)

ROAD = RoadLayout()
DYN = DynamicsParams()


def make_params(**kw):
    return RewardParams(**kw)


def test_phi_optimum_components():
    params = make_params(target_lane=1, target_speed=5.0)
    state = CarState(ROAD.lane_center(1), 0.0, math.pi / 2, 5.0)
    feats = phi(state, ControlInput(0, 0), [], ROAD, params)
    assert feats[0] == 0.0  # no other cars
    assert feats[1] == 1.0  # lane Gaussian at its peak
    assert feats[2] == 0.0  # inside the road
    assert feats[3] == 0.0  # at target speed
    assert feats[4] == 0.0 and feats[5] == 0.0


def test_phi_coincident_car_hits_gaussian_peak():
    params = make_params()
    state = CarState(3.0, 10.0, math.pi / 2, 5.0)
    other = CarState(3.0, 10.0, math.pi / 2, 5.0)
    feats = phi(state, ControlInput(0, 0), [other], ROAD, params)
    assert feats[0] == 1.0


def test_phi_lane_feature_two_sigma():
    # one lane-width off target with sigma = lane_width / 2 -> exp(-2)
    params = make_params(target_lane=1, lane_sigma=ROAD.lane_width / 2)
    state = CarState(ROAD.lane_center(2), 0.0, math.pi / 2, 5.0)
    feats = phi(state, ControlInput(0, 0), [], ROAD, params)
    assert feats[1] == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_boundary_hinge():
    params = make_params()
    inside = phi(CarState(0.0, 0.0, 0, 1), ControlInput(0, 0), [], ROAD, params)
    assert inside[2] == 0.0
    outside = phi(CarState(ROAD.base_right_edge + 0.5, 0.0, 0, 1), ControlInput(0, 0), [], ROAD, params)
    assert outside[2] == pytest.approx(0.25, rel=1e-12)
    far_left = phi(CarState(ROAD.left_edge - 2.0, 0.0, 0, 1), ControlInput(0, 0), [], ROAD, params)
    assert far_left[2] == pytest.approx(4.0, rel=1e-12)


def _random_env(rng, horizon, n_cars=3):
    others = np.zeros((n_cars, horizon + 1, 4))
    for c in range(n_cars):
        x = rng.uniform(-1, 7)
        y = rng.uniform(2, 12)
        heading = math.pi / 2 + rng.normal(0, 0.2)
        speed = rng.uniform(3, 7)
        for t in range(horizon + 1):
            others[c, t] = [x, y + speed * DYN.dt * t, heading, speed]
    return EnvironmentSnapshot(ROAD, others)


def test_nominal_reward_zero_theta():
    rng = np.random.default_rng(0)
    params = make_params(theta=np.zeros(FEATURE_DIM), horizon=4)
    env = _random_env(rng, 4)
    controls = [ControlInput(*rng.uniform(-1, 1, 2)) for _ in range(4)]
    assert nominal_reward(CarState(3, 0, math.pi / 2, 5), controls, env, params, DYN) == 0.0


def test_nominal_reward_single_feature_linearity():
    rng = np.random.default_rng(1)
    x0 = CarState(3.0, 0.0, math.pi / 2, 5.0)
    env = _random_env(rng, 3)
    controls = [ControlInput(*rng.uniform(-0.5, 0.5, 2)) for _ in range(3)]
    for k in range(FEATURE_DIM):
        theta = np.zeros(FEATURE_DIM)
        theta[k] = 1.0
        params = make_params(theta=theta, horizon=3)
        # oracle: roll out with the public step and sum the k-th feature,
        # repeating the last control at the terminal index
        states = [x0]
        for c in controls:
            states.append(step(states[-1], c, DYN))
        expected = 0.0
        for t in range(4):
            c = controls[min(t, 2)]
            others = [CarState.from_array(a) for a in env.others_at(t)]
            expected += phi(states[t], c, others, ROAD, params)[k]
        got = nominal_reward(x0, controls, env, params, DYN)
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_nominal_reward_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        horizon = int(rng.integers(1, 6))
        theta = rng.normal(0, 2, FEATURE_DIM)
        params = make_params(theta=theta, horizon=horizon)
        env = _random_env(rng, horizon)
        x0 = CarState(rng.uniform(0, 6), 0.0, math.pi / 2 + rng.normal(0, 0.1), rng.uniform(2, 7))
        controls = [ControlInput(*rng.uniform(-1, 1, 2)) for _ in range(horizon)]

        states = [x0]
        for c in controls:
            states.append(step(states[-1], c, DYN))
        expected = 0.0
        for t in range(horizon + 1):
            c = controls[min(t, horizon - 1)]
            others = [CarState.from_array(a) for a in env.others_at(t)]
            expected += float(theta @ phi(states[t], c, others, ROAD, params))
        got = nominal_reward(x0, controls, env, params, DYN)
        assert got == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_reward_linear_in_theta():
    rng = np.random.default_rng(3)
    x0 = CarState(3.0, 0.0, math.pi / 2, 5.0)
    env = _random_env(rng, 3)
    controls = [ControlInput(*rng.uniform(-1, 1, 2)) for _ in range(3)]
    t1 = rng.normal(0, 1, FEATURE_DIM)
    t2 = rng.normal(0, 1, FEATURE_DIM)
    r1 = nominal_reward(x0, controls, env, make_params(theta=t1, horizon=3), DYN)
    r2 = nominal_reward(x0, controls, env, make_params(theta=t2, horizon=3), DYN)
    r12 = nominal_reward(x0, controls, env, make_params(theta=2 * t1 + 3 * t2, horizon=3), DYN)
    assert r12 == pytest.approx(2 * r1 + 3 * r2, rel=1e-10, abs=1e-10)


def test_collision_feature_monotone_in_lateral_distance():
    params = make_params()
    other = CarState(3.0, 10.0, math.pi / 2, 5.0)
    values = []
    for lateral in np.linspace(0.0, 6.0, 40):
        state = CarState(3.0 + lateral, 10.0, math.pi / 2, 5.0)
        values.append(phi(state, ControlInput(0, 0), [other], ROAD, params)[0])
    diffs = np.diff(values)
    assert np.all(diffs <= 1e-15)


def test_reward_term_gradients_match_fd():
    rng = np.random.default_rng(4)
    params = make_params()
    h = 1e-6
    for _ in range(20):
        state = np.array(
            [rng.uniform(-2, 9), rng.uniform(0, 20), math.pi / 2 + rng.normal(0, 0.3), rng.uniform(0, 8)]
        )
        control = rng.uniform(-1.5, 1.5, 2)
        others = np.column_stack(
            [rng.uniform(-1, 8, 2), rng.uniform(0, 20, 2), rng.normal(math.pi / 2, 0.3, 2), rng.uniform(2, 7, 2)]
        )
        _, dstate, dcontrol = reward_term_and_grads(state, control, others, ROAD, params)
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            up, _, _ = reward_term_and_grads(state + e, control, others, ROAD, params)
            dn, _, _ = reward_term_and_grads(state - e, control, others, ROAD, params)
            fd = (up - dn) / (2 * h)
            assert dstate[i] == pytest.approx(fd, rel=1e-5, abs=1e-6)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            up, _, _ = reward_term_and_grads(state, control + e, others, ROAD, params)
            dn, _, _ = reward_term_and_grads(state, control - e, others, ROAD, params)
            fd = (up - dn) / (2 * h)
            assert dcontrol[i] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_exit_road_boundary_widens():
    from socialdrive import ExitLane

    road = RoadLayout(exit=ExitLane(lane_index=2, y_start=20.0, y_end=32.0, lateral_offset=3.0))
    assert road.right_edge_at(0.0) == road.base_right_edge
    assert road.right_edge_at(32.0) == pytest.approx(road.base_right_edge + 3.0)
    assert road.right_edge_at(26.0) == pytest.approx(road.base_right_edge + 1.5)
    # derivative is consistent with finite differences along the ramp
    h = 1e-6
    for y in (19.0, 22.0, 26.0, 31.0, 40.0):
        fd = (road.right_edge_at(y + h) - road.right_edge_at(y - h)) / (2 * h)
        assert road.right_edge_deriv_at(y) == pytest.approx(fd, abs=1e-6)


def test_predict_constant_velocity():
    current = np.array([[1.0, 10.0, math.pi / 2, 5.0]])
    previous = np.array([[1.0, 9.5, math.pi / 2, 5.0]])
    pred = predict_constant_velocity(current, previous, 3, 0.1)
    assert pred.shape == (1, 4, 4)
    assert pred[0, :, 1] == pytest.approx([10.0, 10.5, 11.0, 11.5])
    assert np.all(pred[0, :, 0] == 1.0)
    assert np.all(pred[0, :, 3] == 5.0)
    held = predict_constant_velocity(current, None, 3, 0.1)
    assert np.all(held[0, :, 1] == 10.0)


def test_lane_index_clipping():
    assert ROAD.lane_index(-5.0) == 0
    assert ROAD.lane_index(3.2) == 1
    assert ROAD.lane_index(50.0) == ROAD.lane_count - 1


def test_environment_snapshot_shape_validation():
    with pytest.raises(ValueError):
        EnvironmentSnapshot(ROAD, np.zeros((2, 3)))
    empty = EnvironmentSnapshot(ROAD, np.zeros((0, 0, 4)))
    assert empty.others_at(0).shape == (0, 4)


def test_reward_params_validation():
    with pytest.raises(ValueError):
        RewardParams(theta=np.zeros(3))
    with pytest.raises(ValueError):
        RewardParams(horizon=0)
