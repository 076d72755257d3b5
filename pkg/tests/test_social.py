import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socialdrive import (
    CarState,
    ControlInput,
    DynamicsParams,
    EnvironmentSnapshot,
    GroupConfig,
    NormalizationConstants,
    RewardParams,
    RoadLayout,
    SocialFeatureVector,
    SocialSample,
    assign_groups,
    cohesion_penalty,
    cohesive_reward,
    compute_psi,
    nominal_reward,
    update_statistics,
)
from socialdrive.social import (
    MOTION_THRESHOLD,
    GroupStatistics,
    SOCIAL_FEATURE_DIM,
    psi_array,
)

ROAD = RoadLayout()
UNIT_NORM = NormalizationConstants(position_scale=1.0, heading_scale=1.0)


def make_sample(values, x=0.0, y=0.0, time=0, car="c"):
    vec = SocialFeatureVector(*values)
    return SocialSample(vec, car, time, CarState(x, y, math.pi / 2, 5.0))


def test_psi_pure_y_motion():
    out = compute_psi(CarState(0, 0, 0, 1), CarState(0, 1, 0, 1), UNIT_NORM)
    assert out.as_array() == pytest.approx([0, 1, 0, 1, 0, 1])


def test_psi_no_motion_zeroes_direction():
    s = CarState(2.0, 3.0, 0.5, 1.0)
    out = compute_psi(s, s, UNIT_NORM)
    assert np.all(out.as_array() == 0.0)


def test_psi_345_triangle():
    norm = NormalizationConstants(position_scale=10.0, heading_scale=math.pi)
    out = compute_psi(CarState(0, 0, 0, 1), CarState(3, 4, 0, 1), norm)
    assert out.as_array() == pytest.approx([0.3, 0.4, 0.0, 0.5, 0.6, 0.8])


def test_psi_rejects_nonfinite():
    with pytest.raises(ValueError):
        compute_psi(CarState(float("nan"), 0, 0, 1), CarState(0, 0, 0, 1), UNIT_NORM)


@settings(max_examples=60, deadline=None)
@given(
    x0=st.floats(-10, 10), y0=st.floats(-10, 10),
    dx=st.floats(-2, 2), dy=st.floats(-2, 2),
    h0=st.floats(-3, 3), h1=st.floats(-3, 3),
)
def test_psi_direction_unit_norm_or_zero(x0, y0, dx, dy, h0, h1):
    out = compute_psi(CarState(x0, y0, h0, 1), CarState(x0 + dx, y0 + dy, h1, 1), UNIT_NORM)
    disp = math.hypot(dx, dy)
    if disp >= MOTION_THRESHOLD:
        assert out.dir_x**2 + out.dir_y**2 == pytest.approx(1.0, rel=1e-9)
    else:
        assert out.dir_x == 0.0 and out.dir_y == 0.0
    assert abs(out.d_heading) <= 1.0 + 1e-12  # wrapped then divided by pi


@settings(max_examples=40, deadline=None)
@given(shift_x=st.floats(-50, 50), shift_y=st.floats(-50, 50))
def test_psi_translation_invariance(shift_x, shift_y):
    s0 = CarState(1.25, -0.5, 0.3, 2.0)
    s1 = CarState(1.75, 0.25, 0.4, 2.1)
    base = compute_psi(s0, s1, UNIT_NORM).as_array()
    moved = compute_psi(s0.translated(shift_x, shift_y), s1.translated(shift_x, shift_y), UNIT_NORM).as_array()
    assert moved == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_assign_groups_all_predicates():
    cfg = GroupConfig(recency_window=10)
    robot = CarState(3.0, 10.0, math.pi / 2, 5.0)
    sample = make_sample(np.zeros(6), x=3.0, y=10.0, time=20)
    assert assign_groups(sample, robot, 20, ROAD, cfg) == {1, 2, 3}


def test_assign_groups_none():
    cfg = GroupConfig(position_radius=0.5, recency_window=10)
    robot = CarState(3.0, 10.0, math.pi / 2, 5.0)
    sample = make_sample(np.zeros(6), x=0.0, y=500.0, time=0)
    assert assign_groups(sample, robot, 100, ROAD, cfg) == set()


def test_assign_groups_stale_position_only():
    # at the robot's position but 50 steps old with a 10-step window
    cfg = GroupConfig(recency_window=10)
    robot = CarState(3.0, 10.0, math.pi / 2, 5.0)
    sample = make_sample(np.zeros(6), x=3.0, y=10.0, time=0)
    assert assign_groups(sample, robot, 50, ROAD, cfg) == {1}


def test_assign_groups_rejects_future_sample():
    cfg = GroupConfig()
    robot = CarState(3.0, 10.0, math.pi / 2, 5.0)
    sample = make_sample(np.zeros(6), time=10)
    with pytest.raises(ValueError):
        assign_groups(sample, robot, 5, ROAD, cfg)


def test_update_statistics_mean_and_unbiased_variance():
    samples = [(make_sample(np.full(6, v)), {1}) for v in (1.0, 2.0, 3.0)]
    stats = update_statistics(samples, variance_floor=1e-4)
    assert stats.count[0, 0] == 3
    assert np.all(stats.mean[:, 0] == pytest.approx(2.0))
    assert np.all(stats.variance[:, 0] == pytest.approx(1.0))
    assert not stats.active[:, 1].any()


def test_single_sample_cell_inactive():
    stats = update_statistics([(make_sample(np.ones(6)), {2})], variance_floor=1e-4)
    assert not stats.active.any()
    assert np.all(stats.precisions() == 0.0)


def test_identical_samples_clamp_to_floor():
    samples = [(make_sample(np.full(6, 0.3)), {1}) for _ in range(5)]
    stats = update_statistics(samples, variance_floor=1e-4)
    assert np.all(stats.variance[:, 0] == 1e-4)
    assert np.all(stats.precisions()[:, 0] == 1e4)


def test_streaming_statistics_match_two_pass_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 40))
        values = rng.normal(0, 1, (n, SOCIAL_FEATURE_DIM))
        groups = [set(rng.choice([1, 2, 3], size=rng.integers(1, 4), replace=False).tolist()) for _ in range(n)]
        samples = [(make_sample(values[i]), groups[i]) for i in range(n)]
        stats = update_statistics(samples, variance_floor=1e-12)
        for j in range(3):
            member = np.array([values[i] for i in range(n) if (j + 1) in groups[i]])
            if len(member) >= 2:
                assert stats.mean[:, j] == pytest.approx(member.mean(axis=0), rel=1e-10, abs=1e-12)
                expected_var = np.maximum(member.var(axis=0, ddof=1), 1e-12)
                assert stats.variance[:, j] == pytest.approx(expected_var, rel=1e-10, abs=1e-14)
            else:
                assert not stats.active[:, j].any()


def _stats_with(mean, variance, floor=1e-4, group=0, count=10):
    """Directly constructed statistics for penalty arithmetic tests."""
    stats = GroupStatistics(floor)
    stats.count[:, group] = count
    stats.mean[:, group] = mean
    stats._m2[:, group] = np.asarray(variance) * (count - 1)
    return stats


def test_penalty_zero_when_psi_matches_means():
    x0 = CarState(0, 0, 0, 1)
    x1 = CarState(0, 1, 0, 1)
    psi = psi_array(x0.as_array(), x1.as_array(), UNIT_NORM)
    stats = _stats_with(psi, np.full(6, 0.5))
    assert cohesion_penalty(x0, x1, stats, UNIT_NORM) == 0.0


def test_penalty_single_cell_hand_value():
    # one active cell with mean 1, psi component 0, variance 0.5 -> 2
    x0 = CarState(0, 0, 0, 1)
    x1 = CarState(0, 1, 0, 1)  # psi = (0, 1, 0, 1, 0, 1); d_x component is 0
    stats = GroupStatistics(1e-4)
    stats.count[:, :] = 0
    stats.count[0, 0] = 5
    stats.mean[0, 0] = 1.0
    stats._m2[0, 0] = 0.5 * 4
    # only feature 0 / group 0 has enough samples, but count is per-column;
    # mark the rest of the column with matching values so they contribute 0
    stats.count[:, 0] = 5
    stats.mean[1:, 0] = psi_array(x0.as_array(), x1.as_array(), UNIT_NORM)[1:]
    stats._m2[1:, 0] = 0.5 * 4
    assert cohesion_penalty(x0, x1, stats, UNIT_NORM) == pytest.approx(2.0)


def test_penalty_no_active_cells():
    stats = GroupStatistics(1e-4)
    assert cohesion_penalty(CarState(0, 0, 0, 1), CarState(0, 1, 0, 1), stats, UNIT_NORM) == 0.0


def test_penalty_nonnegative_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        stats = _stats_with(rng.normal(0, 1, 6), np.abs(rng.normal(0, 1, 6)) + 1e-3)
        x0 = CarState(*rng.normal(0, 1, 2), rng.normal(0, 1), abs(rng.normal(2, 1)))
        x1 = CarState(*rng.normal(0, 1, 2), rng.normal(0, 1), abs(rng.normal(2, 1)))
        assert cohesion_penalty(x0, x1, stats, UNIT_NORM) >= 0.0


def test_precision_dominance_halving_variance_doubles_contribution():
    x0 = CarState(0, 0, 0, 1)
    x1 = CarState(0.25, 0.5, 0, 1)
    base_var = np.full(6, 8e-3)
    p1 = cohesion_penalty(x0, x1, _stats_with(np.full(6, 0.75), base_var), UNIT_NORM)
    p2 = cohesion_penalty(x0, x1, _stats_with(np.full(6, 0.75), base_var / 2), UNIT_NORM)
    assert p2 == 2.0 * p1


def test_statistics_translation_invariance():
    rng = np.random.default_rng(6)
    cfg = GroupConfig()
    pairs = []
    for _ in range(30):
        s0 = np.array([rng.uniform(0, 6), rng.uniform(0, 30), math.pi / 2 + rng.normal(0, 0.3), rng.uniform(2, 7)])
        s1 = s0 + np.array([rng.normal(0, 0.2), rng.uniform(0.2, 0.8), rng.normal(0, 0.1), 0.0])
        pairs.append((s0, s1))
    robot = CarState(3.0, 12.0, math.pi / 2, 5.0)

    def build(shift_x, shift_y):
        from socialdrive.social import SampleHistory

        hist = SampleHistory(cfg.norm)
        road = ROAD.translated(shift_x, shift_y)
        for t, (s0, s1) in enumerate(pairs):
            a = s0.copy()
            b = s1.copy()
            a[0] += shift_x
            a[1] += shift_y
            b[0] += shift_x
            b[1] += shift_y
            hist.add_pair(a, b, t, road)
        return hist.statistics(robot.translated(shift_x, shift_y), len(pairs), road, cfg)

    base = build(0.0, 0.0)
    moved = build(8.0, 64.0)  # dyadic shift keeps float arithmetic exact
    assert np.array_equal(base.count, moved.count)
    assert base.mean == pytest.approx(moved.mean, rel=1e-12, abs=1e-12)
    act = base.active
    assert base.variance[act] == pytest.approx(moved.variance[act], rel=1e-12, abs=1e-15)


def test_cohesive_reward_beta_zero_is_nominal():
    rng = np.random.default_rng(7)
    params = RewardParams(horizon=3)
    env = EnvironmentSnapshot(ROAD, np.zeros((0, 4, 4)))
    dyn = DynamicsParams()
    x0 = CarState(3.0, 0.0, math.pi / 2, 5.0)
    controls = [ControlInput(*rng.uniform(-1, 1, 2)) for _ in range(3)]
    stats = _stats_with(rng.normal(0, 1, 6), np.full(6, 0.01))
    r_coh = cohesive_reward(x0, controls, env, params, dyn, stats, beta=0.0)
    r_nom = nominal_reward(x0, controls, env, params, dyn)
    assert r_coh == r_nom


def test_cohesive_reward_matches_oracle():
    rng = np.random.default_rng(8)
    dyn = DynamicsParams()
    params = RewardParams(horizon=4)
    env = EnvironmentSnapshot(ROAD, np.zeros((0, 5, 4)))
    norm = NormalizationConstants()
    for _ in range(10):
        x0 = CarState(rng.uniform(0, 6), 0.0, math.pi / 2 + rng.normal(0, 0.1), rng.uniform(2, 7))
        controls = [ControlInput(*rng.uniform(-1, 1, 2)) for _ in range(4)]
        stats = _stats_with(rng.normal(0, 0.5, 6), np.abs(rng.normal(0, 0.1, 6)) + 1e-3)
        beta = float(abs(rng.normal(0, 2)))
        from socialdrive import step

        x1 = step(x0, controls[0], dyn)
        expected = nominal_reward(x0, controls, env, params, dyn) - beta * cohesion_penalty(x0, x1, stats, norm)
        got = cohesive_reward(x0, controls, env, params, dyn, stats, beta=beta, norm=norm)
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_group_config_validation():
    with pytest.raises(ValueError):
        GroupConfig(position_radius=0.0).validate()
    with pytest.raises(ValueError):
        GroupConfig(variance_floor=0.0).validate()
    with pytest.raises(ValueError):
        GroupConfig(recency_window=0).validate()
