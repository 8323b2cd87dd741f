import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomrl import manifolds as mf
from geomrl import repair
from geomrl.composite import SPD, CompositePoint, CompositeTangent, Euclid, S3, composite_exp, default_point
from geomrl.errors import BadLength, ConfigError, DimensionMismatch, ZeroNormError
from geomrl.policy import (
    CHOLESKY,
    GRL,
    MANDEL,
    NORMALIZE,
    SINGLE_STEP,
    TRAJECTORY,
    ActionAdapter,
    FeatureMap,
    PolicyParams,
    TangentFrame,
    applicable_adapters,
    baseline_map_action,
    check_adapter_supports,
    frame_update,
    grl_map_action,
    initial_theta,
    policy_mean,
    policy_sample,
)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.floats(0, 1))
def test_rbf_features_sum_to_one(n, tau):
    phi = FeatureMap("time-rbf", n)(tau)
    assert phi.shape == (n,)
    assert phi.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(phi >= 0)


def test_feature_kinds():
    assert FeatureMap("constant")(0.3).tolist() == [1.0]
    np.testing.assert_array_equal(FeatureMap("state-linear", state_dim=2)(0, np.array([3.0, 4.0])),
                                  [3, 4, 1])
    with pytest.raises(DimensionMismatch):
        FeatureMap("state-linear", state_dim=2)(0, np.ones(3))
    with pytest.raises(ConfigError):
        FeatureMap("polynomial")


def test_policy_mean_examples():
    f = (S3(),)
    zero = PolicyParams.isotropic(f, np.zeros((4, 3)), 0.1)
    np.testing.assert_array_equal(policy_mean(zero, np.ones(3)).flat, np.zeros(4))
    c = np.array([[0.0], [0.1], [0.2], [0.3]])
    np.testing.assert_array_equal(policy_mean(PolicyParams.isotropic(f, c, 0.1), [1.0]).flat, c[:, 0])
    rng = np.random.default_rng(0)
    theta, phi = rng.standard_normal((4, 5)), rng.standard_normal(5)
    np.testing.assert_allclose(policy_mean(PolicyParams.isotropic(f, theta, 1), phi).flat, theta @ phi)


def test_policy_sample_zero_sigma_is_mean():
    f = (Euclid(2),)
    p = PolicyParams.isotropic(f, np.array([[1.0, 2.0], [3.0, 4.0]]), 0.0)
    phi = np.array([0.5, 0.5])
    np.testing.assert_array_equal(policy_sample(p, phi, np.random.default_rng(1)).flat,
                                  policy_mean(p, phi).flat)


def test_policy_sample_law_of_large_numbers():
    f = (Euclid(3),)
    theta = np.array([[0.5], [-1.0], [2.0]])
    p = PolicyParams.isotropic(f, theta, 0.7)
    rng = np.random.default_rng(2)
    n = 100_000
    draws = np.array([policy_sample(p, [1.0], rng).flat for _ in range(n)])
    assert np.all(np.abs(draws.mean(axis=0) - theta[:, 0]) < 3 * 0.7 / math.sqrt(n) * 1.5)


def test_policy_sample_is_deterministic_per_seed():
    p = PolicyParams.isotropic((S3(),), np.zeros((4, 2)), 0.3)
    a = policy_sample(p, [0.4, 0.6], np.random.default_rng(7)).flat
    b = policy_sample(p, [0.4, 0.6], np.random.default_rng(7)).flat
    np.testing.assert_array_equal(a, b)


def test_full_covariance_noise_has_requested_covariance():
    f = (Euclid(2),)
    cov = np.array([[1.0, 0.6], [0.6, 0.5]])
    p = PolicyParams(f, np.zeros((2, 1)), cov)
    rng = np.random.default_rng(3)
    draws = np.array([policy_sample(p, [1.0], rng).flat for _ in range(50_000)])
    np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.03)


def test_params_shape_checks():
    with pytest.raises(DimensionMismatch):
        PolicyParams.isotropic((S3(),), np.zeros((3, 1)), 0.1)
    with pytest.raises(DimensionMismatch):
        PolicyParams((S3(),), np.zeros((4, 1)), np.zeros((3, 3)))


# -- GRL adapter --------------------------------------------------------------------

def test_grl_same_bases_is_plain_exp():
    rng = np.random.default_rng(4)
    base = CompositePoint((S3(), SPD(2)), (mf.random_quaternion(rng), mf.random_spd(rng, 2)))
    t0 = mf.s3_project(base[0], rng.standard_normal(4) * 0.3)
    a_p = CompositeTangent.from_segments(base.factors, [t0, rng.standard_normal(3) * 0.3])
    action, _ = grl_map_action(TangentFrame.at(base), a_p, hemisphere=False)
    assert action.allclose(composite_exp(base, a_p), atol=1e-12)


def test_grl_zero_action_lands_on_local_base():
    rng = np.random.default_rng(5)
    f = (S3(),)
    p = default_point(f)
    l = CompositePoint(f, (mf.random_quaternion(rng),))
    action, _ = grl_map_action(TangentFrame(p, l, TRAJECTORY), CompositeTangent.zeros(f))
    assert action.allclose(l, atol=1e-12)


def test_grl_single_s3_isometry():
    rng = np.random.default_rng(6)
    f = (S3(),)
    for _ in range(500):
        p = CompositePoint(f, (mf.random_quaternion(rng),))
        l = CompositePoint(f, (mf.random_quaternion(rng),))
        if p[0] @ l[0] < -0.9:
            continue
        t = mf.s3_project(p[0], rng.standard_normal(4))
        t *= rng.uniform(0, 2.5) / np.linalg.norm(t)
        action, a_l = grl_map_action(TangentFrame(p, l, TRAJECTORY), CompositeTangent(f, t),
                                     hemisphere=False)
        assert np.linalg.norm(a_l.flat) == pytest.approx(np.linalg.norm(t), abs=1e-9)
        assert mf.s3_distance(l[0], action[0]) == pytest.approx(np.linalg.norm(t), abs=1e-9)


def test_grl_projects_non_tangent_input_and_never_repairs():
    f = (S3(), SPD(3))
    frame = TangentFrame.at(default_point(f))
    rng = np.random.default_rng(7)
    with repair.counting() as c:
        for _ in range(100):
            action = ActionAdapter(GRL)(frame, CompositeTangent(f, rng.standard_normal(10)))
            assert abs(np.linalg.norm(action[0]) - 1) < 1e-12
            assert action[0][0] >= 0
            assert mf.is_spd(action[1])
    assert sum(c.values()) == 0


# -- baselines -----------------------------------------------------------------------

def test_baseline_examples():
    np.testing.assert_allclose(baseline_map_action(NORMALIZE, (S3(),), [2, 0, 0, 0])[0], [1, 0, 0, 0])
    np.testing.assert_allclose(baseline_map_action(MANDEL, (SPD(3),), [1, 1, 1, 0, 0, 0])[0], np.eye(3))
    rng = np.random.default_rng(8)
    for _ in range(200):
        assert mf.is_spd(baseline_map_action(CHOLESKY, (SPD(3),), rng.standard_normal(6))[0])


def test_baseline_errors():
    with pytest.raises(ZeroNormError):
        baseline_map_action(NORMALIZE, (S3(),), np.zeros(4))
    with pytest.raises(BadLength):
        baseline_map_action(MANDEL, (SPD(3),), np.zeros(5))
    with pytest.raises(ConfigError):
        baseline_map_action(NORMALIZE, (SPD(3),), np.zeros(6))


def test_applicability():
    assert applicable_adapters((S3(),)) == [GRL, NORMALIZE]
    assert applicable_adapters((SPD(3),)) == [GRL, CHOLESKY, MANDEL]
    assert applicable_adapters((S3(), SPD(3))) == [GRL]
    with pytest.raises(ConfigError):
        check_adapter_supports(CHOLESKY, (S3(),))


# -- frames ------------------------------------------------------------------------------

def test_frame_update_rules():
    rng = np.random.default_rng(9)
    f = (S3(),)
    p = default_point(f)
    traj, single = TangentFrame.at(p, TRAJECTORY), TangentFrame.at(p, SINGLE_STEP)
    for _ in range(100):
        s = CompositePoint(f, (mf.random_quaternion(rng),))
        traj, single = frame_update(traj, s), frame_update(single, s)
        assert traj.base_l is s
        assert single.base_l is p
    np.testing.assert_array_equal(traj.base_p[0], [1, 0, 0, 0])
    assert single.base_p is p


@pytest.mark.parametrize("mode", [GRL, NORMALIZE])
def test_initial_theta_reproduces_start(mode):
    rng = np.random.default_rng(10)
    f = (S3(), S3())
    start = CompositePoint(f, tuple(mf.random_quaternion(rng) for _ in f))
    base = default_point(f)
    feats = FeatureMap("time-rbf", 5)
    adapter = ActionAdapter(mode)
    theta = initial_theta(adapter, feats, start, base, SINGLE_STEP)
    params = PolicyParams.isotropic(f, theta, 0.0)
    for tau in (0.0, 0.37, 1.0):
        action = adapter(TangentFrame.at(base), policy_mean(params, feats(tau)))
        assert action.allclose(start, atol=1e-9)


def test_initial_theta_grl_trajectory_is_zero():
    f = (SPD(2),)
    start = CompositePoint(f, (np.diag([2.0, 0.5]),))
    theta = initial_theta(ActionAdapter(GRL), FeatureMap("time-rbf", 4), start, default_point(f), TRAJECTORY)
    np.testing.assert_array_equal(theta, np.zeros((3, 4)))
