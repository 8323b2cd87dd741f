import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geomrl import manifolds as mf
from geomrl import repair
from geomrl.errors import AntipodalError, BadLength, NotPositiveDefinite, ZeroNormError

E_X = np.array([0.0, 1.0, 0.0, 0.0])
I4 = mf.IDENTITY_QUAT

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quat_like = arrays(np.float64, 4, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def unit(v):
    return mf.hemisphere_flip(v / np.linalg.norm(v))


# -- S^3 ---------------------------------------------------------------------

def test_log_same_point_is_zero():
    np.testing.assert_array_equal(mf.s3_log(I4, I4), np.zeros(4))


def test_log_quarter_turn():
    np.testing.assert_allclose(mf.s3_log(I4, E_X), [0, math.pi / 2, 0, 0], atol=1e-15)


def test_log_antipodal_raises():
    with pytest.raises(AntipodalError):
        mf.s3_log(I4, -I4)


def test_exp_zero_tangent_returns_base_exactly():
    q = unit(np.array([0.3, -0.2, 0.5, 0.1]))
    np.testing.assert_array_equal(mf.s3_exp(q, np.zeros(4)), q)


def test_exp_quarter_turn():
    np.testing.assert_allclose(mf.s3_exp(I4, [0, math.pi / 2, 0, 0]), E_X, atol=1e-15)


def test_distance_examples():
    assert mf.s3_distance(E_X, E_X) == 0.0
    assert mf.s3_distance(I4, E_X) == pytest.approx(math.pi / 2, abs=1e-15)


def test_distance_clamps_rounding_overshoot():
    q = np.array([1.0 + 1e-15, 0, 0, 0])
    assert mf.s3_distance(q, I4) == pytest.approx(0.0, abs=1e-7)


def test_transport_same_point_is_identity():
    q = unit(np.array([0.2, 0.4, -0.1, 0.3]))
    t = mf.s3_project(q, np.array([0.1, -0.3, 0.2, 0.05]))
    np.testing.assert_allclose(mf.s3_transport(q, q, t), t, atol=1e-15)


def test_transport_geodesic_velocity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, q = mf.random_quaternion(rng), mf.random_quaternion(rng)
        if p @ q < -0.9:
            q = -q
        moved = mf.s3_transport(p, q, mf.s3_log(p, q))
        np.testing.assert_allclose(moved, -mf.s3_log(q, p), atol=1e-9)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ((-1, 0, 0, 0), (1, 0, 0, 0)),
        ((0.5, 0.5, 0.5, 0.5), (0.5, 0.5, 0.5, 0.5)),
        ((0, -1, 0, 0), (0, 1, 0, 0)),
        ((0, 0, -2, 0), (0, 0, 1, 0)),
        ((0, 0, 0, -3), (0, 0, 0, 1)),
    ],
)
def test_canonicalize(raw, expected):
    np.testing.assert_allclose(mf.s3_canonicalize(np.array(raw, float)), expected)


def test_canonicalize_counts_a_repair_and_rejects_zero():
    with repair.counting() as c:
        mf.s3_canonicalize(np.array([2.0, 0, 0, 0]))
    assert c["normalize"] == 1
    with pytest.raises(ZeroNormError):
        mf.s3_canonicalize(np.zeros(4))
    with pytest.raises(BadLength):
        mf.s3_canonicalize(np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(quat_like)
def test_canonical_form_is_unit_and_on_hemisphere(v):
    q = mf.s3_canonicalize(v)
    assert abs(np.linalg.norm(q) - 1) < 1e-12
    assert q[0] >= 0
    if q[0] == 0:
        assert q[np.flatnonzero(q)[0]] > 0


@settings(max_examples=200, deadline=None)
@given(quat_like, arrays(np.float64, 4, elements=st.floats(-3, 3)))
def test_exp_stays_on_sphere_and_moves_by_tangent_norm(v, w):
    q = unit(v)
    t = mf.s3_project(q, w)
    n = np.linalg.norm(t)
    out = mf.s3_exp(q, t)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    if n < math.pi - 1e-3:
        assert mf.s3_distance(q, out) == pytest.approx(n, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(quat_like, quat_like)
def test_log_is_tangent_with_distance_norm(a, b):
    p, q = unit(a), unit(b)
    if p @ q < -1 + 1e-6:
        return
    t = mf.s3_log(p, q)
    assert abs(t @ p) < 1e-12
    assert np.linalg.norm(t) == pytest.approx(mf.s3_distance(p, q), abs=1e-9)


def test_exp_clamps_long_tangents():
    t = np.array([0, 10.0, 0, 0])
    out = mf.s3_exp(I4, t)
    assert mf.s3_distance(I4, out) == pytest.approx(math.pi - mf.EXP_CLAMP_MARGIN, abs=1e-9)


def test_quat_rotation_matrix_quarter_turn_about_z():
    q = np.array([math.cos(math.pi / 4), 0, 0, math.sin(math.pi / 4)])
    np.testing.assert_allclose(mf.quat_to_rotmat(q) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_quat_multiply_matches_rotation_composition():
    rng = np.random.default_rng(0)
    a, b = mf.random_quaternion(rng), mf.random_quaternion(rng)
    np.testing.assert_allclose(mf.quat_to_rotmat(mf.quat_multiply(a, b)),
                               mf.quat_to_rotmat(a) @ mf.quat_to_rotmat(b), atol=1e-12)


# -- symmetric matrix functions and SPD -----------------------------------------

def test_sym_expm_examples():
    np.testing.assert_allclose(mf.sym_expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(mf.sym_expm(np.diag([math.log(2), math.log(3)])), np.diag([2, 3]),
                               atol=1e-14)


def test_sym_logm_rejects_non_spd():
    with pytest.raises(NotPositiveDefinite):
        mf.sym_logm(np.diag([1.0, -1.0]))


def test_sym_expm_logm_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(500):
        d = rng.choice([2, 3, 6])
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        s = (q * rng.uniform(-2, 2, d)) @ q.T
        np.testing.assert_allclose(mf.sym_logm(mf.sym_expm(s)), s, atol=1e-12)


def test_spd_exp_log_trivial_cases():
    rng = np.random.default_rng(1)
    p = mf.random_spd(rng, 3)
    a = rng.standard_normal((3, 3))
    s = 0.5 * (a + a.T)
    np.testing.assert_allclose(mf.spd_exp(p, np.zeros((3, 3))), p, atol=1e-12)
    np.testing.assert_allclose(mf.spd_exp(np.eye(3), s), mf.sym_expm(s), atol=1e-12)
    np.testing.assert_allclose(mf.spd_log(p, p), np.zeros((3, 3)), atol=1e-12)
    w = mf.random_spd(rng, 3)
    np.testing.assert_allclose(mf.spd_log(np.eye(3), w), mf.sym_logm(w), atol=1e-12)


def test_spd_exp_diagonal_closed_form():
    base = np.diag([4.0, 1.0])
    t = np.diag([math.log(2) * 4, 0.0])
    # per eigenvalue: s * exp(t / s)
    np.testing.assert_allclose(mf.spd_exp(base, t), np.diag([8.0, 1.0]), atol=1e-12)


def test_spd_transport_trivial_cases():
    rng = np.random.default_rng(2)
    p, w = mf.random_spd(rng, 3), mf.random_spd(rng, 3)
    t = rng.standard_normal((3, 3))
    t = t + t.T
    np.testing.assert_allclose(mf.spd_transport(p, p, t), t, atol=1e-12)
    r = mf.spd_sqrt(w)
    np.testing.assert_allclose(mf.spd_transport(np.eye(3), w, t), r @ t @ r, atol=1e-12)


def test_spd_distance_examples():
    rng = np.random.default_rng(4)
    p = mf.random_spd(rng, 3)
    assert mf.spd_distance(p, p) == pytest.approx(0.0, abs=1e-12)
    assert mf.spd_distance(np.eye(2), np.diag([math.e, 1.0])) == pytest.approx(1.0, abs=1e-14)


def test_random_spd_spectrum_bounds():
    rng = np.random.default_rng(6)
    for _ in range(100):
        w = np.linalg.eigvalsh(mf.random_spd(rng, 3, 1.0))
        assert w.min() >= 0.5 - 1e-12 and w.max() <= 2.0 + 1e-12


# -- vectorizations -----------------------------------------------------------------

def test_mandel_layout_3x3():
    s = np.array([[1.0, 12, 13], [12, 2, 23], [13, 23, 3]])
    r2 = math.sqrt(2)
    np.testing.assert_allclose(mf.mandel_vec(s), [1, 2, 3, r2 * 23, r2 * 13, r2 * 12])
    np.testing.assert_array_equal(mf.mandel_vec(np.eye(3)), [1, 1, 1, 0, 0, 0])


@pytest.mark.parametrize("d", mf.SUPPORTED_SPD_DIMS)
def test_mandel_round_trip_and_norm(d):
    rng = np.random.default_rng(d)
    a = rng.standard_normal((d, d))
    s = a + a.T
    v = mf.mandel_vec(s)
    assert v.size == d * (d + 1) // 2
    np.testing.assert_allclose(mf.mandel_unvec(v), s, atol=1e-14)
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(s), rel=1e-14)


def test_vec_length_rejects_unsupported_sizes():
    with pytest.raises(BadLength):
        mf.dim_from_length(4)
    with pytest.raises(BadLength):
        mf.mandel_unvec(np.zeros(5))


def test_chol_examples():
    np.testing.assert_allclose(mf.chol_vec(np.eye(3)), [1, 0, 0, 1, 0, 1])
    np.testing.assert_allclose(mf.chol_vec(np.diag([4.0, 9.0])), [2, 0, 3])
    np.testing.assert_allclose(mf.chol_unvec(np.zeros(6)), mf.SPD_EPS ** 2 * np.eye(3))


def test_chol_round_trip_and_no_repair_count():
    rng = np.random.default_rng(8)
    with repair.counting() as c:
        for d in mf.SUPPORTED_SPD_DIMS:
            p = mf.random_spd(rng, d)
            np.testing.assert_allclose(mf.chol_unvec(mf.chol_vec(p)), p, atol=1e-9)
            assert mf.is_spd(mf.chol_unvec(rng.standard_normal(mf.vec_length(d))))
    assert sum(c.values()) == 0


def test_nearest_spd_examples():
    np.testing.assert_array_equal(mf.nearest_spd(np.diag([1.0, 2.0])), np.diag([1.0, 2.0]))
    np.testing.assert_allclose(mf.nearest_spd(np.diag([1.0, -3.0])), np.diag([1.0, mf.SPD_EPS]))


def test_nearest_spd_beats_other_clampings():
    rng = np.random.default_rng(9)
    for _ in range(100):
        a = rng.standard_normal((3, 3))
        s = a + a.T
        best = np.linalg.norm(mf.nearest_spd(s) - s)
        w, v = np.linalg.eigh(s)
        for _ in range(10):
            # any other clamp of the eigenvalues to >= eps is no closer
            vals = np.maximum(w, mf.SPD_EPS) + rng.uniform(0, 0.1, 3)
            cand = (v * vals) @ v.T
            assert best <= np.linalg.norm(cand - s) + 1e-12


def test_nearest_spd_counts_every_call():
    with repair.counting() as c:
        mf.nearest_spd(np.eye(2))
        mf.nearest_spd(-np.eye(2))
    assert c["nearest_spd"] == 2
