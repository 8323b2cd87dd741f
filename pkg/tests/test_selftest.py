from dataclasses import replace

import numpy as np

from geomrl import manifolds as mf
from geomrl.selftest import DEFAULT_OPS, PROPERTY_NAMES, run_selftest


def test_short_selftest_passes():
    results = run_selftest(n_cases=300, report=None)
    assert [r.name for r in results] == list(PROPERTY_NAMES)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_broken_s3_transport_is_caught():
    def drops_correction(src, dst, t):
        # forgets the geodesic correction term: no longer an isometry
        return mf.s3_project(dst, np.asarray(t, dtype=float))

    ops = replace(DEFAULT_OPS, s3_transport=drops_correction)
    [res] = run_selftest("s3_transport_isometry", ops=ops, n_cases=300, report=None)
    assert not res.passed and res.worst > 1e-3


def test_broken_spd_transport_is_caught():
    def uses_sqrt_of_dst_only(src, dst, t):
        r = mf.spd_sqrt(dst)
        return r @ t @ r

    ops = replace(DEFAULT_OPS, spd_transport=uses_sqrt_of_dst_only)
    [res] = run_selftest("spd_transport_isometry", ops=ops, n_cases=300, report=None)
    assert not res.passed


def test_broken_mandel_scaling_is_caught():
    def unscaled(s):
        return mf.mandel_vec(s) * np.r_[np.ones(len(s)), np.full(len(s) * (len(s) - 1) // 2, 1 / np.sqrt(2))]

    ops = replace(DEFAULT_OPS, mandel_vec=unscaled)
    [res] = run_selftest("mandel", ops=ops, n_cases=300, report=None)
    assert not res.passed
