import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_jacobi

from ncnls.jacobi import (
    KRASIKOV_MIN_PARAM,
    JacobiParams,
    erdelyi_bound_check,
    jacobi_eval,
    jacobi_explicit,
    jacobi_orthonormal,
    krasikov_bound_check,
    log_bound_lhs,
    log_bound_oracle,
)


def test_frozen_values():
    assert jacobi_eval(0, 3, 7, 0.2) == 1.0
    assert jacobi_eval(1, 0, 0, 0.3) == pytest.approx(0.3)
    assert jacobi_eval(5, 2, 0, 1.0) == pytest.approx(21.0)
    assert jacobi_orthonormal(0, 0, 0, 0.4) == pytest.approx(1 / math.sqrt(2))


def test_recurrence_matches_explicit_sum():
    for l in range(9):
        for a, b in [(0, 0), (2, 5), (7, 1)]:
            for x in (-0.9, -0.1, 0.35, 0.99):
                assert jacobi_eval(l, a, b, x) == pytest.approx(jacobi_explicit(l, a, b, x), rel=1e-12, abs=1e-12)


def test_recurrence_matches_scipy():
    l, a, b, x = np.meshgrid(np.arange(0, 40, 3), np.arange(0, 30, 7), np.arange(0, 30, 5),
                             np.linspace(-0.95, 0.95, 9), indexing="ij")
    ours = jacobi_eval(l, a, b, x)
    ref = eval_jacobi(l, a, b, x)
    scale = np.abs(ref) + np.abs(jacobi_eval(l, a, b, np.ones_like(x)))
    assert np.max(np.abs(ours - ref) / scale) < 1e-11


def test_orthonormality_by_quadrature():
    a, b = 2.0, 3.0
    x, w = np.polynomial.legendre.leggauss(60)
    weight = (1 - x) ** a * (1 + x) ** b
    p3 = jacobi_orthonormal(3, a, b, x)
    p4 = jacobi_orthonormal(4, a, b, x)
    assert abs(np.sum(w * weight * p3 * p4)) < 1e-10
    assert np.sum(w * weight * p3 * p3) == pytest.approx(1.0, abs=1e-10)


def test_domain_errors():
    with pytest.raises(ValueError):
        jacobi_eval(2, 0, 0, 1.5)
    with pytest.raises(ValueError):
        jacobi_eval(2, -1, 0, 0.0)
    with pytest.raises(ValueError):
        JacobiParams(1.5, 0, 0, 0)
    with pytest.raises(ValueError):
        erdelyi_bound_check(2, 0, 0, 1.0)
    with pytest.raises(ValueError):
        krasikov_bound_check(3, 2, 2, 0.0)
    with pytest.raises(ValueError):
        krasikov_bound_check(8, 0.1, 0.1, 0.0)


def test_erdelyi_examples():
    lhs, rhs, ok = erdelyi_bound_check(0, 0, 0, 0.0)
    assert lhs == pytest.approx(1 / math.sqrt(2))
    assert rhs == pytest.approx(math.sqrt(2 * math.e / math.pi) * math.sqrt(2))
    assert ok


def test_krasikov_examples():
    assert krasikov_bound_check(6, 1, 1, 0.0)[2]
    assert krasikov_bound_check(40, 20, 1, 0.9)[2]
    assert KRASIKOV_MIN_PARAM < 1


def test_log_oracle_behaviour():
    assert math.isfinite(log_bound_oracle(math.pi / 2))
    ks = np.arange(1, 5)
    vals = np.array([log_bound_oracle(10.0**-k) for k in ks])
    slope, icpt = np.polyfit(ks, vals, 1)
    assert slope > 0
    assert np.max(np.abs(vals - (slope * ks + icpt))) < 1e-3 * np.max(vals)
    with pytest.raises(ValueError):
        log_bound_oracle(2.0)


def test_log_oracle_dominates_jacobi_lhs():
    rng = np.random.default_rng(0)
    for _ in range(50):
        l, a, b = (int(v) for v in rng.integers(0, 40, 3))
        theta = float(rng.uniform(0.01, math.pi / 2))
        assert log_bound_lhs(l, a, b, theta) <= log_bound_oracle(theta)


@settings(max_examples=40, deadline=None)
@given(l=st.integers(0, 60), a=st.integers(0, 40), b=st.integers(0, 40), x=st.floats(-0.999, 0.999))
def test_erdelyi_holds_pointwise(l, a, b, x):
    assert erdelyi_bound_check(l, a, b, x)[2]


@settings(max_examples=40, deadline=None)
@given(l=st.integers(0, 30), a=st.integers(0, 10), b=st.integers(0, 10), x=st.floats(-1.0, 1.0))
def test_reflection_symmetry(l, a, b, x):
    assert jacobi_eval(l, a, b, -x) == pytest.approx((-1) ** l * jacobi_eval(l, b, a, x), rel=1e-9, abs=1e-9)
