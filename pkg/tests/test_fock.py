import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncnls.fock import (
    DiagonalOperator,
    FockOperator,
    InteractionPolynomial,
    algebra,
    apply_polynomial,
    b_weight,
    c_const,
    format_snapshot,
    hs_norm,
    lattice_weight_sum,
    norm_a,
    norm_p_alpha,
    op_norm,
    parse_snapshot,
    random_operator,
    support_radius,
    trace_norm,
    verify_norm_inequalities,
)
from ncnls.fock.inequalities import b_operator_norm
from ncnls.fock.norms import NormConvergenceError, abs_matrix_norm


def test_b_weight_values():
    assert b_weight(3, 3) == 1.0
    assert b_weight((0, 0), (3, 4)) == 6.0
    assert b_weight(2, 7) == 6.0
    with pytest.raises(ValueError):
        b_weight((0, 0), (1,))


def test_ket_bra_storage_convention():
    phi = FockOperator.ket_bra(1, 0, 4)
    assert phi.entries[1, 0] == 1
    assert phi.element(1, 0) == 1
    assert phi.element(0, 1) == 0


def test_norm_p_alpha_examples():
    assert norm_p_alpha(FockOperator.ket_bra(0, 0, 5), 2, 3.0) == 1.0
    assert norm_p_alpha(FockOperator.ket_bra(0, 0, 5), 1, -2.0) == 1.0
    assert norm_p_alpha(FockOperator.ket_bra(1, 0, 5), 2, 3.0) == pytest.approx(8.0)
    phi = random_operator(1, 7, np.random.default_rng(0))
    assert norm_p_alpha(phi, 2, 0) == pytest.approx(np.sqrt(np.sum(np.abs(phi.entries) ** 2)))
    with pytest.raises(ValueError):
        norm_p_alpha(phi, 0.5, 0)


def test_norm_a_examples():
    diag = np.diag([0.3, -2.0, 1.5j, 0.0])
    assert norm_a(FockOperator(1, 4, diag)) == pytest.approx(2.0)
    block = np.zeros((4, 4))
    block[:2, :2] = 1.0
    assert norm_a(FockOperator(1, 4, block)) == pytest.approx(2.0, rel=1e-9)
    assert norm_a(FockOperator.zeros(1, 4)) == 0.0


def test_norm_a_matches_dense_svd():
    rng = np.random.default_rng(3)
    for damping in (0.0, 1.5, 4.0):
        phi = random_operator(1, 20, rng, damping=damping)
        assert norm_a(phi) == pytest.approx(np.linalg.norm(np.abs(phi.entries), 2), rel=1e-8)


def test_abs_matrix_norm_reports_nonconvergence():
    a = np.abs(np.random.default_rng(1).standard_normal((30, 30)))
    with pytest.raises(NormConvergenceError):
        abs_matrix_norm(a, tol=1e-15, max_iter=2)


def test_schatten_norms_ordered():
    phi = random_operator(1, 9, np.random.default_rng(5))
    assert op_norm(phi) <= hs_norm(phi) <= trace_norm(phi)


def test_algebra_examples():
    phi = random_operator(1, 6, np.random.default_rng(2))
    eye = FockOperator.identity(1, 6)
    assert np.array_equal(algebra(phi, eye, "multiply").entries, phi.entries)
    assert np.array_equal(algebra(algebra(phi, None, "adjoint"), None, "adjoint").entries, phi.entries)
    sq = algebra(FockOperator.ket_bra(1, 0, 6), None, "abs_square")
    assert np.array_equal(sq.entries, FockOperator.ket_bra(0, 0, 6).entries)
    with pytest.raises(ValueError):
        algebra(phi, None, "divide")


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        FockOperator.zeros(1, 3) + FockOperator.zeros(1, 4)
    with pytest.raises(ValueError):
        FockOperator(1, 3, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        FockOperator(1, 2, np.array([[np.nan, 0], [0, 0]]))


def test_operators_are_immutable():
    phi = FockOperator.zeros(1, 3)
    with pytest.raises(ValueError):
        phi.entries[0, 0] = 1


def test_diagonal_operator_roundtrip():
    vals = np.array([1.0, 2j, 0.5])
    op = DiagonalOperator(1, 3, vals).to_operator()
    assert DiagonalOperator.from_operator(op).values.tolist() == vals.tolist()
    with pytest.raises(ValueError):
        DiagonalOperator.from_operator(FockOperator.ket_bra(1, 0, 3))


def test_polynomial_basics():
    F = InteractionPolynomial.from_string("-2, 1, 0, 0")
    assert F.degree == 2 and F.lowest_degree == 1
    assert F(1.0) == pytest.approx(-1.0)
    assert F.derivative()(1.0) == pytest.approx(0.0)
    assert F.antiderivative()(2.0) == pytest.approx(-4.0 + 8.0 / 3.0)
    assert InteractionPolynomial([]).is_zero
    assert InteractionPolynomial([0, 0, 3]).lowest_degree == 3


def test_apply_polynomial_examples():
    phi = random_operator(1, 5, np.random.default_rng(4))
    assert not np.any(apply_polynomial(phi, InteractionPolynomial([]), 1.0).entries)
    proj = FockOperator.ket_bra(0, 0, 5)
    out = apply_polynomial(proj, InteractionPolynomial([1.0]), 1.0)
    assert np.allclose(out.entries, proj.entries)


def test_apply_polynomial_matches_spectral_calculus():
    phi = random_operator(1, 8, np.random.default_rng(7), scale=0.5)
    F = InteractionPolynomial([0.0, 1.0])
    lam, vec = np.linalg.eigh(phi.entries.conj().T @ phi.entries)
    oracle = 2.5 * phi.entries @ (vec * lam**2) @ vec.conj().T
    assert np.allclose(apply_polynomial(phi, F, 2.5).entries, oracle, atol=1e-12)


def test_support_radius():
    assert support_radius(FockOperator.zeros(1, 4)) == -1
    assert support_radius(FockOperator.ket_bra(1, 3, 6)) == 3


def test_snapshot_roundtrip_d2():
    phi = random_operator(2, 3, np.random.default_rng(9))
    back = parse_snapshot(format_snapshot(phi))
    assert (back.d, back.N) == (2, 3)
    assert np.array_equal(back.entries, phi.entries)


def test_c_const_and_lattice_sum():
    assert c_const(0.5) == 1.0
    assert c_const(3.0) == 4.0
    assert lattice_weight_sum(-2.0, 1) == pytest.approx(1 + 2 * (math.pi**2 / 6 - 1))
    # the B_{-2} operator norm on a truncation sits below the lattice bound
    assert b_operator_norm(1, 40, -2.0) <= 1 + 2 * (math.pi**2 / 6 - 1)
    with pytest.raises(ValueError):
        lattice_weight_sum(-1.0, 1)


def test_lattice_sum_d2_bounds_a_direct_partial_sum():
    k = np.indices((121, 121)).reshape(2, -1).T - 60
    partial = float(np.sum((1 + np.linalg.norm(k, axis=1)) ** -3.0))
    assert partial <= lattice_weight_sum(-3.0, 2)


def test_norm_inequalities_seed_42():
    rep = verify_norm_inequalities(100, 42, 3.0, 12)
    assert rep.passed, rep.violations
    assert all(c.trials >= 100 for name, c in rep.checks.items() if name != "weight_operator_bound")


def test_product_bound_with_identity():
    eye = FockOperator.identity(1, 4)
    lhs = norm_p_alpha(eye @ eye, 2, 3.0)
    rhs = 2 * c_const(3.0) ** 2 * 2 * norm_p_alpha(eye, 2, 3.0) * norm_a(eye)
    assert lhs <= rhs


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), alpha=st.floats(0.0, 4.0))
def test_weighted_norms_monotone_in_alpha(seed, alpha):
    phi = random_operator(1, 6, np.random.default_rng(seed))
    assert norm_p_alpha(phi, 2, alpha) <= norm_p_alpha(phi, 2, alpha + 0.5) + 1e-12
    assert norm_p_alpha(phi, 2, 0) <= norm_p_alpha(phi, 2, alpha) + 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_a_norm_dominates_operator_norm(seed):
    phi = random_operator(1, 8, np.random.default_rng(seed))
    assert op_norm(phi) <= norm_a(phi) * (1 + 1e-9)
    assert norm_a(phi) <= hs_norm(phi) * (1 + 1e-9)
