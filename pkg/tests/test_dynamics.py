import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from ncnls.dynamics import (
    InadmissibleInteraction,
    LeakError,
    LeakWarning,
    Trajectory,
    admissible_minimum,
    check_initial_support,
    conservation_report,
    diagonal_generator,
    duhamel_residual,
    evolve,
    leak_fraction,
    nonlinear_flow,
    read_trajectory_index,
    soliton_find,
    soliton_seed,
    strang_step,
    truncation_defect,
    write_trajectory,
)
from ncnls.fock import DiagonalOperator, FockOperator, InteractionPolynomial, random_operator
from ncnls.propagator import apply_free, build_blocks

ZERO = InteractionPolynomial([])
LINEAR = InteractionPolynomial([1.0])
SOLITON_F = InteractionPolynomial([-2.0, 1.0])
SOLITON_THETA = 768.0


def small_state(N=32):
    e = np.zeros((N, N), complex)
    e[0, 0] = 0.5
    e[1, 0] = 0.25j
    return FockOperator(1, N, e)


@pytest.fixture(scope="module")
def soliton():
    return soliton_find(SOLITON_F, SOLITON_THETA, N=64)


def test_nonlinear_flow_zero_polynomial_is_identity():
    phi = random_operator(1, 5, np.random.default_rng(0))
    assert nonlinear_flow(phi, ZERO, 1.0, 0.3) is phi


def test_nonlinear_flow_matches_ode_solver():
    rng = np.random.default_rng(1)
    phi = random_operator(1, 4, rng, scale=0.6)
    F = InteractionPolynomial([0.5, 1.0])
    theta, dt = 1.3, 0.7

    def rhs(_, y):
        x = y.reshape(4, 4)
        h = x.conj().T @ x
        return (-1j * theta * x @ F.on_matrix(h)).ravel()

    sol = solve_ivp(rhs, (0, dt), phi.entries.ravel().astype(complex), rtol=1e-12, atol=1e-13)
    ours = nonlinear_flow(phi, F, theta, dt).entries
    assert np.allclose(ours, sol.y[:, -1].reshape(4, 4), atol=1e-9)


def test_nonlinear_flow_conserves_gram_and_norm():
    phi = random_operator(1, 10, np.random.default_rng(2))
    out, lam = nonlinear_flow(phi, InteractionPolynomial([0, 2.0]), 0.8, 0.5, return_spectrum=True)
    g0 = phi.entries.conj().T @ phi.entries
    g1 = out.entries.conj().T @ out.entries
    assert np.allclose(g0, g1, atol=1e-11)
    assert np.linalg.norm(out.entries) == pytest.approx(np.linalg.norm(phi.entries), rel=1e-13)
    assert np.allclose(np.sort(lam), np.linalg.eigvalsh(g0))


def test_nonlinear_flow_diagonal_fast_path():
    vals = np.array([0.3, 1.2, 0.0, 0.7j])
    phi = DiagonalOperator(1, 4, vals).to_operator()
    out = nonlinear_flow(phi, LINEAR, 2.0, 0.25)
    expected = vals * np.exp(-1j * 0.25 * 2.0 * np.abs(vals) ** 2)
    assert np.allclose(np.diag(out.entries), expected, atol=1e-15)


def test_strang_step_free_equals_full_step():
    N = 40
    phi = small_state(N)
    half = build_blocks(0.05, N)
    out = strang_step(phi, 0.1, half, ZERO, 1.0)
    ref = apply_free(build_blocks(0.1, N), phi)
    assert np.allclose(out.entries, ref.entries, atol=1e-12)
    with pytest.raises(ValueError):
        strang_step(phi, 0.2, half, ZERO, 1.0)


def test_evolve_zero_data_stays_zero():
    traj = evolve(FockOperator.zeros(1, 8), 0.0, 1.0, 10, LINEAR, 1.0, save_every=5)
    assert all(not np.any(s.entries) for s in traj.states)
    assert traj.times.tolist() == [0.0, 0.5, 1.0]


def test_evolve_free_matches_free_propagation():
    N = 48
    phi = small_state(N)
    traj = evolve(phi, 0.0, 1.0, 40, ZERO, 1.0, save_every=1, track_spectrum=False)
    bound = truncation_defect(traj)
    assert bound < 1e-5
    for t, s in zip(traj.times[::10], traj.states[::10]):
        ref = apply_free(build_blocks(t, N), phi)
        assert np.linalg.norm(s.entries - ref.entries) <= bound


def test_evolve_argument_validation():
    phi = small_state(16)
    with pytest.raises(ValueError):
        evolve(phi, 0, 1, 0, LINEAR, 1.0)
    with pytest.raises(ValueError):
        evolve(phi, 0, 1, 10, LINEAR, 1.0, save_every=0)
    with pytest.raises(ValueError):
        evolve(phi, 0, 1, 10, LINEAR, 1.0, on_leak="ignore")
    with pytest.raises(ValueError):
        check_initial_support(FockOperator.ket_bra(9, 0, 16))


def test_leak_detection_raise_and_warn():
    phi = FockOperator.ket_bra(2, 2, 8)
    with pytest.raises(LeakError):
        evolve(phi, 0.0, 5.0, 50, LINEAR, 1.0, save_every=10)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = evolve(phi, 0.0, 5.0, 50, LINEAR, 1.0, save_every=10, on_leak="warn")
    assert any(issubclass(w.category, LeakWarning) for w in caught)
    assert conservation_report(traj).leak_flagged


def test_leak_fraction_values():
    assert leak_fraction(FockOperator.zeros(1, 8)) == 0.0
    assert leak_fraction(FockOperator.ket_bra(0, 0, 8)) == 0.0
    assert leak_fraction(FockOperator.ket_bra(7, 0, 8)) == 1.0


def test_trajectory_validation():
    s = FockOperator.zeros(1, 4)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [s, s], 1.0, LINEAR)
    with pytest.raises(ValueError):
        Trajectory([0.0], [s, s], 1.0, LINEAR)
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [s, FockOperator.zeros(1, 5)], 1.0, LINEAR)


def test_conservation_linear_interaction():
    traj = evolve(small_state(32), 0.0, 1.0, 1000, LINEAR, 1.0, save_every=1)
    rep = conservation_report(traj)
    assert rep.max_relative_drift <= 1e-8
    assert rep.spectrum_conserved
    assert not rep.leak_flagged
    assert set(rep.as_dict()) >= {"max_relative_drift", "max_leak"}


def test_duhamel_free_residual_below_defect():
    traj = evolve(small_state(32), 0.0, 1.0, 200, ZERO, 1.0, save_every=1, track_spectrum=False)
    assert np.max(duhamel_residual(traj)) <= truncation_defect(traj)
    sparse = evolve(small_state(32), 0.0, 1.0, 20, ZERO, 1.0, save_every=10)
    with pytest.raises(ValueError):
        truncation_defect(sparse)
    with pytest.raises(ValueError):
        duhamel_residual(sparse)


def test_duhamel_residual_second_order():
    res = []
    for steps in (16, 32):
        traj = evolve(small_state(64), 0.0, 1.0, steps, LINEAR, 1.0, save_every=1, track_spectrum=False)
        res.append(np.max(duhamel_residual(traj)))
    assert 3.0 <= res[0] / res[1] <= 5.0


def test_admissibility():
    assert admissible_minimum(SOLITON_F) == pytest.approx(1.0)
    with pytest.raises(InadmissibleInteraction):
        admissible_minimum(LINEAR)
    with pytest.raises(InadmissibleInteraction):
        admissible_minimum(InteractionPolynomial([2.0, -1.0]))
    with pytest.raises(InadmissibleInteraction, match="F\\(x0\\) < F\\(0\\)"):
        admissible_minimum(InteractionPolynomial([2.5, -3.0, 1.0]))


def test_diagonal_generator_matches_recurrence():
    L = diagonal_generator(1, 6)
    x = np.arange(1.0, 7.0)
    y = L @ x
    n = 3
    assert y[n] == pytest.approx((2 * n + 1) * x[n] - n * x[n - 1] - (n + 1) * x[n + 1])
    L2 = diagonal_generator(2, 3)
    assert np.allclose(L2, np.kron(L[:3, :3], np.eye(3)) + np.kron(np.eye(3), L[:3, :3]))


def test_soliton_trivial_branch():
    res = soliton_find(SOLITON_F, 10.0, N=16, init=DiagonalOperator.zeros(1, 16))
    assert res.trivial and res.residual == 0.0


def test_soliton_found(soliton):
    assert soliton.residual <= 1e-8 and not soliton.trivial
    assert soliton.omega == pytest.approx(SOLITON_THETA * (-1 + 0.01))
    e = soliton.phi0.entries
    assert np.array_equal(e, e.conj().T) and soliton.phi0.is_diagonal()
    assert np.isfinite(soliton.l1_norm)
    seed = soliton_seed(SOLITON_F, 64)
    assert soliton.amplitude == pytest.approx(float(np.max(seed.values.real)), rel=0.05)


def test_soliton_rejects_bad_arguments():
    with pytest.raises(ValueError):
        soliton_find(SOLITON_F, -1.0)
    with pytest.raises(ValueError):
        soliton_find(SOLITON_F, 1.0, epsilon=-0.1)
    with pytest.raises(InadmissibleInteraction):
        soliton_find(LINEAR, 100.0)


def test_soliton_orbit_residual(soliton):
    traj = evolve(soliton.phi0, 0.0, 0.05, 200, SOLITON_F, SOLITON_THETA, save_every=1, track_spectrum=False)
    assert np.max(duhamel_residual(traj)) <= 1e-4


def test_trajectory_export(tmp_path):
    traj = evolve(small_state(16), 0.0, 0.1, 10, LINEAR, 1.0, save_every=5)
    index = write_trajectory(traj, tmp_path, header="run")
    rows = read_trajectory_index(index)
    assert rows.shape == (3, 3)
    assert np.allclose(rows[:, 1], traj.norms())
    assert index.read_text().startswith("# run\nt,filename,l2norm,drift")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dt=st.floats(-2.0, 2.0), theta=st.floats(-3.0, 3.0))
def test_nonlinear_flow_is_isometric(seed, dt, theta):
    phi = random_operator(1, 6, np.random.default_rng(seed))
    out = nonlinear_flow(phi, InteractionPolynomial([1.0, -0.5]), theta, dt)
    assert np.linalg.norm(out.entries) == pytest.approx(np.linalg.norm(phi.entries), rel=1e-12)
