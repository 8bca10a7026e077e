import numpy as np
import pytest

from ncnls.fock import DiagonalOperator, FockOperator, InteractionPolynomial, norm_p_alpha
from ncnls.propagator import populated_offsets
from ncnls.scattering import (
    ContractionFailure,
    GateError,
    ScatteringConfig,
    default_norm_grid,
    diagonal_wave,
    non_surjectivity_probe,
    picard_wave,
    scattering_map,
    scattering_norm,
    soliton_overlap,
)

CUBIC = InteractionPolynomial([0.0, 1.0])
ZERO = InteractionPolynomial([])
CFG = ScatteringConfig(alpha=2.5, T=2.5)
N = 24


def vacuum(s, N=N):
    return FockOperator.ket_bra(0, 0, N, s)


@pytest.fixture(scope="module")
def small_wave():
    return picard_wave(vacuum(0.4), "plus", CFG, CUBIC, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ScatteringConfig(T=0.5)
    with pytest.raises(ValueError):
        ScatteringConfig(delta=0)
    with pytest.raises(ValueError):
        ScatteringConfig(horizon_cap=1.0, T=2.0)
    assert ScatteringConfig(delta=0.3).gate0 == 0.3
    assert ScatteringConfig(delta=0.3, delta0=0.1).gate0 == 0.1


def test_scattering_norm_basics():
    grid = default_norm_grid(2.5)
    assert scattering_norm(FockOperator.zeros(1, N), 2.5, grid) == 0.0
    with pytest.raises(ValueError):
        scattering_norm(vacuum(1.0), 2.5, [])
    coarse = scattering_norm(vacuum(1.0), 2.5, default_norm_grid(10.0, 6, 2))
    fine = scattering_norm(vacuum(1.0), 2.5, np.concatenate([default_norm_grid(10.0, 6, 2),
                                                                default_norm_grid(10.0, 30, 8)]))
    assert np.isfinite(coarse) and coarse <= fine
    assert fine - coarse < 0.05


def test_zero_data_single_iteration():
    res = picard_wave(FockOperator.zeros(1, N), "plus", CFG, CUBIC, 1.0)
    assert res.iterations == 1 and not np.any(res.omega_value.entries)


def test_free_interaction_is_exact():
    phi = vacuum(0.4) + FockOperator.ket_bra(1, 0, N, 0.1j)
    res = picard_wave(phi, "minus", CFG, ZERO, 1.0)
    assert np.array_equal(res.omega_value.entries, phi.entries)
    assert not np.any(res.convergence_curve)
    out, _ = scattering_map(phi, CFG, ZERO, 1.0)
    assert np.array_equal(out.entries, phi.entries)


def test_small_data_contraction(small_wave):
    r = small_wave.contraction_ratios
    assert small_wave.converged and np.all(r < 1)
    assert small_wave.ratios_geometric()
    assert small_wave.curve_monotone()
    assert small_wave.gate_value < CFG.delta
    assert np.isfinite(small_wave.tail_estimate)


def test_minus_direction_mirrors_plus(small_wave):
    minus = picard_wave(vacuum(0.4), "minus", CFG, CUBIC, 1.0)
    assert minus.converged and minus.curve_monotone()
    # late ratios sit near roundoff, compare the leading ones
    assert np.allclose(minus.contraction_ratios[:3], small_wave.contraction_ratios[:3], rtol=1e-6)


def test_first_ratio_halving_sensitivity(small_wave):
    half = picard_wave(vacuum(0.2), "plus", CFG, CUBIC, 1.0)
    assert small_wave.contraction_ratios[0] / half.contraction_ratios[0] >= 3.5


def test_gauge_covariance(small_wave):
    phase = np.exp(1.1j)
    rotated = picard_wave(vacuum(0.4 * phase), "plus", CFG, CUBIC, 1.0)
    assert np.max(np.abs(rotated.omega_value.entries - phase * small_wave.omega_value.entries)) <= 1e-10


def test_offsets_conserved():
    phi = FockOperator.ket_bra(1, 0, N, 0.1)
    res = picard_wave(phi, "plus", CFG, CUBIC, 1.0)
    assert populated_offsets(res.omega_value.entries, 1, N) == (1,)
    diag = picard_wave(vacuum(0.4) + FockOperator.ket_bra(2, 2, N, 0.1), "plus", CFG, CUBIC, 1.0)
    assert diag.omega_value.is_diagonal()


def test_preconditions():
    with pytest.raises(ValueError):
        picard_wave(vacuum(0.1), "plus", ScatteringConfig(alpha=2.0), CUBIC, 1.0)
    with pytest.raises(ValueError):
        picard_wave(vacuum(0.1), "plus", CFG, InteractionPolynomial([1.0]), 1.0)
    with pytest.raises(GateError):
        picard_wave(vacuum(3.0), "plus", CFG, CUBIC, 1.0)
    with pytest.raises(GateError):
        scattering_map(vacuum(0.4), ScatteringConfig(delta0=0.1), CUBIC, 1.0)


def test_linear_term_behind_research_flag():
    cfg = ScatteringConfig(allow_linear=True)
    try:
        res = picard_wave(vacuum(0.05), "plus", cfg, InteractionPolynomial([0.1]), 1.0)
        assert res.converged
    except ContractionFailure:
        pass


def test_triple_curve_emitted():
    res = picard_wave(vacuum(0.4, 16), "plus", CFG, CUBIC, 1.0, triple=True)
    assert res.triple_curve is not None and res.triple_curve.shape == res.convergence_curve.shape
    assert np.all(np.isfinite(res.triple_curve))


def test_scattering_map_cubic_deviation_scaling():
    devs = []
    amps = (0.4, 0.2, 0.1)
    for s in amps:
        out, wave = scattering_map(vacuum(s), CFG, CUBIC, 1.0)
        assert norm_p_alpha(out, 2, CFG.alpha) <= 2 * CFG.gate0
        devs.append(norm_p_alpha(out - vacuum(s), 2, CFG.alpha))
    slope = np.polyfit(np.log(amps), np.log(devs), 1)[0]
    assert slope >= 3.0 - 0.1
    zero, _ = scattering_map(FockOperator.zeros(1, N), CFG, CUBIC, 1.0)
    assert not np.any(zero.entries)


def test_csv_exports(small_wave, tmp_path):
    conv = small_wave.convergence_csv(tmp_path / "c.csv", "hdr").read_text().splitlines()
    assert conv[:2] == ["# hdr", "t,conv_2alpha"]
    rat = small_wave.ratios_csv(tmp_path / "r.csv").read_text().splitlines()
    assert rat[0] == "iter,ratio" and len(rat) == len(small_wave.contraction_ratios) + 1


def test_diagonal_zero_and_preconditions():
    res = diagonal_wave(DiagonalOperator.zeros(1, 16), CFG, CUBIC, 1.0)
    assert not np.any(res.omega_value.values)
    with pytest.raises(ValueError):
        diagonal_wave(DiagonalOperator.zeros(1, 16), CFG, InteractionPolynomial([1.0]), 1.0)


def test_diagonal_moderate_data():
    v = np.zeros(300, complex)
    v[0] = 0.8
    cfg = ScatteringConfig(alpha=2.5, T=2.5, horizon_cap=20.0)
    res = diagonal_wave(DiagonalOperator(1, 300, v), cfg, CUBIC, 1.0)
    assert res.converged and res.horizon_stable
    assert res.curve_monotone()
    assert len(res.horizons) >= 2
    # free-part decay of the vacuum: |U_00,00| = (1+t^2)^(-1/2) <= C t^-1 (1 + log t)
    assert 0 < res.decay_constant <= 1.0


def test_probe_soliton_not_asymptotically_free():
    rep = non_surjectivity_probe(InteractionPolynomial([-2.0, 1.0]), 768.0, N=64, replay_steps=0)
    assert rep.bounded_away
    assert rep.min_sup_deviation >= 0.5 * rep.phi0_op_norm
    # zero candidate: deviation equals ||phi0||_2 at all times
    assert np.allclose(rep.sup_deviation[0], rep.phi0_l2_norm)
    assert rep.identity_curve[0] == pytest.approx(0.0, abs=1e-7)
    assert rep.identity_curve[-1] > 0.5 * rep.phi0_l2_norm


def test_soliton_overlap_at_zero_is_squared_norm():
    x = np.array([1.0, 0.5, 0.0, 0.25])
    assert soliton_overlap(x, [0.0])[0] == pytest.approx(np.sum(x**2))
    # vacuum: <0|U(t)|0> = 1/(1+it)
    assert soliton_overlap(np.array([1.0]), [2.0])[0] == pytest.approx(1 / (1 + 2j))
