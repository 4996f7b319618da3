import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from wgqed import (
    ChainSpec,
    JCParams,
    PhysParams,
    build_chain,
    classify_regime,
    collective_rate,
    jc_population,
    kappa_estimate,
    mirror_reflectance_lorentzian,
    transfer_matrix_reflectance,
)
from wgqed.analytic import fit_jc_trace, jc_frequency


def jc_population_ode(g, kappa, t_grid):
    """Independent oracle: integrate the amplitude pair
    alpha' = -i g beta, beta' = -i g alpha - (kappa/2) beta, p = |alpha|^2."""

    def rhs(_t, y):
        alpha, beta = y[0] + 1j * y[1], y[2] + 1j * y[3]
        da = -1j * g * beta
        db = -1j * g * alpha - 0.5 * kappa * beta
        return [da.real, da.imag, db.real, db.imag]

    sol = solve_ivp(
        rhs, (0.0, t_grid[-1]), [1.0, 0.0, 0.0, 0.0],
        t_eval=t_grid, rtol=1e-11, atol=1e-13, method="DOP853",
    )
    return sol.y[0] ** 2 + sol.y[1] ** 2


def test_jc_uncoupled_stays_excited():
    t = np.linspace(0, 10, 101)
    assert np.all(jc_population(JCParams(g=0.0, kappa=2.0), t) == 1.0)


def test_jc_initial_value():
    for g, kappa in [(0.3, 0.1), (2.0, 5.0), (1.0, 4.0)]:
        assert jc_population(JCParams(g, kappa), 0.0) == pytest.approx(1.0, abs=1e-12)


def test_jc_lossless_limit_is_rabi():
    t = np.linspace(0, 10, 400)
    p = jc_population(JCParams(g=1.0, kappa=1e-9), t)
    assert np.max(np.abs(p - np.cos(t) ** 2)) < 1e-6


def test_jc_matches_ode_oracle_on_grid():
    t = np.linspace(0, 10, 160)
    for g in np.linspace(0.0, 5.0, 6):
        for kappa in np.linspace(0.0, 5.0, 6):
            if g == 0 and kappa == 0:
                continue
            p = jc_population(JCParams(g, kappa), t)
            assert np.max(np.abs(p - jc_population_ode(g, kappa, t))) < 1e-6


def test_jc_degenerate_point_continuous():
    # kappa^2 = 16 g^2 is a removable singularity of the closed form
    t = np.linspace(0, 8, 200)
    kappa = 2.0
    exact_limit = jc_population(JCParams(kappa / 4.0, kappa), t)
    assert np.max(np.abs(exact_limit - jc_population_ode(kappa / 4.0, kappa, t))) < 1e-6
    nearby = jc_population(JCParams(kappa / 4.0 * (1 + 1e-6), kappa), t)
    assert np.max(np.abs(exact_limit - nearby)) < 1e-4


def test_jc_collective_rescaling():
    t = np.linspace(0, 5, 50)
    collective = jc_population(JCParams(g=0.5, kappa=1.0, n_atoms=4), t)
    rescaled = jc_population(JCParams(g=1.0, kappa=1.0), t)
    assert_allclose(collective, rescaled, atol=1e-12)


def test_jc_rejects_negative_time():
    with pytest.raises(ValueError):
        jc_population(JCParams(1.0, 1.0), np.array([-0.1, 0.5]))


@given(
    g=st.floats(min_value=0.0, max_value=5.0),
    kappa=st.floats(min_value=0.0, max_value=5.0),
)
def test_jc_population_bounded(g, kappa):
    t = np.linspace(0, 10, 101)
    p = jc_population(JCParams(g, kappa), t)
    assert np.all(p >= -1e-9)
    assert np.all(p <= 1.0 + 1e-9)


# --- Lorentzian mirror reflectance --------------------------------------------


def test_lorentzian_values():
    assert mirror_reflectance_lorentzian(10.0, 0.0) == pytest.approx(1.0)
    assert mirror_reflectance_lorentzian(10.0, 5.0) == pytest.approx(0.5)
    assert mirror_reflectance_lorentzian(10.0, 1e9) < 1e-15
    with pytest.raises(ValueError):
        mirror_reflectance_lorentzian(0.0, 1.0)


# --- transfer matrix -----------------------------------------------------------


def _half_wave_positions(n):
    return 0.5 * np.arange(n)


def _cascade_closed_form(n, params, delta):
    """Exact half-wave cascade: a single Lorentzian with the collective guided
    width N Gamma_wg and the unchanged per-atom loss."""
    n_gamma = n * params.gamma_wg
    loss = params.gamma_tot - params.gamma_wg
    return -(0.5 * n_gamma) / (0.5 * (n_gamma + loss) - 1j * delta)


def test_single_atom_reflection(params):
    r, t = transfer_matrix_reflectance(_half_wave_positions(1), params, 0.0)
    assert r == pytest.approx(-0.05 / 1.05, abs=1e-12)
    assert abs(r) ** 2 == pytest.approx(0.00227, abs=1e-5)
    assert t == pytest.approx(1 + r, abs=1e-12)


@pytest.mark.parametrize("n", [2, 10, 200])
def test_half_wave_cascade_matches_closed_form(params, n):
    # the closed form drops the delta/v_g propagation phases, which accumulate
    # to ~1e-5 across 200 half-wave gaps at these detunings
    deltas = np.linspace(-8.0, 8.0, 41)
    r, _ = transfer_matrix_reflectance(_half_wave_positions(n), params, deltas)
    assert_allclose(r, _cascade_closed_form(n, params, deltas), atol=2e-4)


def test_mirror_200_resonant_value_and_bandwidth(params):
    # exact ceiling at N = 200 with the default rates: |r|^2 = (200 rho /
    # (1 + 199 rho))^2 = 0.8264 with rho = Gamma_wg / Gamma_tot
    r0, _ = transfer_matrix_reflectance(_half_wave_positions(200), params, 0.0)
    assert abs(r0) ** 2 == pytest.approx(0.82644628, abs=1e-6)
    deltas = np.linspace(-20, 20, 2001)
    r, _ = transfer_matrix_reflectance(_half_wave_positions(200), params, deltas)
    power = np.abs(r) ** 2
    half = 0.5 * power.max()
    fwhm = deltas[power >= half][-1] - deltas[power >= half][0]
    gamma_m = 200 * params.gamma_1d / 2
    assert abs(fwhm - gamma_m) / gamma_m < 0.3


def test_mirror_500_meets_lorentzian_envelope(params):
    # the published mirrors (500 atoms) do exceed 0.9 power reflectance and
    # track the narrow-band Lorentzian within 0.1 across the response band
    n = 500
    gamma_m = n * params.gamma_1d / 2
    r0, _ = transfer_matrix_reflectance(_half_wave_positions(n), params, 0.0)
    assert abs(r0) ** 2 >= 0.9
    deltas = np.linspace(-gamma_m / 2, gamma_m / 2, 201)
    r, _ = transfer_matrix_reflectance(_half_wave_positions(n), params, deltas)
    deviation = np.abs(np.abs(r) ** 2 - mirror_reflectance_lorentzian(gamma_m, deltas))
    assert deviation.max() < 0.1


def test_quarter_wave_spacing_suppresses_reflection(params):
    r, _ = transfer_matrix_reflectance(0.25 * np.arange(200), params, 0.0)
    assert abs(r) ** 2 < 0.05


@given(
    n=st.integers(min_value=1, max_value=40),
    delta=st.floats(min_value=-30.0, max_value=30.0),
)
def test_cascade_subunitary(n, delta):
    params = PhysParams()
    r, t = transfer_matrix_reflectance(_half_wave_positions(n), params, delta)
    assert abs(r) ** 2 + abs(t) ** 2 <= 1.0 + 1e-12


# --- kappa estimate and regime classification ----------------------------------


def test_kappa_estimate_values():
    assert kappa_estimate(1.0, 2.0, 3.0) == 0.0
    assert kappa_estimate(0.99, 1.0, 1.0) == pytest.approx(0.01)
    assert kappa_estimate(0.0, 4.0, 2.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        kappa_estimate(1.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        kappa_estimate(0.5, 0.0, 1.0)


def test_collective_rate(params):
    assert collective_rate(1, params) == pytest.approx(1.05)
    assert collective_rate(100, params) == pytest.approx(1.05 + 99 * 0.05)
    assert collective_rate(0, params) == 0.0


def test_classify_published_cavity(params):
    # 500/100/500 atoms with 20 cm gaps: a long resonant atomic cavity
    d0 = round(0.2 / 650e-9 * 2) / 2  # snap 20 cm to the half-wave lattice
    chain = ChainSpec.three_segment(500, 100, 500, gap_d0=d0)
    report = classify_regime(chain, params)
    assert report.markovian is False
    assert report.cavity_retardation is True
    assert report.coherence_fit is True
    assert report.mirror_dominance is True
    # Gamma scales linearly with atom number, so the ratio is close to 5
    assert report.numbers["dominance_ratio"] == pytest.approx(5.0, rel=0.15)
    assert report.numbers["kappa"] > 0
    assert report.strong_coupling is None  # set only from an oscillation fit


def test_classify_short_bragg_chain(params):
    chain = ChainSpec.three_segment(100, 100, 100, gap_d0=0.5)
    report = classify_regime(chain, params)
    assert report.markovian is True
    assert report.cavity_retardation is False
    assert report.numbers["dominance_ratio"] == pytest.approx(1.0)


def test_classify_bare_emitter(params):
    report = classify_regime(ChainSpec.three_segment(0, 50, 0), params)
    assert report.markovian is True
    assert report.cavity_retardation is None
    assert report.coherence_fit is None
    assert report.mirror_dominance is None
    assert report.numbers["kappa"] is None


def test_fit_jc_trace_recovers_parameters():
    rng_t = np.linspace(0, 12, 900)
    g_true, kappa_true, env_true = 1.2, 0.6, 0.35
    p = np.exp(-env_true * rng_t) * jc_population(JCParams(g_true, kappa_true), rng_t)
    fit = fit_jc_trace(rng_t, p)
    assert fit is not None
    assert fit.frequency == pytest.approx(jc_frequency(g_true, kappa_true), rel=0.02)
    assert fit.g == pytest.approx(g_true, rel=0.05)


def test_fit_jc_trace_none_for_monotone():
    t = np.linspace(0, 5, 200)
    assert fit_jc_trace(t, np.exp(-t)) is None
