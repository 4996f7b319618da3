import numpy as np
import pytest
from numpy.testing import assert_allclose

from wgqed import (
    ChainSpec,
    PhysParams,
    SegmentRole,
    StateVector,
    build_chain,
    build_grid,
    dicke_initial_state,
    effective_hamiltonian,
    evolve_markovian,
    resolvent_sweep,
    time_domain,
)
from wgqed.spectral import GridResolutionError, ScenarioScales, SpectralGrid
from test_hamiltonian import random_array


def test_grid_rule_worked_example(params):
    # Gamma_fast = 5, t_max = 12: span at least [-100, 100], spacing <= 2 pi/96
    grid = build_grid(params, ScenarioScales(gamma_c=5.0), t_max=12.0)
    assert grid.n_points == 4096
    assert grid.delta_min == -100.0 and grid.delta_max == 100.0
    assert grid.spacing <= 2 * np.pi / 96


def test_grid_rule_scales_with_t_max(params):
    grid = build_grid(params, ScenarioScales(gamma_c=5.0), t_max=24.0)
    assert grid.n_points == 8192


def test_grid_rule_errors(params):
    with pytest.raises(ValueError):
        build_grid(params, ScenarioScales(gamma_c=5.0), t_max=0.0)
    with pytest.raises(ValueError):
        build_grid(params, ScenarioScales(gamma_c=0.0), t_max=1.0)
    with pytest.raises(GridResolutionError, match="reduce"):
        build_grid(params, ScenarioScales(gamma_c=1e5), t_max=100.0)


def test_grid_apodization_window():
    grid = SpectralGrid(-10.0, 10.0, 64, ("raised-cosine", 0.1))
    w = grid.apodization()
    assert w[0] == 0.0 and w[-1] == 0.0
    assert np.all(w[6:-6] == 1.0)
    flat = SpectralGrid(-10.0, 10.0, 64, None).apodization()
    assert np.all(flat == 1.0)


def _single_atom(params):
    arr = build_chain(ChainSpec.three_segment(0, 1, 0), params)
    psi0 = dicke_initial_state(arr, params)
    return arr, psi0


def test_single_atom_slice_closed_form(params):
    arr, psi0 = _single_atom(params)
    grid = build_grid(params, ScenarioScales(gamma_c=1.05), t_max=8.0)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    expected = 1.0 / (slices.deltas + 0.5j * params.gamma_tot)
    assert_allclose(slices.x[:, 0], expected, atol=1e-12)
    assert len(slices) == grid.n_points
    one = slices[5]
    assert one.delta == grid.deltas[5]
    assert one.x.shape == (1,)


def test_single_atom_reconstruction(params):
    arr, psi0 = _single_atom(params)
    grid = build_grid(params, ScenarioScales(gamma_c=1.05), t_max=8.0, span_factor=400)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    t = np.linspace(0.0, 8.0, 257)
    traj = time_domain(slices, grid, t)
    assert np.max(np.abs(traj.population - np.exp(-params.gamma_tot * t))) < 1e-4


def test_retardation_disabled_equals_markovian_resolvent(params):
    rng = np.random.default_rng(17)
    arr = random_array(rng, 12)
    psi0 = StateVector(np.ones(12) / np.sqrt(12))
    grid = SpectralGrid(-30.0, 30.0, 128, None)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    h0 = effective_hamiltonian(arr, params).matrix
    for idx in (0, 31, 64, 127):
        delta = grid.deltas[idx]
        direct = np.linalg.solve(delta * np.eye(12) - h0, psi0.amplitudes)
        assert_allclose(slices.x[idx], direct, atol=1e-11)


def test_residuals_on_long_cavity(params):
    # retarded kernel over a 60-atom atomic cavity
    gap = 174000.25  # about 0.04 gamma^-1 of one-way retardation
    arr = build_chain(ChainSpec.three_segment(25, 10, 25, gap_d0=gap), params)
    psi0 = dicke_initial_state(arr, params)
    grid = SpectralGrid(-40.0, 40.0, 512, None)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=True)
    assert slices.retarded
    assert slices.residual_max <= 1e-10


def test_cross_method_oracle_20_atoms(params):
    rng = np.random.default_rng(5)
    arr = random_array(rng, 20, span=10.0)
    amp = rng.normal(size=20) + 1j * rng.normal(size=20)
    psi0 = StateVector(amp / np.linalg.norm(amp))
    gamma_fast = params.gamma_tot + 19 * params.gamma_wg
    grid = build_grid(params, ScenarioScales(gamma_c=gamma_fast), t_max=8.0, span_factor=400)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    t = np.linspace(0.0, 8.0, 200)
    spectral = time_domain(slices, grid, t)
    markovian = evolve_markovian(
        effective_hamiltonian(arr, params), psi0, np.concatenate([[0.0], t[1:]])
    )
    assert np.max(np.abs(spectral.amplitudes - markovian.amplitudes)) < 1e-3


def test_initial_value_and_causality(params):
    rng = np.random.default_rng(9)
    arr = random_array(rng, 10)
    amp = rng.normal(size=10) + 1j * rng.normal(size=10)
    psi0 = StateVector(amp / np.linalg.norm(amp))
    grid = build_grid(params, ScenarioScales(gamma_c=1.5), t_max=8.0, span_factor=400)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    traj0 = time_domain(slices, grid, np.array([0.0]))
    assert np.max(np.abs(traj0.amplitudes[0] - psi0.amplitudes)) < 1e-3
    negative = time_domain(slices, grid, np.linspace(-2.0, -0.1, 40))
    assert np.max(np.abs(negative.amplitudes)) < 1e-3


def test_times_beyond_alias_window_rejected(params):
    arr, psi0 = _single_atom(params)
    grid = build_grid(params, ScenarioScales(gamma_c=1.05), t_max=4.0)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    with pytest.raises(ValueError, match="alias"):
        time_domain(slices, grid, np.array([0.0, grid.alias_window]))


def test_grid_refinement_convergence(params):
    arr = build_chain(ChainSpec.three_segment(10, 10, 10), params)
    psi0 = dicke_initial_state(arr, params)
    t = np.linspace(0.0, 8.0, 100)
    pops = []
    for n_extra in (1, 2):
        base = build_grid(params, ScenarioScales(gamma_c=2.5), t_max=8.0, span_factor=200)
        grid = SpectralGrid(
            base.delta_min, base.delta_max, base.n_points * n_extra, base.window
        )
        slices = resolvent_sweep(arr, params, psi0, grid, retarded=True)
        pops.append(time_domain(slices, grid, t).population)
    assert np.max(np.abs(pops[1] - pops[0])) < 1e-4


def test_workers_give_identical_results(params):
    rng = np.random.default_rng(2)
    arr = random_array(rng, 8)
    psi0 = StateVector(np.ones(8) / np.sqrt(8))
    grid = SpectralGrid(-20.0, 20.0, 256, None)
    serial = resolvent_sweep(arr, params, psi0, grid, retarded=True, workers=1)
    threaded = resolvent_sweep(arr, params, psi0, grid, retarded=True, workers=4, chunk_size=32)
    assert np.array_equal(serial.x, threaded.x)


def test_slices_csv_dump(tmp_path, params):
    arr, psi0 = _single_atom(params)
    grid = SpectralGrid(-5.0, 5.0, 16, None)
    slices = resolvent_sweep(arr, params, psi0, grid, retarded=False)
    path = tmp_path / "slices.csv"
    slices.to_csv(path)
    import csv as _csv

    with open(path) as fh:
        rows = list(_csv.reader(fh))
    assert rows[0] == ["delta", "atom", "abs_x_squared"]
    assert len(rows) == 1 + 16
    assert float(rows[1][2]) == pytest.approx(1.0 / (25.0 + 0.525**2), rel=1e-9)
