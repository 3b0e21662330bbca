import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from anyonvlasov.coherent_husimi import (
    PhaseGrid, ResolutionError, SlaterState, SqueezedScales, coherent_overlap, coherent_state,
    discrete_hbar_fourier, exchange_kernel, fourier_of_ground, hermite_gaussian, husimi1, husimi1_mass,
    husimi2, marginal_relation_check, overlaps, resolution_of_identity_check, uncertainty_product,
)
from anyonvlasov.grids import Grid2D

SCALES = SqueezedScales.from_hbar(0.125, 1.5)
GRID = Grid2D(128, 4.0)
PHASE = PhaseGrid.uniform(2.5, 40, 2.0, 40)


def slater(n, center=(0.0, 0.0)):
    orders = [(0, 0), (1, 0), (0, 1)][:n]
    f = [hermite_gaussian(GRID, a, b, width2=0.2, center=center) for a, b in orders]
    return SlaterState.orthonormalize(np.array(f), GRID)


def random_phase_points(rng, k, xr=2.0, pr=1.8):
    return np.concatenate([rng.uniform(-xr, xr, (k, 2)), rng.uniform(-pr, pr, (k, 2))], axis=1)


def test_squeezed_scales_keep_hbar():
    assert SCALES.hbar == pytest.approx(0.125, rel=1e-15)
    assert SCALES.hbar_x == pytest.approx(1.5 * 0.125)


@settings(max_examples=20, deadline=None)
@given(x1=st.floats(-1.5, 1.5), x2=st.floats(-1.5, 1.5), p1=st.floats(-1.5, 1.5), p2=st.floats(-1.5, 1.5))
def test_coherent_state_is_normalized(x1, x2, p1, p2):
    F = coherent_state(GRID, (x1, x2), (p1, p2), SCALES)
    assert GRID.integrate(np.abs(F) ** 2) == pytest.approx(1.0, abs=1e-10)
    assert coherent_overlap(F, GRID, (x1, x2), (p1, p2), SCALES) == pytest.approx(1.0, abs=1e-10)


def test_overlap_of_two_coherent_states_closed_form():
    # |<F_z, F_w>|^2 = exp(-|dx|^2/(2 hx) - |dp|^2/(2 hp))
    F = coherent_state(GRID, (0.3, -0.2), (0.5, 0.1), SCALES)
    o = coherent_overlap(F, GRID, (0.1, 0.0), (0.2, 0.4), SCALES)
    want = np.exp(-(0.2**2 + 0.2**2) / (2 * SCALES.hbar_x) - (0.3**2 + 0.3**2) / (2 * SCALES.hbar_p))
    assert abs(o) ** 2 == pytest.approx(want, rel=1e-9)


def test_ground_state_fourier_matches_closed_form():
    F = coherent_state(GRID, (0.0, 0.0), (0.0, 0.0), SCALES)
    q = Grid2D(64, 1.5).axis
    got = discrete_hbar_fourier(F, GRID, q, SCALES.hbar)
    Q1, Q2 = np.meshgrid(q, q, indexing="ij")
    want = fourier_of_ground(SCALES, np.stack([Q1, Q2], -1))
    assert np.abs(got - want).max() < 1e-6


def test_heisenberg_product():
    for sq in (0.5, 1.0, 2.0):
        s = SqueezedScales.from_hbar(0.1, sq)
        dx, dp = uncertainty_product(s, 0.3, -0.7)
        assert dx * dp == pytest.approx(0.05, abs=1e-6)
        assert dx == pytest.approx(np.sqrt(s.hbar_x / 2), rel=1e-8)


def test_resolution_of_identity():
    u = hermite_gaussian(GRID, 1, 2, width2=0.25, center=(0.2, -0.1))
    assert resolution_of_identity_check(u, GRID, SCALES, PHASE) == pytest.approx(1.0, abs=1e-4)
    F = coherent_state(GRID, (0.1, 0.2), (0.3, -0.4), SCALES)
    assert resolution_of_identity_check(F, GRID, SCALES, PHASE) == pytest.approx(1.0, abs=1e-4)


def test_coarse_grid_rejected():
    with pytest.raises(ResolutionError):
        overlaps(np.zeros((8, 8)), Grid2D(8, 4.0), np.zeros(4), SCALES)
    with pytest.raises(ResolutionError):
        overlaps(np.zeros((128, 128)), GRID, np.array([0, 0, 50.0, 0]), SCALES)


def test_non_orthonormal_orbitals_rejected():
    f = hermite_gaussian(GRID, 0, 0, 0.2)
    with pytest.raises(ValueError):
        SlaterState(np.array([f, f]), GRID)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 3))
def test_husimi_bounds_and_rotation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    st_ = slater(n)
    z = random_phase_points(rng, 50)
    m = husimi1(st_, z, SCALES)
    assert np.all(m >= -1e-14) and np.all(m <= 1 + 1e-12)
    U = unitary_group.rvs(n, random_state=seed) if n > 1 else np.array([[np.exp(1j * rng.uniform(0, 6))]])
    assert np.allclose(husimi1(st_.rotated(U), z, SCALES), m, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_two_point_husimi_is_nonnegative_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    st_ = slater(3)
    z1, z2 = random_phase_points(rng, 30), random_phase_points(rng, 30)
    m2 = husimi2(st_, z1, z2, SCALES)
    assert np.all(m2 >= -1e-12)
    assert np.allclose(m2, husimi2(st_, z2, z1, SCALES), atol=1e-13)
    assert np.all(m2 <= husimi1(st_, z1, SCALES) * husimi1(st_, z2, SCALES) + 1e-12)
    assert np.allclose(husimi2(st_, z1, z1, SCALES), 0.0, atol=1e-12)
    k = exchange_kernel(st_, z1, z1, SCALES)
    assert np.allclose(k, husimi1(st_, z1, SCALES), atol=1e-13)


def test_husimi_mass_and_marginals():
    for n in (1, 2, 3):
        assert husimi1_mass(slater(n), PHASE, SCALES) == pytest.approx(n, abs=1e-3)
    rep = marginal_relation_check(slater(2), SCALES, PHASE)
    assert rep["position_discrepancy"] < 1e-3
    assert rep["momentum_discrepancy"] < 1e-3
    assert rep["momentum_mass"] == pytest.approx(2.0, abs=1e-8)


def test_far_translates_are_orthogonal():
    F = coherent_state(GRID, (-2.5, 0.0), (0.0, 0.0), SCALES)
    assert abs(coherent_overlap(F, GRID, (2.5, 0.0), (0.0, 0.0), SCALES)) < 1e-8
