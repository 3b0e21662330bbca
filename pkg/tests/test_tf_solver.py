import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anyonvlasov.grids import DensityField, Grid2D
from anyonvlasov.tf_solver import (
    DomainTooSmallError, Trap, perturbed_infimum_bound, solve_tf, tf_energy,
)


def test_harmonic_closed_form():
    sol = solve_tf(Trap.harmonic(), 1.0, Grid2D(256, 2.0))
    lam = 2 * np.sqrt(2)
    assert sol.lam == pytest.approx(lam, abs=1e-4)
    assert sol.energy == pytest.approx(lam**3 / 12, abs=1e-4)


def test_quartic_closed_form():
    # mass = lambda^{3/2}/6 for V = |x|^4
    sol = solve_tf(Trap.power_law(1.0, 4.0), 1.0, Grid2D(256, 1.8))
    assert sol.lam == pytest.approx(6 ** (2 / 3), abs=1e-4)


@settings(max_examples=20, deadline=None)
@given(mass=st.floats(0.2, 3.0), c=st.floats(0.5, 2.0))
def test_mass_constraint_and_positivity(mass, c):
    sol = solve_tf(Trap.harmonic(c), mass, Grid2D(96, 3.0))
    assert sol.mass == pytest.approx(mass, abs=1e-9)
    assert np.all(sol.rho.values >= 0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), amp=st.floats(1e-3, 0.05))
def test_minimizer_beats_mass_preserving_perturbations(harmonic_tf64, seed, amp):
    sol = harmonic_tf64
    rng = np.random.default_rng(seed)
    pert = rng.standard_normal(sol.rho.values.shape) * (sol.rho.values > 0)
    pert -= pert.sum() / max(1, np.count_nonzero(sol.rho.values > 0)) * (sol.rho.values > 0)
    trial = np.maximum(sol.rho.values + amp * pert, 0)
    trial *= sol.mass / (trial.sum() * sol.rho.grid.cell_area)
    assert tf_energy(DensityField(trial, sol.rho.grid), Trap.harmonic()) >= sol.energy - 1e-12


def test_domain_too_small():
    with pytest.raises(DomainTooSmallError):
        solve_tf(Trap.harmonic(), 1.0, Grid2D(64, 1.0))


def test_rejects_nonpositive_mass():
    with pytest.raises(ValueError):
        solve_tf(Trap.harmonic(), 0.0, Grid2D(32, 2.0))


def test_confinement_check():
    g = Grid2D(32, 3.0)
    assert Trap.harmonic().check_confining(g)
    assert not Trap.power_law(1.0, 1.0).check_confining(g)


def test_perturbed_bound():
    assert perturbed_infimum_bound(2.0, 0.1, 0.2) == pytest.approx(0.8 * 0.8 * 2.0)
    assert perturbed_infimum_bound(2.0, 0.0, 0.0) == 2.0
    with pytest.raises(ValueError):
        perturbed_infimum_bound(2.0, 0.5, 0.1)


def test_summary_serializes_grid():
    sol = solve_tf(Trap.harmonic(), 1.0, Grid2D(32, 2.0))
    s = sol.summary()
    assert Grid2D.from_dict(s["grid"]) == sol.rho.grid
    assert set(s) == {"lambda", "energy", "mass", "grid"}
