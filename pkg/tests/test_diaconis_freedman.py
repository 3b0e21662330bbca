import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anyonvlasov.diaconis_freedman import (
    BudgetExceeded, DiscreteSymmetricMeasure, EmpiricalConfig, Tiling, admissible_cell_volume, average_map,
    box_mass, box_mass_moment_bound, clustered_sampler, df_marginal_closed_form, df_marginal_exact, df_sample,
    df_tv_bound, discrete_sampler, mc_violation_probability, occupancy_threshold, optimal_pauli_bound,
    pauli_violation_bound, set_partitions_count, stirling2, stirling_upper_bound, tv_distance, union_bound,
    wilson_interval,
)


def test_symmetry_and_normalization_enforced():
    with pytest.raises(ValueError):
        DiscreteSymmetricMeasure([0, 1], 2, {(0, 1): Fraction(1)})
    with pytest.raises(ValueError):
        DiscreteSymmetricMeasure([0, 1], 2, {(0, 0): Fraction(1, 2)})
    mu = DiscreteSymmetricMeasure.from_multisets([0, 1], 2, {(0, 1): 1})
    assert mu.joint_weights == {(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}


def test_resampling_a_point_mass_configuration():
    # Z = (0, 1) with certainty: resampled pairs are uniform over {0,1}^2
    mu = DiscreteSymmetricMeasure.from_multisets([0, 1], 2, {(0, 1): 1})
    m2 = df_marginal_exact(mu, 2)
    assert m2 == {k: Fraction(1, 4) for k in [(0, 0), (0, 1), (1, 0), (1, 1)]}
    assert tv_distance(mu.marginal(2), m2) == 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), N=st.integers(1, 4), atoms=st.integers(1, 3))
def test_closed_forms_are_exact(seed, N, atoms):
    mu = DiscreteSymmetricMeasure.random(atoms, N, np.random.default_rng(seed))
    for n in range(1, min(3, N) + 1):
        ex = df_marginal_exact(mu, n)
        assert tv_distance(ex, df_marginal_closed_form(mu, n)) == 0
        assert sum(ex.values()) == 1
        assert tv_distance(mu.marginal(n), ex) <= df_tv_bound(n, N)


def test_first_marginal_is_unchanged():
    mu = DiscreteSymmetricMeasure.random(3, 4, np.random.default_rng(2))
    assert df_marginal_exact(mu, 1) == mu.marginal(1)


def test_enumeration_budget_and_ranges():
    mu = DiscreteSymmetricMeasure.random(2, 6, np.random.default_rng(0))
    with pytest.raises(BudgetExceeded):
        df_marginal_exact(mu, 2)
    mu = DiscreteSymmetricMeasure.random(2, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        df_marginal_exact(mu, 3)


def test_sampler_matches_exact_marginal():
    rng = np.random.default_rng(4)
    mu = DiscreteSymmetricMeasure.random(3, 3, rng)
    samp = discrete_sampler(mu)
    draws = np.array([df_sample(samp, 2, rng) for _ in range(20000)])
    ex = df_marginal_exact(mu, 2)
    for k, v in ex.items():
        freq = np.mean(np.all(draws == np.array(k), axis=1))
        assert abs(freq - float(v)) < 5 * math.sqrt(float(v) * (1 - float(v)) / 20000) + 1e-3


def test_stirling_numbers():
    assert stirling2(4, 2) == 7
    assert stirling2(10, 3) == 9330
    for n in range(11):
        for k in range(n + 1):
            assert stirling2(n, k) == set_partitions_count(n, k)
    assert sum(stirling2(10, k) for k in range(11)) == 115975  # Bell number
    with pytest.raises(OverflowError):
        stirling2(65, 3)


@pytest.mark.parametrize("n", range(1, 21))
def test_stirling_upper_bound(n):
    for k in range(1, n + 1):
        assert stirling2(n, k) <= stirling_upper_bound(n, k)


def admissible_cases(seed):
    rng = np.random.default_rng(seed)
    for N in range(1, 5):
        mu = DiscreteSymmetricMeasure.random(3, N, rng)
        hbar = float(rng.uniform(0.05, 1.0))
        v = admissible_cell_volume(mu, hbar)
        yield mu, hbar, v


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_moment_bound_dominates_exact_box_mass(seed):
    for mu, hbar, v in admissible_cases(seed):
        for n in range(1, mu.N + 1):
            marg = df_marginal_exact(mu, n)
            for size in (1, 2, 3):
                for box in combinations(range(3), size):
                    exact = box_mass(marg, set(box))
                    assert float(exact) <= box_mass_moment_bound(n, v * size, mu.N, hbar) * (1 + 1e-12)


def test_pauli_bound_optimum():
    n, b = optimal_pauli_bound(1e4**-0.5, 0.5, 10**4, 1e-2)
    assert n == 2
    assert b == pytest.approx(pauli_violation_bound(2, 1e4**-0.5, 0.5, 10**4, 1e-2))
    assert all(b <= pauli_violation_bound(k, 1e4**-0.5, 0.5, 10**4, 1e-2) for k in range(1, 30))


def test_tiling_faces_go_to_lower_tile():
    t = Tiling(0.5, 0.5, 2)
    pts = np.array([[0.0, 0.0, 0.0, 0.0], [-1.0, -1.0, -1.0, -1.0], [1.0, 1.0, 1.0, 1.0], [1.01, 0, 0, 0]])
    ids = t.tile_ids(pts)
    m = t.per_axis
    assert ids[0] == sum(1 * m**k for k in range(4))
    assert ids[1] == 0
    assert ids[2] == t.count - 1
    assert ids[3] == -1


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), N=st.integers(1, 200))
def test_average_map_preserves_mass(seed, N):
    rng = np.random.default_rng(seed)
    t = Tiling.cubic(N, 0.5, 1.0)
    cfg = EmpiricalConfig(rng.uniform(-0.99 * t.L, 0.99 * t.L, (N, 4)))
    ave = average_map(cfg, t)
    assert ave.mass() == pytest.approx(1.0, rel=1e-12)
    assert ave.position_density().sum() * t.l_x**2 == pytest.approx(1.0, rel=1e-12)
    # tile-centre rule integrates linear functions of the averaged measure within diam/2
    phi = lambda z: z[..., 0] + 0.5 * z[..., 3]
    direct = np.mean(phi(cfg.points))
    assert abs(ave.integrate(phi) - direct) <= 1.5 * t.diameter / 2 + 1e-12


def test_occupancy_threshold_and_wilson():
    assert occupancy_threshold(100, (2 * np.pi) ** 2 / 100, 1.0) == 2
    assert occupancy_threshold(10, 1e-6, 0.5) == 1
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0, abs=1e-15) and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_clustered_configuration_always_violates():
    t = Tiling.cubic(64, 0.75, 1.0)
    est, worst = mc_violation_probability(clustered_sampler([0.1, 0.1, 0.1, 0.1]), 64, t, 1.0, 1000, seed=0)
    assert est.estimate == 1.0 and np.all(worst == 64)
    with pytest.raises(ValueError):
        mc_violation_probability(clustered_sampler([0, 0, 0, 0]), 64, t, 1.0, 10, seed=0)


def test_union_bound_scales_with_tile_count():
    t = Tiling.cubic(256, 0.75, 1.0)
    n, ub = union_bound(t, 1.0, 256, 256**-0.5)
    _, single = optimal_pauli_bound(t.volume, 1.0, 256, 256**-0.5)
    assert ub == pytest.approx(t.count * single)
