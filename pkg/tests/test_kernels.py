import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anyonvlasov.grids import Grid2D
from anyonvlasov.kernels import (
    INNER_VALUE, BracketError, PointKernel, build_profile, default_profile, discrete_curl,
    gauge_field, kernel_gap_norm, make_kernel, radial_kernel,
)
from anyonvlasov.hartree_fock import GAP_CONSTANT, calibrate_gap_constant

from conftest import gaussian_density


def test_profile_has_unit_mass_by_independent_quadrature():
    prof = default_profile()
    r = (np.arange(400_000) + 0.5) * (2.0 / 400_000)
    mass = np.sum(2 * np.pi * r * prof(r)) * (2.0 / 400_000)
    assert abs(mass - 1.0) < 1e-9
    assert abs(prof.total_mass() - 1.0) < 1e-12


def test_profile_bridge_exponent_frozen():
    # solved once by bisection, checked against the midpoint mass above
    assert default_profile().bridge_shape == pytest.approx(2.9148889612070334, rel=1e-10)


def test_profile_is_c1():
    prof = default_profile()
    for r0 in (1.0, 2.0):
        lo, hi = prof(r0 - 1e-9), prof(r0 + 1e-9)
        assert abs(lo - hi) < 1e-7
        assert abs(prof.derivative(r0 - 1e-6)) < 1e-4
        assert abs(prof.derivative(r0 + 1e-6)) < 1e-4
    assert prof(0.0) == INNER_VALUE
    assert prof(2.5) == 0.0


def test_profile_derivative_matches_finite_difference():
    prof = default_profile()
    r = np.linspace(1.05, 1.95, 19)
    fd = (prof(r + 1e-6) - prof(r - 1e-6)) / 2e-6
    assert np.allclose(prof.derivative(r), fd, atol=1e-7)


def test_unreachable_mass_raises_bracket_error():
    with pytest.raises(BracketError):
        build_profile(1.0, q_max=1.5)
    with pytest.raises(ValueError):
        build_profile(0.4)


@settings(max_examples=40, deadline=None)
@given(R=st.floats(1e-3, 10.0), t=st.floats(2.0, 50.0))
def test_newton_exterior_identity(R, t):
    k = radial_kernel(R=R)
    u = t * R
    assert abs(k.dw(u) - 1.0 / u) <= 1e-10 * max(1.0, 1.0 / u)
    assert abs(k.d2w(u) + 1.0 / u**2) <= 1e-10 * max(1.0, 1.0 / u**2)


@settings(max_examples=30, deadline=None)
@given(R=st.floats(1e-2, 5.0), t=st.floats(0.01, 1.0))
def test_inner_core_is_linear(R, t):
    k = radial_kernel(R=R)
    u = t * R
    assert k.dw(u) == pytest.approx(np.pi * INNER_VALUE * u / R**2, rel=1e-12)


def test_second_and_third_derivatives_match_finite_differences():
    k = radial_kernel(R=0.7)
    u = np.concatenate([np.linspace(0.1, 0.65, 6), np.linspace(0.75, 1.35, 8), np.linspace(1.5, 3.0, 4)])
    e = 1e-5
    assert np.allclose(k.d2w(u), (k.dw(u + e) - k.dw(u - e)) / (2 * e), rtol=1e-6, atol=1e-6)
    assert np.allclose(k.d3w(u), (k.d2w(u + e) - k.d2w(u - e)) / (2 * e), rtol=1e-4, atol=1e-4)


@settings(max_examples=20, deadline=None)
@given(R=st.floats(1e-3, 1.0))
def test_sup_of_field_scales_as_inverse_radius(R):
    ref = radial_kernel(R=1.0)
    k = radial_kernel(R=R)
    assert R * np.max(k.dw(k.u)) == pytest.approx(np.max(ref.dw(ref.u)), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(dx=st.floats(-3, 3), dy=st.floats(-3, 3), R=st.floats(0.05, 2.0))
def test_grad_perp_is_orthogonal_and_odd(dx, dy, R):
    k = radial_kernel(R=R)
    gx, gy = k.grad_perp(dx, dy)
    assert abs(gx * dx + gy * dy) < 1e-12 * (1 + abs(gx) + abs(gy))
    hx, hy = k.grad_perp(-dx, -dy)
    assert gx == pytest.approx(-hx, abs=1e-14) and gy == pytest.approx(-hy, abs=1e-14)


def test_point_kernel_origin_and_limit():
    gx, gy = PointKernel().grad_perp(np.array([0.0, 3.0]), np.array([0.0, 4.0]))
    assert gx[0] == 0 and gy[0] == 0
    assert (gx[1], gy[1]) == pytest.approx((-4 / 25, 3 / 25))
    assert isinstance(make_kernel(0.0), PointKernel)
    with pytest.raises(ValueError):
        radial_kernel(R=-1.0)


def test_curl_flux_equals_two_pi_mass():
    grid = Grid2D(128, 4.0)
    rho = gaussian_density(grid, 0.3)
    A = gauge_field(rho, make_kernel(0.1))
    flux = grid.integrate(discrete_curl(A))
    assert abs(flux - 2 * np.pi * rho.mass()) < 1e-3


def test_field_of_radial_density_is_azimuthal():
    # exact on the symmetry lines, quadrature-accurate elsewhere
    errs = []
    for n in (64, 128):
        grid = Grid2D(n, 3.0)
        rho = gaussian_density(grid, 0.5)
        A = gauge_field(rho, make_kernel(0.2))
        x, y = grid.mesh()
        xa = x * A.ax + y * A.ay
        diag = np.eye(n, dtype=bool)
        assert np.abs(xa[diag]).max() < 1e-12
        assert np.abs(xa[:, ::-1][diag]).max() < 1e-12
        errs.append(np.abs(xa).max() / np.abs(A.norm() * grid.radius()).max())
    assert errs[1] < errs[0] / 8


def test_kernel_table_csv_roundtrip(tmp_path):
    k = radial_kernel(R=0.3)
    path = tmp_path / "k.csv"
    k.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "M", "dw", "d2w", "d3w"]
    data = np.array(rows[1:], dtype=float)
    assert np.array_equal(data[:, 2], k.dw(k.u))


def test_gap_norm_scaling_and_oracle():
    # direct polar midpoint quadrature of |grad w_R - grad w_0|^{4/3}
    R = 0.25
    k = radial_kernel(R=R)
    # u = s^3 removes the integrable u^(-1/3) singularity at the origin
    top = (2 * R) ** (1 / 3)
    s = (np.arange(200_000) + 0.5) * (top / 200_000)
    u = s**3
    integrand = np.abs(k.mass(u) / u - 1.0 / u) ** (4 / 3) * 2 * np.pi * u * 3 * s**2
    direct = (integrand.sum() * (top / 200_000)) ** 0.75
    assert kernel_gap_norm(R) == pytest.approx(direct, rel=1e-7)
    for r in (1e-3, 1e-2, 1e-1):
        assert kernel_gap_norm(r) / np.sqrt(r) == pytest.approx(GAP_CONSTANT, rel=1e-10)
    assert calibrate_gap_constant() == pytest.approx(GAP_CONSTANT, rel=1e-12)
    assert kernel_gap_norm(0.0) == 0.0
