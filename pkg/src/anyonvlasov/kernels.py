"""Smeared log kernel, its radial derivatives, and the statistical gauge field.

The kernel is ``w_R = log * chi_R`` with ``chi_R(x) = chi(x/R)/R^2``.  By
Newton's theorem only the enclosed mass ``M(u)`` of ``chi_R`` inside radius
``u`` matters:

    dw/du   = M/u
    d2w/du2 = -M/u^2 + 2 pi chi_R(u)
    d3w/du3 = 2M/u^3 - 2 pi chi_R(u)/u + 2 pi chi_R'(u)

and ``grad_perp w_R(u) = M(|u|)/|u|^2 * (-u_y, u_x)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .grids import DensityField, Grid2D, VectorField2D, linear_convolve, offset_mesh

INNER_VALUE = 1.0 / np.pi**2


class BracketError(ValueError):
    """Bisection could not bracket the requested root."""


@dataclass(frozen=True)
class SmearingProfile:
    """Radial unit-mass profile: constant on r <= 1, cosine-power bridge on [1, 2].

    On the bridge ``chi(r) = inner_value * (1 + cos(pi (r-1)^q)) / 2``.
    """

    inner_value: float
    bridge_shape: float
    normalization_residual: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip(r - 1.0, 0.0, 1.0)
        bridge = 0.5 * self.inner_value * (1.0 + np.cos(np.pi * s**self.bridge_shape))
        return np.where(r <= 1.0, self.inner_value, np.where(r >= 2.0, 0.0, bridge))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        q = self.bridge_shape
        s = np.clip(r - 1.0, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -0.5 * self.inner_value * np.pi * q * s ** (q - 1.0) * np.sin(np.pi * s**q)
        inside = (r > 1.0) & (r < 2.0)
        return np.where(inside, np.nan_to_num(d), 0.0)

    def bridge_mass(self) -> float:
        return _bridge_mass(self.inner_value, self.bridge_shape)

    def total_mass(self) -> float:
        return np.pi * self.inner_value + self.bridge_mass()


def _bridge_mass(inner: float, q: float) -> float:
    f = lambda r: 2 * np.pi * r * 0.5 * inner * (1.0 + np.cos(np.pi * (r - 1.0) ** q))
    val, _ = quad(f, 1.0, 2.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def build_profile(bridge_family_parameter: float = 1.0, q_max: float = 64.0) -> SmearingProfile:
    """Solve the bridge exponent ``q`` for unit total mass by bisection.

    ``bridge_family_parameter`` is the lower end of the bracket (must keep the
    profile C^1, i.e. be > 1/2).  The bridge mass increases with ``q``.
    """
    q_lo, q_hi = float(bridge_family_parameter), float(q_max)
    if q_lo <= 0.5:
        raise ValueError("bridge exponent must exceed 1/2 for a C^1 profile")
    target = 1.0 - np.pi * INNER_VALUE
    f_lo = _bridge_mass(INNER_VALUE, q_lo) - target
    f_hi = _bridge_mass(INNER_VALUE, q_hi) - target
    if f_lo > 0 or f_hi < 0:
        raise BracketError(
            f"unit mass not reachable for q in [{q_lo}, {q_hi}] "
            f"(residuals {f_lo:.3e}, {f_hi:.3e})"
        )
    for _ in range(200):
        q_mid = 0.5 * (q_lo + q_hi)
        f_mid = _bridge_mass(INNER_VALUE, q_mid) - target
        if f_mid < 0:
            q_lo = q_mid
        else:
            q_hi = q_mid
        if q_hi - q_lo < 1e-14 * q_hi:
            break
    q = 0.5 * (q_lo + q_hi)
    residual = _bridge_mass(INNER_VALUE, q) - target
    return SmearingProfile(INNER_VALUE, q, residual)


@lru_cache(maxsize=None)
def default_profile() -> SmearingProfile:
    return build_profile()


class _UnitMass:
    """Enclosed mass ``M_1(t)`` of the unscaled profile, exact off the bridge."""

    def __init__(self, profile: SmearingProfile, n_nodes: int = 2001):
        self.profile = profile
        t = np.linspace(1.0, 2.0, n_nodes)
        f = lambda r: 2 * np.pi * r * float(profile(r))
        pieces = [quad(f, a, b, epsabs=1e-15, epsrel=1e-13)[0] for a, b in zip(t[:-1], t[1:])]
        m = np.pi * profile.inner_value + np.concatenate([[0.0], np.cumsum(pieces)])
        dm = 2 * np.pi * t * profile(t)
        self._spline = CubicHermiteSpline(t, m, dm)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inner = np.pi * self.profile.inner_value * t**2
        bridge = self._spline(np.clip(t, 1.0, 2.0))
        return np.where(t <= 1.0, inner, np.where(t >= 2.0, 1.0, bridge))


@lru_cache(maxsize=8)
def _unit_mass(profile: SmearingProfile) -> _UnitMass:
    return _UnitMass(profile)


def default_radial_nodes(R: float, n_geom: int = 200, n_lin: int = 400, outer: float = 10.0) -> np.ndarray:
    """Geometric nodes on (0, R], dense linear nodes on [R, 2R], coarser out to ``outer*R``."""
    geom = R * np.geomspace(1e-6, 1.0, n_geom)
    lin = np.linspace(R, 2 * R, n_lin)
    tail = np.linspace(2 * R, outer * R, n_lin // 2)
    return np.unique(np.concatenate([geom, lin, tail]))


@dataclass
class RadialKernel:
    """``w_R`` through its enclosed mass; derivative tables on ``u`` nodes."""

    R: float
    profile: SmearingProfile
    u: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"smearing radius must be positive, got R={self.R}")
        self._m1 = _unit_mass(self.profile)
        if self.u is None:
            self.u = default_radial_nodes(self.R)
        self.u = np.asarray(self.u, dtype=float)

    def chi(self, u):
        return self.profile(np.asarray(u) / self.R) / self.R**2

    def chi_prime(self, u):
        return self.profile.derivative(np.asarray(u) / self.R) / self.R**3

    def mass(self, u):
        return self._m1(np.asarray(u, dtype=float) / self.R)

    def mass_over_u2(self, u):
        """``M(u)/u^2``, finite at 0 where it tends to ``pi chi_R(0)``."""
        u = np.asarray(u, dtype=float)
        small = u <= self.R
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.mass(u) / u**2
        return np.where(small, np.pi * self.profile.inner_value / self.R**2, out)

    def dw(self, u):
        u = np.asarray(u, dtype=float)
        return self.mass_over_u2(u) * u

    def d2w(self, u):
        u = np.asarray(u, dtype=float)
        return -self.mass_over_u2(u) + 2 * np.pi * self.chi(u)

    def d3w(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2 * self.mass_over_u2(u) / u - 2 * np.pi * self.chi(u) / u + 2 * np.pi * self.chi_prime(u)
        # inside the flat core the first two terms cancel exactly
        return np.where(u <= self.R, 2 * np.pi * self.chi_prime(u), out)

    def table(self) -> dict[str, np.ndarray]:
        u = self.u
        return {"u": u, "M": self.mass(u), "dw": self.dw(u), "d2w": self.d2w(u), "d3w": self.d3w(u)}

    def to_csv(self, path) -> None:
        tab = self.table()
        cols = list(tab)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(*(tab[c] for c in cols)):
                w.writerow(["%.17g" % v for v in row])

    def grad_perp(self, dx, dy):
        f = self.mass_over_u2(np.hypot(dx, dy))
        return -f * dy, f * dx


@dataclass(frozen=True)
class PointKernel:
    """``grad_perp log|x| = x_perp/|x|^2``; the origin cell gets its cell average, 0."""

    R: float = 0.0

    def grad_perp(self, dx, dy):
        r2 = np.asarray(dx, dtype=float) ** 2 + np.asarray(dy, dtype=float) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(r2 > 0, 1.0 / r2, 0.0)
        return -f * dy, f * dx


def radial_kernel(profile: SmearingProfile | None = None, R: float = 1.0, radial_grid=None) -> RadialKernel:
    if profile is None:
        profile = default_profile()
    return RadialKernel(R=float(R), profile=profile, u=radial_grid)


def make_kernel(R: float, profile: SmearingProfile | None = None):
    """``RadialKernel`` for ``R > 0``, the pointlike kernel for ``R == 0``."""
    if R == 0:
        return PointKernel()
    return radial_kernel(profile, R)


def field_kernel(grid: Grid2D, kernel) -> tuple[np.ndarray, np.ndarray]:
    """``grad_perp w`` sampled on all node offsets, each ``(2n-1, 2n-1)``."""
    dx, dy = offset_mesh(grid)
    return kernel.grad_perp(dx, dy)


def gauge_field(rho: DensityField, kernel, kernel_samples=None) -> VectorField2D:
    """``A[rho] = grad_perp w * rho`` as a zero-padded linear convolution.

    Padding covers every node difference in the box, so no wraparound can
    occur and there is no truncation to report.
    """
    grid = rho.grid
    kx, ky = kernel_samples if kernel_samples is not None else field_kernel(grid, kernel)
    dA = grid.cell_area
    return VectorField2D(dA * linear_convolve(rho.values, kx), dA * linear_convolve(rho.values, ky), grid)


def discrete_curl(field: VectorField2D) -> np.ndarray:
    """Central-difference ``d_x A_y - d_y A_x``, one-sided on the box edges."""
    h = field.grid.spacing
    return np.gradient(field.ay, h, axis=0) - np.gradient(field.ax, h, axis=1)


def kernel_gap_norm(R: float, profile: SmearingProfile | None = None) -> float:
    """``L^{4/3}`` norm of ``grad w_R - grad w_0`` (supported in the disc of radius 2R)."""
    if R == 0:
        return 0.0
    if R < 0:
        raise ValueError(f"R must be nonnegative, got {R}")
    if profile is None:
        profile = default_profile()
    m1 = _unit_mass(profile)
    g = lambda t: abs((float(m1(t)) - 1.0) / t) ** (4.0 / 3.0) * t
    inner = quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    bridge = quad(g, 1.0, 2.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    # substitution u = R t pulls out R^(2 - 4/3)
    return float((2 * np.pi * R ** (2.0 / 3.0) * (inner + bridge)) ** 0.75)
