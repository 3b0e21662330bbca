"""Squeezed coherent states, Husimi functions of Slater determinants and their marginals.

A coherent state is ``F_{x,p}(y) = hx^{-1/2} f((y - x)/sqrt(hx)) exp(i p.y/hbar)``
with ``f(y) = pi^{-1/2} exp(-|y|^2/2)``.  It factorizes over the two axes,
which every routine here exploits: an overlap with a grid function is
``E1 psi E2^T`` for 1D factor matrices ``E1, E2``.

Phase points are arrays ``(..., 4)`` ordered ``(x1, x2, p1, p2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid2D


class ResolutionError(ValueError):
    """Grid too coarse for the requested coherent states."""


@dataclass(frozen=True)
class SqueezedScales:
    """Position and momentum widths with ``hbar = sqrt(hbar_x) * sqrt(hbar_p)``."""

    hbar_x: float
    hbar_p: float

    @property
    def hbar(self) -> float:
        return float(np.sqrt(self.hbar_x) * np.sqrt(self.hbar_p))

    @classmethod
    def from_hbar(cls, hbar: float, squeeze: float = 1.0) -> "SqueezedScales":
        """``hbar_x = squeeze * hbar``, ``hbar_p = hbar / squeeze``."""
        return cls(squeeze * hbar, hbar / squeeze)


def _factor(t: np.ndarray, x0, p0, scales: SqueezedScales) -> np.ndarray:
    """1D factor ``(pi hx)^{-1/4} exp(-(t-x0)^2/(2 hx)) exp(i p0 t/hbar)``, shape ``(len(x0), len(t))``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))[:, None]
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))[:, None]
    hx, hb = scales.hbar_x, scales.hbar
    return (np.pi * hx) ** -0.25 * np.exp(-((t - x0) ** 2) / (2 * hx) + 1j * p0 * t / hb)


def coherent_state(grid: Grid2D, x, p, scales: SqueezedScales) -> np.ndarray:
    """``F_{x,p}`` sampled on the grid nodes."""
    t = grid.axis
    return _factor(t, x[0], p[0], scales)[0][:, None] * _factor(t, x[1], p[1], scales)[0][None, :]


def check_resolution(grid: Grid2D, scales: SqueezedScales, p_max: float = 0.0) -> None:
    h = grid.spacing
    if h > np.sqrt(scales.hbar_x) / 4:
        raise ResolutionError(f"spacing {h:.4g} exceeds sqrt(hbar_x)/4 = {np.sqrt(scales.hbar_x) / 4:.4g}")
    if p_max * h / scales.hbar >= np.pi:
        raise ResolutionError(f"momentum {p_max:.4g} beyond grid Nyquist {np.pi * scales.hbar / h:.4g}")


def overlaps(psi: np.ndarray, grid: Grid2D, z: np.ndarray, scales: SqueezedScales) -> np.ndarray:
    """``<F_z, psi>`` for phase points ``z`` of shape ``(..., 4)``.

    ``psi`` may be one grid function ``(n, n)`` or a stack ``(N, n, n)``; the
    result then has shape ``z.shape[:-1]`` or ``(N,) + z.shape[:-1]``.
    """
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1, 4)
    check_resolution(grid, scales, float(np.abs(flat[:, 2:]).max(initial=0.0)))
    t = grid.axis
    e1 = np.conj(_factor(t, flat[:, 0], flat[:, 2], scales))
    e2 = np.conj(_factor(t, flat[:, 1], flat[:, 3], scales))
    stack = np.asarray(psi)
    single = stack.ndim == 2
    if single:
        stack = stack[None]
    out = np.einsum("ma,jab,mb->jm", e1, stack, e2, optimize=True) * grid.cell_area
    out = out.reshape((len(stack),) + z.shape[:-1])
    return out[0] if single else out


def coherent_overlap(psi: np.ndarray, grid: Grid2D, x, p, scales: SqueezedScales) -> complex:
    z = np.array([x[0], x[1], p[0], p[1]], dtype=float)
    return complex(overlaps(psi, grid, z, scales))


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor phase-space grid: the same 1D x-nodes on both axes, same for p."""

    x_nodes: np.ndarray
    p_nodes: np.ndarray

    @classmethod
    def uniform(cls, x_half: float, nx: int, p_half: float, np_: int) -> "PhaseGrid":
        return cls(Grid2D(nx, x_half).axis, Grid2D(np_, p_half).axis)

    @property
    def dx(self) -> float:
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def dp(self) -> float:
        return float(self.p_nodes[1] - self.p_nodes[0])


def overlap_grid(psi: np.ndarray, grid: Grid2D, phase: PhaseGrid, scales: SqueezedScales) -> np.ndarray:
    """``<F_{x,p}, psi>`` on a tensor phase grid, indexed ``[x1, p1, x2, p2]``."""
    check_resolution(grid, scales, float(np.abs(phase.p_nodes).max()))
    xs, ps = np.meshgrid(phase.x_nodes, phase.p_nodes, indexing="ij")
    e = np.conj(_factor(grid.axis, xs.ravel(), ps.ravel(), scales))
    nx, npn = len(phase.x_nodes), len(phase.p_nodes)
    o = e @ np.asarray(psi) @ e.T * grid.cell_area
    return o.reshape(nx, npn, nx, npn)


def fourier_of_ground(scales: SqueezedScales, p) -> np.ndarray:
    """``G(p) = (pi hp)^{-1/2} exp(-|p|^2/(2 hp))`` for points ``(..., 2)``."""
    p = np.asarray(p, dtype=float)
    return (np.pi * scales.hbar_p) ** -0.5 * np.exp(-np.sum(p**2, axis=-1) / (2 * scales.hbar_p))


def _fourier_matrix(t: np.ndarray, q: np.ndarray, hbar: float, h: float) -> np.ndarray:
    return (2 * np.pi * hbar) ** -0.5 * np.exp(-1j * np.outer(q, t) / hbar) * h


def discrete_hbar_fourier(psi: np.ndarray, grid: Grid2D, q_nodes: np.ndarray, hbar: float) -> np.ndarray:
    """``(2 pi hbar)^-1 sum psi(y) exp(-i q.y/hbar) dy`` on the tensor grid ``q_nodes^2``."""
    F = _fourier_matrix(grid.axis, q_nodes, hbar, grid.spacing)
    return F @ np.asarray(psi) @ F.T


def resolution_of_identity_check(u: np.ndarray, grid: Grid2D, scales: SqueezedScales, phase: PhaseGrid) -> float:
    """``(2 pi hbar)^-2 iint |<F_{x,p}, u>|^2 dx dp``; equals ``||u||^2`` when resolved."""
    o = overlap_grid(u, grid, phase, scales)
    return float(np.sum(np.abs(o) ** 2) * (phase.dx * phase.dp) ** 2 / (2 * np.pi * scales.hbar) ** 2)


def uncertainty_product(scales: SqueezedScales, x0: float = 0.0, p0: float = 0.0,
                        n: int = 4096, width: float = 12.0) -> tuple[float, float]:
    """Standard deviations of ``y_1`` and ``-i hbar d/dy_1`` in ``F_{x,p}``.

    The first-axis factor is sampled on a fine 1D grid; the momentum spread is
    taken from ``|hbar-Fourier|^2`` on a momentum grid of matching reach.
    """
    hb = scales.hbar
    sx = np.sqrt(scales.hbar_x)
    t = x0 + sx * np.linspace(-width, width, n)
    ht = t[1] - t[0]
    phi = _factor(t, x0, p0, scales)[0]
    w = np.abs(phi) ** 2 * ht
    mx = np.sum(w * t)
    dx = np.sqrt(np.sum(w * (t - mx) ** 2))
    sp = np.sqrt(scales.hbar_p)
    q = p0 + sp * np.linspace(-width, width, n)
    hq = q[1] - q[0]
    phat = _fourier_matrix(t, q, hb, ht) @ phi
    wq = np.abs(phat) ** 2 * hq
    mp = np.sum(wq * q)
    dp = np.sqrt(np.sum(wq * (q - mp) ** 2))
    return float(dx), float(dp)


@dataclass
class SlaterState:
    """Orthonormal orbitals ``(N, n, n)`` on a spatial grid."""

    orbitals: np.ndarray
    grid: Grid2D
    tol: float = 1e-8

    def __post_init__(self):
        self.orbitals = np.asarray(self.orbitals, dtype=complex)
        if self.orbitals.ndim == 2:
            self.orbitals = self.orbitals[None]
        err = np.abs(self.gram() - np.eye(self.N)).max()
        if err > self.tol:
            raise ValueError(f"orbitals not orthonormal (Gram error {err:.3e})")

    @property
    def N(self) -> int:
        return self.orbitals.shape[0]

    def gram(self) -> np.ndarray:
        flat = self.orbitals.reshape(self.N, -1)
        return flat.conj() @ flat.T * self.grid.cell_area

    @classmethod
    def orthonormalize(cls, functions: np.ndarray, grid: Grid2D) -> "SlaterState":
        f = np.asarray(functions, dtype=complex)
        flat = f.reshape(len(f), -1).T * np.sqrt(grid.cell_area)
        q, _ = np.linalg.qr(flat)
        return cls((q.T / np.sqrt(grid.cell_area)).reshape(f.shape), grid)

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.orbitals) ** 2, axis=0)

    def rotated(self, U: np.ndarray) -> "SlaterState":
        """Orbitals mixed by a unitary ``U``: ``phi_a = sum_j U[a, j] psi_j``."""
        return SlaterState(np.einsum("aj,jxy->axy", U, self.orbitals), self.grid, self.tol)


def husimi1(state: SlaterState, z, scales: SqueezedScales) -> np.ndarray:
    """``sum_j |<F_z, psi_j>|^2``."""
    o = overlaps(state.orbitals, state.grid, z, scales)
    return np.sum(np.abs(o) ** 2, axis=0)


def exchange_kernel(state: SlaterState, z1, z2, scales: SqueezedScales) -> np.ndarray:
    """``sum_j <F_z1, psi_j> <psi_j, F_z2>``."""
    o1 = overlaps(state.orbitals, state.grid, z1, scales)
    o2 = overlaps(state.orbitals, state.grid, z2, scales)
    return np.sum(o1 * np.conj(o2), axis=0)


def husimi2(state: SlaterState, z1, z2, scales: SqueezedScales) -> np.ndarray:
    """Direct minus exchange: ``m1(z1) m1(z2) - |K(z1, z2)|^2``."""
    o1 = overlaps(state.orbitals, state.grid, z1, scales)
    o2 = overlaps(state.orbitals, state.grid, z2, scales)
    k11 = np.sum(np.abs(o1) ** 2, axis=0)
    k22 = np.sum(np.abs(o2) ** 2, axis=0)
    k12 = np.sum(o1 * np.conj(o2), axis=0)
    return k11 * k22 - np.abs(k12) ** 2


def husimi1_grid(state: SlaterState, phase: PhaseGrid, scales: SqueezedScales) -> np.ndarray:
    """``m1`` on a tensor phase grid, indexed ``[x1, p1, x2, p2]``."""
    return sum(np.abs(overlap_grid(psi, state.grid, phase, scales)) ** 2 for psi in state.orbitals)


def husimi1_mass(state: SlaterState, phase: PhaseGrid, scales: SqueezedScales) -> float:
    """``(2 pi hbar)^-2 iint m1``, which should equal ``N``."""
    m = husimi1_grid(state, phase, scales)
    return float(m.sum() * (phase.dx * phase.dp) ** 2 / (2 * np.pi * scales.hbar) ** 2)


def _gauss_matrix(a: np.ndarray, b: np.ndarray, width2: float, h: float) -> np.ndarray:
    # 1D factor of (pi w)^{-1} exp(-|y|^2/w), as a quadrature matrix
    return (np.pi * width2) ** -0.5 * np.exp(-np.subtract.outer(a, b) ** 2 / width2) * h


def marginal_relation_check(state: SlaterState, scales: SqueezedScales, phase: PhaseGrid) -> dict:
    """Compare the two Husimi marginals with their density-side expressions.

    position:  (2 pi)^-2 int m1 dp  vs  hbar^2 (rho * |F|^2)
    momentum:  (2 pi)^-2 int m1 dx  vs  hbar^2 (t * |G|^2),  t = sum_j |F_hbar psi_j|^2

    Discrepancies are sup norms relative to the sup of the right-hand side.
    """
    hb = scales.hbar
    m = husimi1_grid(state, phase, scales)
    lhs_x = m.sum(axis=(1, 3)) * phase.dp**2 / (2 * np.pi) ** 2
    lhs_p = m.sum(axis=(0, 2)) * phase.dx**2 / (2 * np.pi) ** 2

    grid = state.grid
    gx = _gauss_matrix(phase.x_nodes, grid.axis, scales.hbar_x, grid.spacing)
    rhs_x = hb**2 * gx @ state.density() @ gx.T

    # momentum density on a q-grid that resolves everything the orbitals carry
    q_half = np.pi * hb / grid.spacing
    q = Grid2D(2 * grid.n, q_half).axis
    hq = q[1] - q[0]
    t = sum(np.abs(discrete_hbar_fourier(psi, grid, q, hb)) ** 2 for psi in state.orbitals)
    gp = _gauss_matrix(phase.p_nodes, q, scales.hbar_p, hq)
    rhs_p = hb**2 * gp @ t @ gp.T

    return {
        "position_discrepancy": float(np.abs(lhs_x - rhs_x).max() / np.abs(rhs_x).max()),
        "momentum_discrepancy": float(np.abs(lhs_p - rhs_p).max() / np.abs(rhs_p).max()),
        "momentum_mass": float(t.sum() * hq**2),
    }


def hermite_gaussian(grid: Grid2D, nx: int, ny: int, width2: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    """Normalized 2D Hermite-Gaussian of orders ``(nx, ny)`` with ``exp(-|y|^2/(2 width2))``."""
    from numpy.polynomial.hermite import hermval
    from math import factorial

    def one(t, k):
        s = t / np.sqrt(width2)
        c = np.zeros(k + 1)
        c[k] = 1.0
        norm = (np.pi * width2) ** -0.25 / np.sqrt(2.0**k * factorial(k))
        return norm * hermval(s, c) * np.exp(-(s**2) / 2)

    t = grid.axis
    return one(t - center[0], nx)[:, None] * one(t - center[1], ny)[None, :]
