"""Phase-space densities, the Vlasov energy with the self-consistent gauge field,
the explicit bathtub minimizer and its momentum marginal.

Convention: ``m(x, p)`` takes values in ``[0, 1]`` and has total mass
``(2 pi)^2``, so ``rho_m = (2 pi)^-2 int m dp`` has unit mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import DensityField, Grid2D, VectorField2D
from .kernels import gauge_field
from .tf_solver import Trap

PHASE_VOLUME = (2 * np.pi) ** 2


class MomentumBoxError(ValueError):
    """The momentum box does not contain the support of the minimizer."""


# ---------------------------------------------------------------------------
# exact area of a disc intersected with an axis-aligned rectangle


def _quadrant_area(x, y, r):
    """Area of ``{|P| <= r, P_x <= x, P_y <= y}`` for a disc centred at 0."""
    rs = np.where(r > 0, r, 1.0)

    def H(X):
        # antiderivative of sqrt(r^2 - X^2)
        X = np.clip(X, -rs, rs)
        h = np.sqrt(np.maximum(rs**2 - X**2, 0.0))
        return 0.5 * (X * h + rs**2 * np.arcsin(X / rs))

    s = np.sqrt(np.maximum(rs**2 - y**2, 0.0))
    xc = np.clip(x, -rs, rs)
    # three X-segments: [-r, -s], [-s, s], [s, r], each cut at xc
    b1 = np.clip(xc, -rs, -s)
    b2 = np.clip(xc, -s, s)
    b3 = np.clip(xc, s, rs)
    outer = (H(b1) - H(-rs)) + (H(b3) - H(s))
    middle = y * (b2 + s) + H(b2) - H(-s)
    area = np.where(y >= 0, 2 * outer, 0.0) + middle
    return np.where(r > 0, area, 0.0)


def disc_rectangle_area(cx, cy, r, x0, x1, y0, y1):
    """Exact area of the disc ``|P - c| <= r`` inside ``[x0, x1] x [y0, y1]``."""
    a, b = x0 - cx, x1 - cx
    c, d = y0 - cy, y1 - cy
    return (_quadrant_area(b, d, r) - _quadrant_area(a, d, r)
            - _quadrant_area(b, c, r) + _quadrant_area(a, c, r))


def disc_rectangle_fraction(cx, cy, r, x0, x1, y0, y1, cell_area):
    """Covered fraction of each rectangle; exact areas only where the circle cuts it."""
    shape = np.broadcast_shapes(*(np.shape(a) for a in (cx, cy, r, x0, x1, y0, y1)))
    # nearest and farthest point of each rectangle from the centre
    near = np.hypot(np.maximum(np.maximum(x0 - cx, cx - x1), 0.0),
                    np.maximum(np.maximum(y0 - cy, cy - y1), 0.0))
    far = np.hypot(np.maximum(np.abs(x0 - cx), np.abs(x1 - cx)),
                   np.maximum(np.abs(y0 - cy), np.abs(y1 - cy)))
    out = np.broadcast_to(far <= r, shape).astype(float)
    cut = np.broadcast_to((near < r) & (far > r), shape)
    if np.any(cut):
        b = lambda a: np.broadcast_to(a, shape)[cut]
        area = disc_rectangle_area(b(cx), b(cy), b(r), b(x0), b(x1), b(y0), b(y1))
        out[cut] = np.clip(area / cell_area, 0.0, 1.0)
    return out


def ball_cell_fractions(centers: np.ndarray, radii: np.ndarray, p_grid: Grid2D) -> np.ndarray:
    """Covered fraction of every p-cell by each ball; shape ``radii.shape + (np, np)``."""
    e = p_grid.edges
    return disc_rectangle_fraction(
        centers[..., 0][..., None, None], centers[..., 1][..., None, None], radii[..., None, None],
        e[:-1][:, None], e[1:][:, None], e[:-1][None, :], e[1:][None, :], p_grid.cell_area,
    )


# ---------------------------------------------------------------------------
# containers


@dataclass
class PhaseSpaceDensity:
    """Dense ``m`` on ``x_grid x p_grid``, indexed ``values[ix, iy, ipx, ipy]``."""

    values: np.ndarray
    x_grid: Grid2D
    p_grid: Grid2D

    def __post_init__(self):
        nx, npg = self.x_grid.n, self.p_grid.n
        if self.values.shape != (nx, nx, npg, npg):
            raise ValueError(f"values shape {self.values.shape} != {(nx, nx, npg, npg)}")

    def rows(self):
        for i in range(self.x_grid.n):
            yield i, self.values[i]


@dataclass
class BallDensity:
    """``m(x, .) = height * 1{|p - center(x)| <= radius(x)}`` stored per x-node.

    Cell values are exact covered fractions of each p-cell.
    """

    centers: np.ndarray  # (nx, nx, 2)
    radii: np.ndarray  # (nx, nx)
    x_grid: Grid2D
    p_grid: Grid2D
    height: float = 1.0

    def __post_init__(self):
        reach = np.max(np.abs(self.centers), axis=-1) + self.radii
        occupied = self.radii > 0
        if np.any(reach[occupied] > self.p_grid.half_width):
            raise MomentumBoxError(
                f"momentum box half-width {self.p_grid.half_width} clips the ball support "
                f"(needs {reach[occupied].max():.6g})"
            )

    def rows(self):
        for i in range(self.x_grid.n):
            yield i, self.height * ball_cell_fractions(self.centers[i], self.radii[i], self.p_grid)

    def to_dense(self) -> PhaseSpaceDensity:
        vals = np.stack([row for _, row in self.rows()])
        return PhaseSpaceDensity(vals, self.x_grid, self.p_grid)

    def scaled(self, a: float) -> "BallDensity":
        return BallDensity(self.centers, self.radii, self.x_grid, self.p_grid, self.height * a)


@dataclass
class VlasovSetup:
    trap: Trap
    external_field: VectorField2D | None
    beta: float
    kernel: object

    def external(self, grid: Grid2D) -> VectorField2D:
        if self.external_field is None:
            return VectorField2D.zeros(grid)
        return self.external_field


# ---------------------------------------------------------------------------
# operations


def position_marginal(m) -> DensityField:
    """``rho_m(x) = (2 pi)^-2 int m(x, p) dp``."""
    dp = m.p_grid.cell_area
    out = np.empty((m.x_grid.n, m.x_grid.n))
    for i, row in m.rows():
        out[i] = row.sum(axis=(-2, -1)) * dp / PHASE_VOLUME
    return DensityField(out, m.x_grid)


def total_field(rho: DensityField, setup: VlasovSetup) -> VectorField2D:
    """``A_e + beta A[rho]``."""
    A = setup.external(rho.grid)
    if setup.beta != 0:
        A = A + setup.beta * gauge_field(rho, setup.kernel)
    return A


def build_minimizer(rho: DensityField, setup: VlasovSetup, p_grid: Grid2D) -> BallDensity:
    """``1{|p + A_e + beta A[rho]|^2 <= 4 pi rho}`` at every x-node."""
    if np.any(rho.values < 0):
        raise ValueError("density must be nonnegative")
    A = total_field(rho, setup)
    centers = -np.stack([A.ax, A.ay], axis=-1)
    radii = np.sqrt(4 * np.pi * rho.values)
    return BallDensity(centers, radii, rho.grid, p_grid)


def vlasov_energy(m, setup: VlasovSetup) -> float:
    """``(2 pi)^-2 iint |p + A_e + beta A[rho_m]|^2 m + int V rho_m``.

    For ball densities the covered fraction of a p-cell multiplies the cell
    integral of ``|p + a|^2`` (midpoint value plus the cell's second moment).
    """
    xg, pg = m.x_grid, m.p_grid
    rho = position_marginal(m)
    A = total_field(rho, setup)
    px, py = pg.mesh()
    spread = pg.spacing**2 / 6 if isinstance(m, BallDensity) else 0.0
    kin = 0.0
    for i, row in m.rows():
        ax = A.ax[i][:, None, None]
        ay = A.ay[i][:, None, None]
        w = (px + ax) ** 2 + (py + ay) ** 2 + spread
        kin += float(np.sum(row * w))
    kin *= pg.cell_area * xg.cell_area / PHASE_VOLUME
    V = setup.trap.on_grid(xg)
    return kin + xg.integrate(V * rho.values)


def momentum_distribution(rho: DensityField, setup: VlasovSetup, p_points: np.ndarray,
                          window: float = 0.0, chunk: int = 256) -> np.ndarray:
    """``t(p) = int 1{|p + A_e + beta A[rho]|^2 <= 4 pi rho} dx``.

    ``p_points`` has shape ``(..., 2)``.  With ``window > 0`` each value is the
    average of ``t`` over the square of side ``window`` centred at the point,
    computed from exact disc/square areas.  On a p-grid with ``window`` equal
    to the spacing these are exact cell averages.
    """
    A = total_field(rho, setup)
    occ = rho.values > 0
    cx, cy = -A.ax[occ], -A.ay[occ]
    r = np.sqrt(4 * np.pi * rho.values[occ])
    pts = np.asarray(p_points, dtype=float)
    flat = pts.reshape(-1, 2)
    out = np.empty(len(flat))
    dA = rho.grid.cell_area
    for s in range(0, len(flat), chunk):
        qx = flat[s : s + chunk, 0][:, None]
        qy = flat[s : s + chunk, 1][:, None]
        if window > 0:
            hw = 0.5 * window
            cover = disc_rectangle_fraction(cx, cy, r, qx - hw, qx + hw, qy - hw, qy + hw, window**2)
        else:
            cover = ((qx - cx) ** 2 + (qy - cy) ** 2 <= r**2).astype(float)
        out[s : s + chunk] = cover.sum(axis=1) * dA
    return out.reshape(pts.shape[:-1])


def momentum_distribution_grid(rho: DensityField, setup: VlasovSetup, p_grid: Grid2D) -> np.ndarray:
    """Cell averages of ``t`` on ``p_grid``."""
    px, py = p_grid.mesh()
    return momentum_distribution(rho, setup, np.stack([px, py], axis=-1), window=p_grid.spacing)


def pauli_and_mass_report(m) -> dict:
    mx, mn, total, bad = -np.inf, np.inf, 0.0, 0
    for _, row in m.rows():
        mx = max(mx, float(row.max()))
        mn = min(mn, float(row.min()))
        total += float(row.sum())
        bad += int(np.count_nonzero((row < 0) | (row > 1 + 1e-12)))
    ratio = total * m.x_grid.cell_area * m.p_grid.cell_area / PHASE_VOLUME
    return {"max": mx, "min": mn, "mass_ratio": ratio, "violations": bad}
