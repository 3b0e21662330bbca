"""Uniform cell-centred grids and the field containers living on them."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft


def fft_workers() -> int:
    """Thread count for FFTs, read from ``ANYONVLASOV_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("ANYONVLASOV_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid2D:
    """The box ``[-half_width, half_width]^2`` cut into ``n x n`` equal cells.

    Nodes sit at cell centres, so plain sums times ``cell_area`` are the
    midpoint rule.
    """

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 cells per axis, got n={self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.half_width + h * (np.arange(self.n) + 0.5)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates, ``indexing='ij'`` (first index is x)."""
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    def radius(self) -> np.ndarray:
        x, y = self.mesh()
        return np.hypot(x, y)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_area)

    def to_dict(self) -> dict:
        return {"n": self.n, "half_width": self.half_width}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid2D":
        return cls(n=int(d["n"]), half_width=float(d["half_width"]))


@dataclass
class DensityField:
    values: np.ndarray
    grid: Grid2D

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"density shape {self.values.shape} does not match grid {self.grid.n}x{self.grid.n}"
            )

    def mass(self) -> float:
        return self.grid.integrate(self.values)

    def __add__(self, other: "DensityField") -> "DensityField":
        return DensityField(self.values + other.values, self.grid)

    def __mul__(self, a: float) -> "DensityField":
        return DensityField(a * self.values, self.grid)

    __rmul__ = __mul__


@dataclass
class VectorField2D:
    """Two scalar grid functions, the x- and y-components."""

    ax: np.ndarray
    ay: np.ndarray
    grid: Grid2D

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2D":
        return cls(np.zeros((grid.n, grid.n)), np.zeros((grid.n, grid.n)), grid)

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray]:
        return self.ax, self.ay

    def norm(self) -> np.ndarray:
        return np.hypot(self.ax, self.ay)

    def __add__(self, other: "VectorField2D") -> "VectorField2D":
        return VectorField2D(self.ax + other.ax, self.ay + other.ay, self.grid)

    def __mul__(self, a: float) -> "VectorField2D":
        return VectorField2D(a * self.ax, a * self.ay, self.grid)

    __rmul__ = __mul__


def linear_convolve(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Non-periodic discrete convolution ``sum_j kernel[i - j] a[j]``.

    ``a`` is ``(n, n)`` and ``kernel`` is sampled on offsets ``-(n-1)..(n-1)``
    per axis, shape ``(2n-1, 2n-1)``.  Zero padding to the full linear size
    means no wraparound.  Complex inputs are supported.
    """
    n = a.shape[0]
    if kernel.shape != (2 * n - 1, 2 * n - 1):
        raise ValueError(f"kernel shape {kernel.shape} does not match source {a.shape}")
    shape = (3 * n - 2, 3 * n - 2)
    fshape = [scipy.fft.next_fast_len(s, real=True) for s in shape]
    workers = fft_workers()
    if np.iscomplexobj(a) or np.iscomplexobj(kernel):
        fa = scipy.fft.fft2(a, fshape, workers=workers)
        fk = scipy.fft.fft2(kernel, fshape, workers=workers)
        full = scipy.fft.ifft2(fa * fk, fshape, workers=workers)
    else:
        fa = scipy.fft.rfft2(a, fshape, workers=workers)
        fk = scipy.fft.rfft2(kernel, fshape, workers=workers)
        full = scipy.fft.irfft2(fa * fk, fshape, workers=workers)
    return full[n - 1 : 2 * n - 1, n - 1 : 2 * n - 1]


def offset_mesh(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Difference vectors between nodes, shape ``(2n-1, 2n-1)`` each."""
    k = grid.spacing * np.arange(-(grid.n - 1), grid.n)
    return np.meshgrid(k, k, indexing="ij")
