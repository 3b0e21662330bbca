"""Thomas-Fermi functional ``2 pi int rho^2 + int V rho`` and its bathtub minimizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import DensityField, Grid2D


class DomainTooSmallError(RuntimeError):
    """The minimizer's support reaches the edge of the grid."""


class NonBracketingError(RuntimeError):
    """The mass map cannot reach the requested mass."""


@dataclass
class Trap:
    """Potential ``V`` with its growth exponent and the coefficients it was built from."""

    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    growth_exponent: float
    parameters: list = field(default_factory=list)
    name: str = "custom"

    def __call__(self, x, y):
        return self.evaluate(x, y)

    @classmethod
    def power_law(cls, coefficient: float = 1.0, s: float = 2.0) -> "Trap":
        """``V(x) = c |x|^s``."""
        c, s = float(coefficient), float(s)
        return cls(lambda x, y: c * np.hypot(x, y) ** s, s, [c, s], "power_law")

    @classmethod
    def harmonic(cls, omega2: float = 1.0) -> "Trap":
        return cls.power_law(omega2, 2.0)

    def on_grid(self, grid: Grid2D) -> np.ndarray:
        x, y = grid.mesh()
        return np.asarray(self.evaluate(x, y), dtype=float)

    def check_confining(self, grid: Grid2D, c: float | None = None, C: float = 0.0) -> bool:
        """Check ``V >= c|x|^s - C`` on the outermost ring of nodes (``s > 1`` required)."""
        if self.growth_exponent <= 1:
            return False
        V = self.on_grid(grid)
        r = grid.radius()
        ring = np.zeros_like(V, dtype=bool)
        ring[[0, -1], :] = True
        ring[:, [0, -1]] = True
        if c is None:
            c = 0.5 * np.min((V[ring] + C) / r[ring] ** self.growth_exponent)
            if c <= 0:
                return False
        return bool(np.all(V[ring] >= c * r[ring] ** self.growth_exponent - C))

    def to_dict(self) -> dict:
        return {"name": self.name, "growth_exponent": self.growth_exponent, "parameters": list(self.parameters)}


@dataclass
class TFSolution:
    rho: DensityField
    lam: float
    energy: float
    mass: float

    def summary(self) -> dict:
        return {"lambda": self.lam, "energy": self.energy, "mass": self.mass, "grid": self.rho.grid.to_dict()}


def tf_energy(rho: DensityField, trap: Trap, V: np.ndarray | None = None) -> float:
    """``2 pi int rho^2 + int V rho`` by the midpoint rule."""
    if V is None:
        V = trap.on_grid(rho.grid)
    r = rho.values
    return rho.grid.integrate(2 * np.pi * r**2 + V * r)


def solve_tf(trap: Trap, mass: float, grid: Grid2D, tol: float = 1e-12, max_iter: int = 400) -> TFSolution:
    """Bisection on ``lambda`` for ``int (lambda - V)_+ / (4 pi) = mass``."""
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    V = trap.on_grid(grid)
    dA = grid.cell_area
    mass_of = lambda lam: float(np.sum(np.maximum(lam - V, 0.0)) * dA / (4 * np.pi))

    lo = float(V.min())
    hi = lo + 4 * np.pi * mass / dA
    if not (mass_of(lo) <= mass <= mass_of(hi)):
        raise NonBracketingError(f"mass {mass} outside [{mass_of(lo)}, {mass_of(hi)}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        m = mass_of(mid)
        if abs(m - mass) < tol:
            break
        if m < mass:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    lam = mid
    rho = np.maximum(lam - V, 0.0) / (4 * np.pi)

    edge = np.concatenate([rho[0], rho[-1], rho[:, 0], rho[:, -1]])
    if np.any(edge > 0):
        raise DomainTooSmallError(
            f"Thomas-Fermi support touches the box edge (half_width={grid.half_width}, lambda={lam:.6g})"
        )
    field_ = DensityField(rho, grid)
    return TFSolution(field_, lam, tf_energy(field_, trap, V), field_.mass())


def perturbed_infimum_bound(e_tf: float, eps: float, gamma: float) -> float:
    """Lower bound ``(1 - 2 eps)(1 - gamma) e_tf`` for the relaxed, reduced-mass problem."""
    if not (0 <= eps < 0.5 and 0 <= gamma < 0.5):
        raise ValueError("need 0 <= eps, gamma < 1/2")
    return (1 - 2 * eps) * (1 - gamma) * e_tf
