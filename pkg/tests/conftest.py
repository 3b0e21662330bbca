import numpy as np
import pytest

from anyonvlasov.grids import Grid2D
from anyonvlasov.tf_solver import Trap, solve_tf


@pytest.fixture(scope="session")
def harmonic_tf64():
    return solve_tf(Trap.harmonic(), 1.0, Grid2D(64, 2.0))


def gaussian_density(grid, width=0.3, center=(0.0, 0.0)):
    from anyonvlasov.grids import DensityField

    x, y = grid.mesh()
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    v = np.exp(-r2 / (2 * width**2))
    return DensityField(v / (v.sum() * grid.cell_area), grid)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
