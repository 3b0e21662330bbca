"""Sup-norm distance between the anyonic and bosonic momentum distributions
of the harmonic Thomas-Fermi minimizer, swept over beta and the smearing radius.

Writes momentum_sweep.csv in the working directory (or the path given).
"""
import sys

import numpy as np

from anyonvlasov.grids import Grid2D
from anyonvlasov.kernels import make_kernel
from anyonvlasov.tf_solver import Trap, solve_tf
from anyonvlasov.vlasov import VlasovSetup, momentum_distribution_grid


def main(out="momentum_sweep.csv"):
    trap = Trap.harmonic()
    tf = solve_tf(trap, 1.0, Grid2D(64, 2.0))
    pg = Grid2D(64, 2.6)
    rows = []
    for R in (0.0, 0.05, 64**-0.2):
        k = make_kernel(R)
        t0 = momentum_distribution_grid(tf.rho, VlasovSetup(trap, None, 0.0, k), pg)
        for beta in np.linspace(0.0, 1.5, 7):
            t = momentum_distribution_grid(tf.rho, VlasovSetup(trap, None, beta, k), pg)
            rows.append((R, beta, np.abs(t - t0).max(), t.max()))
            print(f"R={R:.4f} beta={beta:.2f} sup|t-t0|={rows[-1][2]:.6f} max t={rows[-1][3]:.6f}")
    np.savetxt(out, np.array(rows), delimiter=",", header="R,beta,sup_diff,t_max", comments="", fmt="%.17g")


if __name__ == "__main__":
    main(*sys.argv[1:])
