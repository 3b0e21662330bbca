"""Optimal single-box Pauli-violation bound and the optimizing moment order,
swept over N, the tile exponent and eps, in the scaling hbar = N^{-1/2}.

Writes pauli_bound_sweep.csv in the working directory (or the path given).
"""
import sys

import numpy as np

from anyonvlasov.diaconis_freedman import optimal_pauli_bound


def main(out="pauli_bound_sweep.csv"):
    rows = []
    for N in (10**2, 10**3, 10**4, 10**5, 10**6):
        for gamma in (0.25, 0.5, 0.75):
            vol = float(N) ** -gamma
            for eps in (0.5, 1.0, 2.0):
                n, b = optimal_pauli_bound(vol, eps, N, N**-0.5)
                rows.append((N, gamma, eps, n, b))
                print(f"N={N:>7d} |Omega|=N^-{gamma:.2f} eps={eps:.1f}  n*={n:2d} bound={b:.4e}")
    np.savetxt(out, np.array(rows), delimiter=",", header="N,volume_exponent,eps,optimal_n,bound",
               comments="", fmt="%.17g")


if __name__ == "__main__":
    main(*sys.argv[1:])
