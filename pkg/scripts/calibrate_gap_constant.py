"""Calibrate the constant in |E_R - E_0| <= C R E^{3/2} from the kernel gap norm.

The L^{4/3} norm of grad w_R - grad w_0 scales exactly as R^{1/2}; its value
at R = 1 is the constant stored in hartree_fock.GAP_CONSTANT.
"""
import numpy as np

from anyonvlasov.kernels import default_profile, kernel_gap_norm


def main():
    prof = default_profile()
    print(f"profile bridge exponent q = {prof.bridge_shape:.16g}, mass residual = {prof.normalization_residual:.2e}")
    c = kernel_gap_norm(1.0)
    print(f"gap norm at R = 1: {c!r}")
    for R in np.logspace(-4, 0, 5):
        print(f"R = {R:.0e}   norm / sqrt(R) = {kernel_gap_norm(R) / np.sqrt(R):.15f}")


if __name__ == "__main__":
    main()
