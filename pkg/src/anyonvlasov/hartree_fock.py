"""Energy of a Slater determinant under the smeared anyon Hamiltonian.

On the grid the Hamiltonian is

    H = sum_j (p_j + alpha A_j)^2 + V(x_j),    A_j = sum_{k != j} K(x_j - x_k)

with ``p = -i hbar D + A_e``, ``D`` the central difference (zero outside the
box) and ``K = grad_perp w_R`` sampled at node differences.  Expanding the
square and applying Wick's theorem to a determinant gives a sum of one-,
two- and three-body terms, each computable from orbital products.  With
``D_ab = K * (psi_a conj(psi_b))`` and ``A = K * rho``:

    kinetic_potential            sum_j |p psi_j|^2 + int V rho
    mixed_direct                 alpha 2 Re sum_j <psi_j, A . p psi_j>
    mixed_exchange               alpha 2 Re sum_ab int conj(psi_a) (p psi_b) . D_ab
    singular_two_body_direct     alpha^2 int rho (|K|^2 * rho)
    singular_two_body_exchange   alpha^2 sum_ab int psi_a conj(psi_b) (|K|^2 * (conj(psi_a) psi_b))
    three_body_direct            alpha^2 int rho |A|^2
    three_body_exchange_single   alpha^2 [int rho sum_ab |D_ab|^2 + 2 Re sum_ab int A . psi_a conj(psi_b) D_ba]
    three_body_exchange_cyclic   alpha^2 2 Re sum_abc int psi_a conj(psi_c) D_ba . D_cb

The exchange parts enter with a minus sign, the cyclic part with a plus.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from itertools import product

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .grids import DensityField, Grid2D, VectorField2D, linear_convolve
from .kernels import field_kernel, kernel_gap_norm, make_kernel
from .coherent_husimi import SlaterState
from .tf_solver import Trap

# C in |E_R - E_0| <= C R E^{3/2}; the L^{4/3} gap norm of the kernel at R = 1,
# see scripts/calibrate_gap_constant.py
GAP_CONSTANT = 5.530152466061689


class UnderResolvedError(ValueError):
    """Orbitals carry too much weight near the grid Nyquist frequency."""


class BudgetError(ValueError):
    """The requested oracle is outside its computational budget."""


@dataclass
class InteractionOperators:
    hbar: float
    alpha: float
    kernel: object
    trap: Trap
    grid: Grid2D
    external_field: VectorField2D | None = None

    def __post_init__(self):
        self._samples = None

    @classmethod
    def from_regime(cls, regime, trap: Trap, grid: Grid2D, external_field=None) -> "InteractionOperators":
        return cls(regime.hbar, regime.alpha, make_kernel(regime.R), trap, grid, external_field)

    @property
    def kernel_samples(self) -> tuple[np.ndarray, np.ndarray]:
        if self._samples is None:
            self._samples = field_kernel(self.grid, self.kernel)
        return self._samples

    def external(self) -> tuple[np.ndarray, np.ndarray]:
        if self.external_field is None:
            z = np.zeros((self.grid.n, self.grid.n))
            return z, z
        return self.external_field.ax, self.external_field.ay

    def potential(self) -> np.ndarray:
        return self.trap.on_grid(self.grid)

    def momentum(self, psi: np.ndarray, axes=(0, 1)) -> tuple[np.ndarray, np.ndarray]:
        """``p psi`` along two grid axes of ``psi``; ``A_e`` evaluated on those axes."""
        h = self.grid.spacing
        ex, ey = self.external()
        out = []
        for ax, a in zip(axes, (ex, ey)):
            d = _central_difference(psi, ax, h)
            shape = [1] * psi.ndim
            shape[axes[0]] = shape[axes[1]] = self.grid.n
            out.append(-1j * self.hbar * d + a.reshape(shape) * psi)
        return out[0], out[1]

    def convolve(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(K * f)`` on the grid, both components."""
        kx, ky = self.kernel_samples
        dA = self.grid.cell_area
        return dA * linear_convolve(f, kx), dA * linear_convolve(f, ky)

    def convolve_sq(self, f: np.ndarray) -> np.ndarray:
        kx, ky = self.kernel_samples
        return self.grid.cell_area * linear_convolve(f, kx**2 + ky**2)

    def w123(self, x1, x2, x3) -> np.ndarray:
        """``K(x1 - x2) . K(x1 - x3)`` for points ``(..., 2)``."""
        x1, x2, x3 = (np.asarray(v, dtype=float) for v in (x1, x2, x3))
        a = self.kernel.grad_perp(x1[..., 0] - x2[..., 0], x1[..., 1] - x2[..., 1])
        b = self.kernel.grad_perp(x1[..., 0] - x3[..., 0], x1[..., 1] - x3[..., 1])
        return a[0] * b[0] + a[1] * b[1]


def _central_difference(psi: np.ndarray, axis: int, h: float) -> np.ndarray:
    pad = [(0, 0)] * psi.ndim
    pad[axis] = (1, 1)
    p = np.pad(psi, pad)
    n = psi.shape[axis]
    hi = np.take(p, np.arange(2, n + 2), axis=axis)
    lo = np.take(p, np.arange(0, n), axis=axis)
    return (hi - lo) / (2 * h)


@dataclass
class HFEnergyBreakdown:
    kinetic_potential: float
    mixed_direct: float
    mixed_exchange: float
    singular_two_body_direct: float
    singular_two_body_exchange: float
    three_body_direct: float
    three_body_exchange_single: float
    three_body_exchange_cyclic: float

    SIGNS = {
        "kinetic_potential": 1,
        "mixed_direct": 1,
        "mixed_exchange": -1,
        "singular_two_body_direct": 1,
        "singular_two_body_exchange": -1,
        "three_body_direct": 1,
        "three_body_exchange_single": -1,
        "three_body_exchange_cyclic": 1,
    }

    def signed_sum(self, signs: dict | None = None) -> float:
        signs = {**self.SIGNS, **(signs or {})}
        return float(sum(signs[f.name] * getattr(self, f.name) for f in fields(self)))

    @property
    def total(self) -> float:
        return self.signed_sum()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


def check_resolution(state: SlaterState, frac: float = 0.5, tol: float = 1e-2) -> None:
    """Reject orbitals with more than ``tol`` of their weight beyond ``frac`` of Nyquist."""
    n = state.grid.n
    k = np.abs(np.fft.fftfreq(n)) * 2  # 1 at Nyquist
    high = (k[:, None] > frac) | (k[None, :] > frac)
    for psi in state.orbitals:
        w = np.abs(np.fft.fft2(psi)) ** 2
        share = w[high].sum() / w.sum()
        if share > tol:
            raise UnderResolvedError(f"{share:.2%} of orbital weight beyond {frac} of Nyquist")


def _pair_densities(state: SlaterState, ops: InteractionOperators):
    """``D[a][b] = K * (psi_a conj psi_b)`` (two components each)."""
    psi = state.orbitals
    N = state.N
    D = [[None] * N for _ in range(N)]
    for a in range(N):
        for b in range(a, N):
            dx, dy = ops.convolve(psi[a] * np.conj(psi[b]))
            D[a][b] = (dx, dy)
            if b != a:
                D[b][a] = (np.conj(dx), np.conj(dy))
    return D


def hf_energy(state: SlaterState, ops: InteractionOperators, check: bool = True) -> HFEnergyBreakdown:
    if check:
        check_resolution(state)
    psi = state.orbitals
    N = state.N
    dA = ops.grid.cell_area
    al = ops.alpha
    rho = state.density()
    V = ops.potential()
    mom = [ops.momentum(p) for p in psi]

    kp = sum(float(np.sum(np.abs(mx) ** 2 + np.abs(my) ** 2)) for mx, my in mom) * dA
    kp += float(np.sum(V * rho)) * dA

    Ax, Ay = ops.convolve(rho)
    D = _pair_densities(state, ops)

    md = 2 * al * dA * sum(float(np.real(np.sum(np.conj(p) * (Ax * mx + Ay * my)))) for p, (mx, my) in zip(psi, mom))
    me = 0.0
    for a, b in product(range(N), repeat=2):
        dx, dy = D[a][b]
        mx, my = mom[b]
        me += float(np.real(np.sum(np.conj(psi[a]) * (mx * dx + my * dy))))
    me *= 2 * al * dA

    sd = al**2 * dA * float(np.sum(rho * ops.convolve_sq(rho)))
    se = 0.0
    for a, b in product(range(N), repeat=2):
        se += float(np.real(np.sum(psi[a] * np.conj(psi[b]) * ops.convolve_sq(np.conj(psi[a]) * psi[b]))))
    se *= al**2 * dA

    td = al**2 * dA * float(np.sum(rho * (Ax**2 + Ay**2)))
    tes = 0.0
    for a, b in product(range(N), repeat=2):
        dx, dy = D[a][b]
        ex, ey = D[b][a]
        tes += float(np.sum(rho * (np.abs(dx) ** 2 + np.abs(dy) ** 2)))
        tes += 2 * float(np.real(np.sum(psi[a] * np.conj(psi[b]) * (Ax * ex + Ay * ey))))
    tes *= al**2 * dA

    tec = 0.0
    for a, b, c in product(range(N), repeat=3):
        bx, by = D[b][a]
        cx, cy = D[c][b]
        tec += float(np.real(np.sum(psi[a] * np.conj(psi[c]) * (bx * cx + by * cy))))
    tec *= 2 * al**2 * dA

    return HFEnergyBreakdown(kp, md, me, sd, se, td, tes, tec)


def hartree_energy(state: SlaterState, ops: InteractionOperators, kernel_samples=None) -> float:
    """``N^-1 (sum_j |(p + alpha A[rho]) psi_j|^2 + int V rho)``.

    Needs the orbitals, not only the density: the mixed term is a current.
    ``kernel_samples`` overrides the interaction kernel (to compare two radii
    on the same state).
    """
    rho = state.density()
    dA = ops.grid.cell_area
    if kernel_samples is None:
        Ax, Ay = ops.convolve(rho)
    else:
        kx, ky = kernel_samples
        Ax, Ay = dA * linear_convolve(rho, kx), dA * linear_convolve(rho, ky)
    total = 0.0
    for p in state.orbitals:
        mx, my = ops.momentum(p)
        total += float(np.sum(np.abs(mx + ops.alpha * Ax * p) ** 2 + np.abs(my + ops.alpha * Ay * p) ** 2))
    total += float(np.sum(ops.potential() * rho))
    return total * dA / state.N


def exchange_free_hf(b: HFEnergyBreakdown) -> float:
    """The parts of the Wick expansion that form the Hartree functional."""
    return b.kinetic_potential + b.mixed_direct + b.three_body_direct


# ---------------------------------------------------------------------------
# independent oracles


def _kernel_on_pairs(ops: InteractionOperators, i1, j1, i2, j2):
    n = ops.grid.n
    kx, ky = ops.kernel_samples
    return kx[i1 - i2 + n - 1, j1 - j2 + n - 1], ky[i1 - i2 + n - 1, j1 - j2 + n - 1]


def _dense_two_body(state: SlaterState, ops: InteractionOperators) -> float:
    n = ops.grid.n
    if n > 48:
        raise BudgetError(f"dense two-particle oracle limited to n <= 48 (got {n})")
    a, b = state.orbitals
    Psi = (np.einsum("ij,kl->ijkl", a, b) - np.einsum("ij,kl->ijkl", b, a)) / np.sqrt(2)
    idx = np.arange(n)
    i1, j1, i2, j2 = np.meshgrid(idx, idx, idx, idx, indexing="ij", sparse=True)
    Kx, Ky = _kernel_on_pairs(ops, i1, j1, i2, j2)
    V = ops.potential()
    al = ops.alpha
    total = 0.0
    # particle 1 feels K(x1 - x2), particle 2 feels K(x2 - x1) = -K(x1 - x2)
    for axes, sign in (((0, 1), 1.0), ((2, 3), -1.0)):
        mx, my = ops.momentum(Psi, axes)
        total += float(np.sum(np.abs(mx + sign * al * Kx * Psi) ** 2 + np.abs(my + sign * al * Ky * Psi) ** 2))
    w = np.abs(Psi) ** 2
    total += float(np.sum(w * (V[:, :, None, None] + V[None, None, :, :])))
    return total * ops.grid.cell_area**2


def _mc_three_body(state: SlaterState, ops: InteractionOperators, samples: int, seed: int,
                   chunk: int = 50_000) -> tuple[float, float]:
    """Importance-sampled ``<Psi, H Psi>`` with particles drawn iid from ``rho/N``."""
    grid = ops.grid
    n, h, dA = grid.n, grid.spacing, grid.cell_area
    psi = state.orbitals
    N = state.N
    rho = state.density()
    prob = (rho * dA / N).ravel()
    prob = prob / prob.sum()
    V = ops.potential()
    ex, ey = ops.external()
    al, hb = ops.alpha, ops.hbar
    pad = np.zeros((N, n + 2, n + 2), dtype=complex)
    pad[:, 1:-1, 1:-1] = psi

    def det_at(I, J):
        # I, J: (m, N) padded indices of the N particles
        M = pad[:, I, J]  # (orbital, m, particle)
        return np.linalg.det(np.moveaxis(M, 0, 1)) / np.sqrt(float(np.prod(range(1, N + 1))))

    seqs = np.random.SeedSequence(seed).spawn((samples + chunk - 1) // chunk)
    vals = []
    for s, ss in zip(range(0, samples, chunk), seqs):
        m = min(chunk, samples - s)
        rng = np.random.default_rng(ss)
        flat = rng.choice(n * n, size=(m, N), p=prob)
        I, J = np.divmod(flat, n)
        q = np.prod(prob[flat], axis=1)
        I1, J1 = I + 1, J + 1
        Psi = det_at(I1, J1)
        f = np.zeros(m)
        for j in range(N):
            Ax = np.zeros(m)
            Ay = np.zeros(m)
            for k in range(N):
                if k != j:
                    kx, ky = _kernel_on_pairs(ops, I[:, j], J[:, j], I[:, k], J[:, k])
                    Ax += kx
                    Ay += ky
            comps = []
            for dI, dJ, a, A in ((1, 0, ex, Ax), (0, 1, ey, Ay)):
                Ip, Jp, Im, Jm = I1.copy(), J1.copy(), I1.copy(), J1.copy()
                Ip[:, j] += dI
                Jp[:, j] += dJ
                Im[:, j] -= dI
                Jm[:, j] -= dJ
                d = (det_at(Ip, Jp) - det_at(Im, Jm)) / (2 * h)
                comps.append(-1j * hb * d + (a[I[:, j], J[:, j]] + al * A) * Psi)
            f += np.abs(comps[0]) ** 2 + np.abs(comps[1]) ** 2 + V[I[:, j], J[:, j]] * np.abs(Psi) ** 2
        vals.append(f * dA**N / q)
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v)))


def direct_energy_oracle(state: SlaterState, ops: InteractionOperators, samples: int = 1_000_000,
                         seed: int = 0, max_stderr: float | None = None):
    """``<Psi, H Psi>`` from the antisymmetrized wave function itself.

    Two particles: dense sum over all ``n^4`` configurations, returns a float.
    Three particles: Monte Carlo, returns ``(estimate, standard_error)``.
    """
    if state.N == 1:
        mx, my = ops.momentum(state.orbitals[0])
        dA = ops.grid.cell_area
        return float(np.sum(np.abs(mx) ** 2 + np.abs(my) ** 2 + ops.potential() * np.abs(state.orbitals[0]) ** 2) * dA)
    if state.N == 2:
        return _dense_two_body(state, ops)
    if state.N == 3:
        est, se = _mc_three_body(state, ops, samples, seed)
        if max_stderr is not None and se > max_stderr:
            raise BudgetError(f"standard error {se:.3e} above requested {max_stderr:.3e}")
        return est, se
    raise BudgetError(f"oracle supports N <= 3, got N={state.N}")


# ---------------------------------------------------------------------------
# semi-classical trial state and the regularization gap


def magnetic_laplacian(grid: Grid2D, hbar: float, field: VectorField2D | None = None) -> sp.csr_matrix:
    """Five-point ``(-i hbar grad + A)^2`` with Peierls phases, Dirichlet box."""
    n, h = grid.n, grid.spacing
    N = n * n
    if field is None:
        ax = ay = np.zeros((n, n))
    else:
        ax, ay = field.ax, field.ay
    idx = np.arange(N).reshape(n, n)
    rows, cols, vals = [np.arange(N)], [np.arange(N)], [np.full(N, 4 * hbar**2 / h**2)]
    # bond i -> i + e_x carries phase exp(-i h A_x(midpoint)/hbar)
    for a, sl_from, sl_to in ((ax, (slice(0, -1), slice(None)), (slice(1, None), slice(None))),
                              (ay, (slice(None), slice(0, -1)), (slice(None), slice(1, None)))):
        mid = 0.5 * (a[sl_from] + a[sl_to])
        phase = np.exp(-1j * h * mid / hbar)
        f, t = idx[sl_from].ravel(), idx[sl_to].ravel()
        w = -(hbar**2 / h**2) * phase.ravel()
        rows += [t, f]
        cols += [f, t]
        vals += [w, np.conj(w)]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def gc_projector_state(rho_tf: DensityField, N: int, hbar: float,
                       field: VectorField2D | None = None) -> SlaterState:
    """Lowest ``N`` eigenvectors of ``(-i hbar grad + A)^2 - 4 pi rho_tf`` on the density's grid."""
    grid = rho_tf.grid
    H = magnetic_laplacian(grid, hbar, field) - sp.diags(4 * np.pi * rho_tf.values.ravel())
    if field is None:
        H = H.real
    vals, vecs = eigsh(H.tocsc(), k=N, which="SA", tol=1e-10)
    order = np.argsort(vals)
    orb = vecs[:, order].T.reshape(N, grid.n, grid.n) / np.sqrt(grid.cell_area)
    return SlaterState(orb, grid)


def regularization_gap_bound(e_af: float, R: float, constant: float = GAP_CONSTANT) -> float:
    """``C R e_af^{3/2}``."""
    if e_af < 0:
        raise ValueError("energy must be nonnegative")
    return constant * R * e_af**1.5


def calibrate_gap_constant(R: float = 1.0) -> float:
    """The kernel gap norm at the reference radius (exact ``R^{1/2}`` scaling below it)."""
    return kernel_gap_norm(R)
