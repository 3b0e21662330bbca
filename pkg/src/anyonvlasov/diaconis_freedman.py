"""Empirical phase-space measures, Diaconis-Freedman resampling, Stirling-number
moment bounds, Pauli-violation probabilities and the tile-averaging map.

Exact oracles work on discrete symmetric measures with rational weights
(``fractions.Fraction``).  Floating point only enters when probability bounds
are assembled.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .grids import DensityField

STIRLING_MAX_N = 64


class BudgetExceeded(ValueError):
    """Exact enumeration requested beyond its size limit."""


# ---------------------------------------------------------------------------
# configurations and tilings


@dataclass
class EmpiricalConfig:
    """``N`` phase-space points ``(x1, x2, p1, p2)``, each of weight ``1/N``."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 4)

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)


@dataclass(frozen=True)
class Tiling:
    """Tiles of side ``l_x`` in both x-directions and ``l_p`` in both p-directions,
    covering ``[-n l_x, n l_x]^2 x [-n l_p, n l_p]^2`` with ``2n`` tiles per axis."""

    l_x: float
    l_p: float
    n_per_axis: int

    @classmethod
    def cubic(cls, N: int, tiling_exponent: float, reach: float) -> "Tiling":
        """Sides ``N^{-tiling_exponent/4}`` and enough tiles to cover ``[-reach, reach]^4``."""
        side = float(N) ** (-tiling_exponent / 4.0)
        return cls(side, side, int(math.ceil(reach / side)))

    @property
    def L_x(self) -> float:
        return self.n_per_axis * self.l_x

    @property
    def L_p(self) -> float:
        return self.n_per_axis * self.l_p

    @property
    def L(self) -> float:
        return max(self.L_x, self.L_p)

    @property
    def volume(self) -> float:
        return self.l_x**2 * self.l_p**2

    @property
    def per_axis(self) -> int:
        return 2 * self.n_per_axis

    @property
    def count(self) -> int:
        return self.per_axis**4

    @property
    def diameter(self) -> float:
        return math.sqrt(2 * self.l_x**2 + 2 * self.l_p**2)

    def axis_index(self, c: np.ndarray, side: float, half: float) -> np.ndarray:
        """Tile index along one axis; points on a shared face go to the lower tile."""
        t = (c + half) / side
        idx = np.ceil(t).astype(np.int64) - 1
        idx = np.where(t == 0, 0, idx)
        m = self.per_axis
        return np.where((t < 0) | (t > m), -1, idx)

    def tile_ids(self, points: np.ndarray) -> np.ndarray:
        """Flat tile id per point, ``-1`` outside the covered square."""
        pts = np.asarray(points, dtype=float).reshape(-1, 4)
        m = self.per_axis
        ids = np.zeros(len(pts), dtype=np.int64)
        inside = np.ones(len(pts), dtype=bool)
        for k in range(4):
            side, half = (self.l_x, self.L_x) if k < 2 else (self.l_p, self.L_p)
            i = self.axis_index(pts[:, k], side, half)
            inside &= i >= 0
            ids = ids * m + np.maximum(i, 0)
        return np.where(inside, ids, -1)

    def centers(self) -> list[np.ndarray]:
        cx = -self.L_x + self.l_x * (np.arange(self.per_axis) + 0.5)
        cp = -self.L_p + self.l_p * (np.arange(self.per_axis) + 0.5)
        return [cx, cx, cp, cp]


@dataclass
class AveragedMeasure:
    """Tile-constant density ``(count / N) / |tile|`` indexed ``[i1, i2, j1, j2]``."""

    tile_values: np.ndarray
    tiling: Tiling

    def mass(self) -> float:
        return float(self.tile_values.sum() * self.tiling.volume)

    def max(self) -> float:
        return float(self.tile_values.max())

    def position_density(self) -> np.ndarray:
        """``int Ave dp``: per x-tile, ``(count / N) / l_x^2``."""
        return self.tile_values.sum(axis=(2, 3)) * self.tiling.l_p**2

    def integrate(self, phi: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int phi dAve`` by the tile-centre rule (error at most ``Lip(phi) diam/2`` per unit mass)."""
        c = np.meshgrid(*self.tiling.centers(), indexing="ij")
        z = np.stack(c, axis=-1)
        occ = self.tile_values > 0
        return float(np.sum(phi(z[occ]) * self.tile_values[occ]) * self.tiling.volume)


def average_map(config: EmpiricalConfig, tiling: Tiling) -> AveragedMeasure:
    ids = tiling.tile_ids(config.points)
    counts = np.bincount(ids[ids >= 0], minlength=tiling.count).astype(float)
    vals = counts / config.N / tiling.volume
    m = tiling.per_axis
    return AveragedMeasure(vals.reshape(m, m, m, m), tiling)


# ---------------------------------------------------------------------------
# exact discrete symmetric measures


@dataclass
class DiscreteSymmetricMeasure:
    """Weights on ``N``-tuples of atom indices, symmetric under permutations."""

    atoms: list
    N: int
    joint_weights: dict = field(default_factory=dict)

    def __post_init__(self):
        w = {k: Fraction(v) for k, v in self.joint_weights.items() if v != 0}
        if any(v < 0 for v in w.values()):
            raise ValueError("weights must be nonnegative")
        if sum(w.values()) != 1:
            raise ValueError(f"weights sum to {sum(w.values())}, not 1")
        for k, v in w.items():
            if len(k) != self.N:
                raise ValueError(f"tuple {k} has length {len(k)}, expected {self.N}")
            for perm in set(permutations(k)):
                if w.get(perm, 0) != v:
                    raise ValueError(f"weights not symmetric at {k}")
        self.joint_weights = w

    @classmethod
    def from_multisets(cls, atoms: list, N: int, multiset_weights: dict) -> "DiscreteSymmetricMeasure":
        """Spread each multiset's weight evenly over its distinct orderings."""
        w = {}
        for ms, v in multiset_weights.items():
            orders = set(permutations(ms))
            for o in orders:
                w[o] = Fraction(v) / len(orders)
        return cls(atoms, N, w)

    @classmethod
    def random(cls, n_atoms: int, N: int, rng: np.random.Generator, denominator: int = 97) -> "DiscreteSymmetricMeasure":
        """Random rational symmetric measure on ``n_atoms`` atoms."""
        from itertools import combinations_with_replacement

        ms = list(combinations_with_replacement(range(n_atoms), N))
        raw = rng.integers(0, denominator, size=len(ms))
        raw[rng.integers(len(ms))] += 1  # never all zero
        tot = int(raw.sum())
        return cls.from_multisets(list(range(n_atoms)), N, {m: Fraction(int(r), tot) for m, r in zip(ms, raw)})

    def marginal(self, n: int) -> dict:
        if not 1 <= n <= self.N:
            raise ValueError(f"need 1 <= n <= N, got n={n}")
        out = defaultdict(Fraction)
        for k, v in self.joint_weights.items():
            out[k[:n]] += v
        return dict(out)


def df_marginal_exact(mu: DiscreteSymmetricMeasure, n: int, max_N: int = 5, max_atoms: int = 4) -> dict:
    """``sum_Z mu(Z) N^-n sum_{gamma: [n] -> [N]} delta_{X = Z_gamma}`` by enumeration."""
    if mu.N > max_N or len(mu.atoms) > max_atoms:
        raise BudgetExceeded(f"enumeration limited to N <= {max_N}, {max_atoms} atoms")
    if not 1 <= n <= mu.N:
        raise ValueError(f"need 1 <= n <= N, got n={n}")
    out = defaultdict(Fraction)
    scale = Fraction(1, mu.N**n)
    maps = list(product(range(mu.N), repeat=n))
    for Z, w in mu.joint_weights.items():
        for g in maps:
            out[tuple(Z[i] for i in g)] += w * scale
    return dict(out)


def df_marginal_closed_form(mu: DiscreteSymmetricMeasure, n: int) -> dict:
    """Expansion of the resampled marginals in terms of the marginals of ``mu`` (n <= 3)."""
    N = mu.N
    out = defaultdict(Fraction)
    m1 = mu.marginal(1)
    if n == 1:
        return dict(m1)
    if n == 2:
        if N >= 2:
            for k, v in mu.marginal(2).items():
                out[k] += Fraction(N - 1, N) * v
        for (a,), v in m1.items():
            out[(a, a)] += Fraction(1, N) * v
        return dict(out)
    if n == 3:
        if N >= 3:
            for k, v in mu.marginal(3).items():
                out[k] += Fraction(N * (N - 1) * (N - 2), N**3) * v
        if N >= 2:
            c = Fraction(N - 1, N**2)
            for (a, b), v in mu.marginal(2).items():
                out[(a, a, b)] += c * v  # mu2(X1, X3) on X1 = X2
                out[(b, a, a)] += c * v  # mu2(X2, X1) on X2 = X3
                out[(a, b, a)] += c * v  # mu2(X3, X2) on X3 = X1
        for (a,), v in m1.items():
            out[(a, a, a)] += Fraction(1, N**2) * v
        return dict(out)
    raise ValueError("closed forms available for n <= 3")


def tv_distance(a: dict, b: dict):
    """``sup_{|phi| <= 1} |int phi d(a - b)|``, the full L^1 distance (values in [0, 2])."""
    keys = set(a) | set(b)
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in keys)


def df_tv_bound(n: int, N: int) -> Fraction:
    return Fraction(2 * n * (n - 1), N)


def df_sample(mu_N_sampler: Callable[[np.random.Generator], np.ndarray], n: int,
              rng: np.random.Generator) -> np.ndarray:
    """Draw ``Z_N`` from the sampler, then ``n`` iid points from its empirical measure."""
    Z = np.asarray(mu_N_sampler(rng))
    if not 1 <= n <= len(Z):
        raise ValueError(f"need 1 <= n <= N, got n={n}")
    return Z[rng.integers(0, len(Z), size=n)]


def discrete_sampler(mu: DiscreteSymmetricMeasure) -> Callable[[np.random.Generator], np.ndarray]:
    keys = list(mu.joint_weights)
    p = np.array([float(mu.joint_weights[k]) for k in keys])
    p /= p.sum()
    arr = np.array(keys)

    def sample(rng):
        return arr[rng.choice(len(keys), p=p)]

    return sample


# ---------------------------------------------------------------------------
# Stirling numbers and moment bounds


@lru_cache(maxsize=None)
def _stirling_table() -> list[list[int]]:
    S = [[0] * (STIRLING_MAX_N + 1) for _ in range(STIRLING_MAX_N + 1)]
    S[0][0] = 1
    for n in range(1, STIRLING_MAX_N + 1):
        for k in range(1, n + 1):
            S[n][k] = k * S[n - 1][k] + S[n - 1][k - 1]
    return S


def stirling2(n: int, k: int) -> int:
    """Number of partitions of an ``n``-set into ``k`` nonempty blocks."""
    if n > STIRLING_MAX_N:
        raise OverflowError(f"Stirling table covers n <= {STIRLING_MAX_N}, got n={n}")
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if k > n:
        return 0
    return _stirling_table()[n][k]


def set_partitions_count(n: int, k: int) -> int:
    """Brute-force count of partitions via restricted growth strings."""
    if n == 0:
        return int(k == 0)
    count = 0

    def grow(prefix_max: int, length: int):
        nonlocal count
        if length == n:
            count += int(prefix_max + 1 == k)
            return
        for v in range(min(prefix_max + 2, k)):
            grow(max(prefix_max, v), length + 1)

    grow(0, 1)
    return count


def stirling_upper_bound(n: int, k: int, C: float = 1.0) -> float:
    return C * math.comb(n, k) * float(k) ** (n - k)


def log_box_mass_moment_bound(n: int, box_volume: float, N: int, hbar: float) -> float:
    if n > STIRLING_MAX_N:
        raise OverflowError(f"n={n} beyond the exact Stirling range")
    ks = np.arange(1, n + 1)
    logS = np.array([math.log(stirling2(n, int(k))) for k in ks])
    terms = -n * math.log(N) + ks * math.log(box_volume) + logS - 2 * ks * math.log(2 * math.pi * hbar)
    return float(logsumexp(terms))


def box_mass_moment_bound(n: int, box_volume: float, N: int, hbar: float) -> float:
    """``N^-n sum_k |Omega|^k S(n,k) / (2 pi hbar)^(2k)``."""
    return math.exp(log_box_mass_moment_bound(n, box_volume, N, hbar))


def log_pauli_violation_bound(n: int, box_volume: float, eps: float, N: int, hbar: float) -> float:
    return (-n * math.log1p(eps) + 2 * n * math.log(2 * math.pi) - n * math.log(box_volume)
            + log_box_mass_moment_bound(n, box_volume, N, hbar))


def pauli_violation_bound(n: int, box_volume: float, eps: float, N: int, hbar: float) -> float:
    """``(1+eps)^-n (2 pi)^(2n) |Omega|^-n`` times the moment bound."""
    return math.exp(log_pauli_violation_bound(n, box_volume, eps, N, hbar))


def optimal_pauli_bound(box_volume: float, eps: float, N: int, hbar: float,
                        n_max: int = STIRLING_MAX_N) -> tuple[int, float]:
    """Minimize the single-box bound over ``1 <= n <= min(N, n_max)``."""
    best = None
    for n in range(1, min(N, n_max) + 1):
        b = log_pauli_violation_bound(n, box_volume, eps, N, hbar)
        if best is None or b < best[1]:
            best = (n, b)
    return best[0], math.exp(best[1])


def admissible_cell_volume(mu: DiscreteSymmetricMeasure, hbar: float) -> float:
    """Smallest per-atom cell volume making the smeared marginals obey
    ``mu^(k) <= (2 pi hbar)^(-2k) (N-k)!/N!`` for every ``k``."""
    N = mu.N
    worst = 0.0
    for k in range(1, N + 1):
        falling = math.perm(N, k)
        top = max(mu.marginal(k).values())
        worst = max(worst, (float(top) * falling) ** (1.0 / k))
    return worst * (2 * math.pi * hbar) ** 2


def box_mass(marginal: dict, box: set) -> Fraction:
    """Mass of a discrete ``n``-marginal on ``box^n``."""
    return sum((v for k, v in marginal.items() if all(a in box for a in k)), Fraction(0))


# ---------------------------------------------------------------------------
# Monte Carlo for the Pauli violation probability


def tf_phase_space_sampler(rho: DensityField, centers: np.ndarray | None = None):
    """iid points of ``m/(2 pi)^2`` for the ball minimizer over ``rho``.

    ``x`` is drawn cellwise from ``rho`` then uniform in the cell; ``p`` is
    uniform in the ball of radius ``sqrt(4 pi rho(x_cell))`` around the centre.
    """
    grid = rho.grid
    w = rho.values.ravel()
    prob = w / w.sum()
    h = grid.spacing
    axis = grid.axis
    radius = np.sqrt(4 * np.pi * rho.values).ravel()
    cen = np.zeros((grid.n * grid.n, 2)) if centers is None else np.asarray(centers).reshape(-1, 2)

    def sample(rng: np.random.Generator, N: int) -> np.ndarray:
        cell = rng.choice(len(prob), size=N, p=prob)
        i, j = np.divmod(cell, grid.n)
        x = np.stack([axis[i], axis[j]], axis=1) + h * (rng.random((N, 2)) - 0.5)
        r = radius[cell] * np.sqrt(rng.random(N))
        th = 2 * np.pi * rng.random(N)
        p = cen[cell] + np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        return np.concatenate([x, p], axis=1)

    return sample


def clustered_sampler(point):
    """All ``N`` points at one phase-space location."""
    z = np.asarray(point, dtype=float)

    def sample(rng, N):
        return np.tile(z, (N, 1))

    return sample


def occupancy_threshold(N: int, tile_volume: float, eps: float) -> int:
    """Smallest integer count with ``count/N >= (1+eps) |Omega| / (2 pi)^2``."""
    t = (1 + eps) * tile_volume * N / (2 * np.pi) ** 2
    return max(1, int(math.ceil(t - 1e-12)))


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = k / n
    d = 1 + z**2 / n
    c = (p + z**2 / (2 * n)) / d
    hw = z * math.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / d
    return max(0.0, c - hw), min(1.0, c + hw)


@dataclass
class ViolationEstimate:
    eps: float
    threshold: int
    estimate: float
    stderr: float
    wilson: tuple[float, float]
    trials: int

    def to_dict(self) -> dict:
        return {"eps": self.eps, "threshold": self.threshold, "estimate": self.estimate,
                "stderr": self.stderr, "wilson_low": self.wilson[0], "wilson_high": self.wilson[1],
                "trials": self.trials}


def worst_occupancies(state_sampler, N: int, tiling: Tiling, trials: int, seed: int) -> np.ndarray:
    """Largest tile count per trial; each trial has its own spawned stream."""
    seqs = np.random.SeedSequence(seed).spawn(trials)
    worst = np.empty(trials, dtype=np.int64)
    for t, ss in enumerate(seqs):
        ids = tiling.tile_ids(state_sampler(np.random.default_rng(ss), N))
        ids = ids[ids >= 0]
        worst[t] = 0 if len(ids) == 0 else int(np.bincount(ids).max())
    return worst


def mc_violation_probability(state_sampler, N: int, tiling: Tiling, eps, trials: int, seed: int,
                             worst: np.ndarray | None = None):
    """Fraction of configurations with some tile at or above the ``(1+eps)`` occupancy.

    ``eps`` may be a scalar or a list; all values share the same trials.
    Returns the estimate(s) and the per-trial worst occupancies.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    if worst is None:
        worst = worst_occupancies(state_sampler, N, tiling, trials, seed)
    out = []
    for e in np.atleast_1d(eps):
        c = occupancy_threshold(N, tiling.volume, float(e))
        k = int(np.count_nonzero(worst >= c))
        p = k / trials
        out.append(ViolationEstimate(float(e), c, p, math.sqrt(p * (1 - p) / trials),
                                     wilson_interval(k, trials), trials))
    return (out[0] if np.ndim(eps) == 0 else out), worst


def union_bound(tiling: Tiling, eps: float, N: int, hbar: float) -> tuple[int, float]:
    """Number of tiles times the optimal single-tile bound."""
    n, b = optimal_pauli_bound(tiling.volume, eps, N, hbar)
    return n, tiling.count * b
