"""Command line entry point: ``anyonvlasov <verb> --config PATH [--seed S] [--out DIR] [key=value ...]``.

Each verb writes its numeric outputs (CSV for fields, JSON for scalars) and a
``manifest.json`` with the full config echo, version, seed and wall time.
Numeric outputs depend only on the config and seed.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config

MANIFEST_VERSION = 1


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with floats written to 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {dumps(v, indent, level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return _fmt(float(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n")


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k]).ravel() for k in names]
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(str(int(v)) if isinstance(v, (np.integer, int)) else _fmt(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# shared builders


def _tf(cfg: RunConfig, grid=None):
    from .tf_solver import solve_tf

    return solve_tf(cfg.trap.build(), cfg.tf.mass, grid or cfg.x_grid.build(), tol=cfg.tf.tol)


def _vlasov_setup(cfg: RunConfig, beta: float):
    from .vlasov import VlasovSetup

    return VlasovSetup(cfg.trap.build(), None, float(beta), cfg.kernel.build(cfg.scaling))


def _oscillator_orbitals(grid, n_orbitals: int, hbar: float):
    """The lowest Hermite-Gaussian orbitals of ``-hbar^2 Laplacian + |x|^2``, shell by shell."""
    from .coherent_husimi import SlaterState, hermite_gaussian

    orders = [(k - j, j) for k in range(n_orbitals + 1) for j in range(k + 1)][:n_orbitals]
    funcs = np.array([hermite_gaussian(grid, a, b, width2=hbar) for a, b in orders])
    return SlaterState.orthonormalize(funcs, grid), orders


# ---------------------------------------------------------------------------
# verbs


def run_tf_solve(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    sol = _tf(cfg)
    x, y = sol.rho.grid.mesh()
    write_csv(out / "tf_density.csv", {"x": x, "y": y, "rho": sol.rho.values})
    summary = sol.summary()
    summary["trap"] = cfg.trap.build().to_dict()
    write_json(out / "tf_summary.json", summary)
    return ["tf_density.csv", "tf_summary.json"]


def run_vlasov_energy(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .vlasov import build_minimizer, pauli_and_mass_report, vlasov_energy

    sol = _tf(cfg)
    p_grid = cfg.p_grid.build()
    rows = []
    for beta in cfg.vlasov.betas:
        setup = _vlasov_setup(cfg, beta)
        m = build_minimizer(sol.rho, setup, p_grid)
        rep = pauli_and_mass_report(m)
        rows.append({"beta": float(beta), "vlasov_energy": vlasov_energy(m, setup), **rep})
    write_json(out / "vlasov_energy.json", {"tf_energy": sol.energy, "lambda": sol.lam, "runs": rows})
    return ["vlasov_energy.json"]


def run_momentum_dist(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .vlasov import PHASE_VOLUME, momentum_distribution_grid

    sol = _tf(cfg)
    p_grid = cfg.p_grid.build()
    px, py = p_grid.mesh()
    cols = {"px": px, "py": py}
    summary = {}
    for beta in cfg.vlasov.betas:
        t = momentum_distribution_grid(sol.rho, _vlasov_setup(cfg, beta), p_grid)
        cols[f"t_beta_{beta:g}"] = t
        summary[f"{beta:g}"] = {"normalization": p_grid.integrate(t) / PHASE_VOLUME, "max": float(t.max())}
    write_csv(out / "momentum_distribution.csv", cols)
    write_json(out / "momentum_summary.json", summary)
    return ["momentum_distribution.csv", "momentum_summary.json"]


def run_husimi(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .coherent_husimi import SqueezedScales, check_resolution, husimi1, uncertainty_product

    hp = cfg.husimi
    hbar = cfg.scaling.hbar if hp.hbar is None else hp.hbar
    scales = SqueezedScales.from_hbar(hbar, hp.squeeze)
    grid = hp.orbital_grid.build()
    check_resolution(grid, scales, hp.slice_p_half)
    state, orders = _oscillator_orbitals(grid, hp.n_orbitals, hbar)
    xs = np.linspace(-hp.slice_x_half, hp.slice_x_half, hp.slice_nx)
    ps = np.linspace(-hp.slice_p_half, hp.slice_p_half, hp.slice_np)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    z = np.stack([X, np.zeros_like(X), P, np.zeros_like(P)], axis=-1)
    m1 = husimi1(state, z, scales)
    write_csv(out / "husimi_slice.csv", {"x1": X, "p1": P, "m1": m1})
    dx, dp = uncertainty_product(scales)
    write_json(out / "husimi_summary.json", {
        "N": state.N, "hbar": hbar, "hbar_x": scales.hbar_x, "hbar_p": scales.hbar_p,
        "orders": [list(o) for o in orders], "m1_max": float(m1.max()), "m1_min": float(m1.min()),
        "uncertainty_product": dx * dp,
    })
    return ["husimi_slice.csv", "husimi_summary.json"]


def run_hf_energy(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .hartree_fock import InteractionOperators, direct_energy_oracle, hartree_energy, hf_energy

    hp = cfg.hf
    hbar = cfg.scaling.hbar if hp.hbar is None else hp.hbar
    alpha = cfg.scaling.alpha if hp.alpha is None else hp.alpha
    grid = hp.orbital_grid.build()
    state, orders = _oscillator_orbitals(grid, hp.n_orbitals, hbar)
    ops = InteractionOperators(hbar, alpha, cfg.kernel.build(cfg.scaling), cfg.trap.build(), grid)
    b = hf_energy(state, ops)
    res = {"N": state.N, "hbar": hbar, "alpha": alpha, "orders": [list(o) for o in orders],
           "breakdown": b.to_dict(), "hartree_energy": hartree_energy(state, ops)}
    if hp.oracle and state.N <= 3:
        o = direct_energy_oracle(state, ops, samples=hp.mc_samples, seed=seed)
        res["oracle"] = {"estimate": o[0], "stderr": o[1]} if isinstance(o, tuple) else {"estimate": o, "stderr": 0.0}
    write_json(out / "hf_energy.json", res)
    return ["hf_energy.json"]


def run_df_check(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .diaconis_freedman import (DiscreteSymmetricMeasure, df_marginal_closed_form, df_marginal_exact,
                                    df_tv_bound, tv_distance)

    dp = cfg.df
    rng = np.random.default_rng(seed)
    rows = {"measure": [], "N": [], "n": [], "closed_form_match": [], "tv": [], "tv_bound": []}
    for k in range(dp.measures):
        for N in range(1, dp.max_N + 1):
            mu = DiscreteSymmetricMeasure.random(dp.atoms, N, rng)
            for n in range(1, min(dp.max_n, N) + 1):
                ex = df_marginal_exact(mu, n, max_N=dp.max_N, max_atoms=max(4, dp.atoms))
                cf = df_marginal_closed_form(mu, n)
                rows["measure"].append(k)
                rows["N"].append(N)
                rows["n"].append(n)
                rows["closed_form_match"].append(int(tv_distance(ex, cf) == 0))
                rows["tv"].append(float(tv_distance(mu.marginal(n), ex)))
                rows["tv_bound"].append(float(df_tv_bound(n, N)))
    write_csv(out / "df_check.csv", {k: np.array(v) for k, v in rows.items()})
    tv, bd = np.array(rows["tv"]), np.array(rows["tv_bound"])
    write_json(out / "df_summary.json", {
        "cases": len(tv), "closed_form_mismatches": int(len(tv) - sum(rows["closed_form_match"])),
        "bound_failures": int(np.count_nonzero(tv > bd)), "max_tv_over_bound": float(np.max(np.where(bd > 0, tv / np.where(bd > 0, bd, 1), 0))),
    })
    return ["df_check.csv", "df_summary.json"]


def run_pauli_mc(cfg: RunConfig, seed: int, out: Path) -> list[str]:
    from .diaconis_freedman import Tiling, mc_violation_probability, tf_phase_space_sampler, union_bound

    pp = cfg.pauli
    sol = _tf(cfg, pp.x_grid.build())
    rho = sol.rho
    grid = rho.grid
    # cover the x-support and the largest momentum ball
    x_reach = float(grid.radius()[rho.values > 0].max()) + grid.spacing
    p_reach = float(np.sqrt(4 * np.pi * rho.values.max()))
    tiling = Tiling.cubic(pp.N, pp.tiling_exponent, max(x_reach, p_reach))
    hbar = pp.N ** -0.5
    est, worst = mc_violation_probability(tf_phase_space_sampler(rho), pp.N, tiling, list(pp.eps), pp.trials, seed)
    rows = []
    for e in est:
        n_opt, ub = union_bound(tiling, e.eps, pp.N, hbar)
        rows.append({**e.to_dict(), "optimal_n": n_opt, "union_bound": ub})
    counts = np.bincount(worst)
    write_csv(out / "pauli_worst_occupancy.csv", {"occupancy": np.arange(len(counts)), "trials": counts})
    write_json(out / "pauli_mc.json", {
        "N": pp.N, "tile_side": tiling.l_x, "tile_volume": tiling.volume, "tiles": tiling.count,
        "n_per_axis": tiling.n_per_axis, "estimates": rows,
    })
    return ["pauli_worst_occupancy.csv", "pauli_mc.json"]


VERBS = {
    "tf-solve": run_tf_solve,
    "vlasov-energy": run_vlasov_energy,
    "momentum-dist": run_momentum_dist,
    "husimi": run_husimi,
    "hf-energy": run_hf_energy,
    "df-check": run_df_check,
    "pauli-mc": run_pauli_mc,
}


def run(verb: str, cfg: RunConfig, out: Path | None = None) -> dict:
    """Run one verb and write its outputs plus the manifest; returns the manifest."""
    out = Path(cfg.output_dir if out is None else out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = VERBS[verb](cfg, cfg.seed, out)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "verb": verb,
        "version": __version__,
        "seed": cfg.seed,
        "derived": cfg.scaling.derived(),
        "config": cfg.to_dict(),
        "outputs": files,
        "wall_time_s": time.perf_counter() - t0,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anyonvlasov", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("--config", required=True, help="JSON config, or a manifest.json from an earlier run")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_intermixed_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = parse_config(args.config, overrides)
        if args.out is not None:
            cfg.output_dir = args.out
        run(args.verb, cfg)
    except ConfigError as e:
        print(f"anyonvlasov: config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - report the module error and exit nonzero
        print(f"anyonvlasov: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
