"""Command-line front end.

Subcommands: spectrum, dnmap, heat, verify, observability, reconstruct,
sweep.  Each writes CSV and JSON artifacts (plus optional SVG plots rendered
from the CSV) into the output directory; the exit status is 0 iff every
invoked check passed its tolerance, and failures emit machine-readable error
JSON on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import cache as cache_io
from .config import ExperimentConfig, load_config
from .errors import FracspecError
from .forward import (boundary_function, dn_map, dn_series_direct, ibp_cross_residual,
                      laplace_dn, solve_elliptic_series, solve_parabolic,
                      verify_laplace_consistency)
from .inverse import (UniquenessConfig, reconstruct, spectral_misfit,
                      transport_residual, uniqueness_experiment)
from .opcore import (FractionalOrder, Potential, add_potential,
                     assemble_fractional_laplacian, build_grid, gamma_factors,
                     make_potential)
from .reporting import error_json, svg_from_csv, write_csv, write_json
from .spectral import eigendecompose
from .waveobs import (WaveState, equipartition_residual, evolve_wave,
                      heat_observability_check, pohozaev_residual, wave_energy,
                      wave_observability)


def _config_potential(cfg: ExperimentConfig, grid) -> Potential:
    if cfg.potential == "file":
        vals = np.loadtxt(cfg.potential_file)
        if vals.shape != (grid.n,):
            raise FracspecError(
                f"potential file {cfg.potential_file} has {vals.shape} samples, need {grid.n}")
        return Potential(values=vals)
    if cfg.potential == "constant":
        return make_potential(grid, "constant", value=cfg.potential_value)
    if cfg.potential == "bump":
        return make_potential(grid, "bump", center=cfg.potential_center,
                              width=cfg.potential_width, amplitude=cfg.potential_amplitude)
    return make_potential(grid, "zero")


def _spectral_data(cfg: ExperimentConfig, use_cache: bool = True):
    """Build (or load from cache) the spectral data for the configured problem."""
    grid = build_grid(cfg.left, cfg.right, cfg.n)
    order = FractionalOrder(a=cfg.a)
    q = _config_potential(cfg, grid)
    path = cache_io.cache_path(grid, order, q, cfg.modes)
    if use_cache and path.exists():
        return cache_io.load_cache(path), True, path
    op = add_potential(assemble_fractional_laplacian(grid, order), q)
    data = eigendecompose(op, cfg.modes)
    if use_cache:
        cache_io.save_cache(data, path)
    return data, False, path


def _boundary(cfg: ExperimentConfig, side=None, **kw):
    return boundary_function(cfg.boundary, cfg.horizon, cfg.steps,
                             side=side or cfg.boundary_side,
                             amplitude=cfg.boundary_amplitude, **kw)


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    data, from_cache, path = _spectral_data(cfg)
    rows = [(k + 1, data.lambdas[k], data.traces[k, 0], data.traces[k, 1])
            for k in range(data.m_modes)]
    csv_path = write_csv(out / "spectrum.csv",
                         ["mode_index", "lambda", "tau_left", "tau_right"], rows)
    write_json(out / "spectrum.json", {
        "a": cfg.a, "n": cfg.n, "modes": cfg.modes, "potential": cfg.potential,
        "cache_file": str(path), "loaded_from_cache": from_cache,
        "lambdas": data.lambdas.tolist(),
        "tau_left": data.traces[:, 0].tolist(),
        "tau_right": data.traces[:, 1].tolist(),
    })
    if cfg.plots:
        svg_from_csv(csv_path, out / "spectrum.svg", "mode_index",
                     ["lambda", "tau_left", "tau_right"])
    print(f"spectrum: {data.m_modes} modes, lambda_1 = {data.lambdas[0]:.6f} "
          f"({'cache' if from_cache else 'computed'})")
    return 0


def cmd_dnmap(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    data, _, _ = _spectral_data(cfg)
    families = {"left": (1.0, 0.0), "right": (0.0, 1.0), "both": (1.0, 1.0)}
    mus = [-s for s in cfg.s_values]
    K = min(16, cfg.modes)
    rows = []
    for label, F in families.items():
        for mu in mus:
            sample = dn_map(data, mu, F, l_max=1024, K=K)
            direct = dn_series_direct(data, mu, F, K=K)
            rows.append((label, float(np.real(mu)), float(np.imag(mu)),
                         float(sample.values[0].real), float(sample.values[0].imag),
                         float(sample.values[1].real), float(sample.values[1].imag),
                         sample.convergence_estimate,
                         float(np.abs(sample.values - direct.values).max())))
    csv_path = write_csv(out / "dnmap.csv",
                         ["boundary_family", "mu_re", "mu_im", "dn_left_re", "dn_left_im",
                          "dn_right_re", "dn_right_im", "ladder_residual", "direct_gap"],
                         rows)
    write_json(out / "dnmap.json", {
        "truncation": K,
        "rows": [dict(zip(["boundary_family", "mu_re", "mu_im", "dn_left_re", "dn_left_im",
                           "dn_right_re", "dn_right_im", "ladder_residual", "direct_gap"], r))
                 for r in rows],
    })
    ok = all(r[-1] <= max(2.0 * r[-2], 1e-12) for r in rows)
    if cfg.plots:
        svg_from_csv(csv_path, out / "dnmap.svg", "mu_re", ["dn_left_re", "dn_right_re"])
    print(f"dnmap: {len(rows)} samples, limit consistency {'ok' if ok else 'FAILED'}")
    return 0 if ok else 1


def cmd_heat(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    data, _, _ = _spectral_data(cfg)
    f = _boundary(cfg)
    sol = solve_parabolic(data, f)
    neumann = sol.coeffs @ data.traces            # (K+1, 2)
    norms = np.sqrt(np.sum(sol.coeffs ** 2, axis=1))
    rows = [(sol.times[k], norms[k], neumann[k, 0], neumann[k, 1])
            for k in range(sol.times.size)]
    csv_path = write_csv(out / "heat.csv",
                         ["t", "l2_norm", "neumann_left", "neumann_right"], rows)
    from .forward import extend_parabolic
    _, tail = extend_parabolic(sol, sol.horizon)
    write_json(out / "heat.json", {
        "horizon": cfg.horizon, "steps": cfg.steps, "boundary": cfg.boundary,
        "final_l2_norm": float(norms[-1]), "infinite_time_tail_mass": tail,
    })
    if cfg.plots:
        svg_from_csv(csv_path, out / "heat.svg", "t",
                     ["l2_norm", "neumann_left", "neumann_right"])
    print(f"heat: evolved to T = {cfg.horizon}, final |w| = {norms[-1]:.6e}")
    return 0


def _verify_checks(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    grid = build_grid(cfg.left, cfg.right, cfg.n)
    order = FractionalOrder(a=cfg.a)
    q = _config_potential(cfg, grid)
    op = add_potential(assemble_fractional_laplacian(grid, order), q)
    modes = max(cfg.modes, 8)
    data = eigendecompose(op, modes)
    g_ibp = gamma_factors(order).g_ibp

    checks = []

    # integration by parts, cross-resolution
    fine_grid = build_grid(cfg.left, cfg.right, 2 * cfg.n + 1)
    qf = _config_potential(cfg, fine_grid) if cfg.potential != "file" else None
    if qf is None:
        raise FracspecError("verify with file potentials is not supported")
    fine = eigendecompose(add_potential(assemble_fractional_laplacian(fine_grid, order), qf), modes)
    F = (1.0, 0.7)
    worst = 0.0
    for lam in (-1.0 + 0.3j, 2.0 + 1.0j, -25.0 + 0.0j):
        worst = max(worst, float(ibp_cross_residual(data, fine, lam, F, 5).max()))
    checks.append(("integration_by_parts", worst, cfg.tol_ibp))

    # resolvent difference identity (pure algebra)
    lam1, lam2 = -2.0 + 0.5j, 3.7 + 0.2j
    s1 = solve_elliptic_series(data, lam1, F)
    s2 = solve_elliptic_series(data, lam2, F)
    pair = data.traces @ np.asarray(F)
    expected = g_ibp * (lam1 - lam2) / ((lam1 - data.lambdas) * (lam2 - data.lambdas)) * pair
    resolvent = float(np.abs(s1.coeffs - s2.coeffs - expected).max()
                      / np.abs(expected).max())
    checks.append(("resolvent_identity", resolvent, cfg.tol_resolvent))

    # series exactness: (A + q - lam) v == g * sum <F,tau_n> phi_n
    v = s1.materialize()
    lhs = op.matrix @ v - lam1 * v
    rhs = data.modes @ (g_ibp * pair)
    series = float(np.abs(lhs - rhs).max() / np.abs(rhs).max())
    checks.append(("series_exactness", series, cfg.tol_series))

    # Laplace consistency
    f = _boundary(cfg)
    lap = max(verify_laplace_consistency(data, f, s) for s in cfg.s_values)
    checks.append(("laplace_consistency", lap, cfg.tol_laplace))

    # Pohozaev and equipartition on a seeded random wave state
    J = min(5, modes)
    ab = rng.standard_normal(2 * J)
    ab /= np.linalg.norm(ab)
    state = WaveState(pos=ab[:J], vel=ab[J:], data=data)
    poh = pohozaev_residual(data, state, eps=0.1, horizon=2.0, nquad=4096)
    checks.append(("pohozaev", poh.residual, cfg.tol_pohozaev))
    eq = equipartition_residual(data, state, eps=0.1, horizon=2.0, nquad=4096)
    checks.append(("equipartition", eq, cfg.tol_equipartition))

    # energy conservation over a long horizon
    e0 = wave_energy(state)
    drift = abs(wave_energy(evolve_wave(state, 1000.0)) - e0) / e0
    checks.append(("energy_conservation", drift, cfg.tol_energy))

    # transport identity against a perturbed admissible potential
    q2 = Potential(values=q.values + make_potential(
        grid, "bump", center=cfg.potential_center, width=cfg.potential_width,
        amplitude=0.05).values)
    d_full_1 = eigendecompose(op, grid.n)
    d_full_2 = eigendecompose(add_potential(assemble_fractional_laplacian(grid, order), q2), grid.n)
    fF = boundary_function(cfg.boundary, cfg.horizon, max(cfg.steps, 2048), side="left")
    FF = boundary_function(cfg.boundary, cfg.horizon, max(cfg.steps, 2048), side="right",
                           t0=0.05 * cfg.horizon, t1=0.65 * cfg.horizon)
    tr = transport_residual(d_full_1, d_full_2, fF, FF, cfg.horizon, cfg.horizon)
    checks.append(("transport", tr.residual, cfg.tol_transport))
    return checks


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    checks = _verify_checks(cfg)
    rows = [(name, value, tol, "pass" if value <= tol else "fail")
            for name, value, tol in checks]
    write_csv(out / "verify.csv", ["check", "value", "tolerance", "status"], rows)
    write_json(out / "verify.json", {
        "config": asdict(cfg),
        "checks": [{"check": n, "value": v, "tolerance": t, "passed": v <= t}
                   for n, v, t in checks],
    })
    for name, value, tol, status in rows:
        print(f"{status.upper():4s} {name}: {value:.3e} (tol {tol:.0e})")
    return 0 if all(v <= t for _, v, t in checks) else 1


def cmd_observability(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    data, _, _ = _spectral_data(cfg)
    rep = wave_observability(data, J=cfg.wave_modes, horizon=cfg.obs_horizon,
                             trials=cfg.trials, seed=cfg.seed, eps=cfg.eps)
    rng = np.random.default_rng(cfg.seed + 1)
    heat_rows = []
    for k in range(10):
        g = rng.standard_normal(cfg.n)
        h = heat_observability_check(data, g, cfg.horizon, eps=cfg.eps)
        heat_rows.append((k, h.lhs, h.rhs, h.ratio, h.norm_u0))
    write_csv(out / "observability.csv",
              ["draw", "heat_lhs", "heat_rhs_sq", "heat_ratio", "heat_norm_u0"], heat_rows)
    write_json(out / "observability.json", {
        "wave": {"worst_ratio": rep.worst_ratio, "calibrated_c": rep.calibrated_c,
                 "t0": rep.t0, "seed": rep.seed,
                 "required_c": rep.required_c.tolist()},
        "heat": [dict(zip(["draw", "lhs", "rhs_sq", "ratio", "norm_u0"], r)) for r in heat_rows],
    })
    ok = rep.worst_ratio <= 1.0 + 1e-12 and all(np.isfinite(r[3]) for r in heat_rows)
    print(f"wave observability: worst ratio {rep.worst_ratio:.4f}, "
          f"calibrated C = {rep.calibrated_c:.4f} (T0 = {rep.t0:.4f})")
    print(f"heat observability: ratios in [{min(r[3] for r in heat_rows):.3e}, "
          f"{max(r[3] for r in heat_rows):.3e}]")
    return 0 if ok else 1


def cmd_reconstruct(cfg: ExperimentConfig, target_path: str | None = None) -> int:
    out = Path(cfg.out)
    grid = build_grid(cfg.left, cfg.right, cfg.n)
    if target_path:
        p = Path(target_path)
        if not p.exists():
            raise FileNotFoundError(target_path)
        target = cache_io.load_cache(p)
        q_true = None
    else:
        # inverse-crime mode: synthesize the target from the configured potential
        target, _, _ = _spectral_data(cfg)
        q_true = target.potential.values
    q0 = Potential(values=np.zeros(cfg.n))
    result = reconstruct(target, cfg.modes, q0, cfg.reg, max_iter=cfg.max_iter)
    rows = []
    for i in range(cfg.n):
        row = [grid.nodes[i], result.q_est.values[i]]
        if q_true is not None:
            row.append(q_true[i])
        rows.append(tuple(row))
    header = ["x", "q_est"] + (["q_target"] if q_true is not None else [])
    csv_path = write_csv(out / "reconstruction.csv", header, rows)
    write_csv(out / "reconstruction_history.csv", ["iteration", "objective"],
              list(enumerate(result.misfit_history)))
    rel_err = (float(np.linalg.norm(result.q_est.values - q_true)
                     / np.linalg.norm(q_true)) if q_true is not None and q_true.any() else None)
    write_json(out / "reconstruct.json", {
        "iterations": result.iterations, "converged": result.converged,
        "status": result.status, "regularization": result.regularization,
        "final_objective": result.misfit_history[-1],
        "relative_l2_error": rel_err,
    })
    if cfg.plots:
        svg_from_csv(csv_path, out / "reconstruction.svg", "x", header[1:])
        svg_from_csv(out / "reconstruction_history.csv", out / "reconstruction_history.svg",
                     "iteration", ["objective"], logy=True)
    msg = f"reconstruct: {result.iterations} iterations, status {result.status}"
    if rel_err is not None:
        msg += f", relative L2 error {rel_err:.4f}"
    print(msg)
    return 0 if result.converged else 1


def cmd_sweep(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    grid = build_grid(cfg.left, cfg.right, cfg.n)
    order = FractionalOrder(a=cfg.a)
    op = assemble_fractional_laplacian(grid, order)
    q1 = _config_potential(cfg, grid)
    ucfg = UniquenessConfig(m_modes=cfg.modes, s_values=tuple(cfg.s_values),
                            horizon=cfg.horizon, steps=cfg.steps)
    rows = []
    for eps in cfg.sweep_amplitudes:
        bump = make_potential(grid, "bump", center=cfg.potential_center,
                              width=cfg.potential_width, amplitude=float(eps))
        q2 = Potential(values=q1.values + bump.values)
        rep = uniqueness_experiment(op, q1, q2, ucfg)
        rows.append((float(eps), rep.misfit.eig_part, rep.misfit.trace_part,
                     rep.misfit.total, rep.dn_separation,
                     rep.transport.residual, rep.transport.coupling))
    base = uniqueness_experiment(op, q1, q1, ucfg)
    csv_path = write_csv(out / "sweep.csv",
                         ["amplitude", "misfit_eig", "misfit_trace", "misfit_total",
                          "dn_separation", "transport_residual", "transport_coupling"],
                         rows)
    monotone = all(rows[k + 1][3] > rows[k][3] and rows[k + 1][4] > rows[k][4]
                   for k in range(len(rows) - 1))
    write_json(out / "sweep.json", {
        "rows": [dict(zip(["amplitude", "misfit_eig", "misfit_trace", "misfit_total",
                           "dn_separation", "transport_residual", "transport_coupling"], r))
                 for r in rows],
        "identical_potentials": {"misfit_total": base.misfit.total,
                                 "dn_separation": base.dn_separation,
                                 "verdict": base.verdict},
        "separation_monotone": monotone,
    })
    if cfg.plots:
        svg_from_csv(csv_path, out / "sweep.svg", "amplitude",
                     ["misfit_total", "dn_separation"], logy=True)
    print(f"sweep: {len(rows)} amplitudes, separation monotone: {monotone}, "
          f"identical-potential misfit {base.misfit.total:.3e}")
    return 0 if monotone and base.misfit.total == 0.0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracspec",
        description="Boundary spectral data and inverse-problem experiments for "
                    "the 1-D restricted fractional Laplacian")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="RNG seed override")
    parser.add_argument("--modes", type=int, help="retained mode count override")
    parser.add_argument("--plots", action="store_true", default=None,
                        help="also render SVG plots from the CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "dnmap", "heat", "verify", "observability", "sweep"):
        sub.add_parser(name)
    rec = sub.add_parser("reconstruct")
    rec.add_argument("--target", help="cache file with the target spectral data; "
                                      "omitted means inverse-crime self test")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "modes": args.modes,
                 "plots": args.plots}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "dnmap":
            return cmd_dnmap(cfg)
        if args.command == "heat":
            return cmd_heat(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "observability":
            return cmd_observability(cfg)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, target_path=args.target)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        raise FracspecError(f"unknown command {args.command!r}")
    except FileNotFoundError as exc:
        print(error_json("file not found", path=str(exc)), file=sys.stderr)
        return 2
    except FracspecError as exc:
        print(error_json(str(exc), kind=type(exc).__name__), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
