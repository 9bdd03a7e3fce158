"""Command-line entry points: run, sweep, verify."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import oracle
from .basis import get_basis
from .benchmarks import run_sweep, solve_case_nmlm, solve_case_single_level
from .config import load_run_config, load_sweep_config
from .discretization import numerical_flux, transport_coeffs
from .errors import ConfigError, MomentflowError, RealizabilityError
from .moments import (
    CollisionKind,
    CollisionModel,
    MacroQuantities,
    MomentState,
    equilibrium_coeffs,
    project_to_params,
)

ENV_CONFIG = "MOMENTFLOW_CONFIG"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_profile(path: Path, sol):
    rho, u, theta, sigma, q = sol.macro_profiles()
    x = sol.mesh.centers
    rows = [
        (
            x[i],
            rho[i],
            u[i, 0],
            u[i, 1],
            u[i, 2],
            theta[i],
            sigma[i, 0, 0],
            sigma[i, 0, 1],
            q[i, 0],
            q[i, 1],
        )
        for i in range(sol.ncells)
    ]
    _write_csv(
        path,
        ["x", "rho", "u1", "u2", "u3", "theta", "sigma11", "sigma12", "q1", "q2"],
        rows,
    )


def write_history(path: Path, record):
    rows = []
    for k, (iteration, norm) in enumerate(record.residual_history):
        if iteration == 0:
            continue
        work = record.work_history[k] if k < len(record.work_history) else float(iteration)
        seconds = record.time_history[k] if k < len(record.time_history) else float("nan")
        rows.append((iteration, norm, work, seconds))
    _write_csv(path, ["iteration", "residual_norm", "work_units", "seconds"], rows)


def write_summary(path: Path, record, run_cfg):
    doc = {
        "case": run_cfg.case,
        "order": run_cfg.order,
        "cells": run_cfg.cells,
        "converged": bool(record.converged),
        "iterations": int(record.iterations),
        "work_units": float(record.work_units),
        "wall_seconds": float(record.wall_seconds),
        "final_residual_norm": float(record.final_norm),
    }
    path.write_text(yaml.safe_dump(doc, sort_keys=False))


def cmd_run(config_path, out_dir=None, threads=1, quiet=False) -> int:
    del threads  # one solve is a single deterministic computation
    try:
        cfg = load_run_config(config_path)
        case = cfg.build_case()
        nmlm = cfg.solver.nmlm_config(case)
        if nmlm is None:
            sol, record = solve_case_single_level(
                case,
                cfg.solver.smoother_for(case),
                tol=cfg.solver.tolerance,
                max_iters=cfg.solver.max_cycles,
            )
        else:
            sol, record = solve_case_nmlm(case, nmlm)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except RealizabilityError as err:
        print(f"realizability error: {err}", file=sys.stderr)
        return 1
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_profile(out / "profile.csv", sol)
    write_history(out / "history.csv", record)
    write_summary(out / "summary.yaml", record, cfg)
    if not quiet:
        status = "converged" if record.converged else "NOT converged"
        print(
            f"{cfg.case} M={cfg.order} N={cfg.cells}: {status} after "
            f"{record.iterations} iterations, final norm {record.final_norm:.3e}, "
            f"{record.work_units:.1f} work units, {record.wall_seconds:.2f}s -> {out}"
        )
    return 0 if record.converged else 2


def cmd_sweep(config_path, out_dir=None, threads=1, quiet=False) -> int:
    try:
        cfg = load_sweep_config(config_path)
        case = cfg.build_case()
        solver = cfg.solver
        nmlm_template = solver.nmlm_config(case)
        if nmlm_template is None:
            # sweeps need a full solver block even when rows are single level
            from .multilevel import NmlmConfig, OrderSequence

            nmlm_template = NmlmConfig(
                sequence=OrderSequence((max(2, case.order - 1), case.order)),
                smoother=solver.smoother_for(case),
                gamma=solver.gamma,
                s1=solver.s1,
                s2=solver.s2,
                s3=solver.s3,
                tau=solver.tau,
                tol=solver.tolerance,
                max_cycles=solver.max_cycles,
            )
        rows = run_sweep(case, cfg.levels, cfg.strategies, cfg.cells, nmlm_template, threads=threads)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [
        "case",
        "M",
        "N",
        "strategy",
        "levels",
        "gamma",
        "tau",
        "K",
        "work_units",
        "seconds",
        "K_ratio",
        "work_ratio",
        "converged",
    ]
    table = [
        (
            r.case,
            r.order,
            r.ncells,
            r.strategy,
            r.levels,
            r.gamma,
            r.tau,
            r.iterations,
            r.work_units,
            r.seconds,
            r.k_ratio,
            r.work_ratio,
            r.converged,
        )
        for r in rows
    ]
    _write_csv(out / "sweep.csv", header, table)
    _write_csv(
        out / "sweep_timing.csv",
        ["case", "M", "N", "strategy", "levels", "seconds"],
        [(r.case, r.order, r.ncells, r.strategy, r.levels, r.seconds) for r in rows],
    )
    if not quiet:
        for r in rows:
            note = f"  [{r.error}]" if r.error else ""
            print(
                f"{r.case} M={r.order} N={r.ncells} {r.strategy}({r.levels}): "
                f"K={r.iterations} work={r.work_units:.1f} K_ratio={r.k_ratio:.3f} "
                f"work_ratio={r.work_ratio:.3f} converged={r.converged}{note}"
            )
    return 0 if all(r.converged for r in rows) else 2


# ---------------------------------------------------------------------------
# verify: quadrature-oracle checks of the analytic moment machinery
# ---------------------------------------------------------------------------

def _verify_state(order: int) -> MomentState:
    basis = get_basis(order)
    coeffs = np.zeros(basis.size)
    coeffs[0] = 1.3
    # trace-free second-order block plus decaying higher-order content keeps
    # the state adapted while exercising every degree
    sigma = np.array([[0.06, 0.08, -0.03], [0.08, -0.02, 0.01], [-0.03, 0.01, -0.04]])
    for i in range(3):
        for j in range(3):
            coeffs[basis.pos_pair[i, j]] = sigma[i, j] / (2.0 if i == j else 1.0)
    for pos in range(basis.size):
        deg = int(basis.degrees[pos])
        if deg >= 3:
            coeffs[pos] = 0.02 * (-0.6) ** (pos % 5) / (1.0 + deg * deg)
    return MomentState(basis, np.array([0.2, -0.1, 0.05]), 1.1, coeffs)


def _check(name, err, tol, quiet, failures):
    ok = err <= tol
    if not ok:
        failures.append(name)
    if not quiet:
        print(f"verify: {name:<42s} {'PASS' if ok else 'FAIL'} (err={err:.3e}, tol={tol:.0e})")
    return ok


def run_verification(quiet=False, tol=1e-10, orders=(2, 4, 6), nodes=48) -> bool:
    failures = []
    for order in orders:
        state = _verify_state(order)
        u_new = np.array([0.35, -0.22, 0.12])
        th_new = 1.25

        projected = project_to_params(state, u_new, th_new)
        via_quad = oracle.coeffs_from_function(
            lambda xi: oracle.evaluate_state(state, xi), order, u_new, th_new, nodes=nodes
        )
        _check(
            f"projection M={order}",
            float(np.abs(projected.coeffs - via_quad).max()),
            tol,
            quiet,
            failures,
        )

        raw = project_to_params(state, state.u + np.array([0.25, 0.0, -0.15]), 0.92)
        from .moments import adapt as adapt_state

        readapted = adapt_state(raw)
        err = max(
            float(np.abs(readapted.coeffs - state.coeffs).max()),
            float(np.abs(readapted.u - state.u).max()),
            abs(readapted.theta - state.theta),
        )
        _check(f"adapt round trip M={order}", err, tol, quiet, failures)

        rho, theta = 1.2, 0.9
        u = np.array([0.1, -0.05, 0.2])
        sigma = np.array([[0.05, 0.08, -0.03], [0.08, -0.02, 0.01], [-0.03, 0.01, -0.03]])
        q = np.array([0.04, -0.06, 0.02])
        macros = MacroQuantities(rho=rho, u=u, theta=theta, sigma=sigma, q=q)
        prandtl = 2.0 / 3.0

        bgk = equilibrium_coeffs(macros, CollisionModel(CollisionKind.BGK), order)
        bgk_quad = oracle.coeffs_from_function(
            oracle.maxwellian_fn(rho, u, theta), order, u, theta, nodes=nodes
        )
        _check(f"equilibrium bgk M={order}", float(np.abs(bgk - bgk_quad).max()), tol, quiet, failures)

        shk = equilibrium_coeffs(macros, CollisionModel(CollisionKind.SHAKHOV, prandtl), order)
        shk_quad = oracle.coeffs_from_function(
            oracle.shakhov_fn(rho, u, theta, q, prandtl), order, u, theta, nodes=nodes
        )
        _check(
            f"equilibrium shakhov M={order}",
            float(np.abs(shk - shk_quad).max()),
            tol,
            quiet,
            failures,
        )

        es = equilibrium_coeffs(macros, CollisionModel(CollisionKind.ES_BGK, prandtl), order)
        es_quad = oracle.coeffs_from_function(
            oracle.es_gaussian_fn(rho, u, theta, sigma, prandtl), order, u, theta, nodes=nodes
        )
        _check(f"equilibrium es-bgk M={order}", float(np.abs(es - es_quad).max()), tol, quiet, failures)

        flux = numerical_flux(state, state)
        flux_quad = oracle.coeffs_from_function(
            lambda xi: xi[..., 0] * oracle.evaluate_state(state, xi),
            order,
            state.u,
            state.theta,
            nodes=nodes,
        )
        direct = transport_coeffs(state.basis, state.coeffs, float(state.u[0]), state.theta)
        err = max(
            float(np.abs(flux.coeffs - flux_quad).max()),
            float(np.abs(flux.coeffs - direct).max()),
        )
        _check(f"flux consistency M={order}", err, tol, quiet, failures)

    if not quiet:
        verdict = "all checks passed" if not failures else f"{len(failures)} check(s) FAILED"
        print(f"verify: {verdict}")
    return not failures


def cmd_verify(quiet=False) -> int:
    return 0 if run_verification(quiet=quiet) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="momentflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, needs_config in (("run", True), ("sweep", True), ("verify", False)):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("config", nargs="?", help=f"YAML config (or ${ENV_CONFIG})")
            p.add_argument("--out", default=None, help="output directory override")
            p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    if args.command == "verify":
        return cmd_verify(quiet=args.quiet)

    config_path = os.environ.get(ENV_CONFIG) or args.config
    if not config_path:
        print(f"error: no config given (positional argument or ${ENV_CONFIG})", file=sys.stderr)
        return 1
    if args.command == "run":
        return cmd_run(config_path, out_dir=args.out, threads=args.threads, quiet=args.quiet)
    if args.command == "sweep":
        return cmd_sweep(config_path, out_dir=args.out, threads=args.threads, quiet=args.quiet)
    raise MomentflowError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
