"""The three planar microflow benchmark cases and the sweep harness."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .discretization import (
    Diagnostics,
    FrequencyLaw,
    GasModel,
    GridSolution,
    WallBoundary,
    uniform_solution,
)
from .errors import ConfigError, MomentflowError
from .moments import CollisionKind, CollisionModel, project_coeffs
from .multilevel import NmlmConfig, OrderSequence, Strategy, make_sequence, solve_nmlm
from .smoother import ConvergenceRecord, SmootherConfig, solve_single_level

DEFAULT_PRANDTL = 2.0 / 3.0

CASE_NAMES = ("couette", "poiseuille", "fourier")


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    domain_length: float
    wall_left: WallBoundary
    wall_right: WallBoundary
    gas: GasModel
    ncells: int
    order: int


_ALLOWED_OVERRIDES = {
    "knudsen",
    "prandtl",
    "collision",
    "viscosity_index",
    "wall_speed",
    "theta_left",
    "theta_right",
    "force",
}


def make_case(name: str, order: int, ncells: int, overrides: dict | None = None) -> BenchmarkCase:
    """Benchmark definition with the published parameter values.

    couette:    plates at theta 1 moving tangentially in opposite directions
                with relative speed 1.2577; hard-sphere-power frequency,
                w = 0.81, Kn = 0.1199 by default.
    poiseuille: stationary theta-1 plates, constant tangential acceleration
                (0, 0.2555, 0); variable-hard-sphere, w = 0.5, Kn = 0.1.
    fourier:    stationary plates at temperatures 0.2894 and 1.0769;
                variable-hard-sphere, w = 0.657, Kn = 0.1044.
    """
    name = name.lower()
    if name not in CASE_NAMES:
        raise ConfigError(f"unknown benchmark case {name!r}; expected one of {CASE_NAMES}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - _ALLOWED_OVERRIDES
    if unknown:
        raise ConfigError(f"unknown override keys {sorted(unknown)}")

    prandtl = float(overrides.pop("prandtl", DEFAULT_PRANDTL))
    kind = overrides.pop("collision", CollisionKind.ES_BGK)
    kind = CollisionKind(kind) if not isinstance(kind, CollisionKind) else kind
    collision = CollisionModel(kind, prandtl)
    force = np.zeros(3)

    if name == "couette":
        wall_speed = float(overrides.pop("wall_speed", 1.2577))
        theta_w = 1.0
        # symmetric frame: walls move at -/+ half the relative speed
        wall_left = WallBoundary(np.array([0.0, -0.5 * wall_speed, 0.0]), theta_w)
        wall_right = WallBoundary(np.array([0.0, 0.5 * wall_speed, 0.0]), theta_w)
        gas = GasModel(
            collision=collision,
            knudsen=float(overrides.pop("knudsen", 0.1199)),
            viscosity_index=float(overrides.pop("viscosity_index", 0.81)),
            frequency_law=FrequencyLaw.HARD_SPHERE_POWER,
            force=force,
        )
    elif name == "poiseuille":
        force = np.asarray(overrides.pop("force", (0.0, 0.2555, 0.0)), dtype=float)
        wall_left = WallBoundary(np.zeros(3), 1.0)
        wall_right = WallBoundary(np.zeros(3), 1.0)
        gas = GasModel(
            collision=collision,
            knudsen=float(overrides.pop("knudsen", 0.1)),
            viscosity_index=float(overrides.pop("viscosity_index", 0.5)),
            frequency_law=FrequencyLaw.VARIABLE_HARD_SPHERE,
            force=force,
        )
    else:  # fourier
        wall_left = WallBoundary(np.zeros(3), float(overrides.pop("theta_left", 0.2894)))
        wall_right = WallBoundary(np.zeros(3), float(overrides.pop("theta_right", 1.0769)))
        gas = GasModel(
            collision=collision,
            knudsen=float(overrides.pop("knudsen", 0.1044)),
            viscosity_index=float(overrides.pop("viscosity_index", 0.657)),
            frequency_law=FrequencyLaw.VARIABLE_HARD_SPHERE,
            force=force,
        )
    if "theta_left" in overrides or "theta_right" in overrides:
        theta_l = float(overrides.pop("theta_left", wall_left.theta_wall))
        theta_r = float(overrides.pop("theta_right", wall_right.theta_wall))
        wall_left = WallBoundary(wall_left.u_wall, theta_l)
        wall_right = WallBoundary(wall_right.u_wall, theta_r)
    overrides.pop("wall_speed", None)
    overrides.pop("force", None)
    return BenchmarkCase(
        name=name,
        domain_length=1.0,
        wall_left=wall_left,
        wall_right=wall_right,
        gas=gas,
        ncells=int(ncells),
        order=int(order),
    )


def initial_state(case: BenchmarkCase) -> GridSolution:
    """Global unit Maxwellian on the case mesh."""
    return uniform_solution(case.order, case.ncells, case.domain_length, 1.0, np.zeros(3), 1.0)


def smoother_config(case: BenchmarkCase, cfl: float = 0.45, renormalize: bool = True) -> SmootherConfig:
    return SmootherConfig(cfl=cfl, renormalize_mass=renormalize, target_mass=case.domain_length)


def solve_case_single_level(
    case: BenchmarkCase,
    cfg: SmootherConfig | None = None,
    tol: float = 1e-8,
    max_iters: int = 10_000_000,
    diagnostics: Diagnostics | None = None,
) -> tuple[GridSolution, ConvergenceRecord]:
    cfg = cfg or smoother_config(case)
    sol = initial_state(case)
    return solve_single_level(
        sol, None, case.gas, (case.wall_left, case.wall_right), cfg, tol, max_iters, diagnostics
    )


def solve_case_nmlm(
    case: BenchmarkCase,
    cfg: NmlmConfig,
    diagnostics: Diagnostics | None = None,
) -> tuple[GridSolution, ConvergenceRecord]:
    sol = initial_state(case)
    return solve_nmlm(sol, cfg, case.gas, (case.wall_left, case.wall_right), diagnostics)


def nmlm_config_for(
    case: BenchmarkCase,
    sequence: OrderSequence,
    tol: float = 1e-8,
    cfl: float = 0.45,
    **kwargs,
) -> NmlmConfig:
    return NmlmConfig(sequence=sequence, smoother=smoother_config(case, cfl=cfl), tol=tol, **kwargs)


def solution_distance(a: GridSolution, b: GridSolution) -> float:
    """Weighted L2 distance after re-expressing b in a's cell bases.

    States of unequal order are compared on the common lower-order block.
    """
    if a.mesh.ncells != b.mesh.ncells:
        raise ValueError("solutions live on different meshes")
    if a.order > b.order:
        a, b = b, a
    basis = a.basis
    b_coeffs = project_coeffs(basis, b.coeffs[:, : basis.size], b.u, b.theta, a.u, a.theta)
    diff = a.coeffs - b_coeffs
    return float(np.sqrt(np.sum(a.mesh.widths * np.sum(diff**2, axis=-1))))


# ---------------------------------------------------------------------------
# Sweep harness
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    case: str
    order: int
    ncells: int
    strategy: str
    levels: int
    gamma: int
    tau: float
    iterations: int
    work_units: float
    seconds: float
    k_ratio: float
    work_ratio: float
    converged: bool
    error: str = ""


def _run_row(case: BenchmarkCase, strategy, levels: int, solver: NmlmConfig):
    if levels == 1:
        sol, record = solve_case_single_level(
            case, solver.smoother, tol=solver.tol, max_iters=solver.max_cycles
        )
        return sol, record
    seq = make_sequence(case.order, strategy, levels)
    cfg = replace(solver, sequence=seq)
    return solve_case_nmlm(case, cfg)


def run_sweep(
    case: BenchmarkCase,
    levels_list,
    strategies,
    n_list,
    solver: NmlmConfig,
    threads: int = 1,
) -> list[SweepRow]:
    """Single-level baseline plus every (strategy, levels) pair per grid size.

    Failures are recorded in their row; the sweep continues.  Rows are
    independent solves, so the thread count never changes the numbers.
    """
    jobs = []
    for n in n_list:
        sized = replace(case, ncells=int(n))
        jobs.append((sized, "single", 1))
        for strategy in strategies:
            strategy = Strategy(strategy) if not isinstance(strategy, Strategy) else strategy
            for levels in levels_list:
                if levels == 1:
                    continue  # the baseline row already covers one level
                jobs.append((sized, strategy, int(levels)))

    def run(job):
        sized, strategy, levels = job
        label = "single" if strategy == "single" else strategy.value
        try:
            _, record = _run_row(sized, strategy, levels, solver)
            return SweepRow(
                case=sized.name,
                order=sized.order,
                ncells=sized.ncells,
                strategy=label,
                levels=levels,
                gamma=solver.gamma,
                tau=solver.tau,
                iterations=record.iterations,
                work_units=record.work_units,
                seconds=record.wall_seconds,
                k_ratio=float("nan"),
                work_ratio=float("nan"),
                converged=record.converged,
            )
        except MomentflowError as err:
            return SweepRow(
                case=sized.name,
                order=sized.order,
                ncells=sized.ncells,
                strategy=label,
                levels=levels,
                gamma=solver.gamma,
                tau=solver.tau,
                iterations=0,
                work_units=float("nan"),
                seconds=float("nan"),
                k_ratio=float("nan"),
                work_ratio=float("nan"),
                converged=False,
                error=str(err),
            )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]

    baselines = {
        (row.order, row.ncells): row for row in rows if row.strategy == "single" and row.converged
    }
    for row in rows:
        base = baselines.get((row.order, row.ncells))
        if base is not None and row.converged and row.strategy != "single":
            row.k_ratio = base.iterations / row.iterations
            row.work_ratio = base.work_units / row.work_units
        elif row.strategy == "single" and row.converged:
            row.k_ratio = 1.0
            row.work_ratio = 1.0
    return rows
