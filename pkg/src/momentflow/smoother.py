"""Heun's two-stage pseudo-time iteration used as the level smoother."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import Diagnostics, GasModel, GridSolution, residual_field
from .moments import adapt_coeffs, project_coeffs


@dataclass(frozen=True)
class SmootherConfig:
    cfl: float = 0.45
    renormalize_mass: bool = False
    target_mass: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")


@dataclass(frozen=True)
class RhsField:
    """Per-cell right-hand-side expansions pinned to snapshot parameters.

    The coefficients are stored in the bases the owning solution had when
    the field was assembled; ``in_basis`` re-expresses them in a drifted
    solution's bases by projection, which is exact for the stored order.
    """

    u: np.ndarray  # (N, 3)
    theta: np.ndarray  # (N,)
    coeffs: np.ndarray  # (N, size)

    def in_basis(self, sol: GridSolution) -> np.ndarray:
        if self.coeffs.shape[1] != sol.basis.size:
            raise ValueError("rhs order does not match the solution order")
        if not self.coeffs.any():
            return self.coeffs
        return project_coeffs(sol.basis, self.coeffs, self.u, self.theta, sol.u, sol.theta)

    @classmethod
    def zero(cls, sol: GridSolution) -> "RhsField":
        return cls(sol.u.copy(), sol.theta.copy(), np.zeros_like(sol.coeffs))


@dataclass
class ConvergenceRecord:
    iterations: int
    work_units: float
    wall_seconds: float
    residual_history: list  # [(iteration, norm), ...]
    converged: bool
    work_history: list = field(default_factory=list)
    time_history: list = field(default_factory=list)

    @property
    def final_norm(self) -> float:
        return self.residual_history[-1][1]


def step_size(sol: GridSolution, cfg: SmootherConfig) -> float:
    """Pseudo-time step from the CFL bound on the fastest cell."""
    speeds = np.abs(sol.u[:, 0]) + sol.basis.max_hermite_root * np.sqrt(sol.theta)
    return cfg.cfl / float(np.max(speeds / sol.mesh.widths))


def residual_norm(defect: np.ndarray, mesh) -> float:
    """Cell-size-weighted L2 norm over all residual coefficients."""
    return float(np.sqrt(np.sum(mesh.widths * np.sum(np.asarray(defect) ** 2, axis=-1))))


def defect_field(
    sol: GridSolution,
    rhs: RhsField | None,
    gas: GasModel,
    walls,
    diagnostics: Diagnostics | None = None,
) -> np.ndarray:
    """r - R(f) in each cell's own basis (r = 0 when rhs is None)."""
    res = residual_field(sol, gas, walls, diagnostics)
    if rhs is None:
        return -res
    return rhs.in_basis(sol) - res


def _renormalize(sol: GridSolution, target_mass: float) -> GridSolution:
    factor = target_mass / sol.total_mass()
    if factor == 1.0:
        return sol
    return sol.replace_fields(coeffs=sol.coeffs * factor)


def _heun_update(
    sol: GridSolution,
    rhs_coeffs: np.ndarray | None,
    res1: np.ndarray,
    gas: GasModel,
    walls,
    cfg: SmootherConfig,
    omega: float,
    diagnostics: Diagnostics | None,
) -> GridSolution:
    basis, mesh = sol.basis, sol.mesh
    defect1 = -res1 if rhs_coeffs is None else rhs_coeffs - res1
    stage = sol.coeffs + omega * defect1
    u_mid, th_mid, c_mid = adapt_coeffs(basis, stage, sol.u, sol.theta)
    mid = GridSolution(mesh, basis, u_mid, th_mid, c_mid)

    res2 = residual_field(mid, gas, walls, diagnostics)
    res2_in_n = project_coeffs(basis, res2, mid.u, mid.theta, sol.u, sol.theta)
    mean_res = 0.5 * (res1 + res2_in_n)
    defect2 = -mean_res if rhs_coeffs is None else rhs_coeffs - mean_res
    final = sol.coeffs + omega * defect2
    u_new, th_new, c_new = adapt_coeffs(basis, final, sol.u, sol.theta)
    out = GridSolution(mesh, basis, u_new, th_new, c_new)
    if cfg.renormalize_mass:
        out = _renormalize(out, cfg.target_mass)
    return out


def heun_step(
    sol: GridSolution,
    rhs: RhsField | None,
    gas: GasModel,
    walls,
    cfg: SmootherConfig,
    diagnostics: Diagnostics | None = None,
) -> GridSolution:
    """One Heun step toward R(f) = r; both stages share one CFL step."""
    omega = step_size(sol, cfg)
    res1 = residual_field(sol, gas, walls, diagnostics)
    rhs_coeffs = rhs.in_basis(sol) if rhs is not None else None
    return _heun_update(sol, rhs_coeffs, res1, gas, walls, cfg, omega, diagnostics)


def solve_single_level(
    sol: GridSolution,
    rhs: RhsField | None,
    gas: GasModel,
    walls,
    cfg: SmootherConfig,
    tol: float,
    max_iters: int,
    diagnostics: Diagnostics | None = None,
) -> tuple[GridSolution, ConvergenceRecord]:
    """Iterate Heun's method until the defect norm drops below tol."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    start = time.perf_counter()
    rhs_coeffs = rhs.in_basis(sol) if rhs is not None else None
    res = residual_field(sol, gas, walls, diagnostics)
    norm = residual_norm(rhs_coeffs - res if rhs_coeffs is not None else -res, sol.mesh)
    history = [(0, norm)]
    work_hist = [0.0]
    time_hist = [time.perf_counter() - start]
    iters = 0
    while norm >= tol and iters < max_iters:
        omega = step_size(sol, cfg)
        sol = _heun_update(sol, rhs_coeffs, res, gas, walls, cfg, omega, diagnostics)
        iters += 1
        rhs_coeffs = rhs.in_basis(sol) if rhs is not None else None
        res = residual_field(sol, gas, walls, diagnostics)
        norm = residual_norm(rhs_coeffs - res if rhs_coeffs is not None else -res, sol.mesh)
        history.append((iters, norm))
        work_hist.append(float(iters))
        time_hist.append(time.perf_counter() - start)
    record = ConvergenceRecord(
        iterations=iters,
        work_units=float(iters),
        wall_seconds=time.perf_counter() - start,
        residual_history=history,
        converged=bool(norm < tol),
        work_history=work_hist,
        time_history=time_hist,
    )
    return sol, record
