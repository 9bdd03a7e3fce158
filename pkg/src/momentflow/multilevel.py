"""Multi-level acceleration by lower-order model correction.

"Coarse" here means a lower moment order on the same spatial mesh.  The
solution and residual restrictions are coefficient-prefix truncations; the
correction blends the low-order block of the fine solution with the coarse
result under a relaxation factor and keeps the high-order block untouched.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from math import ceil

import numpy as np

from .basis import basis_size, get_basis
from .discretization import Diagnostics, GasModel, GridSolution, residual_field
from .errors import ConfigError, RealizabilityError
from .moments import adapt_coeffs
from .smoother import (
    ConvergenceRecord,
    RhsField,
    SmootherConfig,
    defect_field,
    heun_step,
    residual_norm,
)


class Strategy(Enum):
    MINUS_ONE = "minus-one"
    MINUS_TWO = "minus-two"
    MINUS_FOUR = "minus-four"
    HALF_CEIL = "half-ceil"
    EXPLICIT = "explicit"

    def next_lower(self, m: int) -> int:
        if self is Strategy.MINUS_ONE:
            return m - 1
        if self is Strategy.MINUS_TWO:
            return m - 2
        if self is Strategy.MINUS_FOUR:
            return m - 4
        if self is Strategy.HALF_CEIL:
            return ceil(m / 2)
        raise ConfigError("explicit sequences carry their own orders")


@dataclass(frozen=True)
class OrderSequence:
    orders: tuple  # strictly increasing, lowest first, all >= 2
    strategy: Strategy = Strategy.EXPLICIT

    def __post_init__(self):
        orders = tuple(int(m) for m in self.orders)
        if not orders:
            raise ConfigError("order sequence is empty")
        if orders[0] < 2:
            raise ConfigError(f"lowest order must be >= 2, got {orders[0]}")
        if any(a >= b for a, b in zip(orders, orders[1:])):
            raise ConfigError(f"orders must be strictly increasing, got {orders}")
        object.__setattr__(self, "orders", orders)

    @property
    def levels(self) -> int:
        return len(self.orders)

    @property
    def finest(self) -> int:
        return self.orders[-1]


def make_sequence(order: int, strategy, levels: int) -> OrderSequence:
    """Descending chain from the finest order under the reduction rule."""
    strategy = Strategy(strategy) if not isinstance(strategy, Strategy) else strategy
    if levels < 1:
        raise ConfigError(f"need at least one level, got {levels}")
    if strategy is Strategy.EXPLICIT:
        raise ConfigError("explicit strategy requires the orders to be given")
    chain = [order]
    for _ in range(levels - 1):
        nxt = strategy.next_lower(chain[-1])
        if nxt < 2 or nxt >= chain[-1]:
            raise ConfigError(
                f"{strategy.value} chain from order {order} underflows below 2 at {levels} levels"
            )
        chain.append(nxt)
    return OrderSequence(tuple(reversed(chain)), strategy)


@dataclass(frozen=True)
class NmlmConfig:
    sequence: OrderSequence
    smoother: SmootherConfig
    gamma: int = 1
    s1: int = 2
    s2: int = 2
    s3: int = 5
    tau: float = 0.9
    tol: float = 1e-8
    max_cycles: int = 10_000_000

    def __post_init__(self):
        if self.gamma < 1:
            raise ConfigError("cycle exponent gamma must be >= 1")
        if min(self.s1, self.s2, self.s3) < 1:
            raise ConfigError("smoothing counts must be >= 1")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"relaxation tau must lie in (0, 1], got {self.tau}")
        if self.tol <= 0:
            raise ConfigError("tolerance must be positive")


@dataclass(frozen=True)
class LevelProblem:
    order: int
    rhs: RhsField
    gas: GasModel
    walls: tuple


class WorkLedger:
    """Heun-step counts per order plus fine-step-equivalent work units."""

    def __init__(self, fine_order: int):
        self.fine_size = basis_size(fine_order)
        self.steps = Counter()
        self.total = 0.0

    def add(self, order: int, nsteps: int = 1):
        self.steps[order] += nsteps
        self.total += nsteps * basis_size(order) / self.fine_size


def restrict_solution(sol: GridSolution, m: int) -> GridSolution:
    """Truncate to order m, keeping parameters; the result stays adapted."""
    if not 2 <= m < sol.order:
        raise ValueError(f"restriction target {m} must lie in [2, {sol.order})")
    basis = get_basis(m)
    return GridSolution(sol.mesh, basis, sol.u, sol.theta, sol.coeffs[:, : basis.size])


def restrict_residual(field: np.ndarray, m: int) -> np.ndarray:
    """Coefficient-prefix truncation of a per-cell field."""
    return np.asarray(field)[:, : basis_size(m)]


def assemble_lower_problem(
    fine_sol: GridSolution,
    fine_defect: np.ndarray,
    m: int,
    gas: GasModel,
    walls,
    diagnostics: Diagnostics | None = None,
) -> tuple[GridSolution, LevelProblem]:
    """Coarse problem R_m(f) = R_m(truncated fine) + truncated fine defect."""
    coarse = restrict_solution(fine_sol, m)
    rhs_coeffs = residual_field(coarse, gas, walls, diagnostics) + restrict_residual(fine_defect, m)
    rhs = RhsField(coarse.u.copy(), coarse.theta.copy(), rhs_coeffs)
    return coarse, LevelProblem(order=m, rhs=rhs, gas=gas, walls=tuple(walls))


def correct(
    fine_sol: GridSolution,
    coarse_before: GridSolution,
    coarse_after: GridSolution,
    tau: float,
) -> GridSolution:
    """Relaxed low-order-block update of the fine solution.

    Parameters and the coefficients of degree <= m blend componentwise with
    weight tau; higher-degree coefficients are kept.  The blend of adapted
    states already satisfies the adapted-form relations, so the closing
    adapt call only polishes roundoff.
    """
    if coarse_before.order != coarse_after.order:
        raise ValueError("coarse states must share one order")
    msize = coarse_after.basis.size
    u_new = (1.0 - tau) * fine_sol.u + tau * coarse_after.u
    th_new = (1.0 - tau) * fine_sol.theta + tau * coarse_after.theta
    coeffs = fine_sol.coeffs.copy()
    coeffs[:, :msize] = (1.0 - tau) * fine_sol.coeffs[:, :msize] + tau * coarse_after.coeffs
    u_ad, th_ad, c_ad = adapt_coeffs(fine_sol.basis, coeffs, u_new, th_new)
    return GridSolution(fine_sol.mesh, fine_sol.basis, u_ad, th_ad, c_ad)


def _level_smoother_cfg(cfg: NmlmConfig, level: int) -> SmootherConfig:
    # mass pinning is meaningful only for the finest-level solution; coarse
    # levels solve correction problems
    if level == cfg.sequence.levels - 1:
        return cfg.smoother
    if cfg.smoother.renormalize_mass:
        return replace(cfg.smoother, renormalize_mass=False)
    return cfg.smoother


def nmlm_cycle(
    level: int,
    sol: GridSolution,
    rhs: RhsField | None,
    cfg: NmlmConfig,
    gas: GasModel,
    walls,
    ledger: WorkLedger | None = None,
    diagnostics: Diagnostics | None = None,
) -> GridSolution:
    """One multi-level cycle at the given level of the order sequence."""
    orders = cfg.sequence.orders
    if not 0 <= level < len(orders):
        raise ConfigError(f"level {level} outside the {len(orders)}-level sequence")
    if sol.order != orders[level]:
        raise ValueError(f"solution order {sol.order} != level order {orders[level]}")
    smoother_cfg = _level_smoother_cfg(cfg, level)

    def smooth(state, steps, stage):
        for _ in range(steps):
            try:
                state = heun_step(state, rhs, gas, walls, smoother_cfg, diagnostics)
            except RealizabilityError as err:
                raise err.with_context(level=level, stage=stage) from None
            if ledger is not None:
                ledger.add(orders[level])
        return state

    if level == 0:
        return smooth(sol, cfg.s3, "lowest-level smoothing")

    sol = smooth(sol, cfg.s1, "pre-smoothing")
    fine_defect = defect_field(sol, rhs, gas, walls, diagnostics)
    coarse, problem = assemble_lower_problem(sol, fine_defect, orders[level - 1], gas, walls, diagnostics)
    result = coarse
    for _ in range(cfg.gamma):
        result = nmlm_cycle(level - 1, result, problem.rhs, cfg, gas, walls, ledger, diagnostics)
    try:
        sol = correct(sol, coarse, result, cfg.tau)
    except RealizabilityError as err:
        raise err.with_context(level=level, stage="correction") from None
    return smooth(sol, cfg.s2, "post-smoothing")


def solve_nmlm(
    initial: GridSolution,
    cfg: NmlmConfig,
    gas: GasModel,
    walls,
    diagnostics: Diagnostics | None = None,
) -> tuple[GridSolution, ConvergenceRecord]:
    """Cycle at the finest level until the residual norm is below cfg.tol."""
    orders = cfg.sequence.orders
    if initial.order != orders[-1]:
        raise ConfigError(f"initial solution order {initial.order} != finest order {orders[-1]}")
    start = time.perf_counter()
    ledger = WorkLedger(orders[-1])
    top = len(orders) - 1
    sol = initial
    norm = residual_norm(defect_field(sol, None, gas, walls, diagnostics), sol.mesh)
    history = [(0, norm)]
    work_hist = [0.0]
    time_hist = [time.perf_counter() - start]
    cycles = 0
    while norm >= cfg.tol and cycles < cfg.max_cycles:
        sol = nmlm_cycle(top, sol, None, cfg, gas, walls, ledger, diagnostics)
        cycles += 1
        norm = residual_norm(defect_field(sol, None, gas, walls, diagnostics), sol.mesh)
        history.append((cycles, norm))
        work_hist.append(ledger.total)
        time_hist.append(time.perf_counter() - start)
    record = ConvergenceRecord(
        iterations=cycles,
        work_units=ledger.total,
        wall_seconds=time.perf_counter() - start,
        residual_history=history,
        converged=bool(norm < cfg.tol),
        work_history=work_hist,
        time_history=time_hist,
    )
    return sol, record
