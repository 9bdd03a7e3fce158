"""YAML run/sweep configuration parsing and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .benchmarks import CASE_NAMES, BenchmarkCase, make_case, smoother_config
from .errors import ConfigError
from .multilevel import NmlmConfig, OrderSequence, Strategy, make_sequence
from .smoother import SmootherConfig

_SOLVER_KEYS = {
    "strategy",
    "levels",
    "orders",
    "gamma",
    "s1",
    "s2",
    "s3",
    "tau",
    "cfl",
    "tolerance",
    "max_cycles",
    "renormalize_mass",
}
_RUN_KEYS = {"case", "order", "cells", "overrides", "solver", "output_dir"}
_SWEEP_KEYS = {"case", "order", "cells", "overrides", "solver", "output_dir", "strategies", "levels"}


@dataclass
class SolverBlock:
    strategy: str = "single"
    levels: int = 1
    orders: tuple = ()
    gamma: int = 1
    s1: int = 2
    s2: int = 2
    s3: int = 5
    tau: float = 0.9
    cfl: float = 0.45
    tolerance: float = 1e-8
    max_cycles: int = 10_000_000
    renormalize_mass: bool = True

    def sequence_for(self, order: int) -> OrderSequence | None:
        """None means a plain single-level solve."""
        if self.strategy == "single" or (self.levels <= 1 and not self.orders):
            return None
        if self.strategy == "explicit" or self.orders:
            seq = OrderSequence(tuple(self.orders), Strategy.EXPLICIT)
            if seq.finest != order:
                raise ConfigError(
                    f"explicit order sequence {seq.orders} must end at the model order {order}"
                )
            return seq
        return make_sequence(order, self.strategy, self.levels)

    def nmlm_config(self, case: BenchmarkCase) -> NmlmConfig | None:
        seq = self.sequence_for(case.order)
        if seq is None:
            return None
        return NmlmConfig(
            sequence=seq,
            smoother=self.smoother_for(case),
            gamma=self.gamma,
            s1=self.s1,
            s2=self.s2,
            s3=self.s3,
            tau=self.tau,
            tol=self.tolerance,
            max_cycles=self.max_cycles,
        )

    def smoother_for(self, case: BenchmarkCase) -> SmootherConfig:
        return smoother_config(case, cfl=self.cfl, renormalize=self.renormalize_mass)


@dataclass
class RunConfig:
    case: str
    order: int
    cells: int
    overrides: dict = field(default_factory=dict)
    solver: SolverBlock = field(default_factory=SolverBlock)
    output_dir: str = "out"

    def build_case(self) -> BenchmarkCase:
        return make_case(self.case, self.order, self.cells, self.overrides)


@dataclass
class SweepConfig:
    case: str
    order: int
    cells: list
    strategies: list
    levels: list
    overrides: dict = field(default_factory=dict)
    solver: SolverBlock = field(default_factory=SolverBlock)
    output_dir: str = "out"

    def build_case(self) -> BenchmarkCase:
        # template; run_sweep swaps the grid size per row
        return make_case(self.case, self.order, self.cells[0], self.overrides)


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise ConfigError(f"{path}: missing required key {key!r}")
    return doc[key]


def _check_keys(doc: dict, allowed: set, path: str):
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _int(value, name) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _num(value, name) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _solver_block(doc, path: str) -> SolverBlock:
    if doc is None:
        return SolverBlock()
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: solver block must be a mapping")
    _check_keys(doc, _SOLVER_KEYS, path)
    block = SolverBlock()
    if "strategy" in doc:
        strategy = str(doc["strategy"])
        if strategy != "single":
            try:
                Strategy(strategy)
            except ValueError:
                raise ConfigError(f"{path}: unknown strategy {strategy!r}") from None
        block.strategy = strategy
    if "levels" in doc:
        block.levels = _int(doc["levels"], f"{path}.levels")
    if "orders" in doc:
        orders = doc["orders"]
        if not isinstance(orders, (list, tuple)) or not orders:
            raise ConfigError(f"{path}.orders must be a non-empty list")
        block.orders = tuple(_int(m, f"{path}.orders[]") for m in orders)
        block.strategy = "explicit"
    for key in ("gamma", "s1", "s2", "s3", "max_cycles"):
        if key in doc:
            setattr(block, key, _int(doc[key], f"{path}.{key}"))
    for key in ("tau", "cfl", "tolerance"):
        if key in doc:
            setattr(block, key, _num(doc[key], f"{path}.{key}"))
    if "renormalize_mass" in doc:
        if not isinstance(doc["renormalize_mass"], bool):
            raise ConfigError(f"{path}.renormalize_mass must be a boolean")
        block.renormalize_mass = doc["renormalize_mass"]
    if block.tolerance <= 0:
        raise ConfigError(f"{path}.tolerance must be positive")
    if not 0 < block.cfl < 1:
        raise ConfigError(f"{path}.cfl must lie in (0, 1)")
    if not 0 < block.tau <= 1:
        raise ConfigError(f"{path}.tau must lie in (0, 1]")
    if block.max_cycles < 1:
        raise ConfigError(f"{path}.max_cycles must be >= 1")
    return block


def _load_yaml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML ({err})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _common(doc, path):
    case = str(_require(doc, "case", path)).lower()
    if case not in CASE_NAMES:
        raise ConfigError(f"{path}: unknown case {case!r}")
    order = _int(_require(doc, "order", path), f"{path}.order")
    if order < 2:
        raise ConfigError(f"{path}.order must be >= 2")
    overrides = doc.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise ConfigError(f"{path}.overrides must be a mapping")
    return case, order, overrides


def load_run_config(path) -> RunConfig:
    doc = _load_yaml(path)
    _check_keys(doc, _RUN_KEYS, str(path))
    case, order, overrides = _common(doc, str(path))
    cells = _int(_require(doc, "cells", str(path)), "cells")
    if cells < 3:
        raise ConfigError("cells must be >= 3")
    cfg = RunConfig(
        case=case,
        order=order,
        cells=cells,
        overrides=overrides,
        solver=_solver_block(doc.get("solver"), "solver"),
        output_dir=str(doc.get("output_dir", "out")),
    )
    cfg.build_case()  # validate before any compute
    cfg.solver.sequence_for(order)
    return cfg


def load_sweep_config(path) -> SweepConfig:
    doc = _load_yaml(path)
    _check_keys(doc, _SWEEP_KEYS, str(path))
    case, order, overrides = _common(doc, str(path))
    cells = doc.get("cells")
    if isinstance(cells, int):
        cells = [cells]
    if not isinstance(cells, list) or not cells:
        raise ConfigError("cells must be a grid size or list of grid sizes")
    cells = [_int(n, "cells[]") for n in cells]
    strategies = doc.get("strategies") or []
    if not isinstance(strategies, list):
        raise ConfigError("strategies must be a list")
    for s in strategies:
        try:
            Strategy(str(s))
        except ValueError:
            raise ConfigError(f"unknown strategy {s!r}") from None
    levels = doc.get("levels") or [2]
    if isinstance(levels, int):
        levels = [levels]
    levels = [_int(v, "levels[]") for v in levels]
    cfg = SweepConfig(
        case=case,
        order=order,
        cells=cells,
        strategies=[str(s) for s in strategies],
        levels=levels,
        overrides=overrides,
        solver=_solver_block(doc.get("solver"), "solver"),
        output_dir=str(doc.get("output_dir", "out")),
    )
    cfg.build_case()
    for s in cfg.strategies:
        for lv in cfg.levels:
            if lv > 1:
                make_sequence(order, s, lv)  # validate chains up front
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    """Round-trippable document equivalent to the validated config."""
    doc = {
        "case": cfg.case,
        "order": cfg.order,
        "cells": cfg.cells,
        "overrides": dict(cfg.overrides),
        "solver": {
            "strategy": cfg.solver.strategy,
            "levels": cfg.solver.levels,
            "gamma": cfg.solver.gamma,
            "s1": cfg.solver.s1,
            "s2": cfg.solver.s2,
            "s3": cfg.solver.s3,
            "tau": cfg.solver.tau,
            "cfl": cfg.solver.cfl,
            "tolerance": cfg.solver.tolerance,
            "max_cycles": cfg.solver.max_cycles,
            "renormalize_mass": cfg.solver.renormalize_mass,
        },
        "output_dir": cfg.output_dir,
    }
    if cfg.solver.orders:
        doc["solver"]["orders"] = list(cfg.solver.orders)
    return yaml.safe_dump(doc, sort_keys=False)
