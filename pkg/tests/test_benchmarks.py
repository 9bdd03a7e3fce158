import numpy as np
import pytest

from momentflow import (
    CollisionKind,
    ConfigError,
    FrequencyLaw,
    make_case,
    initial_state,
    extract_macros,
    residual_field,
    residual_norm,
)
from momentflow.benchmarks import run_sweep, smoother_config, solution_distance
from momentflow.multilevel import NmlmConfig, OrderSequence
from momentflow.discretization import uniform_solution

from helpers import random_adapted_grid

RNG = np.random.default_rng(11)


def test_couette_defaults():
    case = make_case("couette", 4, 50)
    assert case.wall_left.theta_wall == 1.0
    assert case.wall_right.theta_wall == 1.0
    rel = case.wall_right.u_wall[1] - case.wall_left.u_wall[1]
    assert rel == pytest.approx(1.2577, abs=1e-14)
    assert case.wall_left.u_wall[1] == pytest.approx(-0.62885, abs=1e-14)
    assert case.gas.knudsen == 0.1199
    assert case.gas.viscosity_index == 0.81
    assert case.gas.frequency_law is FrequencyLaw.HARD_SPHERE_POWER
    assert case.gas.collision.kind is CollisionKind.ES_BGK
    assert case.gas.collision.prandtl == pytest.approx(2.0 / 3.0)
    assert not np.any(case.gas.force)


def test_poiseuille_defaults():
    case = make_case("poiseuille", 4, 50)
    np.testing.assert_allclose(case.gas.force, [0.0, 0.2555, 0.0])
    assert case.gas.knudsen == 0.1
    assert case.gas.viscosity_index == 0.5
    assert case.gas.frequency_law is FrequencyLaw.VARIABLE_HARD_SPHERE
    assert case.wall_left.theta_wall == case.wall_right.theta_wall == 1.0
    assert not np.any(case.wall_left.u_wall)


def test_fourier_defaults():
    case = make_case("fourier", 6, 80)
    assert case.wall_left.theta_wall == pytest.approx(0.2894)
    assert case.wall_right.theta_wall == pytest.approx(1.0769)
    assert case.gas.knudsen == 0.1044
    assert case.gas.viscosity_index == 0.657
    assert not np.any(case.gas.force)


def test_case_overrides():
    case = make_case("poiseuille", 4, 50, {"prandtl": 1.0})
    assert case.gas.collision.prandtl == 1.0
    case = make_case("couette", 4, 50, {"knudsen": 1.199, "wall_speed": 0.5})
    assert case.gas.knudsen == 1.199
    assert case.wall_right.u_wall[1] == pytest.approx(0.25)
    case = make_case("fourier", 4, 50, {"theta_left": 0.5})
    assert case.wall_left.theta_wall == 0.5


def test_unknown_override_rejected():
    with pytest.raises(ConfigError):
        make_case("couette", 4, 50, {"knudsen_number": 0.1})
    with pytest.raises(ConfigError):
        make_case("nozzle", 4, 50)


def test_initial_state_is_unit_maxwellian():
    case = make_case("fourier", 5, 40)
    sol = initial_state(case)
    assert sol.ncells == 40
    assert np.all(sol.coeffs[:, 0] == 1.0)
    assert np.all(sol.coeffs[:, 1:] == 0.0)
    assert np.all(sol.theta == 1.0)
    assert not np.any(sol.u)
    macros = extract_macros(sol.cell(7))
    assert (macros.rho, macros.theta) == (1.0, 1.0)
    assert sol.total_mass() == pytest.approx(case.domain_length, abs=1e-14)


def test_initial_residual_zero_only_without_driving():
    quiet = make_case("couette", 4, 30, {"wall_speed": 0.0})
    sol = initial_state(quiet)
    res = residual_field(sol, quiet.gas, (quiet.wall_left, quiet.wall_right))
    assert residual_norm(res, sol.mesh) <= 1e-12
    driven = make_case("couette", 4, 30)
    res2 = residual_field(sol, driven.gas, (driven.wall_left, driven.wall_right))
    assert residual_norm(res2, sol.mesh) > 1e-3


def test_solution_distance_properties():
    a = random_adapted_grid(4, 10, RNG)
    assert solution_distance(a, a) == 0.0
    b = a.replace_fields(coeffs=a.coeffs * 1.01)
    d = solution_distance(a, b)
    assert d > 0
    # distance is symmetric under projection to within transform roundoff
    assert solution_distance(b, a) == pytest.approx(d, rel=1e-10)
    # comparing across orders uses the common block
    fine = random_adapted_grid(6, 10, RNG)
    coarse = uniform_solution(4, 10, 1.0, 1.0, np.zeros(3), 1.0)
    assert solution_distance(fine, coarse) > 0


def test_run_sweep_desk_scale():
    case = make_case("couette", 3, 16)
    solver = NmlmConfig(
        sequence=OrderSequence((2, 3)),
        smoother=smoother_config(case),
        tol=1e-5,
        max_cycles=100000,
    )
    rows = run_sweep(case, [2], ["minus-one"], [16], solver, threads=1)
    assert len(rows) == 2
    single = next(r for r in rows if r.strategy == "single")
    multi = next(r for r in rows if r.strategy == "minus-one")
    assert single.converged and multi.converged
    assert single.k_ratio == 1.0
    assert multi.k_ratio == pytest.approx(single.iterations / multi.iterations)
    assert multi.work_ratio > 1.0
    # determinism across reruns and thread counts
    rows2 = run_sweep(case, [2], ["minus-one"], [16], solver, threads=4)
    for r1, r2 in zip(rows, rows2):
        assert (r1.iterations, r1.work_units, r1.k_ratio) == (
            r2.iterations,
            r2.work_units,
            r2.k_ratio,
        )


def test_run_sweep_records_failures_and_continues():
    case = make_case("couette", 3, 12)
    solver = NmlmConfig(
        sequence=OrderSequence((2, 3)),
        smoother=smoother_config(case),
        tol=1e-4,
        max_cycles=100000,
    )
    # a 3-level minus-one chain from order 3 underflows; the row must carry
    # the error while the rest of the sweep completes
    rows = run_sweep(case, [2, 3], ["minus-one"], [12], solver, threads=1)
    failed = [r for r in rows if r.error]
    good = [r for r in rows if not r.error]
    assert len(failed) == 1 and not failed[0].converged
    assert all(r.converged for r in good)
