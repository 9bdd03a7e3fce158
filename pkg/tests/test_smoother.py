import numpy as np
import pytest

from momentflow import (
    Mesh1D,
    SmootherConfig,
    heun_step,
    make_case,
    residual_norm,
    solve_single_level,
    step_size,
)
from momentflow.benchmarks import initial_state, smoother_config
from momentflow.discretization import residual_field, uniform_solution
from momentflow.smoother import RhsField, defect_field

from helpers import random_adapted_grid

RNG = np.random.default_rng(90210)


def equilibrium_setup(order=4, n=16):
    case = make_case("couette", order, n, {"wall_speed": 0.0})
    sol = initial_state(case)
    return case, sol, (case.wall_left, case.wall_right)


def test_step_size_formula():
    sol = uniform_solution(3, 100, 1.0, 1.0, np.zeros(3), 1.0)
    cfg = SmootherConfig(cfl=0.45)
    omega = step_size(sol, cfg)
    assert omega == pytest.approx(0.45 * 0.01 / 2.3344142183389773, rel=1e-12)
    assert omega == pytest.approx(1.9277e-3, rel=1e-4)


def test_step_size_scales_with_dx():
    cfg = SmootherConfig(cfl=0.45)
    coarse = uniform_solution(4, 50, 1.0, 1.0, np.zeros(3), 1.0)
    fine = uniform_solution(4, 100, 1.0, 1.0, np.zeros(3), 1.0)
    assert step_size(fine, cfg) == pytest.approx(0.5 * step_size(coarse, cfg), rel=1e-13)


def test_cfl_validation():
    with pytest.raises(ValueError):
        SmootherConfig(cfl=1.0)
    with pytest.raises(ValueError):
        SmootherConfig(cfl=0.0)


def test_residual_norm_examples():
    mesh = Mesh1D(np.array([0.0, 0.25]))
    field = np.array([[3.0]])
    assert residual_norm(field, mesh) == pytest.approx(1.5, abs=1e-15)
    assert residual_norm(np.zeros((1, 1)), mesh) == 0.0
    # homogeneity
    mesh2 = Mesh1D.uniform(6, 1.0)
    f = RNG.normal(size=(6, 10))
    assert residual_norm(3.5 * f, mesh2) == pytest.approx(3.5 * residual_norm(f, mesh2), rel=1e-13)


def test_heun_fixed_point_at_steady_state():
    case, sol, walls = equilibrium_setup()
    cfg = smoother_config(case)
    out = heun_step(sol, None, case.gas, walls, cfg)
    assert np.abs(out.coeffs - sol.coeffs).max() <= 1e-13
    np.testing.assert_allclose(out.u, sol.u, atol=1e-13)
    np.testing.assert_allclose(out.theta, sol.theta, atol=1e-13)


def test_heun_step_determinism():
    case = make_case("couette", 4, 20)
    walls = (case.wall_left, case.wall_right)
    cfg = smoother_config(case)
    sol_a = initial_state(case)
    sol_b = initial_state(case)
    for _ in range(5):
        sol_a = heun_step(sol_a, None, case.gas, walls, cfg)
        sol_b = heun_step(sol_b, None, case.gas, walls, cfg)
    np.testing.assert_array_equal(sol_a.coeffs, sol_b.coeffs)
    np.testing.assert_array_equal(sol_a.theta, sol_b.theta)


def test_mass_renormalization_pins_total_mass():
    case = make_case("couette", 4, 24)
    walls = (case.wall_left, case.wall_right)
    cfg = smoother_config(case)
    sol = initial_state(case)
    for _ in range(60):
        sol = heun_step(sol, None, case.gas, walls, cfg)
        assert sol.total_mass() == pytest.approx(case.domain_length, rel=1e-14)


def test_manufactured_rhs_convergence():
    """Driving toward a perturbed target: defect norm must fall steadily."""
    case = make_case("couette", 4, 16, {"wall_speed": 0.0})
    walls = (case.wall_left, case.wall_right)
    target = initial_state(case)
    theta = target.theta.copy()
    x = target.mesh.centers
    theta += 0.05 * np.sin(np.pi * x)
    target = target.replace_fields(theta=theta)
    rhs = RhsField(target.u.copy(), target.theta.copy(), residual_field(target, case.gas, walls))

    sol = initial_state(case)
    cfg = SmootherConfig(cfl=0.45)
    norms = [residual_norm(defect_field(sol, rhs, case.gas, walls), sol.mesh)]
    for _ in range(200):
        sol = heun_step(sol, rhs, case.gas, walls, cfg)
        norms.append(residual_norm(defect_field(sol, rhs, case.gas, walls), sol.mesh))
    assert norms[-1] < 0.2 * norms[0]
    tail = norms[20:]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))


def test_manufactured_rhs_fixed_point_is_target():
    """With r = R(f_target), the target solves the problem; starting there stays there."""
    case = make_case("couette", 3, 12)
    walls = (case.wall_left, case.wall_right)
    target = random_adapted_grid(3, 12, RNG, coeff_scale=0.01)
    rhs = RhsField(target.u.copy(), target.theta.copy(), residual_field(target, case.gas, walls))
    assert residual_norm(defect_field(target, rhs, case.gas, walls), target.mesh) <= 1e-13
    cfg = SmootherConfig(cfl=0.4)
    out = heun_step(target, rhs, case.gas, walls, cfg)
    assert np.abs(out.coeffs - target.coeffs).max() <= 1e-12


def test_solve_single_level_zero_iterations_at_steady_state():
    case, sol, walls = equilibrium_setup()
    out, record = solve_single_level(sol, None, case.gas, walls, smoother_config(case), 1e-8, 100)
    assert record.iterations == 0
    assert record.converged
    assert record.residual_history[0][0] == 0
    np.testing.assert_array_equal(out.coeffs, sol.coeffs)


def test_solve_single_level_immediate_return_for_loose_tolerance():
    case = make_case("couette", 3, 12)
    sol = initial_state(case)
    _, record = solve_single_level(
        sol, None, case.gas, (case.wall_left, case.wall_right), smoother_config(case), 1e3, 100
    )
    assert record.converged and record.iterations == 0


def test_solve_single_level_unconverged_flag():
    case = make_case("couette", 3, 12)
    sol = initial_state(case)
    _, record = solve_single_level(
        sol, None, case.gas, (case.wall_left, case.wall_right), smoother_config(case), 1e-10, 5
    )
    assert not record.converged
    assert record.iterations == 5
    assert len(record.residual_history) == 6
    assert record.final_norm >= 1e-10


def test_rhs_field_reprojection_round_trip():
    grid = random_adapted_grid(4, 8, RNG)
    rhs_coeffs = RNG.normal(size=grid.coeffs.shape) * 0.01
    rhs = RhsField(grid.u.copy(), grid.theta.copy(), rhs_coeffs)
    moved = grid.replace_fields(
        u=grid.u + 0.05, theta=grid.theta * 1.1
    )
    reproj = rhs.in_basis(moved)
    # moments of the rhs functions are preserved by the re-expression
    assert np.abs(reproj[:, 0] - rhs_coeffs[:, 0]).max() < 1e-14
    back = RhsField(moved.u.copy(), moved.theta.copy(), reproj).in_basis(grid)
    np.testing.assert_allclose(back, rhs_coeffs, atol=1e-12)
