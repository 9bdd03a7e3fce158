"""Shared test utilities: random adapted states and brute-force integrals."""

import math

import numpy as np

from momentflow import GridSolution, Mesh1D, MomentState, get_basis
from momentflow.basis import hermite_table


def random_adapted_state(order, rng, coeff_scale=0.04):
    """Adapted state with decaying coefficients at every degree.

    First-order slots are zeroed and the second-order diagonal is made
    trace-free, so the adapted-form relations hold by construction.
    """
    basis = get_basis(order)
    coeffs = rng.normal(size=basis.size) * coeff_scale / (1.0 + basis.degrees**2)
    coeffs[0] = 1.0 + 0.6 * rng.random()
    coeffs[basis.pos_e] = 0.0
    diag = coeffs[basis.pos_2e]
    coeffs[basis.pos_2e] = diag - diag.mean()
    u = rng.uniform(-0.3, 0.3, size=3)
    theta = 0.8 + 0.5 * rng.random()
    return MomentState(basis, u, theta, coeffs)


def random_adapted_grid(order, ncells, rng, length=1.0, coeff_scale=0.04):
    states = [random_adapted_state(order, rng, coeff_scale) for _ in range(ncells)]
    basis = get_basis(order)
    return GridSolution(
        Mesh1D.uniform(ncells, length),
        basis,
        np.array([s.u for s in states]),
        np.array([s.theta for s in states]),
        np.array([s.coeffs for s in states]),
    )


def integrate_velocity(fn, u, theta, nodes=48):
    """Plain Gauss-Hermite integral of fn over velocity space."""
    u = np.asarray(u, dtype=float)
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    v1, v2, v3 = np.meshgrid(x, x, x, indexing="ij")
    xi = np.stack(
        [u[0] + math.sqrt(theta) * v1, u[1] + math.sqrt(theta) * v2, u[2] + math.sqrt(theta) * v3],
        axis=-1,
    )
    values = np.asarray(fn(xi), dtype=float)
    core = values * np.exp((v1**2 + v2**2 + v3**2) / 2.0)
    total = np.einsum("ijk,i,j,k->", core, w, w, w)
    return float(theta**1.5 * total)


def state_moment(state, powers, nodes=48):
    """Velocity moment integral xi1^p1 xi2^p2 xi3^p3 of a truncated expansion."""
    from momentflow.oracle import evaluate_state

    p1, p2, p3 = powers

    def fn(xi):
        return xi[..., 0] ** p1 * xi[..., 1] ** p2 * xi[..., 2] ** p3 * evaluate_state(state, xi)

    return integrate_velocity(fn, state.u, state.theta, nodes=nodes)


def halfline_hermite_flux(n, u1, theta, side, nodes=4000, cutoff=14.0):
    """Brute-force integral of xi * h_n over a half line, for wall-flux checks.

    Composite trapezoid on the toward-wall half line in the wall frame:
    side 'left' integrates xi in (-inf, 0), 'right' in (0, inf).
    """
    lo, hi = (-cutoff, 0.0) if side == "left" else (0.0, cutoff)
    xi = np.linspace(lo, hi, nodes)
    v = (xi - u1) / math.sqrt(theta)
    he = hermite_table(n, v)[:, n]
    weight = np.exp(-(v**2) / 2.0) / math.sqrt(2.0 * math.pi * theta) / theta ** (n / 2.0)
    return float(np.trapezoid(xi * he * weight, xi))
