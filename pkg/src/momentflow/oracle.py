"""Tensorized Gauss-Hermite quadrature checks for the moment machinery.

Everything here evaluates velocity-space integrals directly on a tensor
grid, independent of the triangular coefficient recurrences it is used to
verify.  The dual pairing is

    f_alpha = theta^{|alpha|/2} / alpha! * integral f(xi) He_alpha(v) dxi,
    v = (xi - u) / sqrt(theta),

which follows from the orthogonality of the basis functions.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import MomentBasis, get_basis, hermite_table


def _nodes(n: int):
    # weight function exp(-x^2/2); total weight sqrt(2*pi)
    return np.polynomial.hermite_e.hermegauss(n)


def coeffs_from_function(fn, order: int, u, theta: float, nodes: int = 48) -> np.ndarray:
    """Expansion coefficients of an arbitrary velocity-space function.

    ``fn`` maps an (..., 3) array of velocities to point values.  Accuracy
    depends on ``nodes`` and on how far the integrand strays from the
    Gaussian envelope of the target basis; 48 nodes per axis resolve the
    states exercised in the tests to ~1e-12.
    """
    basis = get_basis(order) if not isinstance(order, MomentBasis) else order
    u = np.asarray(u, dtype=float)
    theta = float(theta)
    x, w = _nodes(nodes)
    sqrt_th = math.sqrt(theta)
    # velocity grid xi = u + sqrt(theta) * v on the tensor product of nodes
    v1, v2, v3 = np.meshgrid(x, x, x, indexing="ij")
    xi = np.stack(
        [u[0] + sqrt_th * v1, u[1] + sqrt_th * v2, u[2] + sqrt_th * v3], axis=-1
    )
    values = np.asarray(fn(xi), dtype=float)
    # undo the quadrature weight so plain dxi integrals come out, then fold
    # the per-axis weights into the contraction
    envelope = np.exp((v1**2 + v2**2 + v3**2) / 2.0)
    core = values * envelope
    he = hermite_table(basis.order, x)  # (nodes, order+1)
    whe = w[:, None] * he
    t = np.einsum("ijk,ia->ajk", core, whe)
    t = np.einsum("ajk,jb->abk", t, whe)
    t = np.einsum("abk,kc->abc", t, whe)
    hl = theta ** (3.0 / 2.0)  # jacobian of xi = u + sqrt(theta) v
    coeffs = np.empty(basis.size)
    for pos, (a1, a2, a3) in enumerate(basis.indices):
        deg = a1 + a2 + a3
        coeffs[pos] = hl * theta ** (deg / 2.0) * basis.inv_factorial[pos] * t[a1, a2, a3]
    return coeffs


def evaluate_expansion(basis: MomentBasis, coeffs: np.ndarray, u, theta: float, xi: np.ndarray) -> np.ndarray:
    """Point values of a truncated expansion at velocities xi (..., 3)."""
    u = np.asarray(u, dtype=float)
    theta = float(theta)
    v = (np.asarray(xi, dtype=float) - u) / math.sqrt(theta)
    tables = [hermite_table(basis.order, v[..., d]) for d in range(3)]
    weight = np.exp(-(v**2).sum(axis=-1) / 2.0) / (2.0 * math.pi * theta) ** 1.5
    out = np.zeros(v.shape[:-1])
    for pos, (a1, a2, a3) in enumerate(basis.indices):
        if coeffs[pos] == 0.0:
            continue
        deg = a1 + a2 + a3
        out += (
            coeffs[pos]
            * theta ** (-deg / 2.0)
            * tables[0][..., a1]
            * tables[1][..., a2]
            * tables[2][..., a3]
        )
    return out * weight


def evaluate_state(state, xi: np.ndarray) -> np.ndarray:
    return evaluate_expansion(state.basis, state.coeffs, state.u, state.theta, xi)


# ---------------------------------------------------------------------------
# Closed-form model densities, straight from their definitions.
# ---------------------------------------------------------------------------

def maxwellian_fn(rho: float, u, theta: float):
    u = np.asarray(u, dtype=float)

    def fn(xi):
        c2 = ((xi - u) ** 2).sum(axis=-1)
        return rho / (2.0 * math.pi * theta) ** 1.5 * np.exp(-c2 / (2.0 * theta))

    return fn


def shakhov_fn(rho: float, u, theta: float, q, prandtl: float):
    u = np.asarray(u, dtype=float)
    q = np.asarray(q, dtype=float)
    base = maxwellian_fn(rho, u, theta)

    def fn(xi):
        c = xi - u
        c2 = (c**2).sum(axis=-1)
        factor = 1.0 + (1.0 - prandtl) * (c * q).sum(axis=-1) / (5.0 * rho * theta**2) * (
            c2 / theta - 5.0
        )
        return factor * base(xi)

    return fn


def es_gaussian_fn(rho: float, u, theta: float, sigma, prandtl: float):
    u = np.asarray(u, dtype=float)
    lam = theta * np.eye(3) + (1.0 - 1.0 / prandtl) * np.asarray(sigma, dtype=float) / rho
    inv = np.linalg.inv(lam)
    norm = rho / math.sqrt((2.0 * math.pi) ** 3 * np.linalg.det(lam))

    def fn(xi):
        c = xi - u
        quad = np.einsum("...i,ij,...j->...", c, inv, c)
        return norm * np.exp(-quad / 2.0)

    return fn
