"""Finite-volume discretization of the 1D moment model.

Cells carry truncated expansions around their own parameters.  Linear
reconstruction acts componentwise on parameters and coefficients; each
interface flux is assembled in the arithmetic-mean basis of the two face
states and combined HLL-style with Hermite-root wave-speed bounds; the two
interface fluxes of a cell are projected into the cell basis before
differencing, which is where all parameter-derivative coupling of the
moment system is absorbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .basis import MomentBasis, get_basis, hermite_table
from .errors import RealizabilityError
from .moments import (
    CollisionModel,
    MomentState,
    equilibrium_coeffs_batch,
    macros_from_coeffs,
    project_coeffs,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


class FrequencyLaw(Enum):
    HARD_SPHERE_POWER = "hard-sphere-power"
    VARIABLE_HARD_SPHERE = "variable-hard-sphere"


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray  # (N+1,), strictly increasing

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        view = nodes.view()
        view.flags.writeable = False
        object.__setattr__(self, "nodes", view)

    @classmethod
    def uniform(cls, ncells: int, length: float = 1.0) -> "Mesh1D":
        return cls(np.linspace(0.0, length, ncells + 1))

    @property
    def ncells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])


@dataclass(frozen=True)
class WallBoundary:
    """Fully accommodating Maxwell wall moving tangentially."""

    u_wall: np.ndarray  # (3,), zero normal component
    theta_wall: float
    accommodation: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.u_wall, dtype=float).reshape(3)
        if u[0] != 0.0:
            raise ValueError("wall velocity must have zero normal component")
        if self.theta_wall <= 0:
            raise ValueError("wall temperature must be positive")
        if not 0.0 < self.accommodation <= 1.0:
            raise ValueError("accommodation must lie in (0, 1]")
        view = u.view()
        view.flags.writeable = False
        object.__setattr__(self, "u_wall", view)
        object.__setattr__(self, "theta_wall", float(self.theta_wall))


@dataclass(frozen=True)
class GasModel:
    collision: CollisionModel
    knudsen: float
    viscosity_index: float
    frequency_law: FrequencyLaw
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.knudsen <= 0:
            raise ValueError("Knudsen number must be positive")
        f = np.asarray(self.force, dtype=float).reshape(3)
        view = f.view()
        view.flags.writeable = False
        object.__setattr__(self, "force", view)


@dataclass(frozen=True)
class GridSolution:
    """Adapted per-cell expansions over an interval mesh."""

    mesh: Mesh1D
    basis: MomentBasis
    u: np.ndarray  # (N, 3)
    theta: np.ndarray  # (N,)
    coeffs: np.ndarray  # (N, basis.size)

    def __post_init__(self):
        n = self.mesh.ncells
        u = np.ascontiguousarray(self.u, dtype=float).reshape(n, 3)
        theta = np.ascontiguousarray(self.theta, dtype=float).reshape(n)
        coeffs = np.ascontiguousarray(self.coeffs, dtype=float).reshape(n, self.basis.size)
        for arr, name in ((u, "u"), (theta, "theta"), (coeffs, "coeffs")):
            view = arr.view()
            view.flags.writeable = False
            object.__setattr__(self, name, view)

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def ncells(self) -> int:
        return self.mesh.ncells

    def cell(self, i: int) -> MomentState:
        return MomentState(self.basis, self.u[i], float(self.theta[i]), self.coeffs[i])

    def replace_fields(self, u=None, theta=None, coeffs=None) -> "GridSolution":
        return GridSolution(
            self.mesh,
            self.basis,
            self.u if u is None else u,
            self.theta if theta is None else theta,
            self.coeffs if coeffs is None else coeffs,
        )

    def macro_profiles(self):
        """(rho, u, theta, sigma, q) arrays over the cells."""
        sigma, q = macros_from_coeffs(self.basis, self.coeffs, self.u, self.theta)
        return self.coeffs[:, 0].copy(), self.u.copy(), self.theta.copy(), sigma, q

    def total_mass(self) -> float:
        return float(np.sum(self.coeffs[:, 0] * self.mesh.widths))

    def adapted_defect(self) -> float:
        """Largest violation of the adapted-form relations, density-scaled."""
        rho = self.coeffs[:, 0]
        first = np.abs(self.coeffs[:, self.basis.pos_e]).max(axis=1) / rho
        trace = np.abs(self.coeffs[:, self.basis.pos_2e].sum(axis=1)) / (rho * self.theta)
        return float(np.maximum(first, trace).max())


def uniform_solution(order: int, ncells: int, length: float, rho: float, u, theta: float) -> GridSolution:
    basis = get_basis(order)
    coeffs = np.zeros((ncells, basis.size))
    coeffs[:, 0] = rho
    uu = np.broadcast_to(np.asarray(u, dtype=float), (ncells, 3)).copy()
    th = np.full(ncells, float(theta))
    return GridSolution(Mesh1D.uniform(ncells, length), basis, uu, th, coeffs)


@dataclass
class Diagnostics:
    """Counters accumulated across residual evaluations."""

    slope_fallbacks: int = 0
    residual_evaluations: int = 0


# ---------------------------------------------------------------------------
# Collision frequency
# ---------------------------------------------------------------------------

def collision_frequency(rho, theta, gas: GasModel):
    pr = gas.collision.prandtl
    w = gas.viscosity_index
    theta_pow = np.asarray(theta, dtype=float) ** (1.0 - w)
    if gas.frequency_law is FrequencyLaw.HARD_SPHERE_POWER:
        return math.sqrt(math.pi / 2.0) * pr / gas.knudsen * rho * theta_pow
    if gas.frequency_law is FrequencyLaw.VARIABLE_HARD_SPHERE:
        factor = math.sqrt(2.0 / math.pi) * (5.0 - 2.0 * w) * (7.0 - 2.0 * w) * pr / (15.0 * gas.knudsen)
        return factor * rho * theta_pow
    raise ValueError(f"unknown frequency law {gas.frequency_law}")


# ---------------------------------------------------------------------------
# Wave speeds and the transport flux map
# ---------------------------------------------------------------------------

def max_wave_speed(state: MomentState) -> float:
    """|u_1| + c * sqrt(theta) with c the largest root of He_{order+1}."""
    return abs(float(state.u[0])) + state.basis.max_hermite_root * math.sqrt(state.theta)


def transport_coeffs(basis: MomentBasis, coeffs: np.ndarray, u1, theta) -> np.ndarray:
    """Coefficients of xi_1 * f with the top-order closure term dropped.

    (F f)_alpha = theta f_{alpha-e_1} + u_1 f_alpha + (alpha_1+1) f_{alpha+e_1},
    the raising term suppressed at |alpha| = order.
    """
    u1 = np.asarray(u1, dtype=float)
    theta = np.asarray(theta, dtype=float)
    ext = basis.pad(coeffs)
    out = u1[..., None] * coeffs
    out += theta[..., None] * ext[..., basis.lower_shift[0][0]]
    out += basis.alpha1_plus1 * ext[..., basis.raise1]
    return out


class FluxResult(NamedTuple):
    coeffs: np.ndarray
    u: np.ndarray
    theta: np.ndarray


def _interface_flux(basis, u_l, th_l, f_l, u_r, th_r, f_r):
    """HLL flux between face states, assembled in their mean-parameter basis."""
    u_c = 0.5 * (u_l + u_r)
    th_c = 0.5 * (th_l + th_r)
    a_l = project_coeffs(basis, f_l, u_l, th_l, u_c, th_c)
    a_r = project_coeffs(basis, f_r, u_r, th_r, u_c, th_c)
    c = basis.max_hermite_root
    gap_l = c * np.sqrt(th_l)
    gap_r = c * np.sqrt(th_r)
    lam_l = np.minimum(u_l[..., 0] - gap_l, u_r[..., 0] - gap_r)
    lam_r = np.maximum(u_l[..., 0] + gap_l, u_r[..., 0] + gap_r)
    flux_l = transport_coeffs(basis, a_l, u_c[..., 0], th_c)
    flux_r = transport_coeffs(basis, a_r, u_c[..., 0], th_c)
    # written so that identical inputs return flux_l bit-for-bit
    hll = flux_l + (lam_l / (lam_r - lam_l))[..., None] * (
        flux_l - flux_r + lam_r[..., None] * (a_r - a_l)
    )
    flux = np.where(
        (lam_l >= 0)[..., None], flux_l, np.where((lam_r <= 0)[..., None], flux_r, hll)
    )
    return flux, u_c, th_c


def numerical_flux(left: MomentState, right: MomentState) -> FluxResult:
    if left.basis.order != right.basis.order:
        raise ValueError("flux requires states of equal order")
    basis = left.basis
    flux, u_c, th_c = _interface_flux(
        basis,
        left.u[None, :],
        np.array([left.theta]),
        left.coeffs[None, :],
        right.u[None, :],
        np.array([right.theta]),
        right.coeffs[None, :],
    )
    return FluxResult(flux[0], u_c[0], float(th_c[0]))


# ---------------------------------------------------------------------------
# Maxwell wall ghost states
# ---------------------------------------------------------------------------

def _halfline_flux_weights(order: int, u1: float, theta: float, side: str) -> np.ndarray:
    """Integrals of xi_1 against the line basis functions over the half line
    of velocities pointing at the wall; weights[n] pairs with f_{(n,0,0)}."""
    s = -u1 / math.sqrt(theta)
    he = hermite_table(order + 1, np.array([s]))[0]
    g = math.exp(-(s**2) / 2.0) / SQRT_2PI
    cdf = 0.5 * (1.0 + math.erf(s / math.sqrt(2.0)))
    a = np.empty(order + 1)
    b = np.empty(order + 1)
    a[0] = cdf
    b[0] = -g
    if order >= 1:
        a[1] = -he[0] * g
        b[1] = cdf - he[1] * g
    for n in range(2, order + 1):
        a[n] = -he[n - 1] * g
        b[n] = -(he[n] + n * he[n - 2]) * g
    if side == "right":
        a = -a
        a[0] += 1.0
        b = -b
        if order >= 1:
            b[1] += 1.0
    n_arr = np.arange(order + 1)
    return theta ** (-n_arr / 2.0) * (u1 * a + math.sqrt(theta) * b)


def _ghost_fields(basis: MomentBasis, u: np.ndarray, theta: float, coeffs: np.ndarray, wall: WallBoundary, side: str):
    weights = _halfline_flux_weights(basis.order, float(u[0]), float(theta), side)
    line = coeffs[basis.pos_axis0_line]
    toward = float(np.dot(line, weights))
    if side == "left":
        toward = -toward
    rho_ghost = toward * SQRT_2PI / math.sqrt(wall.theta_wall)
    if rho_ghost <= 0 or not math.isfinite(rho_ghost):
        raise RealizabilityError(
            f"wall ghost density {rho_ghost:.6g} at {side} boundary", cell=side
        )
    ghost_coeffs = np.zeros(basis.size)
    ghost_coeffs[0] = rho_ghost
    return wall.u_wall.copy(), wall.theta_wall, ghost_coeffs


def wall_ghost_state(interior: MomentState, wall: WallBoundary, side: str) -> MomentState:
    """Wall-temperature Maxwellian balancing the half-space mass flux.

    The re-emitted density is chosen so the net normal mass flux through
    the wall vanishes for the truncated interior expansion (full
    accommodation).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    u_g, th_g, c_g = _ghost_fields(interior.basis, interior.u, interior.theta, interior.coeffs, wall, side)
    return MomentState(interior.basis, u_g, th_g, c_g)


# ---------------------------------------------------------------------------
# Reconstruction and the residual operator
# ---------------------------------------------------------------------------

def _face_states(sol: GridSolution, walls, diagnostics: Diagnostics | None):
    basis, mesh = sol.basis, sol.mesh
    dx = mesh.widths
    g_lu, g_lth, g_lc = _ghost_fields(basis, sol.u[0], sol.theta[0], sol.coeffs[0], walls[0], "left")
    g_ru, g_rth, g_rc = _ghost_fields(basis, sol.u[-1], sol.theta[-1], sol.coeffs[-1], walls[1], "right")

    u_ext = np.concatenate([g_lu[None, :], sol.u, g_ru[None, :]], axis=0)
    th_ext = np.concatenate([[g_lth], sol.theta, [g_rth]])
    f_ext = np.concatenate([g_lc[None, :], sol.coeffs, g_rc[None, :]], axis=0)
    dx_ext = np.concatenate([dx[:1], dx, dx[-1:]])

    denom = dx + 0.5 * (dx_ext[:-2] + dx_ext[2:])
    slope_u = (u_ext[2:] - u_ext[:-2]) / denom[:, None]
    slope_th = (th_ext[2:] - th_ext[:-2]) / denom
    slope_f = (f_ext[2:] - f_ext[:-2]) / denom[:, None]

    half = 0.5 * dx
    th_left = sol.theta - half * slope_th
    th_right = sol.theta + half * slope_th
    bad = (th_left <= 0) | (th_right <= 0)
    if np.any(bad):
        if diagnostics is not None:
            diagnostics.slope_fallbacks += int(bad.sum())
        slope_u = np.where(bad[:, None], 0.0, slope_u)
        slope_f = np.where(bad[:, None], 0.0, slope_f)
        th_left = np.where(bad, sol.theta, th_left)
        th_right = np.where(bad, sol.theta, th_right)

    u_left = sol.u - half[:, None] * slope_u
    u_right = sol.u + half[:, None] * slope_u
    f_left = sol.coeffs - half[:, None] * slope_f
    f_right = sol.coeffs + half[:, None] * slope_f

    # interface j = 0..N: upstream side is the right face of cell j-1
    # (the left ghost for j = 0), downstream side the left face of cell j
    # (the right ghost for j = N); ghost cells are piecewise constant
    up_u = np.concatenate([g_lu[None, :], u_right], axis=0)
    up_th = np.concatenate([[g_lth], th_right])
    up_f = np.concatenate([g_lc[None, :], f_right], axis=0)
    dn_u = np.concatenate([u_left, g_ru[None, :]], axis=0)
    dn_th = np.concatenate([th_left, [g_rth]])
    dn_f = np.concatenate([f_left, g_rc[None, :]], axis=0)
    faces = (up_u, up_th, up_f, dn_u, dn_th, dn_f)
    cell_faces = (u_left, th_left, f_left, u_right, th_right, f_right)
    return faces, cell_faces


def reconstruct(sol: GridSolution, i: int) -> tuple[MomentState, MomentState]:
    """Linearly reconstructed face states of cell i (central slopes)."""
    if not 0 <= i < sol.ncells:
        raise IndexError(f"cell index {i} out of range")
    _, (u_l, th_l, f_l, u_r, th_r, f_r) = _face_states(sol, _default_walls(sol), None)
    left = MomentState(sol.basis, u_l[i], float(th_l[i]), f_l[i])
    right = MomentState(sol.basis, u_r[i], float(th_r[i]), f_r[i])
    return left, right


def reconstruct_with_walls(sol: GridSolution, walls, i: int) -> tuple[MomentState, MomentState]:
    _, (u_l, th_l, f_l, u_r, th_r, f_r) = _face_states(sol, walls, None)
    left = MomentState(sol.basis, u_l[i], float(th_l[i]), f_l[i])
    right = MomentState(sol.basis, u_r[i], float(th_r[i]), f_r[i])
    return left, right


def _default_walls(sol: GridSolution):
    # interior-facing reconstruction helper: adiabatic stand-in walls that
    # reuse the boundary cells' own parameters, so interior faces are
    # unaffected and boundary faces stay realizable
    left = WallBoundary(np.array([0.0, sol.u[0, 1], sol.u[0, 2]]), float(sol.theta[0]))
    right = WallBoundary(np.array([0.0, sol.u[-1, 1], sol.u[-1, 2]]), float(sol.theta[-1]))
    return (left, right)


def _balanced_wall_flux(basis, ghost_u, ghost_th, face_u, face_th, face_c, side):
    """Wall-interface flux with the re-emitted density chosen so the flux
    itself carries no mass.

    The flux is affine in the ghost density at fixed parameters, so two
    evaluations determine the balancing density; the result is the flux of
    an actual state pair, with impermeability exact rather than imposed on
    one row.
    """
    zero = np.zeros((1, basis.size))
    unit = np.zeros((1, basis.size))
    unit[0, 0] = 1.0
    g_u = ghost_u[None, :]
    g_th = np.array([ghost_th])
    f_u = face_u[None, :]
    f_th = np.array([face_th])
    f_c = face_c[None, :]
    if side == "left":  # ghost is the upstream side of interface 0
        base, u_c, th_c = _interface_flux(basis, g_u, g_th, zero, f_u, f_th, f_c)
        bump, _, _ = _interface_flux(basis, g_u, g_th, unit, f_u, f_th, f_c)
    else:  # ghost is the downstream side of the last interface
        base, u_c, th_c = _interface_flux(basis, f_u, f_th, f_c, g_u, g_th, zero)
        bump, _, _ = _interface_flux(basis, f_u, f_th, f_c, g_u, g_th, unit)
    column = bump[0] - base[0]
    if column[0] == 0.0 or not np.isfinite(column[0]):
        raise RealizabilityError("wall flux is insensitive to the re-emitted density", cell=side)
    rho_ghost = -base[0, 0] / column[0]
    if rho_ghost <= 0 or not np.isfinite(rho_ghost):
        raise RealizabilityError(
            f"flux-balancing wall density {rho_ghost:.6g} at {side} boundary", cell=side
        )
    flux = base[0] + rho_ghost * column
    flux[0] = 0.0
    return flux


def residual_field(
    sol: GridSolution,
    gas: GasModel,
    walls,
    diagnostics: Diagnostics | None = None,
) -> np.ndarray:
    """Per-cell residual coefficients in each cell's own basis.

    R_i = [F(f_i^R, f_{i+1}^L) - F(f_{i-1}^R, f_i^L)] / dx_i - G(f_i) with
    both interface fluxes projected into the cell basis before differencing.
    """
    basis, mesh = sol.basis, sol.mesh
    if diagnostics is not None:
        diagnostics.residual_evaluations += 1
    (up_u, up_th, up_f, dn_u, dn_th, dn_f), _ = _face_states(sol, walls, diagnostics)
    flux, u_c, th_c = _interface_flux(basis, up_u, up_th, up_f, dn_u, dn_th, dn_f)
    # walls are impermeable: re-solve the two wall fluxes with the re-emitted
    # density that zeroes their mass row exactly; the basis change below is
    # degree-triangular, so the zero survives projection into cell bases
    flux[0] = _balanced_wall_flux(
        basis, up_u[0], float(up_th[0]), dn_u[0], float(dn_th[0]), dn_f[0], "left"
    )
    flux[-1] = _balanced_wall_flux(
        basis, dn_u[-1], float(dn_th[-1]), up_u[-1], float(up_th[-1]), up_f[-1], "right"
    )

    flux_right = project_coeffs(basis, flux[1:], u_c[1:], th_c[1:], sol.u, sol.theta)
    flux_left = project_coeffs(basis, flux[:-1], u_c[:-1], th_c[:-1], sol.u, sol.theta)
    out = (flux_right - flux_left) / mesh.widths[:, None]

    nu = collision_frequency(sol.coeffs[:, 0], sol.theta, gas)
    f_eq = equilibrium_coeffs_batch(basis, sol.coeffs, sol.u, sol.theta, gas.collision)
    out -= nu[:, None] * (f_eq - sol.coeffs)
    if np.any(gas.force):
        ext = basis.pad(sol.coeffs)
        for d in range(3):
            if gas.force[d]:
                out -= gas.force[d] * ext[:, basis.lower_shift[d][0]]
    return out
