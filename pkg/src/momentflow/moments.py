"""Moment states, basis-parameter transformations, and equilibrium expansions.

A state is a truncated Hermite expansion around parameters (u, theta).
Changing expansion parameters is an exact lower-triangular map on the
coefficients: shifting the center by delta along axis d applies
exp(-delta * D_d) where (D_d f)_alpha = f_{alpha - e_d}, and rescaling the
temperature by dtheta applies exp(-(dtheta/2) * sum_d D_d^2).  Both series
terminate because the lowering operators are nilpotent on a fixed slot, so
the transformation preserves all velocity moments up to the truncation
order exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .basis import MomentBasis, get_basis
from .errors import ModelBreakdownError, RealizabilityError

#: Weight of the heat-flux correction in the Shakhov equilibrium: each of the
#: third-order slots 2e_d + e_i carries (1 - Pr) * q_i * SHAKHOV_Q_WEIGHT.
SHAKHOV_Q_WEIGHT = 0.2


class CollisionKind(Enum):
    BGK = "bgk"
    SHAKHOV = "shakhov"
    ES_BGK = "es-bgk"


@dataclass(frozen=True)
class CollisionModel:
    kind: CollisionKind
    prandtl: float = 1.0

    def __post_init__(self):
        if self.prandtl <= 0:
            raise ValueError(f"Prandtl number must be positive, got {self.prandtl}")
        if self.kind is CollisionKind.BGK and self.prandtl != 1.0:
            # BGK is the Pr = 1 degenerate case of both generalized models.
            object.__setattr__(self, "prandtl", 1.0)


def _readonly(arr: np.ndarray) -> np.ndarray:
    view = np.asarray(arr, dtype=float).view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True)
class MomentState:
    """Single-cell truncated expansion around (u, theta)."""

    basis: MomentBasis
    u: np.ndarray  # (3,)
    theta: float
    coeffs: np.ndarray  # (basis.size,)

    def __post_init__(self):
        u = _readonly(np.asarray(self.u, dtype=float).reshape(3))
        coeffs = _readonly(np.asarray(self.coeffs, dtype=float).reshape(self.basis.size))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs[0] <= 0:
            raise RealizabilityError(f"non-positive density {coeffs[0]}")
        if self.theta <= 0:
            raise RealizabilityError(f"non-positive temperature {self.theta}")

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def rho(self) -> float:
        return float(self.coeffs[0])


@dataclass(frozen=True)
class MacroQuantities:
    rho: float
    u: np.ndarray  # (3,)
    theta: float
    sigma: np.ndarray  # (3, 3), trace-free
    q: np.ndarray  # (3,)


def maxwellian_state(basis_or_order, rho: float, u, theta: float) -> MomentState:
    basis = basis_or_order if isinstance(basis_or_order, MomentBasis) else get_basis(basis_or_order)
    coeffs = np.zeros(basis.size)
    coeffs[0] = rho
    return MomentState(basis, np.asarray(u, dtype=float), theta, coeffs)


# ---------------------------------------------------------------------------
# Batched coefficient kernels.  ``coeffs`` has shape (..., basis.size); the
# leading axes are typically mesh cells.  Kernels never mutate their inputs.
# ---------------------------------------------------------------------------

def _nilpotent_apply(basis, coeffs, scalings, gather_matrix):
    """out_j = sum_k scalings[..., k] * padded(coeffs)[..., gather_matrix[k, j]].

    One batched gather plus one contraction; the k = 0 row of the matrix is
    the identity, so the series includes the unchanged term.
    """
    ext = basis.pad(coeffs)
    terms = ext[..., gather_matrix]  # (..., K+1, size)
    return np.matmul(scalings[..., None, :], terms)[..., 0, :]


def _series(values, nk):
    """Rows of (-values)^k / k! for k = 0..nk-1, vectorized over values."""
    out = np.empty(values.shape + (nk,))
    out[..., 0] = 1.0
    for k in range(1, nk):
        out[..., k] = out[..., k - 1] * (-values) / k
    return out


def _axis_transform(basis, coeffs, delta, dtheta, axis):
    """exp(-delta * D_axis - (dtheta/2) * D_axis^2) in one application.

    Both operators are powers of the same lowering operator, so their
    exponentials combine into a single polynomial in D_axis whose degree is
    bounded by the order; the coefficients are the Cauchy product of the two
    scalar series.
    """
    delta = np.asarray(delta, dtype=float)
    dtheta = np.asarray(dtheta, dtype=float)
    shifting = bool(np.any(delta))
    scaling = bool(np.any(dtheta))
    if not shifting and not scaling:
        return coeffs
    nk = basis.shift_matrix[axis].shape[0]
    lead = np.broadcast_shapes(delta.shape, dtheta.shape)
    if not scaling:
        fused = np.broadcast_to(_series(delta, nk), lead + (nk,))
    else:
        sc = _series(dtheta / 2.0, nk // 2 + 1)
        fused = np.zeros(lead + (nk,))
        if shifting:
            sh = _series(delta, nk)
            for l in range(sc.shape[-1]):
                fused[..., 2 * l:] += sc[..., l, None] * sh[..., : nk - 2 * l]
        else:
            fused[..., 0::2] = sc[..., : (nk + 1) // 2]
    return _nilpotent_apply(basis, coeffs, fused, basis.shift_matrix[axis])


def shift_coeffs(basis: MomentBasis, coeffs: np.ndarray, delta, axis: int) -> np.ndarray:
    """exp(-delta * D_axis) applied to the coefficient array."""
    return _axis_transform(basis, coeffs, np.asarray(delta, dtype=float), 0.0, axis)


def scale_coeffs(basis: MomentBasis, coeffs: np.ndarray, dtheta) -> np.ndarray:
    """exp(-(dtheta/2) * sum_d D_d^2) applied axis by axis."""
    dtheta = np.asarray(dtheta, dtype=float)
    out = coeffs
    for d in range(3):
        out = _axis_transform(basis, out, 0.0, dtheta, d)
    return out


def project_coeffs(
    basis: MomentBasis,
    coeffs: np.ndarray,
    u_from: np.ndarray,
    theta_from,
    u_to: np.ndarray,
    theta_to,
) -> np.ndarray:
    """Re-express coefficients in the basis with parameters (u_to, theta_to).

    Moments of total degree <= basis.order are preserved exactly.
    """
    u_from = np.asarray(u_from, dtype=float)
    u_to = np.asarray(u_to, dtype=float)
    dtheta = np.asarray(theta_to, dtype=float) - np.asarray(theta_from, dtype=float)
    out = coeffs
    for d in range(3):
        out = _axis_transform(basis, out, u_to[..., d] - u_from[..., d], dtheta, d)
    return out


def recover_parameters(basis: MomentBasis, coeffs: np.ndarray, u: np.ndarray, theta):
    """Mean velocity and temperature of an expansion in a possibly off-center basis.

    Closed form in the coefficients of degree <= 2: the first-order
    coefficients carry the velocity offset and, together with the trace of
    the second-order block, the temperature offset.
    """
    rho = coeffs[..., 0]
    f_e = coeffs[..., basis.pos_e]  # (..., 3)
    du = f_e / rho[..., None]
    u_new = np.asarray(u, dtype=float) + du
    trace2 = coeffs[..., basis.pos_2e].sum(axis=-1)
    theta_new = np.asarray(theta, dtype=float) + (2.0 * trace2 - (f_e**2).sum(axis=-1) / rho) / (3.0 * rho)
    return rho, u_new, theta_new


def adapt_coeffs(basis: MomentBasis, coeffs: np.ndarray, u: np.ndarray, theta):
    """Re-center an expansion on its own mean velocity and temperature.

    Returns (u_new, theta_new, coeffs_new).  Raises RealizabilityError when
    the recovered density or temperature is non-positive.
    """
    rho = coeffs[..., 0]
    if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
        bad = np.argwhere(~(rho > 0))
        raise RealizabilityError(
            f"non-positive density {np.min(rho):.6g}", cell=bad[0].tolist() if bad.size else None
        )
    rho, u_new, theta_new = recover_parameters(basis, coeffs, u, theta)
    if np.any(theta_new <= 0) or not np.all(np.isfinite(theta_new)):
        bad = np.argwhere(~(theta_new > 0))
        raise RealizabilityError(
            f"non-positive temperature {np.min(theta_new):.6g}",
            cell=bad[0].tolist() if bad.size else None,
        )
    new_coeffs = project_coeffs(basis, coeffs, u, theta, u_new, theta_new)
    return u_new, theta_new, new_coeffs


def macros_from_coeffs(basis: MomentBasis, coeffs: np.ndarray, u: np.ndarray, theta):
    """Stress tensor and heat flux of adapted coefficient arrays.

    sigma_ij = (1 + delta_ij) f_{e_i + e_j};  q_i = 2 f_{3 e_i} + sum_d f_{2 e_d + e_i}.
    """
    lead = coeffs.shape[:-1]
    sigma = np.empty(lead + (3, 3))
    for i in range(3):
        for j in range(3):
            sigma[..., i, j] = (2.0 if i == j else 1.0) * coeffs[..., basis.pos_pair[i, j]]
    if basis.pos_3e is not None:
        q = 2.0 * coeffs[..., basis.pos_3e] + coeffs[..., basis.pos_heat].sum(axis=-1)
    else:
        q = np.zeros(lead + (3,))
    return sigma, q


# ---------------------------------------------------------------------------
# Equilibrium expansions of the three relaxation models, in the adapted basis.
# ---------------------------------------------------------------------------

def _es_tensor(rho, theta, sigma, prandtl):
    """Anisotropy matrix A = Lambda/theta - I of the ES-BGK Gaussian."""
    return (1.0 - 1.0 / prandtl) * sigma / (rho * theta)[..., None, None]


def _check_spd(lam: np.ndarray):
    """Sylvester criterion on the (..., 3, 3) symmetric tensor Lambda."""
    d1 = lam[..., 0, 0]
    d2 = lam[..., 0, 0] * lam[..., 1, 1] - lam[..., 0, 1] * lam[..., 1, 0]
    d3 = (
        lam[..., 0, 0] * (lam[..., 1, 1] * lam[..., 2, 2] - lam[..., 1, 2] * lam[..., 2, 1])
        - lam[..., 0, 1] * (lam[..., 1, 0] * lam[..., 2, 2] - lam[..., 1, 2] * lam[..., 2, 0])
        + lam[..., 0, 2] * (lam[..., 1, 0] * lam[..., 2, 1] - lam[..., 1, 1] * lam[..., 2, 0])
    )
    if np.any(d1 <= 0) or np.any(d2 <= 0) or np.any(d3 <= 0):
        raise ModelBreakdownError("anisotropic-Gaussian tensor is not positive definite")


def gaussian_hermite_moments(basis: MomentBasis, a: np.ndarray) -> np.ndarray:
    """E[He_alpha(v)] for v ~ N(0, I + A), for every alpha in the basis.

    Generating-function recurrence: m_{gamma + e_p} = sum_q A_pq gamma_q
    m_{gamma - e_q}; odd total degrees vanish.
    """
    lead = a.shape[:-2]
    ext = np.zeros(lead + (basis.size + 1,))
    ext[..., 0] = 1.0
    for slots, p, gathers, weights in basis._gauss_blocks:
        contrib = a[..., p, :] * weights * ext[..., gathers]  # (..., n_g, 3)
        ext[..., slots] = contrib.sum(axis=-1)
    return ext[..., :-1]


def equilibrium_coeffs_batch(
    basis: MomentBasis,
    coeffs: np.ndarray,
    u: np.ndarray,
    theta,
    model: CollisionModel,
) -> np.ndarray:
    """Expansion of the model equilibrium in the state's own adapted basis."""
    theta = np.asarray(theta, dtype=float)
    rho = coeffs[..., 0]
    out = np.zeros_like(coeffs)
    out[..., 0] = rho
    if model.kind is CollisionKind.BGK or model.prandtl == 1.0:
        return out
    if model.kind is CollisionKind.SHAKHOV:
        if basis.pos_3e is None:
            return out
        _, q = macros_from_coeffs(basis, coeffs, u, theta)
        corr = (1.0 - model.prandtl) * SHAKHOV_Q_WEIGHT * q  # (..., 3)
        for i in range(3):
            for d in range(3):
                out[..., basis.pos_heat[i, d]] = corr[..., i]
        return out
    if model.kind is CollisionKind.ES_BGK:
        sigma, _ = macros_from_coeffs(basis, coeffs, u, theta)
        a = _es_tensor(rho, theta, sigma, model.prandtl)
        lam = theta[..., None, None] * (np.eye(3) + a)
        _check_spd(lam)
        m = gaussian_hermite_moments(basis, a)
        sqrt_th = np.sqrt(theta)
        powers = np.empty(theta.shape + (basis.order + 1,))
        powers[..., 0] = 1.0
        for k in range(1, basis.order + 1):
            powers[..., k] = powers[..., k - 1] * sqrt_th
        theta_pow = powers[..., basis.degrees]
        return rho[..., None] * theta_pow * basis.inv_factorial * m
    raise ValueError(f"unknown collision model {model.kind}")


# ---------------------------------------------------------------------------
# Single-state convenience wrappers.
# ---------------------------------------------------------------------------

def project_to_params(state: MomentState, u_new, theta_new, order_out: int | None = None) -> MomentState:
    """Transform a state into the basis with parameters (u_new, theta_new).

    The transformation is degree-triangular, so truncating to a lower order
    first and transforming within that order is exact.
    """
    theta_new = float(theta_new)
    if theta_new <= 0:
        raise ValueError(f"target temperature must be positive, got {theta_new}")
    order_out = state.order if order_out is None else order_out
    if order_out > state.order:
        raise ValueError(f"cannot project order {state.order} up to {order_out}")
    basis = state.basis if order_out == state.order else get_basis(order_out)
    coeffs = state.coeffs[: basis.size]
    new = project_coeffs(basis, coeffs, state.u, state.theta, np.asarray(u_new, dtype=float), theta_new)
    return MomentState(basis, np.asarray(u_new, dtype=float), theta_new, new)


def adapt(state: MomentState) -> MomentState:
    """Return the state re-centered on its own mean velocity and temperature."""
    u_new, theta_new, coeffs = adapt_coeffs(state.basis, state.coeffs, state.u, state.theta)
    return MomentState(state.basis, u_new, float(theta_new), coeffs)


def extract_macros(state: MomentState) -> MacroQuantities:
    sigma, q = macros_from_coeffs(state.basis, state.coeffs, state.u, state.theta)
    return MacroQuantities(rho=state.rho, u=state.u.copy(), theta=state.theta, sigma=sigma, q=q)


def equilibrium_coeffs(macros: MacroQuantities, model: CollisionModel, order: int) -> np.ndarray:
    """Equilibrium expansion coefficients from macroscopic quantities alone."""
    basis = get_basis(order)
    # Place sigma and q into representative coefficient slots of an adapted
    # state carrying those macros, then reuse the batch path so every model
    # shares one implementation.  q_i = 2 f_{3e_i} + sum_d f_{2e_d+e_i}
    # with only the 3e_i slot populated gives 3 f_{3e_i}.
    coeffs = np.zeros(basis.size)
    coeffs[0] = macros.rho
    for i in range(3):
        for j in range(3):
            coeffs[basis.pos_pair[i, j]] = macros.sigma[i, j] / (2.0 if i == j else 1.0)
    if basis.pos_3e is not None:
        for i in range(3):
            coeffs[basis.pos_3e[i]] = macros.q[i] / 3.0
    return equilibrium_coeffs_batch(basis, coeffs, np.asarray(macros.u, dtype=float), macros.theta, model)
