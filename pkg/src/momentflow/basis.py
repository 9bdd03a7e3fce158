"""Multi-index bookkeeping and Hermite-basis tables.

Coefficient arrays are stored densely in graded lexicographic order: all
multi-indices of total degree 0, then degree 1, and so on.  The first
``basis_size(m)`` slots of an order-M array are therefore exactly the
coefficients of total degree <= m for any m <= M, which makes truncation
between orders a prefix operation.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np


class MultiIndex(NamedTuple):
    """Velocity-space multi-index (a1, a2, a3)."""

    a1: int
    a2: int
    a3: int

    @property
    def degree(self) -> int:
        return self.a1 + self.a2 + self.a3


#: Unit multi-indices along the three velocity axes.
E1, E2, E3 = MultiIndex(1, 0, 0), MultiIndex(0, 1, 0), MultiIndex(0, 0, 1)


def basis_size(order: int) -> int:
    """Number of multi-indices with total degree <= order."""
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    return math.comb(order + 3, 3)


def hermite_eval(n: int, x):
    """Probabilists' Hermite polynomial He_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


def hermite_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """He_0..He_n_max evaluated at x; shape (len(x), n_max + 1)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n_max + 1,))
    out[..., 0] = 1.0
    if n_max >= 1:
        out[..., 1] = x
    for k in range(1, n_max):
        out[..., k + 1] = x * out[..., k] - k * out[..., k - 1]
    return out


def largest_hermite_root(degree: int) -> float:
    """Largest root of He_degree; the dimensionless spectral radius factor."""
    nodes, _ = np.polynomial.hermite_e.hermegauss(degree)
    return float(nodes[-1])


def _graded_indices(order: int) -> list[MultiIndex]:
    out = []
    for total in range(order + 1):
        block = []
        for a1 in range(total + 1):
            for a2 in range(total - a1 + 1):
                block.append(MultiIndex(a1, a2, total - a1 - a2))
        block.sort()
        out.extend(block)
    return out


class MomentBasis:
    """Index tables for the moment expansion of a given order.

    The ``lower``/``raise`` maps send a slot to the slot of a shifted
    multi-index, with ``self.size`` as the sentinel for "out of range".
    Gathers therefore run against coefficient arrays padded with one
    trailing zero column (see :meth:`pad`).
    """

    def __init__(self, order: int):
        if order < 2:
            raise ValueError(f"moment order must be >= 2, got {order}")
        self.order = order
        indices = _graded_indices(order)
        self.indices = indices
        self.size = len(indices)
        assert self.size == basis_size(order)

        alpha = np.array(indices, dtype=np.int64)  # (size, 3)
        self.alpha = alpha
        self.degrees = alpha.sum(axis=1)
        self.half_degrees = self.degrees / 2.0

        lookup = np.full((order + 2, order + 2, order + 2), self.size, dtype=np.int64)
        for pos, idx in enumerate(indices):
            lookup[idx] = pos
        self._lookup = lookup

        # alpha - k*e_d for k = 1..order, one gather map per (axis, k)
        self.lower_shift = []
        # alpha - 2k*e_d for k = 1..order//2
        self.lower_scale = []
        # stacked variants with the identity as row 0, for batched gathers
        self.shift_matrix = []
        self.scale_matrix = []
        identity = np.arange(self.size, dtype=np.int64)
        for d in range(3):
            shift_maps = []
            for k in range(1, order + 1):
                shifted = alpha.copy()
                shifted[:, d] -= k
                shift_maps.append(self._positions(shifted))
            self.lower_shift.append(shift_maps)
            self.shift_matrix.append(np.vstack([identity] + shift_maps))
            scale_maps = []
            for k in range(1, order // 2 + 1):
                shifted = alpha.copy()
                shifted[:, d] -= 2 * k
                scale_maps.append(self._positions(shifted))
            self.lower_scale.append(scale_maps)
            self.scale_matrix.append(np.vstack([identity] + scale_maps))

        # alpha + e_1 where the total degree stays <= order, else sentinel;
        # this encodes the top-order closure of the hyperbolic moment model.
        raised = alpha.copy()
        raised[:, 0] += 1
        raise1 = self._positions(raised)
        raise1[self.degrees == order] = self.size
        self.raise1 = raise1
        self.alpha1_plus1 = (alpha[:, 0] + 1).astype(float)

        self.pos_e = np.array([self.position(E1), self.position(E2), self.position(E3)])
        self.pos_2e = np.array([self.position(MultiIndex(*(2 * np.eye(3, dtype=int)[d]))) for d in range(3)])
        if order >= 3:
            self.pos_3e = np.array(
                [self.position(MultiIndex(*(3 * np.eye(3, dtype=int)[d]))) for d in range(3)]
            )
            # pos_heat[i, d] = slot of 2*e_d + e_i
            self.pos_heat = np.array(
                [
                    [
                        self.position(
                            MultiIndex(*(2 * np.eye(3, dtype=int)[d] + np.eye(3, dtype=int)[i]))
                        )
                        for d in range(3)
                    ]
                    for i in range(3)
                ]
            )
        else:
            self.pos_3e = None
            self.pos_heat = None
        self.pos_pair = np.array(
            [
                [self.position(MultiIndex(*(np.eye(3, dtype=int)[i] + np.eye(3, dtype=int)[j]))) for j in range(3)]
                for i in range(3)
            ]
        )

        fact = np.array([math.factorial(a1) * math.factorial(a2) * math.factorial(a3) for a1, a2, a3 in indices])
        self.inv_factorial = 1.0 / fact

        # slots of the pure wall-normal line (n, 0, 0), n = 0..order; the only
        # slots with a nonzero full-space marginal in the x2, x3 directions
        self.pos_axis0_line = np.array([self.position(MultiIndex(n, 0, 0)) for n in range(order + 1)])

        self.max_hermite_root = largest_hermite_root(order + 1)

        # Degree-blocked recurrence tables for anisotropic-Gaussian moments:
        # for each even degree g, slot s of that block is produced from the
        # block at degree g-2 via m[s] = sum_q A[p(s), q] * w[s, q] * m[j(s, q)].
        self._gauss_blocks = []
        for g in range(2, order + 1, 2):
            slots = np.nonzero(self.degrees == g)[0]
            p = np.argmax(alpha[slots] > 0, axis=1)
            gamma = alpha[slots] - np.eye(3, dtype=np.int64)[p]
            weights = gamma.astype(float)  # (n_g, 3)
            gathers = np.empty((len(slots), 3), dtype=np.int64)
            for q in range(3):
                lowered = gamma - np.eye(3, dtype=np.int64)[q]
                gathers[:, q] = self._positions(lowered)
            self._gauss_blocks.append((slots, p, gathers, weights))

    def _positions(self, indices: np.ndarray) -> np.ndarray:
        valid = (indices >= 0).all(axis=1)
        clipped = np.clip(indices, 0, self.order + 1)
        pos = self._lookup[clipped[:, 0], clipped[:, 1], clipped[:, 2]]
        return np.where(valid, pos, self.size)

    def position(self, idx) -> int:
        a1, a2, a3 = idx
        if min(a1, a2, a3) < 0 or a1 + a2 + a3 > self.order:
            raise KeyError(f"multi-index {idx!r} outside order-{self.order} basis")
        return int(self._lookup[a1, a2, a3])

    def index(self, pos: int) -> MultiIndex:
        return self.indices[pos]

    def pad(self, coeffs: np.ndarray) -> np.ndarray:
        """Append a zero column so sentinel gathers read zeros."""
        shape = coeffs.shape[:-1] + (1,)
        return np.concatenate([coeffs, np.zeros(shape)], axis=-1)

    def __repr__(self):
        return f"MomentBasis(order={self.order}, size={self.size})"


@lru_cache(maxsize=64)
def get_basis(order: int) -> MomentBasis:
    return MomentBasis(order)
