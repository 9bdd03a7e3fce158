import numpy as np
import pytest

from momentflow import get_basis, maxwellian_state
from momentflow import oracle

from helpers import random_adapted_state

RNG = np.random.default_rng(555)


def test_oracle_maxwellian_matching_basis():
    u = np.array([0.2, -0.1, 0.0])
    coeffs = oracle.coeffs_from_function(oracle.maxwellian_fn(2.0, u, 0.9), 4, u, 0.9)
    assert coeffs[0] == pytest.approx(2.0, abs=1e-12)
    assert np.abs(coeffs[1:]).max() < 1e-12


def test_oracle_orthogonality_picks_single_component():
    base = oracle.maxwellian_fn(1.0, np.zeros(3), 1.0)

    def fn(xi):
        return xi[..., 0] * base(xi)

    coeffs = oracle.coeffs_from_function(fn, 3, np.zeros(3), 1.0)
    basis = get_basis(3)
    e1 = basis.position((1, 0, 0))
    assert coeffs[e1] == pytest.approx(1.0, abs=1e-12)
    others = np.delete(coeffs, e1)
    assert np.abs(others).max() < 1e-12


def test_oracle_shakhov_heat_flux_slot():
    q = np.array([0.5, 0.0, 0.0])
    fn = oracle.shakhov_fn(1.0, np.zeros(3), 1.0, q, 2.0 / 3.0)
    coeffs = oracle.coeffs_from_function(fn, 4, np.zeros(3), 1.0)
    basis = get_basis(4)
    expected = (1.0 - 2.0 / 3.0) * 0.5 / 5.0
    assert coeffs[basis.position((3, 0, 0))] == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.03333333333333333, abs=1e-15)


def test_evaluate_state_round_trip():
    state = random_adapted_state(5, RNG)
    coeffs = oracle.coeffs_from_function(
        lambda xi: oracle.evaluate_state(state, xi), 5, state.u, state.theta
    )
    np.testing.assert_allclose(coeffs, state.coeffs, atol=1e-12)


def test_evaluate_state_integrates_to_density():
    state = maxwellian_state(3, 1.7, np.array([0.1, 0.0, -0.2]), 1.2)
    from helpers import integrate_velocity

    mass = integrate_velocity(lambda xi: oracle.evaluate_state(state, xi), state.u, state.theta)
    assert mass == pytest.approx(1.7, abs=1e-12)
