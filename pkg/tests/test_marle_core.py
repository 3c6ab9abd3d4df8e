import math

import numpy as np
import pytest

from marle_core import (METRIC, Constants, NONDIMENSIONAL, apply_boost, apply_inverse_boost,
                        boost_from_velocity, four_vector, four_velocity_from_spatial,
                        minkowski_dot, on_shell_momentum, state_density)
from marle_utils import InvalidConstants, NegativeInternalEnergy, NonFiniteInput


def random_four_velocities(rng, consts, count=100, max_speed=0.99):
    """Timelike four-velocities with 3-speeds up to max_speed * c in random directions."""
    direction = rng.normal(size=(count, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    speed = rng.uniform(0.0, max_speed, size=count) * consts.c
    lorentz = 1.0 / np.sqrt(1.0 - (speed / consts.c) ** 2)
    return [four_velocity_from_spatial(lorentz[k] * speed[k] * direction[k], consts)
            for k in range(count)]


class TestConstants:

    def test_defaults_are_nondimensional(self):
        assert NONDIMENSIONAL == Constants(c=1.0, m=1.0, k_B=1.0, tau=1.0, sigma=0.0)
        assert NONDIMENSIONAL.mc == 1.0
        assert NONDIMENSIONAL.mc2 == 1.0

    def test_sigma_must_exceed_minus_one(self):
        with pytest.raises(InvalidConstants, match="sigma must exceed -1"):
            Constants(sigma=-1.5)
        with pytest.raises(InvalidConstants):
            Constants(sigma=-1.0)

    @pytest.mark.parametrize("name", ["c", "m", "k_B", "tau"])
    def test_nonpositive_rejected(self, name):
        with pytest.raises(InvalidConstants):
            Constants(**{name: 0.0})

    def test_infinite_tau_means_collisionless(self):
        assert Constants(tau=math.inf).tau == math.inf
        with pytest.raises(InvalidConstants):
            Constants(c=math.inf)


class TestFourVectors:

    def test_minkowski_dot_signature(self):
        a = four_vector(2.0, 1.0, 0.0, 0.0)
        assert minkowski_dot(a, a) == pytest.approx(3.0)
        assert minkowski_dot(four_vector(1.0, 2.0), four_vector(1.0, 2.0)) == pytest.approx(-3.0)

    def test_four_velocity_normalization(self):
        consts = Constants(c=4.0)
        U = four_velocity_from_spatial([3.0, 0.0, 0.0], consts)
        np.testing.assert_allclose(U, [5.0, 3.0, 0.0, 0.0])
        assert minkowski_dot(U, U) == pytest.approx(16.0, rel=1e-14)

    def test_nonfinite_velocity_rejected(self):
        with pytest.raises(NonFiniteInput):
            four_velocity_from_spatial([math.nan, 0.0, 0.0], NONDIMENSIONAL)

    def test_on_shell(self):
        consts = Constants(m=2.0, c=3.0)
        p = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 2.0]])
        P = on_shell_momentum(p, consts)
        np.testing.assert_allclose(minkowski_dot(P, P), consts.mc ** 2, rtol=1e-14)
        assert P[0, 0] == pytest.approx(6.0)


class TestBoostGroup:
    """Lorentz-group properties of the rest-frame boost."""

    @pytest.mark.parametrize("c", [1.0, 4.0])
    def test_random_boosts(self, c):
        consts = Constants(c=c)
        rng = np.random.default_rng(42)
        for U in random_four_velocities(rng, consts):
            b = boost_from_velocity(U, consts)
            lam = b.matrix
            np.testing.assert_allclose(lam.T @ METRIC @ lam, METRIC, atol=1e-12)
            np.testing.assert_allclose(apply_boost(b, U), [c, 0.0, 0.0, 0.0], atol=1e-12 * c)
            np.testing.assert_allclose(b.inverse @ lam, np.eye(4), atol=1e-12)

    def test_inner_products_preserved(self):
        rng = np.random.default_rng(42)
        vectors = rng.normal(size=(50, 4))
        for U in random_four_velocities(rng, NONDIMENSIONAL, count=20):
            b = boost_from_velocity(U, NONDIMENSIONAL)
            boosted = apply_boost(b, vectors)
            np.testing.assert_allclose(minkowski_dot(boosted, boosted[::-1]),
                                       minkowski_dot(vectors, vectors[::-1]), atol=1e-10)

    def test_inverse_boost_round_trip(self):
        consts = Constants(c=2.0)
        U = four_velocity_from_spatial([1.0, -0.5, 2.0], consts)
        b = boost_from_velocity(U, consts)
        v = np.array([3.0, 0.1, -0.2, 0.4])
        np.testing.assert_allclose(apply_inverse_boost(b, apply_boost(b, v)), v, atol=1e-12)
        np.testing.assert_allclose(apply_inverse_boost(b, four_vector(consts.c)), U, atol=1e-12)

    def test_rest_frame_is_identity(self):
        b = boost_from_velocity(four_vector(1.0), NONDIMENSIONAL)
        np.testing.assert_array_equal(b.matrix, np.eye(4))

    def test_tiny_velocity_below_threshold_is_identity(self):
        U = four_velocity_from_spatial([1e-14, 0.0, 0.0], NONDIMENSIONAL)
        np.testing.assert_array_equal(boost_from_velocity(U, NONDIMENSIONAL).matrix, np.eye(4))

    def test_bad_input(self):
        with pytest.raises(NonFiniteInput):
            boost_from_velocity([1.0, math.inf, 0.0, 0.0], NONDIMENSIONAL)
        with pytest.raises(NonFiniteInput):
            boost_from_velocity([1.0, 0.0], NONDIMENSIONAL)


class TestStateDensity:

    def test_zero_to_the_zero_is_one(self):
        assert state_density(0.0, 0.0) == 1.0

    def test_power_law(self):
        np.testing.assert_allclose(state_density(np.array([1.0, 4.0]), 0.5), [1.0, 2.0])
        assert state_density(0.0, 1.0) == 0.0

    def test_negative_energy_rejected(self):
        with pytest.raises(NegativeInternalEnergy):
            state_density(-1e-3, 0.0)
