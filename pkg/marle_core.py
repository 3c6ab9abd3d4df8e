"""
Physical constants, Minkowski four-vector algebra, the pure Lorentz boost into
a local rest frame, and the state density of the internal energy.

Four-vectors are numpy arrays whose trailing axis has length 4 (contravariant
components a^0..a^3); every function here accepts stacks of them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from marle_utils import InvalidConstants, NegativeInternalEnergy, NonFiniteInput

# Minkowski metric, signature (+,-,-,-)
METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

# Below this spatial speed (in units of c) the boost is the identity
BOOST_EPSILON = 1e-12

# ------------------------------------------------------------------
# Constants
# ------------------------------------------------------------------

@dataclass(frozen=True)
class Constants:
    """
    Physical parameters of the model.

    Args:
        c: speed of light
        m: particle rest mass
        k_B: Boltzmann constant
        tau: relaxation time in the rest frame (math.inf means collisionless)
        sigma: exponent of the state density phi(I) = I**sigma
    """
    c: float = 1.0
    m: float = 1.0
    k_B: float = 1.0
    tau: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        for name in ('c', 'm', 'k_B'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidConstants(f"{name} must be finite and positive, got {value}")
        if math.isnan(self.tau) or self.tau <= 0:
            raise InvalidConstants(f"tau must be positive, got {self.tau}")
        if not math.isfinite(self.sigma) or self.sigma <= -1:
            raise InvalidConstants(f"sigma must exceed -1, got {self.sigma}")

    @property
    def mc(self):
        return self.m * self.c

    @property
    def mc2(self):
        return self.m * self.c ** 2


# c = m = k_B = tau = 1
NONDIMENSIONAL = Constants()

# ------------------------------------------------------------------
# Four-vectors
# ------------------------------------------------------------------

def four_vector(a0, a1=0.0, a2=0.0, a3=0.0):
    return np.array([a0, a1, a2, a3], dtype=float)


def minkowski_dot(a, b):
    """a^0 b^0 - a^1 b^1 - a^2 b^2 - a^3 b^3 over the trailing axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def four_velocity_from_spatial(u, consts):
    """
    Build U^mu = (sqrt(c^2 + |u|^2), u).

    Args:
        u: spatial part of the four-velocity (3 components)
        consts: Constants

    Returns:
        numpy.ndarray: four-velocity
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise NonFiniteInput(f"spatial velocity must be finite, got {u}")
    return np.concatenate(([math.sqrt(consts.c ** 2 + float(u @ u))], u))


def on_shell_momentum(p, consts):
    """Four-momenta (sqrt((mc)^2 + |p|^2), p) for spatial momenta of shape (..., 3)."""
    p = np.asarray(p, dtype=float)
    p0 = np.sqrt(consts.mc ** 2 + np.sum(p * p, axis=-1))
    return np.concatenate((p0[..., None], p), axis=-1)

# ------------------------------------------------------------------
# Lorentz boost
# ------------------------------------------------------------------

@dataclass(frozen=True)
class Boost:
    """Pure boost Lambda with its inverse g Lambda^T g."""
    matrix: np.ndarray
    inverse: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix=matrix, inverse=METRIC @ matrix.T @ METRIC)


def boost_from_velocity(U, consts):
    """
    Boost that carries the four-velocity U into the local rest frame (c,0,0,0).

    The spatial block uses (U^0/c - 1)/|U|^2 = 1/(c (U^0 + c)), which has no
    removable singularity at rest.

    Args:
        U: four-velocity
        consts: Constants

    Returns:
        Boost
    """
    U = np.asarray(U, dtype=float)
    if U.shape != (4,) or not np.all(np.isfinite(U)):
        raise NonFiniteInput(f"four-velocity must have 4 finite components, got {U}")
    c = consts.c
    u = U[1:]
    if math.sqrt(float(u @ u)) < BOOST_EPSILON * c:
        return Boost.from_matrix(np.eye(4))

    lam = np.empty((4, 4))
    lam[0, 0] = U[0] / c
    lam[0, 1:] = -u / c
    lam[1:, 0] = -u / c
    lam[1:, 1:] = np.eye(3) + np.outer(u, u) / (c * (U[0] + c))
    return Boost.from_matrix(lam)


def apply_boost(b, v):
    """Lambda v for four-vectors stacked along the leading axes."""
    return np.asarray(v, dtype=float) @ b.matrix.T


def apply_inverse_boost(b, v):
    """Lambda^{-1} v = g Lambda^T g v."""
    return np.asarray(v, dtype=float) @ b.inverse.T

# ------------------------------------------------------------------
# State density
# ------------------------------------------------------------------

def state_density(I, sigma):
    """
    phi(I) = I**sigma, with 0**0 = 1.

    Args:
        I: internal energy (scalar or array), must be nonnegative
        sigma: state-density exponent

    Returns:
        float or numpy.ndarray
    """
    I = np.asarray(I, dtype=float)
    if np.any(I < 0):
        raise NegativeInternalEnergy(f"internal energy must be nonnegative, got min {I.min()}")
    result = np.power(I, sigma)
    return float(result) if result.ndim == 0 else result
