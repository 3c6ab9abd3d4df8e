"""
Moments of a distribution: particle flux V, energy-momentum tensor T, entropy
flux h and the scalar S that fixes gamma, plus the Eckart decomposition of V.
"""

import math
from dataclasses import dataclass

import numpy as np

from marle_core import minkowski_dot
from marle_utils import NegativeTimeComponent, NonTimelikeFlux
from phase_grid import Distribution, reduce_pI


@dataclass(frozen=True)
class MomentSet:
    V: np.ndarray   # particle flux, (..., 4)
    T: np.ndarray   # energy-momentum tensor, (..., 4, 4)
    h: np.ndarray   # entropy flux, (..., 4)
    S: object       # int int f (1 + I/mc^2)^-1 phi dI dp/p0


@dataclass(frozen=True)
class EckartFrame:
    n_f: float
    U_f: np.ndarray


def entropy_density(values):
    """f ln f with the limit value 0 at f = 0."""
    values = np.asarray(values, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(values > 0, values * np.log(np.where(values > 0, values, 1.0)), 0.0)


def _internal_factor(grid):
    """1 + I/mc^2 along the internal-energy axis."""
    return 1.0 + grid.s_nodes


def compute_moments(f):
    """
    V^mu, T^munu, h^mu and S of a distribution.

    Args:
        f: Distribution (a leading cell axis gives one set of moments per cell)

    Returns:
        MomentSet
    """
    grid = f.grid
    consts = grid.consts
    mc = consts.mc
    pmu = grid.four_momenta
    velocity = pmu / grid.p0[:, None]
    energy = consts.mc2 + grid.I_nodes

    V = mc * np.stack([reduce_pI(f, velocity[:, mu][:, None]) for mu in range(4)], axis=-1)

    T = np.zeros(np.shape(V)[:-1] + (4, 4))
    for mu in range(4):
        for nu in range(mu, 4):
            weight = (velocity[:, mu] * pmu[:, nu])[:, None] * energy[None, :]
            T[..., mu, nu] = T[..., nu, mu] = reduce_pI(f, weight) / mc

    flnf = Distribution(entropy_density(f.values), grid, signed=True)
    h = -consts.k_B * consts.c * np.stack(
        [reduce_pI(flnf, velocity[:, mu][:, None]) for mu in range(4)], axis=-1)

    S = reduce_pI(f, (1.0 / grid.p0)[:, None] / _internal_factor(grid)[None, :])
    return MomentSet(V=V, T=T, h=h, S=S)


def conserved_quantities(f):
    """
    Quantities conserved by the collision operator.

    Returns:
        tuple: (N, E) with N = int int f phi and E^mu = T^{0 mu}
    """
    grid = f.grid
    consts = grid.consts
    energy = consts.mc2 + grid.I_nodes
    pmu = grid.four_momenta
    N = reduce_pI(f, 1.0)
    E = np.stack([reduce_pI(f, pmu[:, mu][:, None] * energy[None, :]) for mu in range(4)],
                 axis=-1) / consts.mc
    return N, E


def eckart_decompose(ms, consts):
    """
    Split V^mu = m n_f U_f^mu.

    n_f comes from the Minkowski norm of V rather than a difference of
    squares, which loses all digits at large boosts.

    Args:
        ms: MomentSet of a single distribution
        consts: Constants

    Returns:
        EckartFrame
    """
    V = np.asarray(ms.V, dtype=float)
    norm2 = float(minkowski_dot(V, V))
    if not norm2 > 0:
        raise NonTimelikeFlux(
            f"particle flux is not timelike (V.V = {norm2:.3e}); the distribution is "
            f"either too close to the momentum cutoff or under-resolved")
    if not V[0] > 0:
        raise NegativeTimeComponent(f"particle flux has V^0 = {V[0]:.3e}")
    n_f = math.sqrt(norm2) / consts.mc
    return EckartFrame(n_f=n_f, U_f=V / (consts.m * n_f))


def scalar_moment_ratio(ms, ef):
    """R = S/n_f, the value the Juttner ratio has to match."""
    return float(ms.S) / ef.n_f


def number_density_from_frame(f, ef):
    """(1/c) int int U_f.p f phi dI dp/p0, which reproduces n_f."""
    grid = f.grid
    projection = minkowski_dot(ef.U_f, grid.four_momenta) / grid.p0
    return reduce_pI(f, projection[:, None]) / grid.consts.c
