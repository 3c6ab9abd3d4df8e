"""
Discrete phase space: a Cartesian momentum grid times an internal-energy grid,
the sample container Distribution, and the weighted reduction every moment
integral is built on.

The internal-energy weights already contain the state density, so that
sum_j g(I_j) I_weights[j] approximates int_0^inf g(I) I**sigma dI.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn, gammainc, roots_jacobi, roots_legendre

from marle_core import NONDIMENSIONAL, on_shell_momentum
from marle_utils import GridMismatch, InvalidGridConfig, NegativeDistribution, logger

# ------------------------------------------------------------------
# 1) Grid configuration and cutoff rules
# ------------------------------------------------------------------

def default_p_max(gamma_min, consts):
    """Momentum cutoff keeping the truncated Juttner tail below ~1e-10."""
    return (8.0 / gamma_min + 8.0) * consts.mc


def default_s_max(gamma_min):
    """Internal-energy cutoff in units of mc^2."""
    return 40.0 / gamma_min + 40.0


@dataclass(frozen=True)
class GridConfig:
    """
    Phase-grid parameters.

    Args:
        n_p: momentum nodes per axis (even, >= 8)
        p_max: momentum half-extent; None applies default_p_max
        n_i: internal-energy nodes (>= 4, multiple of the panel size)
        s_max: internal-energy extent in units of mc^2; None applies default_s_max
        gamma_min: smallest gamma the run expects, drives the cutoff rules
        nodes_per_panel: Gauss nodes per internal-energy panel
        panel_ratio: geometric growth of consecutive panels
        quad_tol: relative tolerance of the build-time state-density check
    """
    n_p: int = 16
    p_max: float = None
    n_i: int = 48
    s_max: float = None
    gamma_min: float = 0.5
    nodes_per_panel: int = 8
    panel_ratio: float = 2.0
    quad_tol: float = 1e-8

    def __post_init__(self):
        if self.n_p < 8 or self.n_p % 2:
            raise InvalidGridConfig(f"n_p must be even and >= 8, got {self.n_p}")
        if self.n_i < 4:
            raise InvalidGridConfig(f"n_i must be >= 4, got {self.n_i}")
        if self.gamma_min <= 0:
            raise InvalidGridConfig(f"gamma_min must be positive, got {self.gamma_min}")
        for name in ('p_max', 's_max'):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise InvalidGridConfig(f"{name} must be positive, got {value}")
        if self.nodes_per_panel < 1:
            raise InvalidGridConfig(f"nodes_per_panel must be positive, got {self.nodes_per_panel}")
        if self.n_i % min(self.nodes_per_panel, self.n_i):
            raise InvalidGridConfig(
                f"n_i={self.n_i} is not a multiple of nodes_per_panel={self.nodes_per_panel}")
        if self.panel_ratio <= 1:
            raise InvalidGridConfig(f"panel_ratio must exceed 1, got {self.panel_ratio}")
        if self.quad_tol <= 0:
            raise InvalidGridConfig(f"quad_tol must be positive, got {self.quad_tol}")

# ------------------------------------------------------------------
# 2) Phase grid
# ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseGrid:
    consts: object
    config: GridConfig
    p: np.ndarray            # (n_nodes, 3) spatial momenta
    p0: np.ndarray           # (n_nodes,) on-shell energies / c
    p_weights: np.ndarray    # (n_nodes,) cubature weights for dp
    I_nodes: np.ndarray      # (n_i,)
    I_weights: np.ndarray    # (n_i,) weights with phi(I) folded in
    p_max: float
    s_max: float

    @property
    def shape(self):
        return (self.p0.size, self.I_nodes.size)

    @property
    def four_momenta(self):
        return np.concatenate((self.p0[:, None], self.p), axis=1)

    @property
    def s_nodes(self):
        """Internal energies in units of mc^2."""
        return self.I_nodes / self.consts.mc2


def internal_energy_rule(n_i, s_max, sigma, nodes_per_panel=8, panel_ratio=2.0):
    """
    Nodes and weights for int_0^s_max g(s) s**sigma ds.

    Panels shrink geometrically toward s = 0; the first one uses Gauss-Jacobi
    nodes so the s**sigma factor is integrated exactly, the others use
    Gauss-Legendre nodes with s**sigma multiplied into the weights.

    Returns:
        tuple: (s nodes, weights)
    """
    per_panel = min(nodes_per_panel, n_i)
    n_panels = n_i // per_panel
    edges = np.concatenate(([0.0], s_max * panel_ratio ** -np.arange(n_panels - 1, -1, -1.0)))

    x, w = roots_jacobi(per_panel, 0.0, sigma)
    half = edges[1] / 2.0
    nodes = [half * (1.0 + x)]
    weights = [w * half ** (sigma + 1.0)]

    x, w = roots_legendre(per_panel)
    for left, right in zip(edges[1:-1], edges[2:]):
        half = (right - left) / 2.0
        s = left + half * (1.0 + x)
        nodes.append(s)
        weights.append(w * half * s ** sigma)
    return np.concatenate(nodes), np.concatenate(weights)


def build_phase_grid(config, consts=NONDIMENSIONAL):
    """
    Build the momentum x internal-energy grid.

    Args:
        config: GridConfig
        consts: Constants

    Returns:
        PhaseGrid
    """
    p_max = config.p_max if config.p_max is not None else default_p_max(config.gamma_min, consts)
    s_max = config.s_max if config.s_max is not None else default_s_max(config.gamma_min)

    # Midpoint nodes, symmetric about 0 and never at p = 0
    h = 2.0 * p_max / config.n_p
    axis = -p_max + h * (np.arange(config.n_p) + 0.5)
    px, py, pz = np.meshgrid(axis, axis, axis, indexing='ij')
    p = np.stack((px.ravel(), py.ravel(), pz.ravel()), axis=1)
    p0 = on_shell_momentum(p, consts)[:, 0]
    p_weights = np.full(p0.size, h ** 3)

    s, ws = internal_energy_rule(config.n_i, s_max, consts.sigma,
                                 config.nodes_per_panel, config.panel_ratio)
    mc2 = consts.mc2
    I_nodes = mc2 * s
    I_weights = mc2 ** (consts.sigma + 1.0) * ws

    # State-density check against the truncated Gamma integral
    sigma1 = consts.sigma + 1.0
    expected = gamma_fn(sigma1) * gammainc(sigma1, s_max) * mc2 ** sigma1
    got = float(np.sum(I_weights * np.exp(-I_nodes / mc2)))
    rel_err = abs(got - expected) / expected
    if not rel_err <= config.quad_tol:
        raise InvalidGridConfig(
            f"state-density quadrature check failed: relative error {rel_err:.3e} "
            f"exceeds {config.quad_tol:.1e} (n_i={config.n_i}, s_max={s_max:g})")

    logger.info(f"Built phase grid: {config.n_p}^3 momentum nodes (p_max={p_max:g}), "
                f"{config.n_i} internal-energy nodes (s_max={s_max:g})")
    return PhaseGrid(consts=consts, config=config, p=p, p0=p0, p_weights=p_weights,
                     I_nodes=I_nodes, I_weights=I_weights, p_max=p_max, s_max=s_max)

# ------------------------------------------------------------------
# 3) Distributions
# ------------------------------------------------------------------

class Distribution:
    """
    Samples f(p_i, I_j) on a PhaseGrid, optionally with a leading cell axis.

    Args:
        values: array of shape (n_nodes, n_i) or (n_cells, n_nodes, n_i)
        grid: PhaseGrid the samples live on
        signed: allow negative entries (collision rates)
    """

    def __init__(self, values, grid, signed=False):
        values = np.asarray(values, dtype=float)
        if values.shape[-2:] != grid.shape or values.ndim not in (2, 3):
            raise GridMismatch(f"values of shape {values.shape} do not fit grid {grid.shape}")
        if not signed and np.any(values < 0):
            raise NegativeDistribution(f"distribution has negative entries (min {values.min():.3e})")
        self.values = values
        self.grid = grid
        self.signed = signed

    @property
    def n_cells(self):
        return self.values.shape[0] if self.values.ndim == 3 else None

    def cell(self, k):
        return Distribution(self.values[k], self.grid, self.signed)

    def scaled(self, factor):
        return Distribution(self.values * factor, self.grid, self.signed)

    def floor_negative(self):
        """Clamp negative samples to 0 and log the mass that was removed."""
        negative = np.minimum(self.values, 0.0)
        if not np.any(negative):
            return Distribution(self.values, self.grid)
        lost = -reduce_pI(Distribution(negative, self.grid, signed=True), 1.0)
        logger.warning(f"Floored negative samples; mass removed: {np.sum(lost):.3e}")
        return Distribution(self.values - negative, self.grid)


def check_same_grid(*distributions):
    grid = distributions[0].grid
    for f in distributions[1:]:
        if f.grid is not grid:
            raise GridMismatch("distributions live on different phase grids")
    return grid

# ------------------------------------------------------------------
# 4) Reductions
# ------------------------------------------------------------------

def pairwise_sum(values, n_axes=2):
    """
    Sum over the trailing n_axes by an explicit balanced tree.

    The pairing order depends only on the array length, so results are
    reproducible for a fixed grid.
    """
    values = np.asarray(values, dtype=float)
    lead = values.shape[:values.ndim - n_axes]
    work = values.reshape(lead + (-1,))
    while work.shape[-1] > 1:
        if work.shape[-1] % 2:
            work = np.concatenate((work, np.zeros(lead + (1,))), axis=-1)
        work = work[..., 0::2] + work[..., 1::2]
    total = work[..., 0]
    return float(total) if total.ndim == 0 else total


def reduce_pI(f, weight):
    """
    sum_{i,j} f_ij w(p_i, I_j) p_weights_i I_weights_j.

    Args:
        f: Distribution
        weight: scalar, array broadcastable to the grid shape, or a callable
            taking the PhaseGrid and returning such an array

    Returns:
        float, or one value per cell when f has a cell axis
    """
    grid = f.grid
    if callable(weight):
        weight = weight(grid)
    measure = grid.p_weights[:, None] * grid.I_weights[None, :]
    return pairwise_sum(f.values * (np.asarray(weight, dtype=float) * measure))
