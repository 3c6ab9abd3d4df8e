"""
Juttner equilibria of the polyatomic gas.

Covers the radial integrals M, Mtilde and M1..M3, the monotone ratio
Mtilde/M, the gamma root solver, evaluation of f_E on a phase grid, and the
recovery of the equilibrium parameters (n, U, gamma) from an arbitrary
distribution.

Every radial integral is stored with the factor exp(-gamma) taken out, so
cold gases (gamma in the thousands) never underflow.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn, roots_jacobi, roots_legendre

from marle_core import four_velocity_from_spatial, minkowski_dot
from marle_utils import (BracketFailure, NonFiniteInput, NonPositiveGamma, NonTimelikeFlux,
                         RatioOutOfRange, ToleranceNotReached, ValidationError, logger)
from moments import compute_moments, eckart_decompose, scalar_moment_ratio
from phase_grid import Distribution, check_same_grid

# exp(-gamma (sqrt(1+r^2) - 1)) drops below exp(-RADIAL_LOG_CUTOFF) past r_max
RADIAL_LOG_CUTOFF = 16 * math.log(10) + 12

GAUSS_ORDER = 8
MAX_PANELS = 4000
MAX_REFINEMENTS = 60
MAX_BISECTIONS = 200
MAX_EXPANSIONS = 60

DEFAULT_RADIAL_TOL = 1e-10
DEFAULT_GAMMA_TOL = 1e-10

# ------------------------------------------------------------------
# 1) Types
# ------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumParams:
    """
    Parameters of a Juttner distribution.

    Args:
        n: proper number density
        u: spatial part of the four-velocity U^mu
        gamma: mc^2/(k_B T)
    """
    n: float
    u: tuple
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, 'u', tuple(float(x) for x in self.u))
        if len(self.u) != 3 or not all(math.isfinite(x) for x in self.u):
            raise NonFiniteInput(f"spatial velocity must have 3 finite components, got {self.u}")
        if not (math.isfinite(self.n) and self.n > 0):
            raise ValidationError(f"density must be positive, got {self.n}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise NonPositiveGamma(f"gamma must be positive, got {self.gamma}")

    def four_velocity(self, consts):
        return four_velocity_from_spatial(self.u, consts)


@dataclass(frozen=True)
class RadialIntegrals:
    gamma: float
    m1: float
    m2: float
    m3: float
    consts: object

    @property
    def M1(self):
        return self.m1 * math.exp(-self.gamma)

    @property
    def M2(self):
        return self.m2 * math.exp(-self.gamma)

    @property
    def M3(self):
        return self.m3 * math.exp(-self.gamma)

    @property
    def M(self):
        return 4 * math.pi * self.consts.mc ** 3 * self.M2

    @property
    def Mtilde(self):
        return 4 * math.pi * self.consts.mc ** 2 * self.M1

    @property
    def ratio(self):
        return self.m1 / (self.consts.mc * self.m2)

# ------------------------------------------------------------------
# 2) Radial integrals
# ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _legendre(order):
    return roots_legendre(order)


@lru_cache(maxsize=32)
def _inner_rule(sigma):
    """
    Nodes and weights for int_0^64 g(t) t**sigma exp(-t) dt on panels
    [0, 2^-20], [2^-20, 2^-19], ..., [32, 64].
    """
    edges = 2.0 ** np.arange(-20, 7)
    x, w = roots_jacobi(GAUSS_ORDER, 0.0, sigma)
    half = edges[0] / 2.0
    t = half * (1.0 + x)
    nodes = [t]
    weights = [w * half ** (sigma + 1.0) * np.exp(-t)]
    x, w = _legendre(GAUSS_ORDER)
    for left, right in zip(edges[:-1], edges[1:]):
        half = (right - left) / 2.0
        t = left + half * (1.0 + x)
        nodes.append(t)
        weights.append(w * half * t ** sigma * np.exp(-t))
    return np.concatenate(nodes), np.concatenate(weights)


def _inner_integral(a, sigma):
    """J(a) = int_0^inf t**sigma exp(-t) / (1 + t/a) dt, vectorized over a."""
    t, w = _inner_rule(sigma)
    a = np.asarray(a, dtype=float)[..., None]
    return np.sum(w * a / (a + t), axis=-1)


def _radial_integrands(r, gamma, sigma):
    """Integrands of m1, m2, m3 in r = |p|/(mc), without the constant prefactors."""
    r2 = r * r
    q = np.sqrt(1.0 + r2)
    a = gamma * q
    decay = np.exp(-gamma * r2 / (q + 1.0)) * a ** -(sigma + 1.0)
    return np.stack((
        r2 / q * decay * _inner_integral(a, sigma),
        r2 * decay,
        r2 * q * decay * (1.0 + (sigma + 1.0) / a),
    ))


def _panel_sums(func, left, right):
    x, w = _legendre(GAUSS_ORDER)
    half = (right - left) / 2.0
    nodes = (left + half)[:, None] + half[:, None] * x[None, :]
    return np.sum(func(nodes) * w, axis=-1) * half


def _radial_edges(r_max):
    scaled = r_max * 2.0 ** -np.arange(0, 11.0)
    powers = 2.0 ** np.arange(-10.0, math.ceil(math.log2(r_max)))
    return np.unique(np.concatenate(([0.0], scaled, powers[powers < r_max])))


def adaptive_panels(func, edges, tol):
    """
    Integrate the components of func over [edges[0], edges[-1]].

    Each panel compares one Gauss rule with the same rule on its two halves.
    Every round accepts the panels with the smallest error estimates while
    their sum stays within half of the unspent tolerance, and splits the rest.

    Returns:
        numpy.ndarray: one integral per component of func
    """
    left, right = edges[:-1], edges[1:]
    accepted = 0.0
    spent = 0.0
    used = left.size
    for _ in range(MAX_REFINEMENTS):
        mid = (left + right) / 2.0
        coarse = _panel_sums(func, left, right)
        fine = _panel_sums(func, left, mid) + _panel_sums(func, mid, right)
        total = np.abs(accepted + fine.sum(axis=1))
        total[total == 0] = 1.0
        error = np.max(np.abs(fine - coarse) / total[:, None], axis=0)
        order = np.argsort(error)
        if spent + error.sum() <= tol:
            return accepted + fine.sum(axis=1)
        n_done = int(np.searchsorted(np.cumsum(error[order]), 0.5 * (tol - spent), side='right'))
        done = np.zeros(left.size, dtype=bool)
        done[order[:n_done]] = True
        spent += error[done].sum()
        accepted = accepted + fine[:, done].sum(axis=1)
        left, mid, right = left[~done], mid[~done], right[~done]
        used += left.size
        if used > MAX_PANELS:
            break
        left, right = np.concatenate((left, mid)), np.concatenate((mid, right))
    raise ToleranceNotReached(f"radial quadrature did not reach relative tolerance {tol:.1e} "
                              f"within {MAX_PANELS} panels")


@lru_cache(maxsize=4096)
def radial_integrals(gamma, consts, tol=DEFAULT_RADIAL_TOL):
    """
    Radial integrals M1, M2, M3 (and M, Mtilde) at a given gamma.

    M2 and M3 use the closed-form internal-energy integrals, M1 the inner
    Gauss rule of _inner_rule. The radial integral is cut at the r where
    exp(-gamma (sqrt(1+r^2)-1)) is negligible.

    Args:
        gamma: mc^2/(k_B T), positive
        consts: Constants
        tol: relative tolerance of the radial quadrature

    Returns:
        RadialIntegrals
    """
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma > 0):
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    if not tol > 0:
        raise ToleranceNotReached(f"tolerance must be positive, got {tol}")
    sigma = consts.sigma
    r_max = math.sqrt((1.0 + RADIAL_LOG_CUTOFF / gamma) ** 2 - 1.0)
    m1, m2, m3 = adaptive_panels(lambda r: _radial_integrands(r, gamma, sigma),
                                 _radial_edges(r_max), tol)
    prefactor = consts.mc2 ** (sigma + 1.0)
    gamma_sigma = gamma_fn(sigma + 1.0)
    return RadialIntegrals(gamma=gamma, m1=prefactor * m1, m2=prefactor * gamma_sigma * m2,
                           m3=prefactor * gamma_sigma * m3, consts=consts)


def ratio(gamma, consts, tol=DEFAULT_RADIAL_TOL):
    """Mtilde(gamma)/M(gamma), strictly increasing from 0 to 1/(mc)."""
    return radial_integrals(gamma, consts, tol).ratio


def upper_bound(gamma, consts):
    """ratio(gamma) <= gamma/(mc)."""
    return gamma / consts.mc


def lower_bound(gamma, consts):
    """ratio(gamma) >= sqrt(1 - (2 sigma + 5)/gamma)/(mc); nan where the radicand is <= 0."""
    radicand = 1.0 - (2.0 * consts.sigma + 5.0) / gamma
    return math.sqrt(radicand) / consts.mc if radicand > 0 else math.nan

# ------------------------------------------------------------------
# 3) Gamma solver
# ------------------------------------------------------------------

def _bracket(R, consts, radial_tol, gamma_hint):
    Rmc = R * consts.mc
    lo_bound = Rmc
    hi_bound = (2.0 * consts.sigma + 5.0) / (1.0 - Rmc * Rmc)
    if gamma_hint is not None and gamma_hint > 0:
        lo = max(gamma_hint / 2.0, lo_bound)
        hi = min(gamma_hint * 2.0, hi_bound)
        if not lo < hi:
            lo, hi = lo_bound, hi_bound
    else:
        lo, hi = lo_bound, hi_bound

    # Quadrature error can push the analytic brackets slightly off
    for _ in range(MAX_EXPANSIONS):
        if ratio(lo, consts, radial_tol) <= R:
            break
        lo /= 2.0
    else:
        raise BracketFailure(f"no lower bracket found for R = {R!r}")
    for _ in range(MAX_EXPANSIONS):
        if ratio(hi, consts, radial_tol) >= R:
            break
        hi *= 2.0
    else:
        raise BracketFailure(f"no upper bracket found for R = {R!r}")
    return lo, hi


def solve_gamma(R, consts, tol_gamma=DEFAULT_GAMMA_TOL, radial_tol=DEFAULT_RADIAL_TOL,
                gamma_hint=None):
    """
    Unique gamma with ratio(gamma) = R.

    Brackets come from the analytic bounds R mc <= gamma <= (2 sigma + 5)/(1 - (R mc)^2)
    (or from gamma_hint when given), then bisection on geometric midpoints.

    Args:
        R: target value of Mtilde/M, in (0, 1/(mc))
        consts: Constants
        tol_gamma: relative width at which bisection stops
        radial_tol: tolerance passed to radial_integrals
        gamma_hint: previous solution used to narrow the bracket

    Returns:
        float: gamma
    """
    R = float(R)
    if not (math.isfinite(R) and 0 < R < 1.0 / consts.mc):
        raise RatioOutOfRange(
            f"R = {R!r} is outside (0, 1/(mc)) = (0, {1.0 / consts.mc!r}); "
            f"the input moments are truncated or unresolved")
    if not tol_gamma > 0:
        raise BracketFailure(f"tol_gamma must be positive, got {tol_gamma}")

    lo, hi = _bracket(R, consts, radial_tol, gamma_hint)
    for iteration in range(MAX_BISECTIONS):
        if hi / lo - 1.0 <= tol_gamma:
            logger.debug(f"solve_gamma: R={R!r} -> gamma in [{lo!r}, {hi!r}] "
                         f"after {iteration} bisections")
            return math.sqrt(lo * hi)
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            raise BracketFailure(f"bisection stalled at width {hi / lo - 1.0:.3e} "
                                 f"above tol_gamma={tol_gamma:.1e}")
        if ratio(mid, consts, radial_tol) < R:
            lo = mid
        else:
            hi = mid
    raise BracketFailure(f"bisection did not reach tol_gamma={tol_gamma:.1e} "
                         f"in {MAX_BISECTIONS} iterations")

# ------------------------------------------------------------------
# 4) Juttner distributions on a grid
# ------------------------------------------------------------------

def exponents_from_params(params, consts, radial_tol=DEFAULT_RADIAL_TOL):
    """
    Write f_E = exp(alpha - (1 + I/mc^2) b_mu p^mu).

    Returns:
        tuple: (alpha, b) with b^mu = gamma U^mu / (mc^2), alpha = ln(n/M(gamma))
    """
    ri = radial_integrals(params.gamma, consts, radial_tol)
    alpha = math.log(params.n) - math.log(4 * math.pi * consts.mc ** 3 * ri.m2) + params.gamma
    b = params.gamma * params.four_velocity(consts) / consts.mc2
    return alpha, b


def params_from_exponents(alpha, b, consts, radial_tol=DEFAULT_RADIAL_TOL):
    """Inverse of exponents_from_params."""
    b = np.asarray(b, dtype=float)
    norm2 = float(minkowski_dot(b, b))
    if not (norm2 > 0 and b[0] > 0):
        raise NonTimelikeFlux(f"exponent vector b = {b} is not future timelike")
    norm = math.sqrt(norm2)
    gamma = norm * consts.m * consts.c
    U = b * consts.c / norm
    ri = radial_integrals(gamma, consts, radial_tol)
    n = math.exp(alpha - gamma) * 4 * math.pi * consts.mc ** 3 * ri.m2
    return EquilibriumParams(n=n, u=U[1:], gamma=gamma)


def juttner_from_exponents(alpha, b, grid):
    bp = minkowski_dot(np.asarray(b, dtype=float), grid.four_momenta)
    exponent = alpha - (1.0 + grid.s_nodes)[None, :] * bp[:, None]
    return Distribution(np.exp(exponent), grid)


def juttner_eval(params, grid, radial_tol=DEFAULT_RADIAL_TOL):
    """
    Sample f_E(n, U, gamma) at every node of grid.

    Args:
        params: EquilibriumParams
        grid: PhaseGrid
        radial_tol: tolerance for the normalizer M(gamma)

    Returns:
        Distribution
    """
    alpha, b = exponents_from_params(params, grid.consts, radial_tol)
    return juttner_from_exponents(alpha, b, grid)

# ------------------------------------------------------------------
# 5) Equilibrium parameters of an arbitrary distribution
# ------------------------------------------------------------------

def equilibrium_from_f(f, radial_tol=DEFAULT_RADIAL_TOL, gamma_tol=DEFAULT_GAMMA_TOL,
                       gamma_hint=None):
    """
    The (n, U, gamma) whose Juttner distribution shares V^mu and S with f.

    n and U come from the Eckart frame of f, gamma from solve_gamma(S/n_f).

    Args:
        f: Distribution without a cell axis
        radial_tol: tolerance of the radial integrals
        gamma_tol: relative tolerance of gamma
        gamma_hint: optional starting guess for gamma

    Returns:
        EquilibriumParams
    """
    consts = f.grid.consts
    ms = compute_moments(f)
    ef = eckart_decompose(ms, consts)
    R = scalar_moment_ratio(ms, ef)
    gamma = solve_gamma(R, consts, gamma_tol, radial_tol, gamma_hint)
    return EquilibriumParams(n=ef.n_f, u=ef.U_f[1:], gamma=gamma)


def moment_match_residuals(f, fe):
    """
    Relative mismatch of S and V^mu between fe and f.

    Returns:
        tuple: (r_scalar, r_V) normalized by S(f) and V^0(f)
    """
    check_same_grid(f, fe)
    mf = compute_moments(f)
    me = compute_moments(fe)
    scale_S = abs(float(mf.S))
    scale_V = abs(float(mf.V[0]))
    r_scalar = float(me.S - mf.S)
    r_V = me.V - mf.V
    if scale_S > 0:
        r_scalar /= scale_S
    if scale_V > 0:
        r_V = r_V / scale_V
    return r_scalar, r_V
