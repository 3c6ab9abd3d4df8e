"""
Marle relaxation dynamics.

Contains the collision operator, the space-homogeneous integrators (exact
exponential, conservative stepped exponential, RK4), the periodic slab with
Strang-split upwind transport, and the conservation/entropy diagnostics.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from tqdm import tqdm

from juttner import (DEFAULT_GAMMA_TOL, DEFAULT_RADIAL_TOL, equilibrium_from_f,
                     exponents_from_params, juttner_eval, juttner_from_exponents,
                     moment_match_residuals, params_from_exponents)
from marle_utils import (CFLViolation, ConservationSolveFailed, GridMismatch, SETTINGS,
                         StiffnessWarning, logger)
from moments import compute_moments, conserved_quantities
from phase_grid import Distribution, check_same_grid, pairwise_sum, reduce_pI

# Real-axis stability limit of classical RK4
RK4_STABILITY = 2.8

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 20

# ------------------------------------------------------------------
# 1) Collision operator
# ------------------------------------------------------------------

def collision_frequency(grid):
    """nu_ij = cm / (tau (1 + I_j/mc^2) p0_i); zero when tau is infinite."""
    consts = grid.consts
    return (consts.c * consts.m / consts.tau) / (
        grid.p0[:, None] * (1.0 + grid.s_nodes)[None, :])


def collision_Q(f, fe):
    """
    Marle collision rate nu (fe - f).

    Returns:
        Distribution: signed rate on the grid of f
    """
    grid = check_same_grid(f, fe)
    return Distribution(collision_frequency(grid) * (fe.values - f.values), grid, signed=True)


def _decay(grid, dt):
    with np.errstate(invalid='ignore'):
        return np.exp(-collision_frequency(grid) * dt)

# ------------------------------------------------------------------
# 2) Homogeneous relaxation
# ------------------------------------------------------------------

@dataclass
class RelaxState:
    f: Distribution
    params: object
    t: float = 0.0
    exponents: tuple = None


def relax_exact(f0, t, fe=None):
    """
    f(t) = fe + (f0 - fe) exp(-nu t) with fe held fixed.

    Args:
        f0: initial Distribution
        t: elapsed time
        fe: equilibrium to relax towards; defaults to the Juttner of f0

    Returns:
        Distribution
    """
    if t == 0:
        return Distribution(f0.values, f0.grid)
    if fe is None:
        fe = juttner_eval(equilibrium_from_f(f0), f0.grid)
    grid = check_same_grid(f0, fe)
    decay = _decay(grid, t)
    return Distribution(fe.values + (f0.values - fe.values) * decay, grid)


def _invariant_weights(grid):
    """psi_k(p, I): 1 and (1 + I/mc^2) p^mu, shape (5, n_nodes, n_i)."""
    factor = 1.0 + grid.s_nodes
    pmu = grid.four_momenta
    ones = np.ones(grid.shape)
    return np.stack([ones] + [pmu[:, mu][:, None] * factor[None, :] for mu in range(4)])


def conservative_equilibrium(f, dt, start):
    """
    Exponents of the Juttner-family fe such that one exponential step
    f -> fe + (f - fe) exp(-nu dt) keeps the discrete N and T^{0 mu} of f.

    Solves sum w (1 - exp(-nu dt)) psi_k (fe - f) = 0 for (alpha, b) by Newton
    iteration with backtracking. dt = 0 balances the instantaneous rate
    instead, sum w nu psi_k (fe - f) = 0, which makes fe share V^mu and S
    with f exactly on the grid.

    Args:
        f: Distribution without a cell axis
        dt: step length (0 for the instantaneous rate, math.inf matches the
            plain moments)
        start: (alpha, b) initial guess

    Returns:
        tuple: (alpha, b)
    """
    grid = f.grid
    psi = _invariant_weights(grid)
    # d fe / d(alpha, b^0, b^i) = (1, -(1+s) p^0, (1+s) p^i) fe
    chi = psi * np.array([1.0, -1.0, 1.0, 1.0, 1.0])[:, None, None]
    measure = grid.p_weights[:, None] * grid.I_weights[None, :]
    if dt == 0:
        # nu up to the factor cm/tau, so free streaming is covered too
        weight = measure / (grid.p0[:, None] * (1.0 + grid.s_nodes)[None, :])
    else:
        with np.errstate(invalid='ignore'):
            weight = -measure * np.expm1(-collision_frequency(grid) * dt)
    scale = np.array([pairwise_sum(weight * np.abs(p) * f.values) for p in psi])
    scale[scale == 0] = 1.0

    def residual(theta):
        fe = juttner_from_exponents(theta[0], theta[1:], grid).values
        return fe, np.array([pairwise_sum(weight * p * (fe - f.values)) for p in psi]) / scale

    theta = np.concatenate(([start[0]], start[1]))
    fe, G = residual(theta)
    for iteration in range(NEWTON_MAX_ITER):
        err = np.max(np.abs(G))
        if err <= NEWTON_TOL:
            logger.debug(f"conservative_equilibrium converged in {iteration} iterations")
            return theta[0], theta[1:]
        J = np.array([[pairwise_sum(weight * p * c * fe) for c in chi] for p in psi])
        try:
            step = np.linalg.solve(J / scale[:, None], -G)
        except np.linalg.LinAlgError as e:
            raise ConservationSolveFailed(f"singular Newton system: {e}")
        lam = 1.0
        while lam > 1e-6:
            trial = theta + lam * step
            fe_trial, G_trial = residual(trial)
            if np.all(np.isfinite(G_trial)) and np.max(np.abs(G_trial)) < err:
                break
            lam /= 2.0
        else:
            break
        theta, fe, G = trial, fe_trial, G_trial
    err = np.max(np.abs(G))
    if err <= 1e3 * NEWTON_TOL:
        return theta[0], theta[1:]
    raise ConservationSolveFailed(f"conservative equilibrium stalled at residual {err:.3e}")


def initial_exponents(f, radial_tol=DEFAULT_RADIAL_TOL, gamma_tol=DEFAULT_GAMMA_TOL):
    params = equilibrium_from_f(f, radial_tol, gamma_tol)
    return exponents_from_params(params, f.grid.consts, radial_tol)


def grid_equilibrium(f, start=None):
    """
    Juttner-family fe sharing V^mu and S with f on the grid, so Q(f, fe)
    annihilates the collision invariants exactly.

    Args:
        f: Distribution without a cell axis
        start: optional (alpha, b) guess; defaults to the continuum match

    Returns:
        Distribution
    """
    if start is None:
        start = initial_exponents(f)
    alpha, b = conservative_equilibrium(f, 0.0, start)
    return juttner_from_exponents(alpha, b, f.grid)


def collision_step(f, dt, start):
    """
    One exponential collision step towards the conservative equilibrium.

    Returns:
        tuple: (Distribution after the step, exponents used)
    """
    alpha, b = conservative_equilibrium(f, dt, start)
    fe = juttner_from_exponents(alpha, b, f.grid)
    decay = _decay(f.grid, dt)
    return Distribution(fe.values + (f.values - fe.values) * decay, f.grid), (alpha, b)


def relax_stepped(f0, dt, nsteps, observer=None):
    """
    Homogeneous relaxation by repeated exponential steps, each towards its
    own conservative equilibrium. N and T^{0 nu} are kept to solver
    precision and h^0 never decreases.

    Args:
        f0: initial Distribution
        dt: step length
        nsteps: number of steps
        observer: optional callable receiving a RelaxState after every step

    Returns:
        Distribution
    """
    f = f0
    exponents = initial_exponents(f0)
    for step in tqdm(range(nsteps), desc="Relaxing", disable=not SETTINGS['progress']):
        f, exponents = collision_step(f, dt, exponents)
        if observer is not None:
            observer(RelaxState(f=f, params=params_from_exponents(*exponents, f.grid.consts),
                                t=(step + 1) * dt, exponents=exponents))
    return f


def relax_rk4(f0, dt, nsteps, refreeze=False, observer=None, fe=None):
    """
    Classical fourth-order Runge-Kutta on df/dt = Q(f).

    Args:
        f0: initial Distribution
        dt: step length
        nsteps: number of steps
        refreeze: re-solve the equilibrium at the start of each step
        observer: optional callable receiving a RelaxState after every step
        fe: frozen equilibrium; defaults to the Juttner of f0

    Returns:
        Distribution
    """
    grid = f0.grid
    nu = collision_frequency(grid)
    stiffness = dt * float(np.max(nu))
    if stiffness > RK4_STABILITY:
        warnings.warn(f"dt * nu_max = {stiffness:.3g} exceeds the RK4 stability bound "
                      f"{RK4_STABILITY}", StiffnessWarning)

    params = equilibrium_from_f(f0) if fe is None or refreeze else None
    if fe is None:
        fe = juttner_eval(params, grid)
    values = f0.values
    for step in tqdm(range(nsteps), desc="RK4", disable=not SETTINGS['progress']):
        if refreeze and step > 0:
            params = equilibrium_from_f(Distribution(values, grid), gamma_hint=params.gamma)
            fe = juttner_eval(params, grid)
        target = fe.values
        k1 = nu * (target - values)
        k2 = nu * (target - (values + 0.5 * dt * k1))
        k3 = nu * (target - (values + 0.5 * dt * k2))
        k4 = nu * (target - (values + dt * k3))
        values = values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if observer is not None:
            observer(RelaxState(f=Distribution(values, grid, signed=True), params=params,
                                t=(step + 1) * dt))
    return Distribution(values, grid, signed=True).floor_negative()

# ------------------------------------------------------------------
# 3) Periodic slab
# ------------------------------------------------------------------

@dataclass
class SlabState:
    """
    Distributions of a periodic 1-D slab.

    Args:
        values: array (n_cells, n_nodes, n_i)
        grid: PhaseGrid shared by all cells
        dx: cell width
        t: time
        exponents: per-cell (alpha, b^mu) of the last collision equilibrium, shape (n_cells, 5)
    """
    values: np.ndarray
    grid: object
    dx: float
    t: float = 0.0
    exponents: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[1:] != self.grid.shape:
            raise GridMismatch(f"slab values of shape {self.values.shape} do not fit grid "
                               f"{self.grid.shape}")

    @property
    def cells(self):
        return [Distribution(v, self.grid) for v in self.values]

    @property
    def n_cells(self):
        return self.values.shape[0]

    def as_distribution(self):
        return Distribution(self.values, self.grid)


def make_slab(cells, grid, dx):
    """SlabState from a sequence of cell value arrays, with initial equilibria."""
    values = np.stack([np.asarray(c, dtype=float) for c in cells])
    exponents = []
    for v in values:
        alpha, b = initial_exponents(Distribution(v, grid))
        exponents.append(np.concatenate(([alpha], b)))
    return SlabState(values=values, grid=grid, dx=dx, exponents=np.array(exponents))


def slab_from_profile(base, density_profile, length):
    """
    Scale a homogeneous distribution by a density profile over [0, length).

    Args:
        base: Distribution of one cell
        density_profile: positive factor per cell
        length: slab length

    Returns:
        SlabState
    """
    profile = np.asarray(density_profile, dtype=float)
    dx = length / profile.size
    return make_slab([base.values * k for k in profile], base.grid, dx)


def _advect(values, speed, dt, dx):
    """First-order upwind flux-difference update, periodic in the cell axis."""
    plus = np.maximum(speed, 0.0)[:, None]
    minus = np.minimum(speed, 0.0)[:, None]
    flux = plus * values + minus * np.roll(values, -1, axis=0)   # F_{k+1/2}
    return values - (dt / dx) * (flux - np.roll(flux, 1, axis=0))


def transport_step(state, dt):
    """
    Advance the slab by dt with Strang splitting: half upwind advection,
    a collision step per cell, half upwind advection.

    Args:
        state: SlabState
        dt: time step, with c dt/dx <= 1

    Returns:
        SlabState
    """
    grid = state.grid
    consts = grid.consts
    courant = consts.c * dt / state.dx
    if courant > 1.0:
        raise CFLViolation(f"c dt/dx = {courant:.4g} exceeds 1")

    speed = consts.c * grid.p[:, 0] / grid.p0
    values = _advect(state.values, speed, 0.5 * dt, state.dx)
    values = Distribution(values, grid, signed=True).floor_negative().values

    exponents = state.exponents
    if math.isfinite(consts.tau):
        exponents = np.empty_like(state.exponents)
        stepped = []
        for k, cell in enumerate(values):
            start = (state.exponents[k, 0], state.exponents[k, 1:])
            f_new, (alpha, b) = collision_step(Distribution(cell, grid), dt, start)
            stepped.append(f_new.values)
            exponents[k] = np.concatenate(([alpha], b))
        values = np.stack(stepped)

    values = _advect(values, speed, 0.5 * dt, state.dx)
    values = Distribution(values, grid, signed=True).floor_negative().values
    return replace(state, values=values, t=state.t + dt, exponents=exponents)

# ------------------------------------------------------------------
# 4) Diagnostics
# ------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    N: float
    V: np.ndarray
    T0: np.ndarray
    h0: float
    entropy_production: float
    residual_scalar: float
    residual_V: np.ndarray

    def as_row(self):
        row = {'t': self.t, 'N': self.N}
        row.update({f'V{mu}': self.V[mu] for mu in range(4)})
        row.update({f'T0{mu}': self.T0[mu] for mu in range(4)})
        row['h0'] = self.h0
        row['entropy_production'] = self.entropy_production
        row['residual_scalar'] = self.residual_scalar
        row.update({f'residual_V{mu}': self.residual_V[mu] for mu in range(4)})
        return row


def entropy_production(f, fe):
    """-k_B sum Q ln f, with ln f taken as 0 where f = 0."""
    Q = collision_Q(f, fe)
    with np.errstate(divide='ignore'):
        log_f = np.where(f.values > 0, np.log(np.where(f.values > 0, f.values, 1.0)), 0.0)
    return -f.grid.consts.k_B * reduce_pI(Distribution(Q.values * log_f, f.grid, signed=True), 1.0)


def diagnostics(state, t=0.0, fe=None, start=None):
    """
    Conservation and entropy diagnostics.

    With the default fe the collision rate annihilates N and T^{0 mu} on the
    grid, so entropy_production >= 0 up to the Newton tolerance.

    Args:
        state: Distribution or SlabState (totals over cells weighted by dx)
        t: time stamp of a Distribution
        fe: equilibrium of a Distribution; defaults to grid_equilibrium(state)
        start: (alpha, b) guess for grid_equilibrium

    Returns:
        DiagnosticRecord
    """
    if isinstance(state, SlabState):
        return _slab_diagnostics(state)
    f = state
    if fe is None:
        fe = grid_equilibrium(f, start)
    ms = compute_moments(f)
    N, _ = conserved_quantities(f)
    r_scalar, r_V = moment_match_residuals(f, fe)
    return DiagnosticRecord(t=t, N=N, V=ms.V, T0=ms.T[0], h0=float(ms.h[0]),
                            entropy_production=entropy_production(f, fe),
                            residual_scalar=r_scalar, residual_V=np.asarray(r_V))


def _slab_diagnostics(state):
    records = []
    for k, f in enumerate(state.cells):
        start = (state.exponents[k, 0], state.exponents[k, 1:])
        records.append(diagnostics(f, t=state.t, start=start))
    dx = state.dx
    worst = max(records, key=lambda r: abs(r.residual_scalar))
    return DiagnosticRecord(
        t=state.t,
        N=dx * pairwise_sum(np.array([r.N for r in records]), n_axes=1),
        V=dx * pairwise_sum(np.array([r.V for r in records]).T, n_axes=1),
        T0=dx * pairwise_sum(np.array([r.T0 for r in records]).T, n_axes=1),
        h0=dx * pairwise_sum(np.array([r.h0 for r in records]), n_axes=1),
        entropy_production=dx * pairwise_sum(
            np.array([r.entropy_production for r in records]), n_axes=1),
        residual_scalar=worst.residual_scalar,
        residual_V=np.max(np.abs([r.residual_V for r in records]), axis=0),
    )
