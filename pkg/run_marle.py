#!/usr/bin/env python3
"""
Command-line runner for the Marle relaxation toolkit.

Subcommands:
    mcurves      scan gamma and tabulate M, Mtilde, their ratio and its bounds
    equilibrate  recover (n, u, gamma) of an initial condition, with grid refinement
    relax        space-homogeneous relaxation time series
    transport    periodic slab with upwind transport and collisions

Usage:
    python run_marle.py relax --config configs/relax_mixture.cfg --out relax.csv
"""

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd
from tqdm import tqdm

# Add current directory to path
sys.path.append('.')

from juttner import (EquilibriumParams, equilibrium_from_f, juttner_eval, lower_bound,
                     moment_match_residuals, radial_integrals, upper_bound)
from marle_config import load_config
from marle_utils import (ConfigError, NumericFailure, SETTINGS, ValidationError,
                         logger, resolve_output_path)
from phase_grid import Distribution, build_phase_grid
from relaxation import (diagnostics, relax_exact, relax_rk4, relax_stepped, slab_from_profile,
                        transport_step)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2

# ------------------------------------------------------------------
# Initial conditions
# ------------------------------------------------------------------

def initial_distribution(cfg, grid):
    """
    Build the preset initial condition of the scenario block.

    Presets:
        single   Juttner(density, velocity, gamma)
        mixture  weight_a Juttner(gamma_a) + (1 - weight_a) Juttner(gamma_b)
        bump     Juttner times (1 + A exp(-|p - p_c|^2 / (2 w^2))), p_c along x
    """
    sc = cfg.scenario
    consts = grid.consts
    tol = sc.radial_tol
    if sc.preset == 'single':
        return juttner_eval(EquilibriumParams(sc.density, sc.velocity, sc.gamma), grid, tol)
    if sc.preset == 'mixture':
        fa = juttner_eval(EquilibriumParams(sc.density, sc.velocity, sc.gamma_a), grid, tol)
        fb = juttner_eval(EquilibriumParams(sc.density, sc.velocity, sc.gamma_b), grid, tol)
        return Distribution(sc.weight_a * fa.values + (1.0 - sc.weight_a) * fb.values, grid)
    base = juttner_eval(EquilibriumParams(sc.density, sc.velocity, sc.gamma), grid, tol)
    center = np.array([sc.bump_center * consts.mc, 0.0, 0.0])
    width = sc.bump_width * consts.mc
    dist2 = np.sum((grid.p - center) ** 2, axis=1)
    bump = 1.0 + sc.bump_amplitude * np.exp(-dist2 / (2.0 * width ** 2))
    return Distribution(base.values * bump[:, None], grid)

# ------------------------------------------------------------------
# Subcommands
# ------------------------------------------------------------------

def run_mcurves(cfg):
    """One row per gamma of a geometric scan."""
    sc = cfg.scenario
    consts = cfg.constants
    gammas = np.geomspace(sc.gamma_scan_min, sc.gamma_scan_max, sc.gamma_scan_points)
    rows = []
    previous = -math.inf
    for gamma in tqdm(gammas, desc="Scanning gamma", disable=not SETTINGS['progress']):
        ri = radial_integrals(float(gamma), consts, sc.radial_tol)
        rows.append({
            'gamma': float(gamma),
            'M': ri.M,
            'Mtilde': ri.Mtilde,
            'ratio': ri.ratio,
            'upper_bound': upper_bound(gamma, consts),
            'lower_bound': lower_bound(gamma, consts),
            'monotone_ok': ri.ratio > previous,
        })
        previous = ri.ratio
    df = pd.DataFrame(rows)
    if not df['monotone_ok'].all():
        logger.warning("ratio is not strictly increasing over the scan")
    return df


def run_equilibrate(cfg):
    """Recovered equilibrium per refinement level (n_p and n_i doubled each level)."""
    sc = cfg.scenario
    rows = []
    for level in range(sc.refine_levels + 1):
        factor = 2 ** level
        grid_cfg = replace(cfg.grid, n_p=cfg.grid.n_p * factor, n_i=cfg.grid.n_i * factor)
        grid = build_phase_grid(grid_cfg, cfg.constants)
        f = initial_distribution(cfg, grid)
        try:
            params = equilibrium_from_f(f, sc.radial_tol, sc.gamma_tol)
        except NumericFailure as e:
            logger.error(f"Equilibrium recovery failed at level {level}: {e}")
            raise
        fe = juttner_eval(params, grid, sc.radial_tol)
        r_scalar, r_V = moment_match_residuals(f, fe)
        row = {'level': level, 'n_p': grid_cfg.n_p, 'n_i': grid_cfg.n_i,
               'n': params.n, 'u_x': params.u[0], 'u_y': params.u[1], 'u_z': params.u[2],
               'gamma': params.gamma, 'residual_scalar': r_scalar}
        row.update({f'residual_V{mu}': r_V[mu] for mu in range(4)})
        if sc.preset == 'single':
            row['n_error'] = abs(params.n - sc.density) / sc.density
            row['u_error'] = max(abs(a - b) for a, b in zip(params.u, sc.velocity)) / cfg.constants.c
            row['gamma_error'] = abs(params.gamma - sc.gamma) / sc.gamma
        logger.info(f"Level {level}: n={params.n:.10g}, u={params.u}, gamma={params.gamma:.10g}")
        rows.append(row)
    return pd.DataFrame(rows)


def run_relax(cfg):
    """Diagnostics every output_every steps of a homogeneous relaxation."""
    sc = cfg.scenario
    grid = build_phase_grid(cfg.grid, cfg.constants)
    f0 = initial_distribution(cfg, grid)
    rows = [diagnostics(f0, t=0.0).as_row()]

    def record(state):
        step = int(round(state.t / sc.dt))
        if step % sc.output_every == 0:
            rows.append(diagnostics(state.f, t=state.t, start=state.exponents).as_row())

    if sc.integrator == 'stepped':
        relax_stepped(f0, sc.dt, sc.nsteps, observer=record)
    elif sc.integrator == 'rk4':
        relax_rk4(f0, sc.dt, sc.nsteps, refreeze=sc.refreeze, observer=record)
    else:
        fe = juttner_eval(equilibrium_from_f(f0, sc.radial_tol, sc.gamma_tol), grid, sc.radial_tol)
        for step in range(sc.output_every, sc.nsteps + 1, sc.output_every):
            t = step * sc.dt
            rows.append(diagnostics(relax_exact(f0, t, fe), t=t).as_row())
    return pd.DataFrame(rows)


def run_transport(cfg):
    """Slab totals every output_every steps, sinusoidal density over [0, length)."""
    sc = cfg.scenario
    grid = build_phase_grid(cfg.grid, cfg.constants)
    base = initial_distribution(cfg, grid)
    centers = (np.arange(sc.ncells) + 0.5) / sc.ncells
    profile = 1.0 + sc.profile_amplitude * np.sin(2.0 * math.pi * centers)
    state = slab_from_profile(base, profile, sc.length)
    rows = [diagnostics(state).as_row()]
    for step in tqdm(range(1, sc.nsteps + 1), desc="Transport", disable=not SETTINGS['progress']):
        state = transport_step(state, sc.dt)
        if step % sc.output_every == 0:
            rows.append(diagnostics(state).as_row())
    return pd.DataFrame(rows)


COMMANDS = {
    'mcurves': run_mcurves,
    'equilibrate': run_equilibrate,
    'relax': run_relax,
    'transport': run_transport,
}

# ------------------------------------------------------------------
# Entry point
# ------------------------------------------------------------------

def write_csv(df, path, precision):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df.to_csv(path, index=False, float_format=f'%.{precision}g')
    print(f"💾 Results saved to: {path}")


def main(argv=None):
    parser = argparse.ArgumentParser(description='Marle relaxation toolkit for polyatomic gases')
    parser.add_argument('command', choices=sorted(COMMANDS), help='What to run')
    parser.add_argument('--config', required=True, help='Run configuration file')
    parser.add_argument('--out', help='CSV output path (overrides [output] path)')
    args = parser.parse_args(argv)

    print(f"\n🚀 Running {args.command}")
    print("=" * 60)
    try:
        cfg = load_config(args.config)
        df = COMMANDS[args.command](cfg)
        path = resolve_output_path(args.out or cfg.output.path or f'{args.command}.csv')
        write_csv(df, path, cfg.output.precision)
    except (ValidationError, ConfigError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"❌ {e}")
        return EXIT_VALIDATION
    except NumericFailure as e:
        logger.error(f"Numerical failure: {e}")
        print(f"❌ {e}")
        return EXIT_NUMERIC
    except OSError as e:
        logger.error(f"Could not read or write a file: {e}")
        print(f"❌ {e}")
        return EXIT_VALIDATION
    print("✅ Done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
