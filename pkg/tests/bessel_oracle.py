"""
Modified Bessel function K1, written independently of scipy.special so the
radial integrals can be checked against it.

Power series for x <= 2, trapezoidal rule on K1(x) = int_0^inf exp(-x cosh t) cosh t dt
otherwise (the integrand decays doubly exponentially, so the rule converges
geometrically in the step).
"""

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329


def _k1_series(x):
    y = x * x / 4.0
    term = 1.0              # y^k / (k! (k+1)!)
    psi_k1 = -EULER_GAMMA   # psi(k+1)
    psi_k2 = 1.0 - EULER_GAMMA
    i1_sum = 0.0
    psi_sum = 0.0
    for k in range(60):
        i1_sum += term
        psi_sum += (psi_k1 + psi_k2) * term
        psi_k1 += 1.0 / (k + 1)
        psi_k2 += 1.0 / (k + 2)
        term *= y / ((k + 1) * (k + 2))
        if term < 1e-18 * i1_sum:
            break
    i1 = x / 2.0 * i1_sum
    return 1.0 / x + math.log(x / 2.0) * i1 - x / 4.0 * psi_sum


def _k1_integral(x, step=0.01):
    t_max = math.acosh(1.0 + 80.0 / x)
    t = np.arange(0.0, t_max + step, step)
    values = np.exp(-x * np.cosh(t)) * np.cosh(t)
    return step * (values.sum() - 0.5 * values[0])


def bessel_k1(x):
    if x <= 0:
        raise ValueError(f"K1 needs x > 0, got {x}")
    return _k1_series(x) if x <= 2.0 else _k1_integral(x)
