"""Independent reference computations used only by the tests."""

import math
from fractions import Fraction

import numpy as np


def yaw_derivative(state, u, gain, a1, a0):
    psi, r = state
    return (r, gain * u - a1 * r - a0 * psi)


def rk4_simulate(tf, u, dt, substeps=100, x0=(0.0, 0.0)):
    """Classic fixed-step RK4 on the continuous ODE, input held per sample.

    Returns yaw after each input sample (same convention as the library).
    """
    gain, a1, a0 = tf.as_tuple()
    h = dt / substeps
    psi, r = x0
    out = np.empty(len(u))
    for k, uk in enumerate(np.asarray(u, dtype=float)):
        uk = float(uk)
        for _ in range(substeps):
            k1p, k1r = r, gain * uk - a1 * r - a0 * psi
            p2, r2 = psi + 0.5 * h * k1p, r + 0.5 * h * k1r
            k2p, k2r = r2, gain * uk - a1 * r2 - a0 * p2
            p3, r3 = psi + 0.5 * h * k2p, r + 0.5 * h * k2r
            k3p, k3r = r3, gain * uk - a1 * r3 - a0 * p3
            p4, r4 = psi + h * k3p, r + h * k3r
            k4p, k4r = r4, gain * uk - a1 * r4 - a0 * p4
            psi += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
            r += h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        out[k] = psi
    return out


def phase_high(k, dt, period, duty):
    """Exact rational test of whether square-wave sample ``k`` is high."""
    dt, period, duty = (Fraction(repr(float(v))) for v in (dt, period, duty))
    cycles = k * dt / period
    return cycles - math.floor(cycles) < duty


def quadratic_roots(a1, a0):
    """Textbook quadratic formula in complex arithmetic."""
    disc = complex(a1 * a1 - 4 * a0) ** 0.5
    return sorted([(-a1 - disc) / 2, (-a1 + disc) / 2], key=lambda p: (p.real, p.imag))
