"""Exact zero-order-hold simulation of the second-order yaw model.

State is ``x = (psi, r)`` and the continuous realization is

    dpsi/dt = r
    dr/dt   = -a1 r - a0 psi + K u

Output convention: sample ``k`` of a simulation is the state *after* input
sample ``k`` has been held for one sample period. A simulation of length N
therefore covers the instants ``dt, 2 dt, ..., N dt`` from the start.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import InvalidSamplePeriod, SampleRateMismatch
from .model import SimState


def sample_count(duration, dt):
    """``floor(duration / dt)`` tolerant to representation error in the ratio."""
    ratio = duration / dt
    n = math.floor(ratio)
    if ratio - n > 1.0 - 1e-9 * max(1.0, ratio):
        n += 1
    return int(n)


class TimeSeries:
    """Uniformly sampled real signal.

    Values are stored as a read-only float64 array.
    """

    __slots__ = ("sample_period", "values")

    def __init__(self, sample_period, values):
        sample_period = float(sample_period)
        if not (math.isfinite(sample_period) and sample_period > 0):
            raise InvalidSamplePeriod(f"sample period must be finite and > 0, got {sample_period!r}")
        arr = np.array(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series values must be finite")
        arr.flags.writeable = False
        self.sample_period = sample_period
        self.values = arr

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (self.sample_period == other.sample_period
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"TimeSeries(sample_period={self.sample_period!r}, n={len(self)})"

    def times(self, origin=0.0):
        return origin + self.sample_period * np.arange(len(self))

    def with_values(self, values):
        return TimeSeries(self.sample_period, values)


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """ZOH discretization ``x[k+1] = A_d x[k] + B_d u[k]``, ``psi = c x``."""

    sample_period: float
    state_transition: np.ndarray
    input_matrix: np.ndarray
    output_row: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))


def _zoh_terms(a1, a0, dt):
    """Closed-form ``expm(A dt)`` and ``int_0^dt expm(A s) ds @ e2`` for unit gain.

    Uses ``expm(A t) = exp(m t) [C(t) I + S(t) (A - m I)]`` with ``m = -a1/2``,
    which holds because ``(A - m I)^2 = (m^2 - a0) I`` for the companion
    matrix. ``h = exp(m t) S(t)`` is the unit impulse response from ``K u`` to
    ``psi``; its integral gives the first entry of the input column.
    """
    m = -0.5 * a1
    disc = m * m - a0
    if disc > 0:
        d = math.sqrt(disc)
        l1, l2 = m + d, m - d
        e1, e2 = math.exp(l1 * dt), math.exp(l2 * dt)
        if 2.0 * d * dt < 1.0:
            h = e2 * math.expm1(2.0 * d * dt) / (2.0 * d)
        else:
            h = (e1 - e2) / (2.0 * d)
        ec = 0.5 * (e1 + e2)
        radius = max(abs(l1), abs(l2))
    elif disc < 0:
        w = math.sqrt(-disc)
        em = math.exp(m * dt)
        ec = em * math.cos(w * dt)
        h = em * math.sin(w * dt) / w
        radius = math.sqrt(a0)
    else:
        em = math.exp(m * dt)
        ec = em
        h = dt * em
        radius = abs(m)
    dh = ec + m * h
    phi = np.array([[ec - m * h, h],
                    [-a0 * h, dh]])

    rho = radius * dt
    if rho <= 1.0:
        int_h = _impulse_integral_series(a1, a0, dt)
    elif disc > 0 and 2.0 * d * dt >= 1e-2:
        int_h = (_exp_integral(l1, dt) - _exp_integral(l2, dt)) / (l1 - l2)
    else:
        # a0 > 0 is guaranteed on this branch
        int_h = (1.0 - dh - a1 * h) / a0
    return phi, np.array([int_h, h])


def _exp_integral(lam, t):
    if lam == 0:
        return t
    return math.expm1(lam * t) / lam


def _impulse_integral_series(a1, a0, t):
    # Taylor coefficients of h (h'' + a1 h' + a0 h = 0, h(0) = 0, h'(0) = 1),
    # stored scaled as d_k = c_k t^k so that int_0^t h = t * sum d_k / (k + 1).
    prev, cur = 0.0, t
    total = cur / 2.0
    for k in range(60):
        nxt = -(a1 * t * (k + 1) * cur + a0 * t * t * prev) / ((k + 2) * (k + 1))
        prev, cur = cur, nxt
        total += cur / (k + 3)
        if abs(cur) <= 1e-17 * abs(total) and abs(prev) <= 1e-17 * abs(total):
            break
    return t * total


def discretize_zoh(tf, dt):
    """Exact ZOH discretization of ``tf`` at sample period ``dt``."""
    if not (isinstance(dt, (int, float, np.floating)) and math.isfinite(dt) and dt > 0):
        raise InvalidSamplePeriod(f"dt must be finite and > 0, got {dt!r}")
    phi, gamma = _zoh_terms(tf.damping_coeff, tf.stiffness_coeff, float(dt))
    return DiscreteModel(sample_period=float(dt), state_transition=phi,
                         input_matrix=tf.gain * gamma)


def _arma_coefficients(phi, gamma, row):
    """Numerator/denominator of ``z c (zI - A_d)^-1 B_d`` in powers of ``z^-1``."""
    den = np.array([1.0, -(phi[0, 0] + phi[1, 1]),
                    phi[0, 0] * phi[1, 1] - phi[0, 1] * phi[1, 0]])
    # c adj(zI - A_d) B_d = n1 z + n0
    adj_const = np.array([[-phi[1, 1], phi[0, 1]],
                          [phi[1, 0], -phi[0, 0]]])
    n1 = row @ gamma
    n0 = row @ adj_const @ gamma
    return np.array([n1, n0]), den


def _free_response(phi, den, row, x0, n):
    """``c A_d^(k+1) x0`` for k < n, via the characteristic recursion."""
    f0 = row @ phi @ x0
    f1 = row @ phi @ phi @ x0
    impulse = np.zeros(n)
    impulse[0] = 1.0
    return signal.lfilter([f0, f1 + den[1] * f0], den, impulse)


def _simulate_rows(phi, gamma, u, rows, x0=None):
    out = []
    for row in rows:
        num, den = _arma_coefficients(phi, gamma, row)
        y = signal.lfilter(num, den, u)
        if x0 is not None and np.any(x0):
            y = y + _free_response(phi, den, row, x0, len(u))
        out.append(y)
    return out


_PSI = np.array([1.0, 0.0])
_RATE = np.array([0.0, 1.0])


def simulate_yaw(tf_or_theta, u, dt):
    """Zero-state yaw response as a plain array.

    Fast path for the estimator: ``tf_or_theta`` may be a
    :class:`~usvyaw.model.SecondOrderTf` or a ``(K, a1, a0)`` sequence.
    """
    if hasattr(tf_or_theta, "as_tuple"):
        tf_or_theta = tf_or_theta.as_tuple()
    gain, a1, a0 = (float(v) for v in tf_or_theta)
    phi, gamma = _zoh_terms(a1, a0, dt)
    return _simulate_rows(phi, gain * gamma, np.asarray(u, dtype=float), [_PSI])[0]


def simulate(dm, input, initial=None):
    """Simulate a discrete model under a sampled input.

    Parameters
    ----------
    dm : DiscreteModel
    input : TimeSeries
        Input samples, held constant over each period.
    initial : SimState, optional
        State at the start of the first input interval (defaults to rest).

    Returns
    -------
    (TimeSeries, TimeSeries)
        Yaw angle and yaw rate; sample ``k`` is the state after input ``k``.
    """
    if input.sample_period != dm.sample_period:
        raise SampleRateMismatch(
            f"input sampled at {input.sample_period!r} s, model at {dm.sample_period!r} s")
    x0 = None
    if initial is not None:
        x0 = np.array([initial.yaw, initial.yaw_rate])
    psi_row = np.asarray(dm.output_row, dtype=float)
    psi, rate = _simulate_rows(dm.state_transition, dm.input_matrix, input.values,
                               [psi_row, _RATE], x0)
    return (TimeSeries(dm.sample_period, psi), TimeSeries(dm.sample_period, rate))


def step_response(tf, amplitude, duration, dt):
    """Yaw response from rest to a constant input of ``amplitude``.

    Has ``floor(duration / dt)`` samples; sample ``k`` is at time ``(k+1) dt``.
    """
    dm = discretize_zoh(tf, dt)
    if not duration > dt:
        raise ValueError("duration must exceed dt")
    u = TimeSeries(dm.sample_period, np.full(sample_count(duration, dt), float(amplitude)))
    return simulate(dm, u, SimState())[0]
