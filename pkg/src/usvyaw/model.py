"""Continuous-time yaw dynamics of a twin-thruster surface vehicle.

The rigid-body yaw balance is

    I_z * dr/dt = 2 * l * a_t * u - b_y * r,      r = dpsi/dt

which, from PWM input ``u`` to yaw angle ``psi``, is the transfer function

    psi(s) / u(s) = K / (s^2 + a1 * s + a0)

with ``K = 2 l a_t / I_z``, ``a1 = b_y / I_z`` and ``a0 = 0``. The
:class:`SecondOrderTf` type also admits ``a0 > 0`` so identified models
with a restoring-like term can be represented.
"""

import enum
import math
from dataclasses import dataclass

from .errors import IntegratorError


def _check_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Physical plant coefficients.

    Parameters
    ----------
    inertia_z : float
        Yaw moment of inertia, kg m^2.
    drag_coeff : float
        Linear yaw drag coefficient, N m s/rad.
    thrust_coeff : float
        Thrust per PWM unit, N.
    moment_arm : float
        Lateral offset of each thruster from the centerline, m.
    allow_any_thrust_sign : bool
        Accept ``thrust_coeff <= 0`` (e.g. reversed motor wiring).
        Zero thrust is still rejected.
    """

    inertia_z: float
    drag_coeff: float
    thrust_coeff: float
    moment_arm: float
    allow_any_thrust_sign: bool = False

    def __post_init__(self):
        _check_finite(inertia_z=self.inertia_z, drag_coeff=self.drag_coeff,
                      thrust_coeff=self.thrust_coeff, moment_arm=self.moment_arm)
        if self.inertia_z <= 0:
            raise ValueError("inertia_z must be > 0")
        if self.moment_arm <= 0:
            raise ValueError("moment_arm must be > 0")
        if self.drag_coeff < 0:
            raise ValueError("drag_coeff must be >= 0")
        if self.thrust_coeff == 0 or (self.thrust_coeff < 0 and not self.allow_any_thrust_sign):
            raise ValueError("thrust_coeff must be > 0 (pass allow_any_thrust_sign=True "
                             "to accept negative values)")


@dataclass(frozen=True)
class SecondOrderTf:
    """``K / (s^2 + a1 s + a0)`` from PWM input to yaw angle.

    Negative denominator coefficients are accepted so that unstable
    candidates can be analysed; :attr:`is_dissipative` tells whether the
    model is in the physically meaningful region the estimator is bound to.
    """

    gain: float
    damping_coeff: float
    stiffness_coeff: float = 0.0

    def __post_init__(self):
        _check_finite(gain=self.gain, damping_coeff=self.damping_coeff,
                      stiffness_coeff=self.stiffness_coeff)
        if self.gain == 0:
            raise ValueError("gain must be non-zero")

    @property
    def is_dissipative(self):
        return self.damping_coeff >= 0 and self.stiffness_coeff >= 0

    def as_tuple(self):
        return (self.gain, self.damping_coeff, self.stiffness_coeff)


@dataclass(frozen=True)
class SimState:
    """Yaw angle (rad) and yaw rate (rad/s)."""

    yaw: float = 0.0
    yaw_rate: float = 0.0

    def __post_init__(self):
        _check_finite(yaw=self.yaw, yaw_rate=self.yaw_rate)


@dataclass(frozen=True)
class Torque:
    value: float

    def __post_init__(self):
        _check_finite(value=self.value)

    def __float__(self):
        return float(self.value)


class Stability(enum.Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically stable"
    MARGINALLY_STABLE = "marginally stable"
    UNSTABLE = "unstable"

    def __str__(self):
        return self.value


#: Identified pool-trial model, 0.013 / (s^2 + 2.08 s + 0.46).
IDENTIFIED_MODEL = SecondOrderTf(gain=0.013, damping_coeff=2.08, stiffness_coeff=0.46)


def physical_to_tf(params):
    """Map physical coefficients to ``K / (s^2 + a1 s)``.

    The rigid-body model has no restoring term so ``stiffness_coeff`` is
    always 0.
    """
    gain = 2.0 * params.moment_arm * params.thrust_coeff / params.inertia_z
    damping = params.drag_coeff / params.inertia_z
    return SecondOrderTf(gain=gain, damping_coeff=damping, stiffness_coeff=0.0)


def applied_torque(params, u):
    """Differential thruster torque ``2 l a_t u`` for PWM command ``u``."""
    _check_finite(u=u)
    return Torque(2.0 * params.moment_arm * params.thrust_coeff * u)


def drag_torque(params, rate):
    """Linear yaw drag torque ``b_y r``."""
    _check_finite(rate=rate)
    return Torque(params.drag_coeff * rate)


def yaw_accel(params, state, u):
    """Yaw acceleration (rad/s^2) from the torque balance."""
    tau = applied_torque(params, u).value - drag_torque(params, state.yaw_rate).value
    return tau / params.inertia_z


def poles(tf):
    """Roots of ``s^2 + a1 s + a0``.

    Returns
    -------
    tuple of complex
        Sorted by real part, then imaginary part (both ascending).
    """
    a1, a0 = tf.damping_coeff, tf.stiffness_coeff
    disc = a1 * a1 - 4.0 * a0
    if disc >= 0:
        sq = math.sqrt(disc)
        # Larger-magnitude root first, smaller one via Vieta to avoid cancellation.
        big = -(a1 + math.copysign(sq, a1)) / 2.0
        small = a0 / big + 0.0 if big != 0 else 0.0
        roots = [complex(big), complex(small)]
    else:
        half = complex(-a1 / 2.0, math.sqrt(-disc) / 2.0)
        roots = [half, half.conjugate()]
    return tuple(sorted(roots, key=lambda p: (p.real, p.imag)))


def is_stable(tf):
    """Classify the model's open-loop stability.

    Decided from the coefficient signs (Routh-Hurwitz for a quadratic) so the
    result does not depend on rounding in :func:`poles`.
    """
    a1, a0 = tf.damping_coeff, tf.stiffness_coeff
    if a1 > 0 and a0 > 0:
        return Stability.ASYMPTOTICALLY_STABLE
    # one pole at the origin and one in the open LHP, or a simple pair on the
    # imaginary axis
    if (a1 > 0 and a0 == 0) or (a1 == 0 and a0 > 0):
        return Stability.MARGINALLY_STABLE
    return Stability.UNSTABLE


def dc_gain(tf):
    """Steady-state yaw angle per unit constant input, ``K / a0``."""
    if tf.stiffness_coeff == 0:
        raise IntegratorError("a0 = 0: the model integrates, yaw grows without bound "
                              "under constant input")
    return tf.gain / tf.stiffness_coeff


def time_constant(tf):
    """Dominant time constant ``1/|Re p|`` of the slowest pole (inf for a pole on the axis)."""
    slowest = min(abs(p.real) for p in poles(tf))
    return math.inf if slowest == 0 else 1.0 / slowest


def _pole_str(p):
    if p.imag == 0:
        return f"{p.real:.6g}"
    return f"{p.real:.6g}{p.imag:+.6g}j"


def describe(tf):
    """Multi-line human-readable analysis of ``tf``."""
    stab = is_stable(tf)
    stab_text = str(stab)
    if stab is Stability.MARGINALLY_STABLE and tf.stiffness_coeff == 0:
        stab_text += " (integrator)"
    try:
        dc = f"{dc_gain(tf):.6g}"
    except IntegratorError:
        dc = "integrator"
    lines = [
        f"K = {tf.gain:.6g}",
        f"a1 = {tf.damping_coeff:.6g}",
        f"a0 = {tf.stiffness_coeff:.6g}",
        "poles = " + ", ".join(_pole_str(p) for p in poles(tf)),
        f"stability = {stab_text}",
        f"dc gain = {dc}",
        f"time constant = {time_constant(tf):.6g} s",
    ]
    return "\n".join(lines)
