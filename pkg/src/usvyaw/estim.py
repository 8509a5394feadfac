"""Parameter estimation and validation for ``K / (s^2 + a1 s + a0)``.

Identification runs in two stages:

1. :func:`equation_error_init` fits a second-order ARX regression (least
   squares, then refined instrumental variables) and maps its discrete
   poles back to continuous time.
2. :func:`estimate_output_error` refines ``theta = (K, a1, a0)`` with a
   bounded Levenberg-Marquardt iteration on the free-run simulation error.

Fits are scored with the normalized-RMSE fitness :func:`fit_percent`.
"""

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import (ConstantReference, DivergedNonFinite, InitializerWarning,
                     LengthMismatch, NoDescentDirection, ParseError,
                     RankDeficientRegression, TooFewSamples, UnstableInitializer)
from .model import SecondOrderTf
from .signals import detrend, split_dataset
from .sim import TimeSeries, _zoh_terms, simulate_yaw

MIN_ESTIMATION_SAMPLES = 50
STABILITY_RADIUS = 0.999


class Termination(str, enum.Enum):
    CONVERGED_OBJECTIVE = "converged-objective"
    CONVERGED_STEP = "converged-step"
    MAX_ITERATIONS = "max-iterations"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EstimationOptions:
    """Settings for :func:`estimate_output_error`.

    ``parameter_lower_bounds`` applies to ``(K, a1, a0)``; use ``-inf`` for
    an unbounded parameter.
    """

    max_iterations: int = 200
    objective_rel_tol: float = 1e-10
    step_tol: float = 1e-12
    initial_damping: float = 1e-3
    parameter_lower_bounds: tuple = (-math.inf, 0.0, 0.0)
    finite_difference_rel_step: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("objective_rel_tol", "step_tol", "initial_damping",
                     "finite_difference_rel_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if len(self.parameter_lower_bounds) != 3:
            raise ValueError("parameter_lower_bounds needs one entry per parameter")


@dataclass(frozen=True)
class EstimationReport:
    """Outcome of an output-error fit.

    ``objective_trace[0]`` is the SSE at the (projected) initial guess; each
    further entry is the SSE after an accepted iteration.
    """

    model: SecondOrderTf
    training_fit_percent: float
    objective_trace: tuple
    iterations_used: int
    termination_reason: Termination
    initializer_model: SecondOrderTf

    @property
    def sse(self):
        return self.objective_trace[-1]


@dataclass(frozen=True)
class IdentificationResult:
    """Everything produced by :func:`identify`."""

    report: EstimationReport
    validation_fit_percent: float
    train: object = field(repr=False)
    test: object = field(repr=False)

    @property
    def model(self):
        return self.report.model


def _values(x):
    return x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)


def fit_percent(measured, simulated):
    """NRMSE fitness ``100 (1 - ||y - yhat|| / ||y - mean(y)||)``.

    100 is a perfect fit, 0 is no better than the mean of ``measured`` and
    the value is unbounded below.

    >>> round(fit_percent([0, 1, 2, 3], [0, 1, 2, 4]), 3)
    55.279
    """
    y, yhat = _values(measured), _values(simulated)
    if y.shape != yhat.shape:
        raise LengthMismatch(f"series lengths differ: {y.size} vs {yhat.size}")
    if y.size < 2:
        raise LengthMismatch("need at least two samples")
    spread = np.linalg.norm(y - y.mean())
    if spread == 0:
        raise ConstantReference("measured series is constant")
    return 100.0 * (1.0 - np.linalg.norm(y - yhat) / spread)


def _check_length(ds):
    if len(ds) < MIN_ESTIMATION_SAMPLES:
        raise TooFewSamples(f"estimation needs at least {MIN_ESTIMATION_SAMPLES} samples, "
                            f"dataset has {len(ds)}")


def _arx_regressors(psi, u):
    return np.column_stack([-psi[1:-1], -psi[:-2], u[2:], u[1:-1]])


def _arx_to_tf(coef, dt, u, psi):
    """Map ARX coefficients to continuous ``(K, a1, a0)``; also return warnings."""
    alpha1, alpha2, beta1, beta2 = coef
    notes = []
    zs = np.roots([1.0, alpha1, alpha2]).astype(complex)
    if np.any(np.abs(zs) >= 1.0):
        notes.append((UnstableInitializer,
                      f"ARX poles {np.round(zs, 6)} lie on or outside the unit circle; "
                      f"pulled to radius {STABILITY_RADIUS}"))
        zs = np.where(np.abs(zs) >= 1.0, zs / np.abs(zs) * STABILITY_RADIUS, zs)

    ps = []
    for z in zs:
        if abs(z.imag) < 1e-14 * abs(z) and z.real < 0:
            # no real continuous pole maps onto the negative axis; keep the decay rate
            notes.append((InitializerWarning, "ARX pole on the negative real axis; using its modulus"))
            ps.append(complex(math.log(abs(z)) / dt))
        else:
            ps.append(cmath.log(z) / dt)
    a1 = -(ps[0] + ps[1]).real
    a0 = (ps[0] * ps[1]).real
    if a1 < 0 or a0 < 0:
        notes.append((InitializerWarning,
                      f"initializer gave a1={a1:.6g}, a0={a0:.6g}; clamped to >= 0"))
        a1, a0 = max(a1, 0.0), max(a0, 0.0)

    den_at_one = ((1.0 - zs[0]) * (1.0 - zs[1])).real
    if a0 > 0 and den_at_one != 0:
        gain = a0 * (beta1 + beta2) / den_at_one
    else:
        # pure integrator: DC gain undefined, fit K as a linear scale instead
        notes.append((InitializerWarning,
                      "a0 = 0 after clamping; gain taken from a least-squares scale fit"))
        unit = simulate_yaw((1.0, a1, a0), u, dt)
        gain = float(unit @ psi / (unit @ unit)) if unit @ unit > 0 else 0.0
    return (float(gain), float(a1), float(a0)), notes


def _discrete_denominator(theta, dt):
    phi, _ = _zoh_terms(theta[1], theta[2], dt)
    return np.array([1.0, -(phi[0, 0] + phi[1, 1]), phi[0, 0] * phi[1, 1] - phi[0, 1] * phi[1, 0]])


def equation_error_init(ds, iv_iterations=20):
    """Initial ``(K, a1, a0)`` from a second-order ARX regression.

    The regression is

        psi[k] = -alpha1 psi[k-1] - alpha2 psi[k-2] + beta1 u[k] + beta2 u[k-1]

    where ``psi[k]`` is the yaw after input ``u[k]`` has been applied (the
    :mod:`usvyaw.sim` convention), so noiseless ZOH data of a second-order
    model satisfies it exactly. It is solved by least squares and then
    refined for up to ``iv_iterations`` passes of simplified refined
    instrumental variables: data and regressors are prefiltered by
    ``1/A(z)`` of the current estimate and the instruments come from its
    noise-free simulated output. Plain least squares is badly biased by
    output noise when the sample rate is fast relative to the poles.

    Discrete poles ``z`` map to ``log(z)/dt`` and ``K`` is chosen so the
    continuous and discrete DC gains agree. Poles on or outside the unit
    circle are pulled to radius 0.999 and reported with
    :class:`UnstableInitializer`; negative ``a1``/``a0`` are clamped to zero
    and reported with :class:`InitializerWarning`.

    Raises
    ------
    RankDeficientRegression
        The input does not excite the regression (e.g. constant input).
    """
    _check_length(ds)
    psi = ds.output_yaw.values
    u = ds.input_u.values
    dt = ds.sample_period

    target = psi[2:]
    regressors = _arx_regressors(psi, u)
    norms = np.linalg.norm(regressors, axis=0)
    if np.any(norms == 0):
        raise RankDeficientRegression("a regressor column is identically zero; "
                                      "the input does not excite the plant")
    scaled = regressors / norms
    coef, _, rank, _ = np.linalg.lstsq(scaled, target, rcond=None)
    if rank < 4:
        raise RankDeficientRegression(f"ARX regression has rank {rank} < 4; "
                                      "the input is not exciting enough")
    coef = coef / norms
    theta, notes = _arx_to_tf(coef, dt, u, psi)

    for _ in range(iv_iterations):
        if theta[0] == 0:
            break
        den = _discrete_denominator(theta, dt)
        y_f = signal.lfilter([1.0], den, psi)
        u_f = signal.lfilter([1.0], den, u)
        x_f = signal.lfilter([1.0], den, simulate_yaw(theta, u, dt))
        phi_f = _arx_regressors(y_f, u_f)
        zeta_f = _arx_regressors(x_f, u_f)
        col = np.linalg.norm(phi_f, axis=0)
        try:
            iv_coef = np.linalg.solve((zeta_f / col).T @ (phi_f / col),
                                      (zeta_f / col).T @ y_f[2:]) / col
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(iv_coef)):
            break
        step = np.max(np.abs(iv_coef - coef) / np.maximum(np.abs(coef), 1e-300))
        coef = iv_coef
        theta, notes = _arx_to_tf(coef, dt, u, psi)
        if step < 1e-12:
            break

    for category, message in notes:
        warnings.warn(message, category, stacklevel=2)
    gain, a1, a0 = theta
    if not math.isfinite(gain) or gain == 0:
        raise RankDeficientRegression("could not determine a non-zero gain from the data")
    return SecondOrderTf(gain=gain, damping_coeff=a1, stiffness_coeff=a0)


def _fd_steps(theta, rel):
    return np.where(theta != 0, rel * np.abs(theta), rel)


def fd_jacobian(theta, u, dt, rel_step=1e-6, base=None):
    """Forward-difference Jacobian of the zero-state yaw simulation w.r.t. ``(K, a1, a0)``."""
    theta = np.asarray(theta, dtype=float)
    if base is None:
        base = simulate_yaw(theta, u, dt)
    steps = _fd_steps(theta, rel_step)
    jac = np.empty((base.size, 3))
    for j in range(3):
        shifted = theta.copy()
        shifted[j] += steps[j]
        # use the representable increment so the quotient is consistent
        delta = shifted[j] - theta[j]
        jac[:, j] = (simulate_yaw(shifted, u, dt) - base) / delta
    return jac


def _sse(resid):
    # overflow is reported by the caller as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        return float(resid @ resid)


def _lm_step(jtj, grad, scale, lam, free):
    n = grad.size
    step = np.zeros(n)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return step
    a = jtj[np.ix_(idx, idx)] + lam * np.diag(scale[idx])
    step[idx] = np.linalg.solve(a, grad[idx])
    return step


def estimate_output_error(ds, init, opts=None):
    """Refine ``init`` by minimizing the free-run simulation SSE.

    Levenberg-Marquardt with Marquardt diagonal scaling, a forward-difference
    Jacobian and projection onto the lower bounds. Parameters sitting on a
    bound whose step points outward are frozen for that iteration.

    Raises
    ------
    DivergedNonFinite
        The objective or Jacobian became non-finite.
    NoDescentDirection
        The Jacobian vanishes while the residual does not.
    """
    opts = opts or EstimationOptions()
    _check_length(ds)
    y = ds.output_yaw.values
    u = ds.input_u.values
    dt = ds.sample_period
    lower = np.asarray(opts.parameter_lower_bounds, dtype=float)

    theta = np.maximum(np.asarray(init.as_tuple(), dtype=float), lower)
    yhat = simulate_yaw(theta, u, dt)
    resid = y - yhat
    sse = _sse(resid)
    if not math.isfinite(sse):
        raise DivergedNonFinite("objective is non-finite at the initial guess", last_good=None)

    trace = [sse]
    lam = opts.initial_damping
    reason = Termination.MAX_ITERATIONS
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        if sse == 0.0:
            reason = Termination.CONVERGED_OBJECTIVE
            break
        jac = fd_jacobian(theta, u, dt, opts.finite_difference_rel_step, base=yhat)
        if not np.all(np.isfinite(jac)):
            raise DivergedNonFinite("Jacobian became non-finite", last_good=tuple(theta))
        jtj = jac.T @ jac
        grad = jac.T @ resid
        if not np.any(jtj):
            raise NoDescentDirection("simulated output does not depend on the parameters")
        scale = np.diag(jtj).copy()
        scale[scale <= 0] = np.max(scale) * 1e-12

        accepted = False
        while True:
            free = np.ones(3, dtype=bool)
            try:
                step = _lm_step(jtj, grad, scale, lam, free)
                blocked = (theta <= lower) & (step < 0)
                if blocked.any():
                    free = ~blocked
                    step = _lm_step(jtj, grad, scale, lam, free)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = np.maximum(theta + step, lower)
            moved = candidate - theta
            if np.linalg.norm(moved) <= opts.step_tol * (np.linalg.norm(theta) + opts.step_tol):
                reason = Termination.CONVERGED_STEP
                break
            cand_yhat = simulate_yaw(candidate, u, dt)
            cand_resid = y - cand_yhat
            cand_sse = _sse(cand_resid)
            if math.isfinite(cand_sse) and cand_sse < sse:
                accepted = True
                break
            lam *= 10.0
            if lam > 1e16:
                reason = Termination.CONVERGED_STEP
                break
        if not accepted:
            break

        improvement = sse - cand_sse
        theta, yhat, resid, sse = candidate, cand_yhat, cand_resid, cand_sse
        trace.append(sse)
        lam = max(lam / 10.0, 1e-12)
        if improvement <= opts.objective_rel_tol * trace[-2]:
            reason = Termination.CONVERGED_OBJECTIVE
            break

    model = SecondOrderTf(*(float(v) for v in theta))
    return EstimationReport(
        model=model,
        training_fit_percent=fit_percent(y, yhat),
        objective_trace=tuple(trace),
        iterations_used=iterations,
        termination_reason=reason,
        initializer_model=init,
    )


def free_run(model, test, history=None):
    """Zero-initial-state simulation of ``model`` over ``test`` (see :func:`cross_validate`)."""
    u = test.input_u.values
    skip = 0
    if history is not None:
        if history.sample_period != test.sample_period:
            raise ValueError("history and test must share a sample period")
        u = np.concatenate([history.input_u.values, u])
        skip = len(history)
    return simulate_yaw(model, u, test.sample_period)[skip:]


def cross_validate(model, test, history=None):
    """Free-run fitness of ``model`` on ``test``.

    The model is simulated from rest at the test sample period. When the
    test segment continues an experiment, pass the preceding segment as
    ``history``: its inputs are run first to bring the model to the right
    state, and only the ``test`` samples are scored.
    """
    return fit_percent(test.output_yaw.values, free_run(model, test, history))


def identify(ds, train_fraction=0.5, opts=None):
    """Detrend, split, initialize, refine and validate on the held-out tail."""
    aligned = detrend(ds)
    train, test = split_dataset(aligned, train_fraction)
    init = equation_error_init(train)
    report = estimate_output_error(train, init, opts)
    fit = cross_validate(report.model, test, history=train)
    return IdentificationResult(report=report, validation_fit_percent=fit, train=train, test=test)


# --- model file -------------------------------------------------------------

_MODEL_KEYS = ("K", "a1", "a0", "dt_identified", "fit_train_percent")


def format_model_file(model, dt_identified=None, fit_train_percent=None, comment=None):
    """Render the ``key=value`` model file; floats use the shortest round-trip repr."""
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    lines += [f"K={model.gain!r}", f"a1={model.damping_coeff!r}", f"a0={model.stiffness_coeff!r}"]
    if dt_identified is not None:
        lines.append(f"dt_identified={float(dt_identified)!r}")
    if fit_train_percent is not None:
        lines.append(f"fit_train_percent={float(fit_train_percent)!r}")
    return "\n".join(lines) + "\n"


def parse_model_file(text):
    """Parse a model file into ``(SecondOrderTf, extras)``.

    ``extras`` holds ``dt_identified`` and ``fit_train_percent`` when present.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in _MODEL_KEYS:
            raise ParseError(f"unexpected line {line!r}", row=lineno)
        try:
            number = float(value)
        except ValueError:
            raise ParseError(f"cannot parse {value.strip()!r} as a number",
                             row=lineno, column=key) from None
        if not math.isfinite(number):
            raise ParseError("value must be finite", row=lineno, column=key)
        values[key] = number
    missing = [k for k in ("K", "a1", "a0") if k not in values]
    if missing:
        raise ParseError(f"model file is missing {', '.join(missing)}")
    try:
        model = SecondOrderTf(values["K"], values["a1"], values["a0"])
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    extras = {k: values[k] for k in ("dt_identified", "fit_train_percent") if k in values}
    return model, extras
