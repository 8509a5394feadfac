"""Command-line frontend: ``usvyaw {excite,identify,validate,info,step}``.

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 bad data, 5 numerical failure.
"""

import argparse
import math
import sys

import numpy as np

from . import estim, model, signals, sim
from .errors import DataError, EstimationError, InvalidSamplePeriod, InvalidWaveSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5

PWM_LIMIT = 255.0
MODEL_COMMENT = "yaw model psi(s)/u(s) = K / (s^2 + a1 s + a0)"


class UsageError(Exception):
    pass


def _fmt(x):
    return f"{x:.6g}"


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_dataset(path, degrees):
    ds = signals.load_dataset(_read_text(path))
    if degrees:
        rate = None if ds.output_rate is None else np.radians(ds.output_rate.values)
        ds = signals.TimeSeriesDataset.from_arrays(
            ds.sample_period, ds.input_u.values, np.radians(ds.output_yaw.values), rate,
            time_origin=ds.time_origin, label=ds.label)
    return ds


def _add_plant_flags(parser):
    group = parser.add_argument_group("plant (model file, TF coefficients or physical parameters)")
    group.add_argument("--model", help="model file with K, a1, a0")
    group.add_argument("--K", type=float, help="numerator gain")
    group.add_argument("--a1", type=float, help="s^1 denominator coefficient")
    group.add_argument("--a0", type=float, default=None, help="s^0 denominator coefficient")
    group.add_argument("--inertia", type=float, help="yaw inertia I_z, kg m^2")
    group.add_argument("--drag", type=float, help="yaw drag coefficient b_y, N m s/rad")
    group.add_argument("--thrust", type=float, help="thrust coefficient a_t, N per PWM unit")
    group.add_argument("--arm", type=float, help="thruster moment arm l, m")


def _plant_from_args(args, model_path=None):
    path = model_path or getattr(args, "model", None)
    physical = [args.inertia, args.drag, args.thrust, args.arm]
    tf_given = args.K is not None or args.a1 is not None or args.a0 is not None
    sources = sum([path is not None, tf_given, any(v is not None for v in physical)])
    if sources != 1:
        raise UsageError("give exactly one plant: a model file, --K/--a1/--a0, or "
                         "--inertia/--drag/--thrust/--arm")
    if path is not None:
        return estim.parse_model_file(_read_text(path))[0]
    if tf_given:
        if args.K is None or args.a1 is None:
            raise UsageError("--K and --a1 are required (--a0 defaults to 0)")
        try:
            return model.SecondOrderTf(args.K, args.a1, args.a0 or 0.0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if any(v is None for v in physical):
        raise UsageError("--inertia, --drag, --thrust and --arm must all be given")
    try:
        return model.physical_to_tf(model.PhysicalParams(*physical))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_excite(args):
    tf = _plant_from_args(args)
    if abs(args.amplitude) > PWM_LIMIT:
        print(f"warning: amplitude {args.amplitude:g} is outside the 8-bit PWM range "
              f"[-{PWM_LIMIT:g}, {PWM_LIMIT:g}]", file=sys.stderr)
    try:
        u = signals.square_wave(args.amplitude, args.period, args.duration, args.dt, args.duty)
    except (InvalidWaveSpec, InvalidSamplePeriod) as exc:
        raise UsageError(str(exc)) from None
    psi, rate = sim.simulate(sim.discretize_zoh(tf, args.dt), u)
    std = args.noise_std
    if args.noise_rel:
        std += args.noise_rel * float(np.std(psi.values))
    if std < 0:
        raise UsageError("noise level must be >= 0")
    psi = signals.add_noise(psi, signals.NoiseSpec(std, args.seed))
    if args.degrees:
        psi, rate = psi.with_values(np.degrees(psi.values)), rate.with_values(np.degrees(rate.values))
    ds = signals.TimeSeriesDataset(args.dt, 0.0, u, psi, rate, args.label)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        signals.save_dataset(ds, fh)
    print(f"wrote {len(ds)} samples to {args.out}")
    return EXIT_OK


def identification_report(result):
    rep = result.report
    lines = [
        "identified " + MODEL_COMMENT,
        model.describe(rep.model),
        f"train fit = {_fmt(rep.training_fit_percent)} %",
        f"validation fit = {_fmt(result.validation_fit_percent)} %",
        f"iterations = {rep.iterations_used} ({rep.termination_reason})",
        f"train/test samples = {len(result.train)}/{len(result.test)}",
    ]
    return "\n".join(lines) + "\n"


def cmd_identify(args):
    ds = _load_dataset(args.dataset, args.degrees)
    opts = estim.EstimationOptions(max_iterations=args.max_iterations)
    result = estim.identify(ds, args.train_fraction, opts)
    text = estim.format_model_file(result.model, ds.sample_period,
                                   result.report.training_fit_percent, comment=MODEL_COMMENT)
    _write_text(args.model_out, text)
    report = identification_report(result)
    if args.report_out:
        _write_text(args.report_out, report)
    sys.stdout.write(report)
    return EXIT_OK


def cmd_validate(args):
    tf = estim.parse_model_file(_read_text(args.model))[0]
    ds = _load_dataset(args.dataset, args.degrees)
    if args.detrend or args.train_fraction is not None:
        ds = signals.detrend(ds)
    if args.train_fraction is not None:
        history, test = signals.split_dataset(ds, args.train_fraction)
    else:
        history, test = None, ds
    psi_sim = estim.free_run(tf, test, history)
    fit = estim.fit_percent(test.output_yaw.values, psi_sim)
    print(f"validation fit = {_fmt(fit)} %")
    if args.overlay_out:
        lines = ["t,psi_measured,psi_simulated"]
        for row in zip(test.time, test.output_yaw.values, psi_sim):
            lines.append(",".join(repr(float(v)) for v in row))
        _write_text(args.overlay_out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_info(args):
    tf = _plant_from_args(args, args.model_file)
    print(model.describe(tf))
    return EXIT_OK


def cmd_step(args):
    tf = estim.parse_model_file(_read_text(args.model))[0]
    try:
        psi = sim.step_response(tf, args.amplitude, args.duration, args.dt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t = (np.arange(len(psi)) + 1) * psi.sample_period
    lines = ["t,psi"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(t, psi.values)]
    _write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(psi)} samples to {args.out}")
    return EXIT_OK


def _positive(text):
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _fraction(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text!r}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="usvyaw", description="Second-order USV yaw model identification toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("excite", help="simulate a square-wave experiment and write a dataset CSV")
    _add_plant_flags(p)
    p.add_argument("--out", required=True, help="dataset CSV to write")
    p.add_argument("--amplitude", type=float, default=50.0, help="PWM amplitude (default 50)")
    p.add_argument("--period", type=_positive, default=20.0, help="wave period, s (default 20)")
    p.add_argument("--duration", type=_positive, default=200.0, help="duration, s (default 200)")
    p.add_argument("--dt", type=_positive, default=0.05, help="sample period, s (default 0.05)")
    p.add_argument("--duty", type=_fraction, default=0.5, help="duty cycle (default 0.5)")
    p.add_argument("--noise-std", type=float, default=0.0, help="yaw noise std, rad (default 0)")
    p.add_argument("--noise-rel", type=float, default=0.0,
                   help="extra yaw noise std as a fraction of the noiseless yaw std")
    p.add_argument("--seed", type=int, default=1, help="noise seed (default 1)")
    p.add_argument("--label", default="", help="dataset label")
    p.add_argument("--degrees", action="store_true", help="write angles in degrees")
    p.set_defaults(func=cmd_excite)

    p = sub.add_parser("identify", help="fit K, a1, a0 to a dataset and cross-validate")
    p.add_argument("dataset")
    p.add_argument("--model-out", required=True, help="model file to write")
    p.add_argument("--report-out", help="also write the report to this file")
    p.add_argument("--train-fraction", type=_fraction, default=0.5)
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--degrees", action="store_true", help="dataset angles are in degrees")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("validate", help="free-run fitness of a model on a dataset")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--overlay-out", help="write t,psi_measured,psi_simulated CSV")
    p.add_argument("--train-fraction", type=_fraction, default=None,
                   help="detrend, split like 'identify' and score only the held-out tail")
    p.add_argument("--detrend", action="store_true", help="remove the initial yaw offset first")
    p.add_argument("--degrees", action="store_true", help="dataset angles are in degrees")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="poles, stability and gains of a model")
    p.add_argument("model_file", nargs="?", help="model file (or give the plant via flags)")
    _add_plant_flags(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("step", help="write the step response of a model as t,psi CSV")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--duration", type=_positive, default=120.0)
    p.add_argument("--dt", type=_positive, default=0.05)
    p.set_defaults(func=cmd_step)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
