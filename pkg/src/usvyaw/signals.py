"""Excitation signals, experiment logs and preprocessing.

Dataset CSV layout::

    # label: pool trial 3
    # sample_period: 0.05
    t,u,psi,r
    0.0,50.0,0.0008,0.032
    ...

``#`` lines before the header are comments. ``# label:`` sets the dataset
label and ``# sample_period:`` pins the sample period exactly (otherwise it
is inferred as the median time step). The ``r`` column is optional.
Numbers are written with the shortest repr that round-trips.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (InvalidWaveSpec, NonFiniteValue, NonUniformSampling,
                     ParseError, SplitTooSmall, TooFewSamples)
from .sim import TimeSeries, sample_count

MIN_SAMPLES = 4
MIN_SPLIT_SAMPLES = 50
UNIFORMITY_TOL = 0.01


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """One experiment log: PWM input and yaw angle (and optionally yaw rate)."""

    sample_period: float
    time_origin: float
    input_u: TimeSeries
    output_yaw: TimeSeries
    output_rate: TimeSeries = None
    label: str = ""

    def __post_init__(self):
        n = len(self.input_u)
        if len(self.output_yaw) != n:
            raise ValueError("input and yaw series must have equal length")
        if self.output_rate is not None and len(self.output_rate) != n:
            raise ValueError("rate series must match the input length")
        if n < MIN_SAMPLES:
            raise TooFewSamples(f"dataset has {n} samples, need at least {MIN_SAMPLES}")
        for ts in (self.input_u, self.output_yaw, self.output_rate):
            if ts is not None and ts.sample_period != self.sample_period:
                raise ValueError("all series must share the dataset sample period")
        if not math.isfinite(self.time_origin):
            raise NonFiniteValue("time origin must be finite")
        if "\n" in self.label or "\r" in self.label:
            raise ValueError("label must be a single line")

    @classmethod
    def from_arrays(cls, dt, u, psi, r=None, time_origin=0.0, label=""):
        """Build a dataset from plain arrays sampled every ``dt`` seconds."""
        rate = None if r is None else TimeSeries(dt, r)
        return cls(float(dt), float(time_origin), TimeSeries(dt, u), TimeSeries(dt, psi),
                   rate, label)

    def __len__(self):
        return len(self.input_u)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesDataset):
            return NotImplemented
        return (self.sample_period == other.sample_period
                and self.time_origin == other.time_origin
                and self.input_u == other.input_u
                and self.output_yaw == other.output_yaw
                and self.output_rate == other.output_rate
                and self.label == other.label)

    @property
    def time(self):
        return self.input_u.times(self.time_origin)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise on yaw, ``std_dev`` in rad."""

    std_dev: float
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.std_dev) and self.std_dev >= 0):
            raise ValueError("std_dev must be finite and >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def square_wave(amplitude, period, duration, dt, duty=0.5):
    """Symmetric square wave starting high.

    Sample ``k`` is ``+amplitude`` while the phase ``frac(k dt / period)`` is
    below ``duty`` and ``-amplitude`` otherwise. Phases that land on a
    switching instant up to rounding error count as the later half.
    """
    for name, value in (("amplitude", amplitude), ("period", period),
                        ("duration", duration), ("dt", dt), ("duty", duty)):
        if not math.isfinite(value):
            raise InvalidWaveSpec(f"{name} must be finite")
    if dt <= 0:
        raise InvalidWaveSpec("dt must be > 0")
    if period < 2 * dt:
        raise InvalidWaveSpec("period must be at least two samples")
    if duration < period:
        raise InvalidWaveSpec("duration must cover at least one period")
    if not 0 < duty < 1:
        raise InvalidWaveSpec("duty must lie in (0, 1)")

    n = sample_count(duration, dt)
    cycles = np.arange(n) * dt / period
    whole = np.floor(cycles)
    # snap values a rounding error below an integer up to it
    whole = np.where(cycles - whole > 1 - 1e-9 * np.maximum(1.0, cycles), whole + 1, whole)
    phase = np.clip(cycles - whole, 0.0, None)
    high = phase < duty - 1e-9
    return TimeSeries(dt, np.where(high, float(amplitude), -float(amplitude)))


def _fmt(x):
    return repr(float(x))


def save_dataset(ds, sink):
    """Write ``ds`` to a text stream in the dataset CSV layout."""
    lines = []
    if ds.label:
        lines.append(f"# label: {ds.label}")
    lines.append(f"# sample_period: {_fmt(ds.sample_period)}")
    has_rate = ds.output_rate is not None
    lines.append("t,u,psi,r" if has_rate else "t,u,psi")
    t = ds.time
    cols = [t, ds.input_u.values, ds.output_yaw.values]
    if has_rate:
        cols.append(ds.output_rate.values)
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    sink.write("\n".join(lines) + "\n")


def _parse_float(text, row, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a number", row=row, column=column) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"non-finite value {text!r} at row {row}, column {column!r}")
    return value


def load_dataset(source):
    """Read a dataset from a text stream (or a string of CSV content).

    Lines end in LF or CRLF.

    Raises
    ------
    ParseError
        Missing/unknown header, wrong field count or non-numeric field.
    NonUniformSampling
        A time step deviates more than 1% from the median step.
    NonFiniteValue, TooFewSamples
    """
    text = source if isinstance(source, str) else source.read()
    label = ""
    pinned_dt = None
    header = None
    rows = []
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        raw = raw[:-1] if raw.endswith("\r") else raw
        line = raw.strip(" \t")
        if header is None:
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = raw.lstrip(" \t")[1:].partition(":")
                if sep and key.strip() == "label":
                    # verbatim after "label: " so any single-line label round-trips
                    label = value[1:] if value.startswith(" ") else value
                elif sep and key.strip() == "sample_period":
                    pinned_dt = _parse_float(value.strip(), lineno, "sample_period")
                continue
            header = [h.strip() for h in line.split(",")]
            if header not in (["t", "u", "psi"], ["t", "u", "psi", "r"]):
                raise ParseError(f"unexpected header {line!r}, expected 't,u,psi' or 't,u,psi,r'",
                                 row=lineno)
            continue
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(fields)}", row=lineno)
        rows.append([_parse_float(f.strip(), lineno, col) for f, col in zip(fields, header)])

    if header is None:
        raise ParseError("no header line found")
    if len(rows) < MIN_SAMPLES:
        raise TooFewSamples(f"dataset has {len(rows)} samples, need at least {MIN_SAMPLES}")

    data = np.array(rows)
    t = data[:, 0]
    steps = np.diff(t)
    median = float(np.median(steps))
    if not median > 0:
        raise NonUniformSampling("time column is not increasing")
    bad = np.flatnonzero(np.abs(steps - median) > UNIFORMITY_TOL * median)
    if bad.size:
        i = int(bad[0])
        raise NonUniformSampling(
            f"time step {steps[i]!r} s between samples {i} and {i + 1} deviates more than "
            f"1% from the median step {median!r} s")
    dt = median
    if pinned_dt is not None:
        if abs(pinned_dt - median) > UNIFORMITY_TOL * median:
            raise NonUniformSampling(
                f"declared sample period {pinned_dt!r} s disagrees with the time column")
        dt = pinned_dt
    rate = data[:, 3] if data.shape[1] == 4 else None
    return TimeSeriesDataset.from_arrays(dt, data[:, 1], data[:, 2], rate,
                                         time_origin=float(t[0]), label=label)


def detrend(ds):
    """Shift yaw so that its first sample is zero. Input and rate are untouched."""
    yaw = ds.output_yaw.values
    return replace(ds, output_yaw=ds.output_yaw.with_values(yaw - yaw[0]))


def _slice(ds, start, stop, suffix):
    def cut(ts):
        return None if ts is None else ts.with_values(ts.values[start:stop])
    label = f"{ds.label} [{suffix}]" if ds.label else suffix
    return TimeSeriesDataset(ds.sample_period, ds.time_origin + start * ds.sample_period,
                             cut(ds.input_u), cut(ds.output_yaw), cut(ds.output_rate), label)


def split_dataset(ds, train_fraction):
    """Contiguous train/test split at ``floor(N * train_fraction)``."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(ds)
    n_train = math.floor(n * train_fraction)
    if n_train < MIN_SPLIT_SAMPLES or n - n_train < MIN_SPLIT_SAMPLES:
        raise SplitTooSmall(f"split of {n} samples gives {n_train}/{n - n_train}; each part "
                            f"needs at least {MIN_SPLIT_SAMPLES}")
    return _slice(ds, 0, n_train, "train"), _slice(ds, n_train, n, "test")


def differentiate_yaw(ds):
    """Yaw rate from yaw by central differences (one-sided at the ends)."""
    rate = np.gradient(ds.output_yaw.values, ds.sample_period, edge_order=1)
    return TimeSeries(ds.sample_period, rate)


def add_noise(ts, spec):
    """Add i.i.d. Gaussian noise.

    Draws come from ``numpy.random.Generator(PCG64(seed)).standard_normal``,
    so a given seed and length always yield the same sequence.
    """
    if spec.std_dev == 0:
        return ts
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return ts.with_values(ts.values + spec.std_dev * rng.standard_normal(len(ts)))

