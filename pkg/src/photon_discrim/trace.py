"""Synthetic detector traces and threshold-crossing photon counting.

A trace is a uniformly sampled voltage record.  Each photon becomes one
pulse inside its time bin; counting partitions the record into bins and
counts maximal runs of samples above threshold, assigning a run to the bin
holding its first above-threshold sample.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigurationError, DomainError
from .stats import PhotonCountSequence

__all__ = [
    "DEFAULT_BIN_DURATION",
    "DEFAULT_SAMPLE_PERIOD",
    "PulseShape",
    "VoltageTrace",
    "synthesize_trace",
    "count_photons",
    "write_trace_binary",
    "read_trace_binary",
    "write_trace_csv",
    "read_trace_csv",
]

DEFAULT_BIN_DURATION = 1e-6
DEFAULT_SAMPLE_PERIOD = 10e-9

_MAGIC = b"PTRC"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHdQ")


def _ratio(bin_duration: float, sample_period: float) -> int:
    """Samples per bin; raises unless ``bin_duration`` is a whole multiple."""
    if sample_period <= 0 or not math.isfinite(sample_period):
        raise ConfigurationError(f"sample period must be positive, got {sample_period!r}")
    if bin_duration <= 0 or not math.isfinite(bin_duration):
        raise ConfigurationError(f"bin duration must be positive, got {bin_duration!r}")
    ratio = bin_duration / sample_period
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-6 * max(1.0, ratio):
        raise ConfigurationError(
            f"bin duration {bin_duration!r} s is not a multiple of sample period {sample_period!r} s"
        )
    return int(k)


@dataclass(frozen=True)
class PulseShape:
    amplitude: float = 1.0
    width: float = 30e-9
    rise: str = "rectangular"
    noise_sigma: float = 0.02
    min_gap: float = 20e-9

    def __post_init__(self):
        if self.rise not in ("rectangular", "raised-cosine"):
            raise ConfigurationError(f"unknown rise model {self.rise!r}")
        if not (self.width > 0 and self.min_gap >= 0 and self.noise_sigma >= 0):
            raise ConfigurationError("pulse width must be > 0, gap and noise >= 0")

    def samples(self, sample_period: float) -> np.ndarray:
        """Pulse waveform sampled at ``sample_period``."""
        n = max(1, int(round(self.width / sample_period)))
        if self.rise == "rectangular":
            return np.full(n, self.amplitude)
        phase = (np.arange(n) + 0.5) / n
        return self.amplitude * np.sin(np.pi * phase) ** 2


@dataclass(frozen=True, eq=False)
class VoltageTrace:
    samples: np.ndarray
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    bin_duration: float = DEFAULT_BIN_DURATION
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if not np.all(np.isfinite(samples)):
            raise DomainError("voltage samples must be finite")
        _ratio(self.bin_duration, self.sample_period)
        object.__setattr__(self, "samples", samples)
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", np.asarray(self.ground_truth, dtype=np.int64))

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period


def synthesize_trace(
    counts,
    pulse: PulseShape | None = None,
    sample_period: float = DEFAULT_SAMPLE_PERIOD,
    seed: int = 0,
    bin_duration: float = DEFAULT_BIN_DURATION,
) -> VoltageTrace:
    """Render photon counts as a noisy pulse train.

    Pulses are placed at random non-overlapping offsets inside their bin,
    separated from each other and from the bin edges by at least
    ``pulse.min_gap``.
    """
    pulse = pulse or PulseShape()
    seq = counts if isinstance(counts, PhotonCountSequence) else PhotonCountSequence(counts)
    c = seq.counts
    per_bin = _ratio(bin_duration, sample_period)
    shape = pulse.samples(sample_period)
    width = shape.size
    gap = int(math.ceil(pulse.min_gap / sample_period - 1e-9))
    slot = width + gap
    capacity = max(0, (per_bin - gap) // slot)

    over = np.flatnonzero(c > capacity)
    if over.size:
        i = int(over[0])
        raise CapacityError(i, int(c[i]), capacity)

    rng = np.random.default_rng(seed)
    v = np.zeros(c.size * per_bin)
    for i in np.flatnonzero(c):
        k = int(c[i])
        free = per_bin - gap - k * slot
        # sorted uniform offsets spread the spare room between pulses
        offsets = np.sort(rng.integers(0, free + 1, size=k))
        starts = i * per_bin + gap + offsets + np.arange(k) * slot
        for s in starts:
            v[s : s + width] = shape
    if pulse.noise_sigma > 0:
        v = v + rng.normal(0.0, pulse.noise_sigma, size=v.size)
    return VoltageTrace(v, sample_period, bin_duration, c.copy())


def count_photons(
    trace: VoltageTrace,
    threshold: float = 0.5,
    bin_duration: float | None = None,
) -> PhotonCountSequence:
    """Count above-threshold runs per bin."""
    if threshold <= 0:
        raise DomainError(f"threshold must be positive, got {threshold!r}")
    if trace.samples.size == 0:
        raise DomainError("trace is empty")
    bin_duration = trace.bin_duration if bin_duration is None else bin_duration
    per_bin = _ratio(bin_duration, trace.sample_period)
    n_bins = trace.samples.size // per_bin
    if n_bins < 1:
        raise DomainError("trace is shorter than one bin")
    above = trace.samples[: n_bins * per_bin] > threshold
    rising = above.copy()
    rising[1:] &= ~above[:-1]
    counts = rising.reshape(n_bins, per_bin).sum(axis=1)
    return PhotonCountSequence(counts)


def write_trace_binary(trace: VoltageTrace, path) -> None:
    """Little-endian ``PTRC`` file: header then float32 voltages."""
    data = np.asarray(trace.samples, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _FORMAT_VERSION, float(trace.sample_period), data.size))
        fh.write(data.tobytes())


def read_trace_binary(path, bin_duration: float = DEFAULT_BIN_DURATION) -> VoltageTrace:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path}: truncated trace header")
    magic, version, period, n = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}")
    if version != _FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported trace version {version}")
    body = raw[_HEADER.size :]
    if len(body) != 4 * n:
        raise DomainError(f"{path}: expected {n} samples, found {len(body) // 4}")
    samples = np.frombuffer(body, dtype="<f4").astype(float)
    return VoltageTrace(samples, period, bin_duration)


def write_trace_csv(trace: VoltageTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "volts"])
        for t, v in zip(trace.times.tolist(), trace.samples.tolist()):
            w.writerow([repr(t), repr(v)])


def read_trace_csv(path, bin_duration: float = DEFAULT_BIN_DURATION) -> VoltageTrace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) < 2:
        raise DomainError(f"{path}: need at least two samples to infer the sample period")
    times = np.array([float(r["time_s"]) for r in rows])
    volts = np.array([float(r["volts"]) for r in rows])
    period = float(np.median(np.diff(times)))
    # snap to the nearest integer divisor of the bin so count_photons accepts it
    period = bin_duration / round(bin_duration / period)
    return VoltageTrace(volts, period, bin_duration)
