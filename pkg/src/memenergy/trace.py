"""Turn power and energy-counter traces into per-request joules.

GPU-style traces are instantaneous power samples, integrated with the
trapezoid rule. CPU-style traces are cumulative energy counters in
microjoules (powercap/RAPL ``energy_uj``) that wrap at ``wrap_range``.
Timestamps are seconds on one shared, arbitrary epoch; nothing is re-clocked.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from ._io import open_input, parse_count, parse_float, read_csv_rows
from .energy_model import EnergySample
from .errors import CoverageError, InputError, TraceWarning

UJ_PER_J = 1e6
MW_PER_W = 1e3

GPU_HEADER = ["timestamp_s", "power_mw"]
CPU_HEADER = ["timestamp_s", "energy_uj"]
INTERVAL_HEADER = ["label", "start_s", "end_s", "t_in", "t_out"]


def _check_times(t: np.ndarray, what: str) -> None:
    if t.size < 2:
        raise InputError(f"{what}: need at least 2 samples")
    if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
        raise InputError(f"{what}: timestamps must be finite and strictly increasing")


@dataclass(frozen=True, eq=False)
class PowerTrace:
    timestamps: np.ndarray
    power: np.ndarray  # watts

    def __post_init__(self) -> None:
        t = np.asarray(self.timestamps, dtype=float)
        p = np.asarray(self.power, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise InputError("power trace: timestamps and power must be equal-length 1-D arrays")
        _check_times(t, "power trace")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InputError("power trace: power must be finite and non-negative")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True, eq=False)
class CumulativeEnergyTrace:
    timestamps: np.ndarray
    counter: np.ndarray  # microjoules
    wrap_range: float  # microjoules

    def __post_init__(self) -> None:
        t = np.asarray(self.timestamps, dtype=float)
        c = np.asarray(self.counter, dtype=float)
        if t.shape != c.shape or t.ndim != 1:
            raise InputError("energy trace: timestamps and counters must be equal-length 1-D arrays")
        _check_times(t, "energy trace")
        if not (self.wrap_range > 0):
            raise InputError(f"energy trace: wrap_range must be positive, got {self.wrap_range!r}")
        if not np.all(np.isfinite(c)) or np.any(c < 0) or np.any(c > self.wrap_range):
            raise InputError("energy trace: counters must lie within [0, wrap_range]")
        t.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "counter", c)

    def unwrapped(self) -> np.ndarray:
        """Counter values with every wraparound undone (monotone, microjoules)."""
        delta = np.diff(self.counter)
        delta = np.where(delta < 0, delta + self.wrap_range, delta)
        if np.any(delta > self.wrap_range / 2):
            warnings.warn(
                "energy counter step exceeds half the wrap range; "
                "a double wrap between samples cannot be detected",
                TraceWarning,
                stacklevel=3,
            )
        return self.counter[0] + np.concatenate(([0.0], np.cumsum(delta)))


@dataclass(frozen=True)
class InferenceInterval:
    start: float
    end: float
    t_in: int
    t_out: int
    label: str = ""

    def __post_init__(self) -> None:
        if not (self.start < self.end):
            raise InputError(f"interval {self.label!r}: start must be before end")
        if self.t_in < 0 or self.t_out < 0:
            raise InputError(f"interval {self.label!r}: token counts must be non-negative")

    @property
    def duration(self) -> float:
        return self.end - self.start


def _clamp_to_coverage(t: np.ndarray, interval: InferenceInterval, source: str) -> tuple[float, float]:
    """Clamp interval edges that miss the trace by at most one median sampling period."""
    tol = float(np.median(np.diff(t)))
    lo, hi = interval.start, interval.end
    first, last = float(t[0]), float(t[-1])
    for edge, ref, outside in ((lo, first, lo < first), (hi, last, hi > last)):
        if outside:
            gap = abs(edge - ref)
            if gap > tol:
                raise CoverageError(
                    f"interval {interval.label!r} [{interval.start:g}, {interval.end:g}] is not covered "
                    f"by {source} trace [{first:g}, {last:g}]",
                    interval=interval.label,
                    source=source,
                )
            warnings.warn(
                f"interval {interval.label!r}: edge {edge:g} lies {gap:g} s outside the {source} trace; "
                f"clamped to {ref:g}",
                TraceWarning,
                stacklevel=4,
            )
    lo, hi = max(lo, first), min(hi, last)
    if not lo < hi:
        raise CoverageError(
            f"interval {interval.label!r} has no overlap with the {source} trace",
            interval=interval.label,
            source=source,
        )
    return lo, hi


def _piecewise_integral(t: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    inside = (t > lo) & (t < hi)
    ts = np.concatenate(([lo], t[inside], [hi]))
    ys = np.concatenate(([np.interp(lo, t, y)], y[inside], [np.interp(hi, t, y)]))
    return float(np.trapezoid(ys, ts))


def integrate_power(trace: PowerTrace, interval: InferenceInterval, source: str = "gpu") -> float:
    """Joules drawn over the interval (trapezoid rule, interpolated edges)."""
    lo, hi = _clamp_to_coverage(trace.timestamps, interval, source)
    return _piecewise_integral(trace.timestamps, trace.power, lo, hi)


def counter_energy(trace: CumulativeEnergyTrace, interval: InferenceInterval, source: str = "cpu") -> float:
    """Joules accumulated by a wrapping energy counter over the interval."""
    lo, hi = _clamp_to_coverage(trace.timestamps, interval, source)
    total = trace.unwrapped()
    start, end = np.interp([lo, hi], trace.timestamps, total)
    return max(0.0, float(end - start)) / UJ_PER_J


def baseline_subtract(energy: float, interval: InferenceInterval, idle_power: float) -> float:
    """Remove idle draw from an interval's energy, clamping at zero."""
    if idle_power < 0:
        raise InputError(f"idle power must be non-negative, got {idle_power!r}")
    net = energy - idle_power * interval.duration
    if net < 0:
        warnings.warn(
            f"interval {interval.label!r}: idle baseline exceeds measured energy "
            f"({energy:g} J - {idle_power:g} W x {interval.duration:g} s); clamped to 0",
            TraceWarning,
            stacklevel=2,
        )
        return 0.0
    return net


def build_samples(
    intervals: Sequence[InferenceInterval],
    cpu: CumulativeEnergyTrace | None = None,
    gpu: PowerTrace | None = None,
    idle_cpu: float | None = None,
    idle_gpu: float | None = None,
) -> list[EnergySample]:
    """One fitting sample per interval; energy is the sum over the present sources."""
    if cpu is None and gpu is None:
        raise InputError("at least one trace (cpu or gpu) is required")
    samples = []
    for interval in intervals:
        energy = 0.0
        if cpu is not None:
            e = counter_energy(cpu, interval, "cpu")
            energy += e if idle_cpu is None else baseline_subtract(e, interval, idle_cpu)
        if gpu is not None:
            e = integrate_power(gpu, interval, "gpu")
            energy += e if idle_gpu is None else baseline_subtract(e, interval, idle_gpu)
        samples.append(EnergySample(interval.t_in, interval.t_out, energy))
    return samples


# -- file formats -------------------------------------------------------------


def _columns(fh: IO[str], header: list[str], name: str) -> tuple[np.ndarray, np.ndarray]:
    rows = read_csv_rows(fh, header, name)
    a = [parse_float(r[header[0]], f"{name}: line {n}: {header[0]}") for n, r in rows]
    b = [parse_float(r[header[1]], f"{name}: line {n}: {header[1]}") for n, r in rows]
    return np.array(a, dtype=float), np.array(b, dtype=float)


def read_power_trace(path: str | Path) -> PowerTrace:
    """GPU trace CSV ``timestamp_s,power_mw``; power is converted to watts."""
    with open_input(path) as fh:
        t, mw = _columns(fh, GPU_HEADER, str(path))
    return PowerTrace(t, mw / MW_PER_W)


def read_wrap_range(sidecar: str | Path) -> float:
    with open_input(sidecar) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{sidecar}: invalid JSON: {exc}") from exc
    value = data.get("wrap_range_uj") if isinstance(data, dict) else None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{sidecar}: expected {{\"wrap_range_uj\": number}}")
    return float(value)


def read_energy_trace(path: str | Path, wrap_range: float) -> CumulativeEnergyTrace:
    with open_input(path) as fh:
        t, uj = _columns(fh, CPU_HEADER, str(path))
    return CumulativeEnergyTrace(t, uj, wrap_range)


def read_intervals(path: str | Path) -> list[InferenceInterval]:
    name = str(path)
    with open_input(path) as fh:
        rows = read_csv_rows(fh, INTERVAL_HEADER, name)
    out = []
    for n, r in rows:
        where = f"{name}: line {n}"
        out.append(InferenceInterval(
            start=parse_float(r["start_s"], f"{where}: start_s"),
            end=parse_float(r["end_s"], f"{where}: end_s"),
            t_in=parse_count(r["t_in"], f"{where}: t_in"),
            t_out=parse_count(r["t_out"], f"{where}: t_out"),
            label=r["label"],
        ))
    return out
