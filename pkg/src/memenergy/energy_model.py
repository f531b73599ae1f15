"""Bilinear inference-energy model and its least-squares fit.

The energy of one LLM call with ``t_in`` input and ``t_out`` output tokens is

    E = alpha_in * t_in + alpha_out * t_out + alpha_cross * t_in * t_out

There is deliberately no constant term. Idle draw that should not be
attributed to tokens has to be removed from measurements beforehand
(see :func:`memenergy.trace.baseline_subtract`).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from ._io import fmt, open_input, open_output, parse_count, parse_float, read_csv_rows
from .errors import (
    DegenerateDesignError,
    EnergyWarning,
    InputError,
    InsufficientDataError,
    InvalidModelError,
    ZeroVarianceError,
)

#: Coefficients fitted for Llama-3.1-8B-Instruct (8-bit) on an RTX 4080 host.
PUBLISHED_COEFFICIENTS = (0.042933, 9.109322, 0.000513)

DEFAULT_MAX_CONDITION = 1e12

SAMPLE_HEADER = ["t_in", "t_out", "joules"]


@dataclass(frozen=True)
class EnergyModelCoefficients:
    alpha_in: float
    alpha_out: float
    alpha_cross: float
    model_id: str = ""
    r_squared: float | None = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for name in ("alpha_in", "alpha_out", "alpha_cross"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidModelError(f"{name} must be a finite number, got {value!r}")
        if self.r_squared is not None and not (self.r_squared <= 1.0):
            raise InvalidModelError(f"r_squared must be <= 1, got {self.r_squared!r}")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.alpha_in, self.alpha_out, self.alpha_cross)

    def diagnostics(self) -> list[str]:
        """Advisory notes about unusual coefficient triples (never errors)."""
        notes = []
        for name, value in zip(("alpha_in", "alpha_out", "alpha_cross"), self.coefficients):
            if value < 0:
                notes.append(f"{name} is negative ({value!r}); predictions may go negative")
        if not (self.alpha_out > self.alpha_in and self.alpha_out > self.alpha_cross):
            notes.append(
                "alpha_out does not exceed both alpha_in and alpha_cross; "
                "output tokens are usually the most expensive"
            )
        return notes

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "alpha_in": float(self.alpha_in),
            "alpha_out": float(self.alpha_out),
            "alpha_cross": float(self.alpha_cross),
            "r_squared": None if self.r_squared is None else float(self.r_squared),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyModelCoefficients":
        if not isinstance(data, dict):
            raise InputError("model file must hold a JSON object")
        missing = [k for k in ("alpha_in", "alpha_out", "alpha_cross") if k not in data]
        if missing:
            raise InputError(f"model file missing fields: {', '.join(missing)}")
        model_id = data.get("model_id", "")
        if not isinstance(model_id, str):
            raise InputError("model_id must be a string")
        r2 = data.get("r_squared")
        if r2 is not None and (isinstance(r2, bool) or not isinstance(r2, (int, float))):
            raise InputError("r_squared must be a number or null")
        return cls(data["alpha_in"], data["alpha_out"], data["alpha_cross"], model_id, r2)


@dataclass(frozen=True)
class EnergySample:
    t_in: int
    t_out: int
    energy: float

    def __post_init__(self) -> None:
        if self.t_in < 0 or self.t_out < 0:
            raise InputError(f"token counts must be non-negative: {self}")
        if not (self.energy >= 0) or not math.isfinite(self.energy):
            raise InputError(f"energy must be a non-negative finite number: {self}")


def published_model() -> EnergyModelCoefficients:
    return EnergyModelCoefficients(*PUBLISHED_COEFFICIENTS, model_id="Llama-3.1-8B-Instruct-int8")


def predict_energy(model: EnergyModelCoefficients, t_in: float, t_out: float) -> float:
    """Joules for one call with ``t_in`` input and ``t_out`` output tokens."""
    model.validate()
    if t_in < 0 or t_out < 0:
        raise InputError(f"token counts must be non-negative, got t_in={t_in}, t_out={t_out}")
    t_in = float(t_in)
    t_out = float(t_out)
    energy = model.alpha_in * t_in + model.alpha_out * t_out + model.alpha_cross * t_in * t_out
    if energy < 0:
        warnings.warn(
            f"negative energy prediction {energy!r} J at t_in={t_in:g}, t_out={t_out:g} "
            f"(model {model.model_id!r} has negative coefficients)",
            EnergyWarning,
            stacklevel=2,
        )
    return energy


def _design(samples: Sequence[EnergySample]) -> tuple[np.ndarray, np.ndarray]:
    t_in = np.array([s.t_in for s in samples], dtype=float)
    t_out = np.array([s.t_out for s in samples], dtype=float)
    X = np.column_stack([t_in, t_out, t_in * t_out])
    y = np.array([s.energy for s in samples], dtype=float)
    return X, y


def r_squared_of(samples: Sequence[EnergySample], model: EnergyModelCoefficients) -> float:
    """Coefficient of determination, ``1 - SS_res / SS_tot`` with a mean-centred SS_tot."""
    if len(samples) < 2:
        raise InsufficientDataError("r_squared needs at least 2 samples")
    X, y = _design(samples)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVarianceError("all sample energies are identical; r_squared undefined")
    residual = y - X @ np.array(model.coefficients, dtype=float)
    return 1.0 - float(residual @ residual) / ss_tot


def fit_energy_model(
    samples: Sequence[EnergySample],
    model_id: str = "",
    *,
    max_condition: float = DEFAULT_MAX_CONDITION,
) -> EnergyModelCoefficients:
    """Ordinary least squares fit of the three coefficients (no intercept).

    Solved through the normal equations after scaling each design column to
    unit norm. The scaled Gram matrix must have a condition number below
    ``max_condition``; otherwise the design is rejected as degenerate.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise InsufficientDataError(f"need at least 3 samples to fit 3 coefficients, got {len(samples)}")
    X, y = _design(samples)
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        zero = [n for n, s in zip(("t_in", "t_out", "t_in*t_out"), scale) if s == 0]
        raise DegenerateDesignError(f"design column(s) identically zero: {', '.join(zero)}")
    Xs = X / scale
    gram = Xs.T @ Xs
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_condition:
        raise DegenerateDesignError(
            f"design matrix is rank deficient or ill-conditioned (condition {cond:.3g} > {max_condition:.3g})"
        )
    try:
        beta = np.linalg.solve(gram, Xs.T @ y)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError(f"normal equations are singular: {exc}") from exc
    alpha = beta / scale
    model = EnergyModelCoefficients(float(alpha[0]), float(alpha[1]), float(alpha[2]), model_id)
    try:
        r2: float | None = r_squared_of(samples, model)
    except ZeroVarianceError:
        r2 = None
    fitted = EnergyModelCoefficients(model.alpha_in, model.alpha_out, model.alpha_cross, model_id, r2)
    for note in fitted.diagnostics():
        warnings.warn(note, EnergyWarning, stacklevel=2)
    return fitted


# -- file formats -------------------------------------------------------------


def parse_samples(fh: IO[str], name: str = "samples") -> list[EnergySample]:
    rows = read_csv_rows(fh, SAMPLE_HEADER, name)
    samples = []
    for lineno, row in rows:
        where = f"{name}: line {lineno}"
        t_in = parse_count(row["t_in"], f"{where}: t_in")
        t_out = parse_count(row["t_out"], f"{where}: t_out")
        joules = parse_float(row["joules"], f"{where}: joules")
        if joules < 0:
            raise InputError(f"{where}: joules must be non-negative, got {row['joules']!r}")
        samples.append(EnergySample(t_in, t_out, joules))
    return samples


def read_samples(path: str | Path) -> list[EnergySample]:
    with open_input(path) as fh:
        return parse_samples(fh, str(path))


def write_samples(samples: Iterable[EnergySample], fh: IO[str]) -> None:
    fh.write(",".join(SAMPLE_HEADER) + "\n")
    for s in samples:
        fh.write(f"{s.t_in},{s.t_out},{fmt(s.energy)}\n")


def load_model(path: str | Path) -> EnergyModelCoefficients:
    with open_input(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    return EnergyModelCoefficients.from_dict(data)


def save_model(model: EnergyModelCoefficients, path: str | Path) -> None:
    with open_output(path) as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")
