"""Energy-per-effectiveness ratios and cost multiples.

Effectiveness scores are always on the 0-100 scale. There is no 0-1 mode;
mixing the two would silently shift every ratio by a factor of 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError, InvalidDenominatorError

SCORE_FIELDS = ("relevance", "accuracy", "faithfulness", "correctness")


def _positive(value: float | None, what: str) -> float:
    if value is None:
        raise InvalidDenominatorError(f"{what} is missing")
    if not (value > 0):
        raise InvalidDenominatorError(f"{what} must be positive, got {value!r}")
    return value


@dataclass(frozen=True)
class EffectivenessScores:
    relevance: float | None = None
    accuracy: float | None = None
    faithfulness: float | None = None
    correctness: float | None = None

    def __post_init__(self) -> None:
        for name in SCORE_FIELDS:
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 100.0):
                raise InputError(f"{name} score must be within [0, 100], got {value!r}")


@dataclass(frozen=True)
class FormationStats:
    total_energy: float
    memory_tokens: int
    writing_time: float = 0.0
    reading_time: float = 0.0


@dataclass(frozen=True)
class GenerationStats:
    e_real: float
    response_tokens: int
    latency: float = 0.0


@dataclass(frozen=True)
class GenerationMetricTriple:
    gerr: float
    efr: float
    ecr: float

    def __iter__(self):
        return iter((self.gerr, self.efr, self.ecr))


def energy_per_memory_token(stats: FormationStats) -> float:
    return stats.total_energy / _positive(stats.memory_tokens, "memory_tokens")


def per_token_times(stats: FormationStats) -> tuple[float, float]:
    """Writing (indexing) and reading (retrieval) seconds per memory token."""
    n = _positive(stats.memory_tokens, "memory_tokens")
    return stats.writing_time / n, stats.reading_time / n


def energy_per_response_token(stats: GenerationStats) -> float:
    return stats.e_real / _positive(stats.response_tokens, "response_tokens")


def latency_per_token(stats: GenerationStats) -> float:
    return stats.latency / _positive(stats.response_tokens, "response_tokens")


def rerr(e_token_m: float, relevance: float | None) -> float:
    """Formation energy per memory token over retrieval relevance."""
    return e_token_m / _positive(relevance, "relevance")


def ear(e_token_m: float, accuracy: float | None) -> float:
    """Formation energy per memory token over retrieval accuracy."""
    return e_token_m / _positive(accuracy, "accuracy")


def generation_ratios(e_token_g: float, scores: EffectivenessScores) -> GenerationMetricTriple:
    return GenerationMetricTriple(
        gerr=e_token_g / _positive(scores.relevance, "relevance"),
        efr=e_token_g / _positive(scores.faithfulness, "faithfulness"),
        ecr=e_token_g / _positive(scores.correctness, "correctness"),
    )


def cost_multiple(variant: GenerationMetricTriple, baseline: GenerationMetricTriple) -> float:
    """Geometric mean of the GERR, EFR and ECR increases of ``variant`` over ``baseline``.

    Latency is deliberately not part of the mean.
    """
    logs = 0.0
    for name in ("gerr", "efr", "ecr"):
        v = _positive(getattr(variant, name), f"variant {name}")
        b = _positive(getattr(baseline, name), f"baseline {name}")
        logs += math.log(v) - math.log(b)
    return math.exp(logs / 3.0)


# -- report assembly ------------------------------------------------------------

REPORT_FIELDS = (
    "label", "rerr", "ear", "gerr", "efr", "ecr",
    "e_token_m", "e_token_g", "latency_per_token", "multiple_vs_baseline",
)
SCORES_HEADER = ["label", *SCORE_FIELDS]
ENERGY_COLUMNS = (
    "e_token_m", "formation_energy", "memory_tokens", "writing_time", "reading_time",
    "e_token_g", "e_real", "response_tokens", "latency", "latency_per_token",
)


@dataclass(frozen=True)
class EnergyRecord:
    """Measured energies and times for one labelled pipeline variant.

    Per-token values may be given directly or derived from totals and
    token counts; direct values win when both are present.
    """

    label: str
    e_token_m: float | None = None
    formation_energy: float | None = None
    memory_tokens: int | None = None
    writing_time: float | None = None
    reading_time: float | None = None
    e_token_g: float | None = None
    e_real: float | None = None
    response_tokens: int | None = None
    latency: float | None = None
    latency_per_token: float | None = None

    def memory_token_energy(self) -> float | None:
        if self.e_token_m is not None:
            return self.e_token_m
        if self.formation_energy is None or self.memory_tokens is None:
            return None
        return energy_per_memory_token(FormationStats(self.formation_energy, self.memory_tokens))

    def response_token_energy(self) -> float | None:
        if self.e_token_g is not None:
            return self.e_token_g
        if self.e_real is None or self.response_tokens is None:
            return None
        return energy_per_response_token(GenerationStats(self.e_real, self.response_tokens))

    def response_token_latency(self) -> float | None:
        if self.latency_per_token is not None:
            return self.latency_per_token
        if self.latency is None or self.response_tokens is None:
            return None
        return latency_per_token(GenerationStats(0.0, self.response_tokens, self.latency))


def _try(fn, warnings_out: list[str], context: str):
    try:
        return fn()
    except InvalidDenominatorError as exc:
        warnings_out.append(f"{context}: {exc}")
        return None


def metrics_report(
    energies: list[EnergyRecord],
    scores: dict[str, EffectivenessScores],
    baseline: str | None = None,
) -> list[dict]:
    """One report row per energy record, in input order.

    Every label must have a score row and vice versa. Incomputable entries
    become ``None`` with a note in the row's ``warnings`` list.
    """
    labels = [e.label for e in energies]
    if len(set(labels)) != len(labels):
        raise InputError("duplicate labels in energies")
    missing_scores = [l for l in labels if l not in scores]
    missing_energy = [l for l in scores if l not in set(labels)]
    if missing_scores or missing_energy:
        parts = []
        if missing_scores:
            parts.append(f"no scores for: {', '.join(missing_scores)}")
        if missing_energy:
            parts.append(f"no energies for: {', '.join(missing_energy)}")
        raise InputError("label join failed; " + "; ".join(parts))
    if baseline is not None and baseline not in scores:
        raise InputError(f"baseline label {baseline!r} not found")

    triples: dict[str, GenerationMetricTriple | None] = {}
    rows = []
    for record in energies:
        notes: list[str] = []
        s = scores[record.label]
        e_m = _try(record.memory_token_energy, notes, "e_token_m")
        e_g = _try(record.response_token_energy, notes, "e_token_g")
        lat = _try(record.response_token_latency, notes, "latency_per_token")
        row = {
            "label": record.label,
            "rerr": None if e_m is None or s.relevance is None else _try(lambda: rerr(e_m, s.relevance), notes, "rerr"),
            "ear": None if e_m is None or s.accuracy is None else _try(lambda: ear(e_m, s.accuracy), notes, "ear"),
            "gerr": None, "efr": None, "ecr": None,
            "e_token_m": e_m, "e_token_g": e_g, "latency_per_token": lat,
            "multiple_vs_baseline": None,
        }
        triple = None
        if e_g is not None:
            triple = _try(lambda: generation_ratios(e_g, s), notes, "generation ratios")
        if triple is not None:
            row.update(gerr=triple.gerr, efr=triple.efr, ecr=triple.ecr)
        triples[record.label] = triple
        row["warnings"] = notes
        rows.append(row)

    if baseline is not None:
        base = triples[baseline]
        for row in rows:
            variant = triples[row["label"]]
            if base is None or variant is None:
                row["warnings"].append("multiple_vs_baseline: generation ratios unavailable")
                continue
            row["multiple_vs_baseline"] = _try(
                lambda: cost_multiple(variant, base), row["warnings"], "multiple_vs_baseline"
            )
    return rows
