"""Analytic per-stage energy of a memory-augmented generation pipeline.

Stages, in dataflow order: retrieval-necessity detection (E1), query
optimization (E2), retrieval (a non-LLM cost), reranking (E3), compression
(E4) and answer generation (E5). A disabled stage costs nothing and passes
its input through unchanged: without query optimization the reranker sees
the raw query, and without compression generation sees every retrieved token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

from ._io import parse_count, parse_float
from .energy_model import EnergyModelCoefficients, predict_energy
from .errors import InputError, InvalidDenominatorError

DEFAULT_DETECTION_TOKENS = 5

WORKLOAD_FIELDS = ("t_q", "t_qn", "t_m", "k", "c", "beta", "t_a", "t_mg", "t_ag")
STAGE_FIELDS = ("e_retr", "e1_detection", "e2_query_opt", "e3_rerank", "e4_compression", "e5_generation")


def round_tokens(x: float) -> int:
    """Nearest integer, ties away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class QueryWorkload:
    """Token counts for one query's trip through the pipeline.

    ``t_qn`` of ``None`` means the optimized query is as long as the raw one.
    ``t_mg`` / ``t_ag`` are the ground-truth memory and answer sizes and are
    only needed for the optimal-case energy.
    """

    t_q: int
    t_m: int
    k: int
    t_a: int
    t_qn: int | None = None
    c: int = DEFAULT_DETECTION_TOKENS
    beta: float = 1.0
    t_mg: int | None = None
    t_ag: int | None = None

    def __post_init__(self) -> None:
        for name in ("t_q", "t_m", "k", "t_a", "c", "t_qn", "t_mg", "t_ag"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise InputError(f"{name} must be non-negative, got {value!r}")
        if not (0.0 < self.beta <= 1.0):
            raise InputError(f"beta must be in (0, 1], got {self.beta!r}")

    @property
    def optimized_query_tokens(self) -> int:
        return self.t_q if self.t_qn is None else self.t_qn

    @property
    def has_ground_truth(self) -> bool:
        return self.t_mg is not None and self.t_ag is not None

    @classmethod
    def from_mapping(cls, data: dict[str, Any], name: str = "workload") -> tuple["QueryWorkload", list[str]]:
        """Build from a JSON object or CSV row; returns the workload and the defaulted field names."""
        unknown = sorted(set(data) - set(WORKLOAD_FIELDS))
        if unknown:
            raise InputError(f"{name}: unknown fields: {', '.join(unknown)}")
        present = {k: v for k, v in data.items() if v is not None and v != ""}
        missing = [k for k in ("t_q", "t_m", "k", "t_a") if k not in present]
        if missing:
            raise InputError(f"{name}: missing required fields: {', '.join(missing)}")
        kwargs: dict[str, Any] = {}
        for key, value in present.items():
            if key == "beta":
                if isinstance(value, bool):
                    raise InputError(f"{name}: beta must be a number")
                kwargs[key] = parse_float(str(value), f"{name}: beta")
            else:
                kwargs[key] = parse_count(value, f"{name}: {key}")
        defaulted = [k for k in ("t_qn", "c", "beta", "t_mg", "t_ag") if k not in present]
        return cls(**kwargs), defaulted

    def to_dict(self) -> dict[str, Any]:
        return {f: getattr(self, f) for f in WORKLOAD_FIELDS}


@dataclass(frozen=True)
class PipelineConfig:
    detection_enabled: bool = True
    query_opt_enabled: bool = True
    rerank_enabled: bool = True
    compression_enabled: bool = True
    retrieval_energy_per_query: float = 0.0
    retrieval_energy_per_memory_token: float = 0.0

    def __post_init__(self) -> None:
        for name in ("retrieval_energy_per_query", "retrieval_energy_per_memory_token"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InputError(f"{name} must be a non-negative finite number, got {value!r}")

    def retrieval_and_generation_only(self) -> "PipelineConfig":
        """Same retrieval costs, every optional stage off."""
        return replace(
            self,
            detection_enabled=False,
            query_opt_enabled=False,
            rerank_enabled=False,
            compression_enabled=False,
        )

    @classmethod
    def from_mapping(cls, data: dict[str, Any], name: str = "config") -> tuple["PipelineConfig", list[str]]:
        if not isinstance(data, dict):
            raise InputError(f"{name}: expected a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"{name}: unknown fields: {', '.join(unknown)}")
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key.endswith("_enabled"):
                if not isinstance(value, bool):
                    raise InputError(f"{name}: {key} must be true or false")
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InputError(f"{name}: {key} must be a number")
            kwargs[key] = value
        defaulted = sorted(known - set(data))
        return cls(**kwargs), defaulted

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EnergyBreakdown:
    e_retr: float = 0.0
    e1_detection: float = 0.0
    e2_query_opt: float = 0.0
    e3_rerank: float = 0.0
    e4_compression: float = 0.0
    e5_generation: float = 0.0
    e_total: float = field(init=False)

    def __post_init__(self) -> None:
        total = 0.0
        for name in STAGE_FIELDS:
            total += getattr(self, name)
        object.__setattr__(self, "e_total", total)

    @property
    def components(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in STAGE_FIELDS)

    def to_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in (*STAGE_FIELDS, "e_total")}

    @classmethod
    def from_dict(cls, data: dict[str, float]) -> "EnergyBreakdown":
        return cls(*(data[name] for name in STAGE_FIELDS))


def detection_energy(model: EnergyModelCoefficients, workload: QueryWorkload) -> float:
    return predict_energy(model, workload.t_q, workload.c)


def query_optimization_energy(model: EnergyModelCoefficients, workload: QueryWorkload) -> float:
    return predict_energy(model, workload.t_q, workload.optimized_query_tokens)


def rerank_energy(model: EnergyModelCoefficients, workload: QueryWorkload, effective_query_tokens: int) -> float:
    """Listwise reranking: reads query plus memories, emits ``k`` index tokens."""
    return predict_energy(model, effective_query_tokens + workload.t_m, workload.k)


def compressed_tokens(workload: QueryWorkload, beta: float | None = None) -> int:
    return round_tokens((workload.beta if beta is None else beta) * workload.t_m)


def compression_energy(model: EnergyModelCoefficients, workload: QueryWorkload) -> float:
    return predict_energy(model, workload.t_m, compressed_tokens(workload))


def generation_energy(model: EnergyModelCoefficients, workload: QueryWorkload, beta: float | None = None) -> float:
    """Final answer generation over the query plus (possibly compressed) memories.

    ``beta`` overrides the workload's compression ratio; the pipeline passes
    1.0 when compression is disabled.
    """
    return predict_energy(model, workload.t_q + compressed_tokens(workload, beta), workload.t_a)


def retrieval_energy(config: PipelineConfig, workload: QueryWorkload, t_m: int | None = None) -> float:
    t_m = workload.t_m if t_m is None else t_m
    return config.retrieval_energy_per_query + config.retrieval_energy_per_memory_token * t_m


def simulate_pipeline(
    model: EnergyModelCoefficients, config: PipelineConfig, workload: QueryWorkload
) -> EnergyBreakdown:
    effective_query = workload.optimized_query_tokens if config.query_opt_enabled else workload.t_q
    return EnergyBreakdown(
        e_retr=retrieval_energy(config, workload),
        e1_detection=detection_energy(model, workload) if config.detection_enabled else 0.0,
        e2_query_opt=query_optimization_energy(model, workload) if config.query_opt_enabled else 0.0,
        e3_rerank=rerank_energy(model, workload, effective_query) if config.rerank_enabled else 0.0,
        e4_compression=compression_energy(model, workload) if config.compression_enabled else 0.0,
        e5_generation=generation_energy(model, workload, None if config.compression_enabled else 1.0),
    )


def optimal_energy(model: EnergyModelCoefficients, config: PipelineConfig, workload: QueryWorkload) -> float:
    """Retrieve exactly the ground-truth memories, then generate the ground-truth answer once."""
    if not workload.has_ground_truth:
        raise InputError("optimal energy needs ground-truth token counts t_mg and t_ag")
    assert workload.t_mg is not None and workload.t_ag is not None
    return retrieval_energy(config, workload, t_m=workload.t_mg) + predict_energy(
        model, workload.t_q + workload.t_mg, workload.t_ag
    )


def geor(e_optimal: float, e_real: float) -> float:
    """Fraction of the real pipeline energy that the optimal case would need."""
    if not (e_real > 0):
        raise InvalidDenominatorError(f"e_real must be positive, got {e_real!r}")
    if e_optimal < 0:
        raise InputError(f"e_optimal must be non-negative, got {e_optimal!r}")
    return e_optimal / e_real
