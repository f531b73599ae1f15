"""Workload sweeps and deterministic CSV/JSON reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Any, Sequence

from ._io import fmt, open_input, open_output, round_sig
from .energy_model import EnergyModelCoefficients
from .errors import InputError, MemEnergyError
from .metrics import REPORT_FIELDS
from .pipeline import (
    STAGE_FIELDS,
    EnergyBreakdown,
    PipelineConfig,
    QueryWorkload,
    round_tokens,
    simulate_pipeline,
)

PARAMETERS = ("top_k", "beta", "memory_tokens", "query_tokens")

ANALYTIC_NOTE = (
    "energies come from the analytic token model only; measured effects such as "
    "caching, batching and latency are not represented"
)

_BREAKDOWN_COLUMNS = (*STAGE_FIELDS, "e_total")
_SHORT = ("e_retr", "e1", "e2", "e3", "e4", "e5", "e_total")
SWEEP_COLUMNS = (
    "param",
    *(f"{s}_v" for s in _SHORT),
    *(f"{s}_b" for s in _SHORT),
    "multiple",
)
BREAKDOWN_COLUMNS = ("label", *_BREAKDOWN_COLUMNS)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    base_workload: QueryWorkload
    variant_config: PipelineConfig = field(default_factory=PipelineConfig)
    baseline_config: PipelineConfig | None = None
    node_size_tokens: float | None = None

    def __post_init__(self) -> None:
        if self.parameter not in PARAMETERS:
            raise InputError(f"parameter must be one of {', '.join(PARAMETERS)}, got {self.parameter!r}")
        values = tuple(self.values)
        if not values:
            raise InputError("sweep values must not be empty")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InputError(f"sweep value {v!r} is not a finite number")
            if self.parameter == "beta":
                if not 0 < v <= 1:
                    raise InputError(f"beta value {v!r} outside (0, 1]")
            elif v < 0 or v != int(v):
                raise InputError(f"{self.parameter} value {v!r} must be a non-negative integer")
        object.__setattr__(self, "values", values)
        if self.parameter == "top_k":
            if self.node_size_tokens is None or not self.node_size_tokens >= 0:
                raise InputError("top_k sweeps need a non-negative node_size_tokens")

    @property
    def baseline(self) -> PipelineConfig:
        if self.baseline_config is not None:
            return self.baseline_config
        return self.variant_config.retrieval_and_generation_only()

    def workload_for(self, value: float) -> QueryWorkload:
        w = self.base_workload
        if self.parameter == "top_k":
            assert self.node_size_tokens is not None
            k = int(value)
            return replace(w, k=k, t_m=k * round_tokens(self.node_size_tokens))
        if self.parameter == "beta":
            return replace(w, beta=float(value))
        if self.parameter == "memory_tokens":
            return replace(w, t_m=int(value))
        return replace(w, t_q=int(value))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        if not isinstance(data, dict):
            raise InputError("sweep spec must be a JSON object")
        known = {"parameter", "values", "node_size_tokens", "base_workload", "variant_config", "baseline_config"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"sweep spec: unknown fields: {', '.join(unknown)}")
        for key in ("parameter", "values", "base_workload"):
            if key not in data:
                raise InputError(f"sweep spec: missing field {key!r}")
        if not isinstance(data["values"], list):
            raise InputError("sweep spec: values must be a list")
        if not isinstance(data["base_workload"], dict):
            raise InputError("sweep spec: base_workload must be an object")
        workload, _ = QueryWorkload.from_mapping(data["base_workload"], "base_workload")
        variant, _ = PipelineConfig.from_mapping(data.get("variant_config", {}), "variant_config")
        baseline = None
        if data.get("baseline_config") is not None:
            baseline, _ = PipelineConfig.from_mapping(data["baseline_config"], "baseline_config")
        node = data.get("node_size_tokens")
        if node is not None and (isinstance(node, bool) or not isinstance(node, (int, float))):
            raise InputError("sweep spec: node_size_tokens must be a number")
        return cls(data["parameter"], tuple(data["values"]), workload, variant, baseline, node)


@dataclass(frozen=True)
class SweepRow:
    parameter_value: float
    variant_breakdown: EnergyBreakdown
    baseline_breakdown: EnergyBreakdown
    energy_multiple: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "param": self.parameter_value,
            "variant": self.variant_breakdown.to_dict(),
            "baseline": self.baseline_breakdown.to_dict(),
            "multiple": self.energy_multiple,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepRow":
        return cls(
            data["param"],
            EnergyBreakdown.from_dict(data["variant"]),
            EnergyBreakdown.from_dict(data["baseline"]),
            data["multiple"],
        )


def run_sweep(model: EnergyModelCoefficients, spec: SweepSpec) -> list[SweepRow]:
    rows = []
    baseline_config = spec.baseline
    for value in spec.values:
        try:
            workload = spec.workload_for(value)
            variant = simulate_pipeline(model, spec.variant_config, workload)
            baseline = simulate_pipeline(model, baseline_config, workload)
        except MemEnergyError as exc:
            raise type(exc)(f"{spec.parameter}={value!r}: {exc}") from exc
        multiple = variant.e_total / baseline.e_total if baseline.e_total > 0 else None
        rows.append(SweepRow(value, variant, baseline, multiple))
    return rows


def read_sweep_spec(path: str | Path) -> SweepSpec:
    with open_input(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    return SweepSpec.from_dict(data)


# -- reports --------------------------------------------------------------------


def _sweep_line(row: SweepRow) -> list[Any]:
    return [
        row.parameter_value,
        *(getattr(row.variant_breakdown, c) for c in _BREAKDOWN_COLUMNS),
        *(getattr(row.baseline_breakdown, c) for c in _BREAKDOWN_COLUMNS),
        row.energy_multiple,
    ]


def _present(value: Any, digits: int | None) -> Any:
    if isinstance(value, float):
        return round_sig(value, digits)
    if isinstance(value, dict):
        return {k: _present(v, digits) for k, v in value.items()}
    if isinstance(value, list):
        return [_present(v, digits) for v in value]
    return value


def _cell(value: Any) -> str:
    if isinstance(value, list):
        return "; ".join(str(v) for v in value)
    if isinstance(value, str):
        return value
    return fmt(value)


def _table(kind: str, items: Sequence[Any]) -> tuple[tuple[str, ...], list[list[Any]], list[dict]]:
    if kind == "sweep":
        return SWEEP_COLUMNS, [_sweep_line(r) for r in items], [r.to_dict() for r in items]
    if kind == "metrics":
        cols = (*REPORT_FIELDS, "warnings")
        return cols, [[r.get(c) for c in cols] for r in items], [{c: r.get(c) for c in cols} for r in items]
    if kind == "breakdown":
        lines, objs = [], []
        for label, b in items:
            d = b.to_dict()
            lines.append([label, *(d[c] for c in _BREAKDOWN_COLUMNS)])
            objs.append({"label": label, **d})
        return BREAKDOWN_COLUMNS, lines, objs
    raise ValueError(f"unknown report kind {kind!r}")


def write_report(
    kind: str,
    items: Sequence[Any],
    fh: IO[str],
    fmt_name: str = "csv",
    *,
    digits: int | None = None,
    meta: dict[str, Any] | None = None,
) -> None:
    """Serialize ``items`` deterministically.

    ``kind`` is ``sweep`` (SweepRow list), ``metrics`` (metrics report rows)
    or ``breakdown`` (``(label, EnergyBreakdown)`` pairs). CSV columns and JSON
    keys have a fixed order and numbers use shortest round-trip formatting.
    A ``meta`` mapping is written as ``#`` comment lines in CSV and as a
    ``meta`` key in JSON; without it JSON output is the bare row array.
    """
    columns, lines, objects = _table(kind, items)
    if fmt_name == "csv":
        if meta:
            for key, value in meta.items():
                fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for line in lines:
            writer.writerow([_cell(_present(v, digits)) for v in line])
    elif fmt_name == "json":
        payload: Any = _present(objects, digits)
        if meta:
            payload = {"meta": meta, "rows": payload}
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")
    else:
        raise InputError(f"unknown format {fmt_name!r}; use csv or json")


def emit_report(
    kind: str,
    items: Sequence[Any],
    destination: str | Path = "-",
    fmt_name: str = "csv",
    **kwargs: Any,
) -> None:
    try:
        with open_output(destination) as fh:
            write_report(kind, items, fh, fmt_name, **kwargs)
    except OSError as exc:
        raise OSError(f"failed writing report to {destination}: {exc}") from exc


def parse_sweep_json(text: str) -> list[SweepRow]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["rows"]
    return [SweepRow.from_dict(d) for d in data]

