"""Command-line front end.

Usage:
    memenergy fit SAMPLES.csv [--model-id ID] [--out model.json]
    memenergy simulate --model model.json --workload w.json [--config c.json]
    memenergy metrics --energies e.csv --scores s.csv [--baseline LABEL]
    memenergy trace --intervals iv.csv [--cpu cpu.csv] [--gpu gpu.csv]
    memenergy sweep --model model.json --spec spec.json [--format csv]

Exit codes: 0 success, 1 internal fault, 2 input/schema error,
3 numerical degeneracy, 4 trace coverage error. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
import warnings
from pathlib import Path
from typing import IO, Any, Sequence

from . import __version__
from ._io import fmt, open_input, open_output, parse_count, parse_float, read_csv_rows, round_sig
from .energy_model import fit_energy_model, load_model, read_samples, write_samples
from .errors import InputError, MemEnergyError
from .metrics import ENERGY_COLUMNS, SCORES_HEADER, EffectivenessScores, EnergyRecord, metrics_report
from .pipeline import (
    PipelineConfig,
    QueryWorkload,
    geor,
    optimal_energy,
    simulate_pipeline,
    STAGE_FIELDS,
)
from .sweep import ANALYTIC_NOTE, read_sweep_spec, run_sweep, write_report
from .trace import build_samples, read_energy_trace, read_intervals, read_power_trace, read_wrap_range

EXIT_OK = 0
EXIT_INTERNAL = 1


def _num(x: float | None, digits: int | None) -> str:
    return fmt(round_sig(x, digits))


def _load_json(path: str, what: str) -> Any:
    with open_input(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{what} {path}: invalid JSON: {exc}") from exc


# -- fit ------------------------------------------------------------------------


def cmd_fit(args: argparse.Namespace) -> None:
    samples = read_samples(args.samples)
    model = fit_energy_model(samples, args.model_id)
    to_stdout = args.out in (None, "-")
    with open_output("-" if to_stdout else args.out) as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")
    summary = sys.stderr if to_stdout else sys.stdout
    d = args.digits
    print(f"model_id: {model.model_id}", file=summary)
    print(f"samples: {len(samples)}", file=summary)
    print(f"alpha_in: {_num(model.alpha_in, d)}", file=summary)
    print(f"alpha_out: {_num(model.alpha_out, d)}", file=summary)
    print(f"alpha_cross: {_num(model.alpha_cross, d)}", file=summary)
    print(f"r_squared: {_num(model.r_squared, d) or 'undefined'}", file=summary)


# -- simulate -------------------------------------------------------------------


def _read_workload(path: str) -> tuple[QueryWorkload, list[str]]:
    if path != "-" and Path(path).suffix.lower() == ".csv":
        with open_input(path) as fh:
            rows = read_csv_rows(fh, None, path)
        if len(rows) != 1:
            raise InputError(f"{path}: expected exactly one workload row, got {len(rows)}")
        return QueryWorkload.from_mapping(rows[0][1], path)
    data = _load_json(path, "workload")
    if not isinstance(data, dict):
        raise InputError(f"workload {path}: expected a JSON object")
    return QueryWorkload.from_mapping(data, path)


def cmd_simulate(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    workload, defaulted = _read_workload(args.workload)
    overrides: dict[str, Any] = {}
    if args.c is not None:
        overrides["c"] = args.c
        defaulted = [f for f in defaulted if f != "c"]
    if args.beta is not None:
        overrides["beta"] = args.beta
        defaulted = [f for f in defaulted if f != "beta"]
    if overrides:
        workload = QueryWorkload(**{**workload.to_dict(), **overrides})
    config_data = _load_json(args.config, "config") if args.config else {}
    if args.retrieval_per_query is not None:
        config_data["retrieval_energy_per_query"] = args.retrieval_per_query
    if args.retrieval_per_token is not None:
        config_data["retrieval_energy_per_memory_token"] = args.retrieval_per_token
    config, config_defaults = PipelineConfig.from_mapping(config_data, args.config or "config")

    notes = []
    if {"retrieval_energy_per_query", "retrieval_energy_per_memory_token"} <= set(config_defaults):
        notes.append("retrieval energy not configured; E_retr taken as 0 J")
    breakdown = simulate_pipeline(model, config, workload)
    out: dict[str, Any] = {"model_id": model.model_id, **breakdown.to_dict()}
    if workload.has_ground_truth:
        e_opt = optimal_energy(model, config, workload)
        out["e_optimal"] = e_opt
        if breakdown.e_total > 0:
            out["geor"] = geor(e_opt, breakdown.e_total)
        else:
            notes.append("geor omitted: e_total is 0")
    else:
        notes.append("geor omitted: ground-truth token counts t_mg and t_ag not given")
    out["workload"] = workload.to_dict()
    out["defaults_applied"] = defaulted
    out["notes"] = notes
    for note in notes:
        print(f"note: {note}", file=sys.stderr)

    with open_output(args.out) as fh:
        if args.format == "json":
            json.dump(_present(out, args.digits), fh, indent=2)
            fh.write("\n")
        else:
            cols = ["model_id", *STAGE_FIELDS, "e_total", "e_optimal", "geor"]
            fh.write(",".join(cols) + "\n")
            cells = [out["model_id"]] + [_num(out.get(c), args.digits) for c in cols[1:]]
            fh.write(",".join(cells) + "\n")


def _present(value: Any, digits: int | None) -> Any:
    if isinstance(value, float):
        return round_sig(value, digits)
    if isinstance(value, dict):
        return {k: _present(v, digits) for k, v in value.items()}
    return value


# -- metrics --------------------------------------------------------------------


def _optional(row: dict[str, str], key: str, where: str, count: bool = False) -> Any:
    text = row.get(key, "")
    if text == "":
        return None
    return parse_count(text, f"{where}: {key}") if count else parse_float(text, f"{where}: {key}")


def _read_energies(path: str) -> list[EnergyRecord]:
    with open_input(path) as fh:
        rows = read_csv_rows(fh, None, path)
    records = []
    for lineno, row in rows:
        if "label" not in row:
            raise InputError(f"{path}: header must contain a label column")
        unknown = sorted(set(row) - {"label", *ENERGY_COLUMNS})
        if unknown:
            raise InputError(f"{path}: unknown columns: {', '.join(unknown)}")
        where = f"{path}: line {lineno}"
        kwargs = {
            key: _optional(row, key, where, count=key in ("memory_tokens", "response_tokens"))
            for key in ENERGY_COLUMNS
        }
        records.append(EnergyRecord(row["label"], **kwargs))
    return records


def _read_scores(path: str) -> dict[str, EffectivenessScores]:
    with open_input(path) as fh:
        rows = read_csv_rows(fh, SCORES_HEADER, path)
    scores = {}
    for lineno, row in rows:
        where = f"{path}: line {lineno}"
        if row["label"] in scores:
            raise InputError(f"{where}: duplicate label {row['label']!r}")
        try:
            scores[row["label"]] = EffectivenessScores(
                *(_optional(row, k, where) for k in SCORES_HEADER[1:])
            )
        except InputError as exc:
            raise InputError(f"{where}: {exc}") from exc
    return scores


def cmd_metrics(args: argparse.Namespace) -> None:
    energies = _read_energies(args.energies)
    scores = _read_scores(args.scores)
    rows = metrics_report(energies, scores, args.baseline)
    for row in rows:
        for w in row["warnings"]:
            print(f"warning: {row['label']}: {w}", file=sys.stderr)
    with open_output(args.out) as fh:
        write_report("metrics", rows, fh, args.format, digits=args.digits)


# -- trace ----------------------------------------------------------------------


def _wrap_range(args: argparse.Namespace) -> float:
    if args.wrap_range is not None:
        return args.wrap_range
    sidecar = args.cpu_sidecar
    if sidecar is None and args.cpu != "-":
        candidate = Path(args.cpu).with_suffix(".json")
        if candidate.exists():
            sidecar = str(candidate)
    if sidecar is None:
        raise InputError("CPU trace needs --wrap-range or a sidecar JSON with wrap_range_uj")
    return read_wrap_range(sidecar)


def cmd_trace(args: argparse.Namespace) -> None:
    if args.cpu is None and args.gpu is None:
        raise InputError("give at least one of --cpu and --gpu")
    cpu = read_energy_trace(args.cpu, _wrap_range(args)) if args.cpu else None
    gpu = read_power_trace(args.gpu) if args.gpu else None
    intervals = read_intervals(args.intervals)
    samples = build_samples(intervals, cpu=cpu, gpu=gpu, idle_cpu=args.idle_cpu, idle_gpu=args.idle_gpu)
    with open_output(args.out) as fh:
        write_samples(samples, fh)


# -- sweep ----------------------------------------------------------------------


def cmd_sweep(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    spec = read_sweep_spec(args.spec)
    rows = run_sweep(model, spec)
    meta = None
    if not args.no_meta:
        meta = {
            "generator": f"memenergy {__version__}",
            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "model_id": model.model_id,
            "parameter": spec.parameter,
            "note": ANALYTIC_NOTE,
        }
    with open_output(args.out) as fh:
        write_report("sweep", rows, fh, args.format, digits=args.digits, meta=meta)


# -- entry point ----------------------------------------------------------------


def _non_negative(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", default="-", help="output path (default: stdout)")
    common.add_argument("--digits", type=int, default=None, help="round numbers to N significant digits")
    common.add_argument("--no-meta", action="store_true", help="omit the metadata block")

    parser = argparse.ArgumentParser(prog="memenergy", description="Energy accounting for memory-augmented LLM pipelines.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit energy coefficients from samples")
    p.add_argument("samples", help="CSV with header t_in,t_out,joules ('-' for stdin)")
    p.add_argument("--model-id", default="")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", parents=[common], help="per-stage energy for one workload")
    p.add_argument("--model", required=True)
    p.add_argument("--workload", required=True, help="JSON object or one-row CSV")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--c", type=int, help="override detection output tokens")
    p.add_argument("--beta", type=float, help="override compression ratio")
    p.add_argument("--retrieval-per-query", type=float, help="retrieval joules per query")
    p.add_argument("--retrieval-per-token", type=float, help="retrieval joules per memory token")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", parents=[common], help="energy/effectiveness ratios and multiples")
    p.add_argument("--energies", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--baseline", help="label of the baseline row for cost multiples")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("trace", parents=[common], help="integrate traces into fitting samples")
    p.add_argument("--intervals", required=True)
    p.add_argument("--cpu", help="CSV timestamp_s,energy_uj")
    p.add_argument("--gpu", help="CSV timestamp_s,power_mw")
    p.add_argument("--idle-cpu", type=_non_negative, help="CPU idle watts to subtract")
    p.add_argument("--idle-gpu", type=_non_negative, help="GPU idle watts to subtract")
    p.add_argument("--wrap-range", type=float, help="CPU counter wrap range in microjoules")
    p.add_argument("--cpu-sidecar", help='JSON {"wrap_range_uj": N} (default: CPU path with .json suffix)')
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("sweep", parents=[common], help="sweep a workload parameter")
    p.add_argument("--model", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def _report_warnings(caught: list[warnings.WarningMessage], err: IO[str]) -> None:
    seen = set()
    for w in caught:
        msg = str(w.message)
        if msg not in seen:
            seen.add(msg)
            print(f"warning: {msg}", file=err)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args.func(args)
            code = EXIT_OK
        except MemEnergyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = exc.exit_code
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = EXIT_INTERNAL
        except Exception as exc:  # noqa: BLE001
            print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = EXIT_INTERNAL
    _report_warnings(caught, sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
