from __future__ import annotations

import contextlib
import csv
import io
import math
import sys
from pathlib import Path
from typing import IO, Iterator

from .errors import InputError


@contextlib.contextmanager
def open_input(path: str | Path) -> Iterator[IO[str]]:
    """Open a text input; ``-`` means standard input."""
    if str(path) == "-":
        yield sys.stdin
        return
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        yield fh


@contextlib.contextmanager
def open_output(path: str | Path) -> Iterator[IO[str]]:
    if str(path) == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    with fh:
        yield fh


def read_csv_rows(fh: IO[str], expected: list[str] | None = None,
                  name: str = "input") -> list[tuple[int, dict[str, str]]]:
    """Parse a CSV stream, skipping blank and ``#`` comment lines.

    Returns ``(line_number, row)`` pairs. With ``expected`` the header must
    contain exactly those columns (order free).
    """
    text = fh.read()
    numbered = [
        (i, line) for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not numbered:
        raise InputError(f"{name}: empty file (no header)")
    reader = csv.reader(io.StringIO("\n".join(line for _, line in numbered)))
    rows = list(reader)
    header = [h.strip() for h in rows[0]]
    if expected is not None and sorted(header) != sorted(expected):
        raise InputError(
            f"{name}: line {numbered[0][0]}: expected header {','.join(expected)}, "
            f"got {','.join(header)}"
        )
    if len(set(header)) != len(header):
        raise InputError(f"{name}: duplicate columns in header")
    out = []
    for (lineno, _), row in zip(numbered[1:], rows[1:]):
        if len(row) != len(header):
            raise InputError(
                f"{name}: line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        out.append((lineno, {h: v.strip() for h, v in zip(header, row)}))
    return out


def parse_float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{what}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise InputError(f"{what}: not finite: {text!r}")
    return value


def parse_count(text: str | int | float, what: str) -> int:
    """Parse a non-negative integral token count; fractional values are rejected."""
    if isinstance(text, bool):
        raise InputError(f"{what}: expected a token count, got {text!r}")
    if isinstance(text, int):
        value: float = text
    elif isinstance(text, float):
        value = text
    else:
        value = parse_float(text, what)
    if not math.isfinite(value) or value != int(value):
        raise InputError(f"{what}: token counts must be integers, got {text!r}")
    if value < 0:
        raise InputError(f"{what}: token counts must be non-negative, got {text!r}")
    return int(value)


def fmt(x: float | int | None) -> str:
    """Round-trip-exact text for a number (``repr`` of a float is shortest exact)."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def round_sig(x: float | None, digits: int | None) -> float | None:
    if x is None or digits is None or not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")
