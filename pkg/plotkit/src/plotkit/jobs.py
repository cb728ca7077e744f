"""Figure jobs and strict CSV schema parsing.

Each figure kind pins the exact header its input must carry; anything else is
a :class:`SchemaError`. Parsing happens fully before any file is written, so
a bad input can never leave a partial image behind.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("frontier", "pip", "ledger")

HEADERS = {
    "frontier": [
        "overlap", "lambda", "distinguishability", "disturbance",
        "objective", "iterations", "converged",
    ],
    "pip": ["fragment_size", "mean_bits", "min_bits", "max_bits", "samples"],
    "ledger": ["label", "log2_term"],
}

NEG_INF = float("-inf")


class SchemaError(Exception):
    """Input file does not match the documented schema for its kind."""


@dataclass(frozen=True)
class FigureJob:
    input_path: Path
    kind: str
    output_path: Path
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_path", Path(self.input_path))
        object.__setattr__(self, "output_path", Path(self.output_path))
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.input_path.exists():
            raise SchemaError(f"input file {self.input_path} does not exist")


def _read_rows(path: Path, kind: str) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise SchemaError(f"{path} is empty")
    if rows[0] != HEADERS[kind]:
        raise SchemaError(
            f"{path} header {rows[0]} does not match the {kind} schema {HEADERS[kind]}"
        )
    body = [row for row in rows[1:] if row]
    if not body:
        raise SchemaError(f"{path} carries a header but no data rows")
    return body


def _float(cell: str, where: str) -> float:
    try:
        return float(cell)  # repr round-trip; also accepts '-inf'
    except ValueError as exc:
        raise SchemaError(f"bad float {cell!r} in {where}") from exc


def _int(cell: str, where: str) -> int:
    try:
        return int(cell)
    except ValueError as exc:
        raise SchemaError(f"bad integer {cell!r} in {where}") from exc


@dataclass(frozen=True)
class FrontierData:
    rows: tuple[tuple[float, float, float], ...]  # (overlap, lambda, distinguishability)

    @property
    def overlaps(self) -> list[float]:
        seen: list[float] = []
        for overlap, _, _ in self.rows:
            if overlap not in seen:
                seen.append(overlap)
        return seen

    def curve(self, overlap: float) -> tuple[list[float], list[float]]:
        pts = sorted((lam, d) for c, lam, d in self.rows if c == overlap)
        return [p[0] for p in pts], [p[1] for p in pts]


@dataclass(frozen=True)
class PipData:
    sizes: tuple[int, ...]
    means: tuple[float, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]


@dataclass(frozen=True)
class LedgerData:
    terms: tuple[tuple[str, float], ...]  # excludes the budget row
    budget: float


def load_frontier(path: Path) -> FrontierData:
    rows = []
    for i, row in enumerate(_read_rows(path, "frontier")):
        if len(row) != 7:
            raise SchemaError(f"frontier row {i} has {len(row)} cells, expected 7")
        where = f"{path} row {i}"
        rows.append((_float(row[0], where), _float(row[1], where), _float(row[2], where)))
    return FrontierData(rows=tuple(rows))


def load_pip(path: Path) -> PipData:
    sizes, means, mins, maxs = [], [], [], []
    for i, row in enumerate(_read_rows(path, "pip")):
        if len(row) != 5:
            raise SchemaError(f"pip row {i} has {len(row)} cells, expected 5")
        where = f"{path} row {i}"
        sizes.append(_int(row[0], where))
        means.append(_float(row[1], where))
        mins.append(_float(row[2], where))
        maxs.append(_float(row[3], where))
        _int(row[4], where)
    return PipData(tuple(sizes), tuple(means), tuple(mins), tuple(maxs))


def load_ledger(path: Path) -> LedgerData:
    terms = []
    budget = None
    for i, row in enumerate(_read_rows(path, "ledger")):
        if len(row) != 2:
            raise SchemaError(f"ledger row {i} has {len(row)} cells, expected 2")
        where = f"{path} row {i}"
        value = _float(row[1], where) if row[1] else math.nan
        if row[0] == "budget":
            budget = value
        else:
            terms.append((row[0], value))
    if budget is None:
        raise SchemaError(f"{path} has no budget row")
    if not terms:
        raise SchemaError(f"{path} has no term rows")
    return LedgerData(terms=tuple(terms), budget=budget)
