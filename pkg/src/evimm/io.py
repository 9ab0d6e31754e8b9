"""Reading observation files into :class:`~evimm.fit.Dataset` objects."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DomainError, InsufficientData
from .fit import Dataset


class IngestError(ValueError):
    """The input file could not be turned into a dataset."""


@dataclass(frozen=True)
class IngestConfig:
    path: str
    column: str | int | None = None
    zero_tol: float = 0.0
    drop_negative: bool = False

    def __post_init__(self):
        if self.zero_tol < 0:
            raise DomainError("zero_tol must be nonnegative")


def _parse_float(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise IngestError(f"not a number at {where}: {tok!r}") from None


def _read_text(path: Path) -> list[float]:
    vals = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        vals.append(_parse_float(s, f"line {i}"))
    return vals


def _read_csv(path: Path, column: str | int) -> list[float]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        return []
    if isinstance(column, int) or (isinstance(column, str) and column.isdigit()):
        idx, body = int(column), rows
        # A non-numeric first row is a header.
        try:
            float(rows[0][idx])
        except (ValueError, IndexError):
            body = rows[1:]
    else:
        header = [h.strip() for h in rows[0]]
        if column not in header:
            raise IngestError(f"column {column!r} not in header {header}")
        idx, body = header.index(column), rows[1:]
    vals = []
    for i, r in enumerate(body, 1):
        if idx >= len(r):
            raise IngestError(f"row {i} has no column {idx}")
        tok = r[idx].strip()
        if tok == "":
            continue
        vals.append(_parse_float(tok, f"row {i}"))
    return vals


def read_dataset(cfg: IngestConfig) -> Dataset:
    """Parse a one-column text file, or one column of a CSV file."""
    path = Path(cfg.path)
    if not path.is_file():
        raise IngestError(f"no such file: {path}")
    vals = _read_text(path) if cfg.column is None else _read_csv(path, cfg.column)
    if not vals:
        raise IngestError(f"{path} contains no observations")
    x = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(x)):
        raise IngestError("non-finite values in input")
    if cfg.drop_negative:
        x = x[x >= -cfg.zero_tol]
        if x.size == 0:
            raise IngestError("no nonnegative observations")
    try:
        return Dataset(x, zero_tol=cfg.zero_tol)
    except (DomainError, InsufficientData) as exc:
        raise IngestError(str(exc)) from None


def write_values(path, values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(f"{v:.17g}\n")
