# src/persistence/data_files.py
"""
Observation files and CSV outputs.

Inputs (no header, comma-separated):
- raw:  one observation per line, d columns per line (same d everywhere)
- freq: `value,count` per line, values strictly increasing

Outputs: trace, labels and density tables are written with pandas, floats in
shortest round-trip form.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd

from src.dataset import Dataset
from src.errors import DataFormatError, FamilyMismatchError

DataFormat = Literal["raw", "freq"]
DATA_FORMATS = ("raw", "freq")


@dataclass(frozen=True)
class DataFile:
    path: Path
    format: DataFormat
    dataset: Dataset


def _read_numeric_table(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    try:
        df = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"{path}: rows have different numbers of columns ({exc})") from exc

    if df.empty:
        raise DataFormatError(f"{path}: file is empty")
    ragged = df.isna().any(axis=1)
    if ragged.any():
        line = int(np.flatnonzero(ragged.to_numpy())[0]) + 1
        raise DataFormatError(f"{path}: row {line} has fewer columns than row 1")
    try:
        return df.apply(lambda col: col.str.strip()).astype(float).to_numpy()
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric field ({exc})") from exc


def load_dataset(path: str | Path, fmt: DataFormat, family: str) -> DataFile:
    """
    Parse a data file for the given family:
    raw 1 column  -> univariate (gaussian/mvn) or run-length encoded counts (poisson)
    raw d columns -> multivariate (mvn only)
    freq          -> counts (gaussian or poisson)
    """
    p = Path(path)
    table = _read_numeric_table(p)

    if fmt == "freq":
        if table.shape[1] != 2:
            raise DataFormatError(f"{p}: frequency tables need exactly 2 columns (value,count), got {table.shape[1]}")
        if family == "mvn":
            raise FamilyMismatchError("Frequency tables hold scalar counts; family 'mvn' needs raw rows")
        dataset = Dataset.from_frequency_table(table[:, 0], table[:, 1])
    elif fmt == "raw":
        d = table.shape[1]
        if family == "mvn":
            dataset = Dataset.from_multivariate(table)
        elif d != 1:
            raise FamilyMismatchError(f"Family '{family}' needs one column per line, got {d}")
        elif family == "poisson":
            dataset = Dataset.from_counts(table[:, 0])
        else:
            dataset = Dataset.from_univariate(table[:, 0])
    else:
        raise DataFormatError(f"Unknown data format '{fmt}' (expected one of {DATA_FORMATS})")

    return DataFile(path=p, format=fmt, dataset=dataset)


def read_points(path: str | Path) -> np.ndarray:
    """Evaluation points in raw layout, as an (n, d) matrix."""
    return _read_numeric_table(Path(path))


# -----------------------------
# Writers
# -----------------------------
def _prepare(path: str | Path) -> Path:
    p = Path(path)
    if not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def write_table(path: str | Path, df: pd.DataFrame, *, header: bool = True) -> Path:
    p = _prepare(path)
    df.to_csv(p, index=False, header=header, lineterminator="\n")
    return p


def write_raw_csv(path: str | Path, values: np.ndarray) -> Path:
    rows = np.asarray(values)  # integer counts stay integers
    if rows.ndim == 1:
        rows = rows[:, None]
    return write_table(path, pd.DataFrame(rows), header=False)


def write_freq_table(path: str | Path, values: Sequence[int], counts: Sequence[int]) -> Path:
    df = pd.DataFrame({"value": np.asarray(values, dtype=np.int64), "count": np.asarray(counts, dtype=np.int64)})
    return write_table(path, df, header=False)


def write_labels(path: str | Path, labels: np.ndarray, *, header: Optional[Sequence[str]] = None) -> Path:
    cols = list(header or ("index", "label"))
    df = pd.DataFrame({cols[0]: np.arange(len(labels), dtype=np.int64), cols[1]: np.asarray(labels, dtype=np.int64)})
    return write_table(path, df)
