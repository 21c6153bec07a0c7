"""
Immutable observation container used by every fitting and clustering routine.

Count data are always stored run-length encoded (distinct values ascending with
their frequencies). A raw count vector and the equivalent frequency table
therefore produce the same internal rows, and every weighted sum in the engine
runs over identical arrays in identical order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from src.errors import DataFormatError

DataKind = Literal["univariate", "multivariate", "counts"]


@dataclass(frozen=True)
class Dataset:
    kind: DataKind
    values: np.ndarray  # (m,) for univariate/counts, (m, d) for multivariate
    counts: np.ndarray  # (m,) multiplicity of each row, all > 0
    inverse: Optional[np.ndarray] = None  # observation index -> row index; None means identity

    # -----------------------------
    # Constructors
    # -----------------------------
    @classmethod
    def from_univariate(cls, x: ArrayLike) -> "Dataset":
        values = np.asarray(x, dtype=float)
        if values.ndim == 2 and values.shape[1] == 1:
            values = values[:, 0]
        if values.ndim != 1:
            raise DataFormatError(f"Univariate data must be one-dimensional, got shape {values.shape}")
        _require_nonempty(values)
        return cls(kind="univariate", values=_frozen(values), counts=_frozen(np.ones(values.shape[0])))

    @classmethod
    def from_multivariate(cls, X: ArrayLike) -> "Dataset":
        values = np.asarray(X, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataFormatError(f"Multivariate data must be an (n, d) array, got shape {values.shape}")
        _require_nonempty(values)
        return cls(kind="multivariate", values=_frozen(values), counts=_frozen(np.ones(values.shape[0])))

    @classmethod
    def from_counts(cls, x: ArrayLike) -> "Dataset":
        raw = np.asarray(x, dtype=float).ravel()
        _require_nonempty(raw)
        _require_counts(raw, "Count observations")
        distinct, inverse, freq = np.unique(raw, return_inverse=True, return_counts=True)
        return cls(
            kind="counts",
            values=_frozen(distinct),
            counts=_frozen(freq.astype(float)),
            inverse=_frozen(inverse.ravel()),
        )

    @classmethod
    def from_frequency_table(cls, values: ArrayLike, counts: ArrayLike) -> "Dataset":
        v = np.asarray(values, dtype=float).ravel()
        c = np.asarray(counts, dtype=float).ravel()
        if v.shape != c.shape:
            raise DataFormatError("Frequency table needs one count per value")
        _require_nonempty(v)
        _require_counts(v, "Frequency table values")
        _require_counts(c, "Frequency table counts")
        if np.any(np.diff(v) <= 0):
            raise DataFormatError("Frequency table values must be strictly increasing (no duplicates)")
        keep = c > 0
        if not np.any(keep):
            raise DataFormatError("Frequency table has no observations (all counts are zero)")
        v, c = v[keep], c[keep]
        inverse = np.repeat(np.arange(v.shape[0]), c.astype(np.int64))
        return cls(kind="counts", values=_frozen(v), counts=_frozen(c), inverse=_frozen(inverse))

    # -----------------------------
    # Accessors
    # -----------------------------
    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        """Number of observations (sum of multiplicities)."""
        return int(round(float(self.counts.sum())))

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else int(self.values.shape[1])

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-coordinate (min, max) over the observed rows."""
        return np.min(self.values, axis=0), np.max(self.values, axis=0)

    def data_range(self) -> np.ndarray:
        lo, hi = self.bounds()
        return np.asarray(hi - lo, dtype=float)

    def as_matrix(self) -> np.ndarray:
        """Rows as an (m, d) matrix, whatever the kind."""
        return self.values if self.values.ndim == 2 else self.values[:, None]

    def expand(self) -> np.ndarray:
        """Per-observation values in original (or table-expansion) order."""
        if self.inverse is None:
            return self.values
        return self.values[self.inverse]

    def expand_rows(self, per_row: np.ndarray) -> np.ndarray:
        """Map a per-row quantity back onto the observations."""
        if self.inverse is None:
            return per_row
        return per_row[self.inverse]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _require_nonempty(a: np.ndarray) -> None:
    if a.shape[0] == 0:
        raise DataFormatError("Dataset must contain at least one observation")


def _require_counts(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise DataFormatError(f"{what} must be finite")
    if np.any(a < 0):
        raise DataFormatError(f"{what} must be non-negative")
    if np.any(a != np.round(a)):
        raise DataFormatError(f"{what} must be integers")
