# src/persistence/model_store.py
"""
ModelFile (JSON) and trace-table persistence.

ModelFile layout:
    {"family", "k", "weights": [...], "components": [{...}, ...], "metadata": {...}}

Floats are written with Python's shortest round-trip repr, so parsing a file and
serializing it again reproduces it byte for byte. NaN/inf are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.distributions import Family, Gaussian1DParams, MixtureModel, MVNParams, PoissonParams
from src.em_engine import FitResult, TraceEntry
from src.errors import DataFormatError


class ModelMetadata(BaseModel):
    """
    Provenance of a fitted model; every field is optional so hand-written model
    files (e.g. an initial model for `fit --init`) stay valid.
    """
    model_config = ConfigDict(extra="allow")

    seed: Optional[int] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    restarts: Optional[int] = None
    iters: Optional[int] = None
    converged: Optional[bool] = None
    best_of: Optional[int] = None
    degenerate_policy: Optional[str] = None
    rng_algorithm: Optional[str] = None
    final_log_likelihood: Optional[float] = None
    restart_log_likelihoods: Optional[List[float]] = None
    sorted: Optional[bool] = None


class ModelFile(BaseModel):
    family: Family
    k: int = Field(ge=1)
    weights: List[float]
    components: List[Dict[str, Any]]
    metadata: ModelMetadata = Field(default_factory=ModelMetadata)

    @model_validator(mode="after")
    def _check_k(self) -> "ModelFile":
        if len(self.weights) != self.k or len(self.components) != self.k:
            raise ValueError(f"k={self.k} but {len(self.weights)} weights and {len(self.components)} components")
        return self

    def to_model(self) -> MixtureModel:
        return MixtureModel(family=self.family, weights=self.weights, components=self.components)

    @classmethod
    def from_model(cls, model: MixtureModel, metadata: Optional[Dict[str, Any]] = None) -> "ModelFile":
        return cls(
            family=model.family,
            k=model.k,
            weights=list(model.weights),
            components=[c.model_dump(by_alias=True) for c in model.components],
            metadata=ModelMetadata(**(metadata or {})),
        )

    @classmethod
    def from_fit(cls, result: FitResult, model: MixtureModel, *, sorted_output: bool) -> "ModelFile":
        meta = dict(result.metadata)
        meta.update(
            iters=result.iters,
            converged=result.converged,
            best_of=result.best_of,
            final_log_likelihood=result.log_likelihood,
            restart_log_likelihoods=list(result.restart_log_likelihoods),
            sorted=sorted_output,
        )
        return cls.from_model(model, meta)


# -----------------------------
# Text codec
# -----------------------------
def serialize_model_file(doc: ModelFile) -> str:
    payload = doc.model_dump(by_alias=True, exclude_none=True)
    try:
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    except ValueError as exc:
        raise DataFormatError(f"Model contains non-finite numbers: {exc}") from exc


def parse_model_file(text: str) -> ModelFile:
    try:
        doc = ModelFile.model_validate(json.loads(text))
        doc.to_model()
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"Model file is not valid JSON: {exc}") from exc
    except ValidationError as exc:
        raise DataFormatError(f"Invalid model file: {exc}") from exc
    return doc


def write_model_file(path: str | Path, doc: ModelFile) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(serialize_model_file(doc), encoding="utf-8")
    return p


def read_model_file(path: str | Path) -> ModelFile:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Model file not found: {p}")
    return parse_model_file(p.read_text(encoding="utf-8"))


# -----------------------------
# Trace table
# -----------------------------
def _component_columns(model: MixtureModel) -> List[str]:
    cols = [f"w_{k + 1}" for k in range(model.k)]
    for k, c in enumerate(model.components, start=1):
        if isinstance(c, Gaussian1DParams):
            cols += [f"mu_{k}", f"sigma2_{k}"]
        elif isinstance(c, PoissonParams):
            cols.append(f"lambda_{k}")
        elif isinstance(c, MVNParams):
            d = c.dim
            cols += [f"mu_{k}_{j + 1}" for j in range(d)]
            cols += [f"sigma_{k}_{i + 1}_{j + 1}" for i in range(d) for j in range(i, d)]
    return cols


def _component_values(model: MixtureModel) -> List[float]:
    vals = list(model.weights)
    for c in model.components:
        if isinstance(c, Gaussian1DParams):
            vals += [c.mu, c.sigma2]
        elif isinstance(c, PoissonParams):
            vals.append(c.lam)
        elif isinstance(c, MVNParams):
            d = c.dim
            vals += list(c.mu)
            vals += [c.sigma[i][j] for i in range(d) for j in range(i, d)]
    return vals


def trace_table(trace: Sequence[TraceEntry], order: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """
    One row per iteration (iteration 0 is the initialization): iter, loglik and
    the flattened parameters in `order` (output component order).
    """
    if not trace:
        raise ValueError("Trace is empty")
    perm = list(order) if order is not None else list(range(trace[0].model.k))
    rows = []
    columns: List[str] = []
    for entry in trace:
        model = entry.model.permuted(perm)
        if not columns:
            columns = ["iter", "loglik"] + _component_columns(model)
        rows.append([entry.iteration, entry.log_likelihood] + _component_values(model))
    df = pd.DataFrame(rows, columns=columns)
    df["iter"] = df["iter"].astype("int64")
    return df
