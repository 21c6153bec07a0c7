# src/abilities/eval_tools.py
"""
EVAL provider: model loading, clustering labels and density tables.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List

import numpy as np
import pandas as pd

from src.clustering import assign_labels as cluster_labels
from src.distributions import MixtureModel, as_rows, weighted_log_densities
from src.errors import DimensionMismatchError, DomainError, InvalidParameterError
from src.persistence import model_store
from src.persistence.data_files import read_points, write_labels, write_table
from src.state import record_event

Payload = Dict[str, Any]


def read_model_file(payload: Payload) -> Dict[str, Any]:
    path = payload.get("options", {}).get("model")
    if not path:
        raise InvalidParameterError("--model is required")
    model = model_store.read_model_file(path).to_model()
    events: List[Dict[str, Any]] = []
    record_event(events, payload.get("stage", "LOAD_MODEL"), "model_loaded", f"Loaded {model.family} model with K={model.k}",
                 family=model.family, k=model.k, dim=model.dim)
    return {"model": model, "events": events}


def assign_labels(payload: Payload) -> Dict[str, Any]:
    model: MixtureModel = payload["model"]
    data = payload["dataset"]
    if model.family == "mvn" and data.dim != model.dim:
        raise DimensionMismatchError(f"Model has dimension {model.dim}, data has {data.dim}")
    rule = payload.get("options", {}).get("rule") or "density"
    assignment = cluster_labels(data, model, rule)
    shares = ", ".join(f"{p:.4g}" for p in assignment.proportions())
    return {"labels": assignment, "summary_lines": [f"{assignment.n} labels ({rule} rule), shares: {shares}"]}


def write_labels_file(payload: Payload) -> Dict[str, Any]:
    out = payload.get("options", {}).get("out")
    if not out:
        raise InvalidParameterError("cluster needs --out")
    return {"outputs": {"labels": str(write_labels(out, payload["labels"].labels))}}


def parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"--grid must be min:max:steps, got '{text}'")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InvalidParameterError(f"--grid must be min:max:steps, got '{text}'") from exc
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise InvalidParameterError(f"--grid needs finite min <= max, got '{text}'")
    if steps < 1:
        raise InvalidParameterError(f"--grid needs steps >= 1, got {steps}")
    return lo, hi, steps


def grid_points(model: MixtureModel, lo: float, hi: float, steps: int) -> np.ndarray:
    """steps equal intervals over [lo, hi], i.e. steps + 1 points."""
    if model.family == "mvn":
        raise InvalidParameterError("MVN models are evaluated at --points, not on a --grid")
    if model.family == "poisson":
        span = hi - lo
        if lo != np.floor(lo) or hi != np.floor(hi) or span % steps != 0:
            raise DomainError(f"Poisson grids need integer points; {lo:g}:{hi:g}:{steps} has non-integer spacing")
        if lo < 0:
            raise DomainError("Poisson grids must start at 0 or above")
        return lo + (span // steps) * np.arange(steps + 1, dtype=float)
    return np.linspace(lo, hi, steps + 1)


def build_eval_points(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    model: MixtureModel = payload["model"]
    grid, points = opts.get("grid"), opts.get("points")
    if (grid is None) == (points is None):
        raise InvalidParameterError("eval needs exactly one of --grid or --points")
    if grid is not None:
        pts = grid_points(model, *parse_grid(grid))
    else:
        pts = read_points(points)
        pts = as_rows(pts, model)
    return {"eval_points": pts}


def density_table(model: MixtureModel, points: np.ndarray) -> pd.DataFrame:
    """
    Columns: x (x_1..x_d for mvn), component_1..component_K with w_k g_k(x),
    and mixture = sum_k w_k g_k(x).
    """
    rows = as_rows(points, model)
    weighted = np.exp(weighted_log_densities(rows, model))
    if model.family == "mvn":
        table = {f"x_{j + 1}": rows[:, j] for j in range(rows.shape[1])}
    else:
        table = {"x": rows}
    for k in range(model.k):
        table[f"component_{k + 1}"] = weighted[:, k]
    table["mixture"] = weighted.sum(axis=1)
    return pd.DataFrame(table)


def evaluate_densities(payload: Payload) -> Dict[str, Any]:
    model: MixtureModel = payload["model"]
    table = density_table(model, payload["eval_points"])
    return {"density_table": table, "summary_lines": [f"evaluated {len(table)} points, K={model.k}"]}


def write_density_file(payload: Payload) -> Dict[str, Any]:
    out = payload.get("options", {}).get("out")
    if not out:
        raise InvalidParameterError("eval needs --out")
    return {"outputs": {"density": str(write_table(out, payload["density_table"]))}}


TOOLS: Dict[str, Callable[[Payload], Dict[str, Any]]] = {
    "read_model_file": read_model_file,
    "assign_labels": assign_labels,
    "write_labels_file": write_labels_file,
    "build_eval_points": build_eval_points,
    "evaluate_densities": evaluate_densities,
    "write_density_file": write_density_file,
}


def call_tool(tool_name: str, payload: Payload) -> Dict[str, Any]:
    if tool_name not in TOOLS:
        raise ValueError(f"Unknown EVAL tool: {tool_name}")
    return TOOLS[tool_name](payload)
