"""
Model-based clustering: label each observation with the component that
maximizes its (unweighted) density, or its posterior responsibility.

Ties go to the lowest component index (numpy argmax returns the first maximum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.dataset import Dataset
from src.distributions import MixtureModel, component_log_densities
from src.em_engine import check_compatible, e_step

LabelRule = Literal["density", "posterior"]
LABEL_RULES = ("density", "posterior")


@dataclass(frozen=True)
class LabelAssignment:
    labels: np.ndarray  # (n,) ints in [0, K), one per observation
    rule: LabelRule
    k: int

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def proportions(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k) / max(self.n, 1)


def assign_labels(data: Dataset, model: MixtureModel, rule: LabelRule = "density") -> LabelAssignment:
    """
    density:   argmax_k log g_k(x_i)
    posterior: argmax_k gamma[i, k], taken from the E-step output itself
    """
    check_compatible(data, model.family)
    if rule == "density":
        rows = data.as_matrix() if model.family == "mvn" else data.values
        scores = component_log_densities(rows, model)
    elif rule == "posterior":
        scores = e_step(data, model).gamma
    else:
        raise ValueError(f"Unknown labeling rule '{rule}' (expected one of {LABEL_RULES})")
    per_row = np.argmax(scores, axis=1)
    return LabelAssignment(labels=data.expand_rows(per_row).astype(np.int64), rule=rule, k=model.k)
