"""
Synthetic samples for simulation studies.

A synth spec is either
- a list of subsets, each drawn from one component with a fixed size and
  concatenated in order (the generating component index is the label), or
- a mixture model plus a total size, sampled with random component labels.

Spec file (JSON), subset form:
    {"family": "gaussian",
     "subsets": [{"params": {"mu": -10, "sigma2": 1.44}, "size": 700}, ...]}
Mixture form:
    {"family": "poisson", "weights": [0.5, 0.5],
     "components": [{"lambda": 2}, {"lambda": 9}], "size": 1000}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from src import presets
from src.distributions import Family, MixtureModel, param_type, sample_component, sample_mixture
from src.errors import DataFormatError, InvalidParameterError


class SubsetSpec(BaseModel):
    params: Dict[str, Any]
    size: int = Field(gt=0)


class SynthSpec(BaseModel):
    family: Family
    subsets: Optional[List[SubsetSpec]] = None
    weights: Optional[List[float]] = None
    components: Optional[List[Dict[str, Any]]] = None
    size: Optional[int] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _one_form(self) -> "SynthSpec":
        mixture_form = self.weights is not None or self.components is not None or self.size is not None
        if self.subsets is not None and mixture_form:
            raise ValueError("give either 'subsets' or 'weights'/'components'/'size', not both")
        if self.subsets is None:
            if self.weights is None or self.components is None or self.size is None:
                raise ValueError("mixture form needs 'weights', 'components' and 'size'")
        elif not self.subsets:
            raise ValueError("'subsets' must not be empty")
        # validate parameter records early
        record = param_type(self.family)
        for params in (s.params for s in self.subsets) if self.subsets else self.components or []:
            record.model_validate(params)
        return self

    def mixture(self) -> MixtureModel:
        return MixtureModel(family=self.family, weights=self.weights, components=self.components)


def load_synth_spec(path: str | Path) -> SynthSpec:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Synth spec not found: {p}")
    try:
        return SynthSpec.model_validate(json.loads(p.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{p}: not valid JSON ({exc})") from exc
    except ValidationError as exc:
        raise DataFormatError(f"{p}: invalid synth spec ({exc})") from exc


def preset_spec(name: str) -> SynthSpec:
    if name == "paper-gaussian":
        return SynthSpec(
            family="gaussian",
            subsets=[SubsetSpec(params=p.model_dump(), size=n) for p, n in presets.PAPER_GAUSSIAN],
        )
    raise InvalidParameterError(f"Preset '{name}' is not a sampled preset (known: {presets.PRESETS})")


def draw_sample(spec: SynthSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(values, labels); values are (n,) or (n, d) for mvn."""
    if spec.subsets is None:
        return sample_mixture(spec.mixture(), spec.size or 0, rng)

    record = param_type(spec.family)
    chunks, labels = [], []
    for k, subset in enumerate(spec.subsets):
        chunks.append(sample_component(record.model_validate(subset.params), subset.size, rng))
        labels.append(np.full(subset.size, k, dtype=np.int64))
    return np.concatenate(chunks, axis=0), np.concatenate(labels)
