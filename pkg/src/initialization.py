"""
Seeded random initialization of mixture parameters.

Recipes:
- gaussian: mu ~ U(min, max), sigma ~ U(sigma_floor, range/6], w ~ U(0, 1) normalized
  (about 99% of a normal falls within mu +- 3 sigma, so the data spread is ~6 sigma)
- mvn:      mu per coordinate uniform in the bounding box,
            Sigma = diag((range_j / 6)^2) * u^2 with u ~ U(0.5, 1)
- poisson:  lambda ~ U(max(min, lambda_floor), max), w as above

Every draw comes from a Philox generator keyed by (seed, stream); restart r of a
fit uses stream r, so a recipe's seed reproduces restart 0 of a fit with that seed.
"""

from __future__ import annotations

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.dataset import Dataset
from src.distributions import (
    ComponentParams,
    Family,
    MixtureModel,
    make_components,
    normalized,
)
from src.errors import FamilyMismatchError, ZeroRangeError

RNG_ALGORITHM = "numpy.random.Philox(SeedSequence(seed, spawn_key=(stream,)))"

VARIANCE_FLOOR_REL = 1e-10
VARIANCE_FLOOR_ABS = 1e-10  # used when the data range is zero
LAMBDA_FLOOR = 1e-10


class InitRecipe(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family
    k: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def rng_algorithm() -> str:
    return f"{RNG_ALGORITHM}; numpy {np.__version__}"


# -----------------------------
# Floors shared with the engine
# -----------------------------
def variance_floor(data_range: float) -> float:
    """sigma^2 >= 1e-10 * range^2 (absolute 1e-10 for zero-range data)."""
    r = float(data_range)
    return VARIANCE_FLOOR_REL * r * r if r > 0 else VARIANCE_FLOOR_ABS


def variance_floors(data: Dataset) -> np.ndarray:
    return np.array([variance_floor(r) for r in np.atleast_1d(data.data_range())])


# -----------------------------
# Component draws
# -----------------------------
def draw_gaussian1d(data: Dataset, k: int, rng: np.random.Generator) -> List[ComponentParams]:
    lo, hi = (float(v) for v in data.bounds())
    spread = hi - lo
    if not spread > 0:
        raise ZeroRangeError("Cannot initialize Gaussian components: all observations are identical")
    sigma_floor = math.sqrt(variance_floor(spread))
    sigma_top = spread / 6.0
    mu = rng.uniform(lo, hi, size=k)
    # (sigma_floor, range/6]
    sigma = sigma_top - (sigma_top - sigma_floor) * rng.uniform(0.0, 1.0, size=k)
    return make_components("gaussian", mu=mu, sigma2=sigma ** 2)


def draw_mvn(data: Dataset, k: int, rng: np.random.Generator) -> List[ComponentParams]:
    lo, hi = data.bounds()
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
    spread = hi - lo
    if not np.all(spread > 0):
        flat = [int(j) for j in np.flatnonzero(~(spread > 0))]
        raise ZeroRangeError(f"Cannot initialize MVN components: zero range in coordinate(s) {flat}")
    d = spread.shape[0]
    mu = rng.uniform(lo, hi, size=(k, d))
    u = rng.uniform(0.5, 1.0, size=k)
    base = np.diag((spread / 6.0) ** 2)
    sigma = np.stack([base * (uk ** 2) for uk in u])
    return make_components("mvn", mu=mu, sigma=sigma)


def draw_poisson(data: Dataset, k: int, rng: np.random.Generator) -> List[ComponentParams]:
    lo, hi = (float(v) for v in data.bounds())
    if not hi > 0:
        raise ZeroRangeError("Cannot initialize Poisson components: all observations are 0")
    low = max(lo, LAMBDA_FLOOR)
    lam = rng.uniform(low, hi, size=k) if hi > low else np.full(k, hi)
    return make_components("poisson", lam=lam)


_DRAWS = {
    "gaussian": draw_gaussian1d,
    "mvn": draw_mvn,
    "poisson": draw_poisson,
}


def draw_components(data: Dataset, family: str, k: int, rng: np.random.Generator) -> List[ComponentParams]:
    if family not in _DRAWS:
        raise FamilyMismatchError(f"Unknown family '{family}'")
    return _DRAWS[family](data, k, rng)


def draw_weights(k: int, rng: np.random.Generator) -> List[float]:
    # 1 - U[0, 1) lies in (0, 1], so the sum is never zero
    return normalized(1.0 - rng.uniform(0.0, 1.0, size=k))


# -----------------------------
# Public recipes
# -----------------------------
def _initialize(data: Dataset, recipe: InitRecipe, family: str, rng: Optional[np.random.Generator]) -> MixtureModel:
    if recipe.family != family:
        raise FamilyMismatchError(f"Recipe family '{recipe.family}' does not match '{family}'")
    rng = rng if rng is not None else make_rng(recipe.seed)
    components = draw_components(data, family, recipe.k, rng)
    weights = draw_weights(recipe.k, rng)
    return MixtureModel(family=family, weights=weights, components=components)


def init_gaussian1d(data: Dataset, recipe: InitRecipe, rng: Optional[np.random.Generator] = None) -> MixtureModel:
    return _initialize(data, recipe, "gaussian", rng)


def init_mvn(data: Dataset, recipe: InitRecipe, rng: Optional[np.random.Generator] = None) -> MixtureModel:
    return _initialize(data, recipe, "mvn", rng)


def init_poisson(data: Dataset, recipe: InitRecipe, rng: Optional[np.random.Generator] = None) -> MixtureModel:
    return _initialize(data, recipe, "poisson", rng)


def initialize(data: Dataset, recipe: InitRecipe, rng: Optional[np.random.Generator] = None) -> MixtureModel:
    """Dispatch on recipe.family."""
    return _initialize(data, recipe, recipe.family, rng)
