"""
Component densities (log space) and the finite mixture model.

Supported families:
- "gaussian": univariate normal, parameters (mu, sigma2)
- "mvn":      d-dimensional normal, parameters (mu vector, sigma covariance)
- "poisson":  Poisson counts, parameter lambda

All evaluation is done on log-densities; probabilities are only exponentiated
inside normalized ratios. Every function here is pure.
"""

from __future__ import annotations

import math
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, model_validator
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import expit, gammaln, logsumexp

from src.errors import (
    DimensionMismatchError,
    DomainError,
    FamilyMismatchError,
    InvalidParameterError,
    NotPositiveDefiniteError,
)

Family = Literal["gaussian", "mvn", "poisson"]
FAMILIES: Tuple[str, ...] = ("gaussian", "mvn", "poisson")

LOG_2PI = math.log(2.0 * math.pi)

# Cholesky jitter policy: eps * trace(sigma) / d added to the diagonal,
# eps = 1e-9, 1e-8, 1e-7 on the three retries.
JITTER_EPS = 1e-9
JITTER_RETRIES = 3

WEIGHT_SUM_TOL = 1e-12
SYMMETRY_TOL = 1e-12


# -----------------------------
# Parameter records
# -----------------------------
class Gaussian1DParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: FiniteFloat
    sigma2: FiniteFloat = Field(gt=0)


class MVNParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: List[FiniteFloat] = Field(min_length=1)
    sigma: List[List[FiniteFloat]]

    @model_validator(mode="after")
    def _check_shape(self) -> "MVNParams":
        d = len(self.mu)
        if len(self.sigma) != d or any(len(row) != d for row in self.sigma):
            raise ValueError(f"sigma must be {d}x{d} to match mu")
        cov = np.asarray(self.sigma, dtype=float)
        scale = float(np.max(np.abs(cov))) if cov.size else 0.0
        if float(np.max(np.abs(cov - cov.T))) > SYMMETRY_TOL * max(scale, 1e-300):
            raise ValueError("sigma must be symmetric")
        return self

    @property
    def dim(self) -> int:
        return len(self.mu)

    @property
    def mean(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)


class PoissonParams(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: FiniteFloat = Field(alias="lambda", gt=0)


ComponentParams = Union[Gaussian1DParams, MVNParams, PoissonParams]

_PARAM_TYPES: Dict[str, type] = {
    "gaussian": Gaussian1DParams,
    "mvn": MVNParams,
    "poisson": PoissonParams,
}


class MixtureModel(BaseModel):
    """
    Weighted sum of K same-family components: f(x) = sum_k w_k g_k(x; theta_k).
    """
    model_config = ConfigDict(frozen=True)

    family: Family
    weights: List[FiniteFloat] = Field(min_length=1)
    components: List[ComponentParams] = Field(min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _coerce_components(cls, data: Any) -> Any:
        # Plain dicts are built with the record type of the declared family so that
        # the union never has to guess.
        if isinstance(data, dict) and data.get("family") in _PARAM_TYPES:
            param_type = _PARAM_TYPES[data["family"]]
            comps = data.get("components")
            if isinstance(comps, (list, tuple)):
                data = dict(data)
                data["components"] = [param_type.model_validate(c) if isinstance(c, dict) else c for c in comps]
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> "MixtureModel":
        if len(self.weights) != len(self.components):
            raise ValueError("weights and components must have the same length")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {float(w.sum())!r})")
        param_type = _PARAM_TYPES[self.family]
        if not all(isinstance(c, param_type) for c in self.components):
            raise ValueError(f"all components must be {param_type.__name__} for family '{self.family}'")
        if self.family == "mvn":
            dims = {c.dim for c in self.components}  # type: ignore[union-attr]
            if len(dims) != 1:
                raise ValueError("MVN components must share one dimension")
        return self

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        if self.family == "mvn":
            return self.components[0].dim  # type: ignore[union-attr]
        return 1

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def location_keys(self) -> np.ndarray:
        """Per-component sort key: mu, first coordinate of mu, or lambda."""
        if self.family == "gaussian":
            return np.array([c.mu for c in self.components])  # type: ignore[union-attr]
        if self.family == "mvn":
            return np.array([c.mu[0] for c in self.components])  # type: ignore[union-attr]
        return np.array([c.lam for c in self.components])  # type: ignore[union-attr]

    def sort_order(self) -> List[int]:
        return [int(i) for i in np.argsort(self.location_keys(), kind="stable")]

    def permuted(self, order: List[int]) -> "MixtureModel":
        if sorted(order) != list(range(self.k)):
            raise InvalidParameterError(f"Not a permutation of {self.k} components: {order}")
        return MixtureModel(
            family=self.family,
            weights=[self.weights[i] for i in order],
            components=[self.components[i] for i in order],
        )


# -----------------------------
# Single-component log-densities
# -----------------------------
def gaussian_log_pdf(x: ArrayLike, p: Gaussian1DParams) -> Any:
    """log N(x; mu, sigma2). Scalar in, float out; array in, array out."""
    if not p.sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {p.sigma2}")
    xa = np.asarray(x, dtype=float)
    out = -0.5 * (LOG_2PI + math.log(p.sigma2)) - (xa - p.mu) ** 2 / (2.0 * p.sigma2)
    return float(out) if out.ndim == 0 else out


def poisson_log_pmf(x: ArrayLike, p: PoissonParams) -> Any:
    """-lambda + x log(lambda) - log(x!), log(x!) through the log-gamma function."""
    if not p.lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {p.lam}")
    xa = np.asarray(x, dtype=float)
    _check_count_domain(xa)
    out = -p.lam + xa * math.log(p.lam) - gammaln(xa + 1.0)
    return float(out) if out.ndim == 0 else out


def mvn_log_pdf(x: ArrayLike, p: MVNParams) -> Any:
    """
    log N(x; mu, Sigma) through a Cholesky factor; x is (d,) or (n, d).
    """
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 1
    rows = xa[None, :] if single else xa
    if rows.ndim != 2 or rows.shape[1] != p.dim:
        raise DimensionMismatchError(f"Expected observations of dimension {p.dim}, got shape {xa.shape}")
    L, _ = regularized_cholesky(p.cov)
    out = _mvn_log_pdf_rows(rows, p.mean, L)
    return float(out[0]) if single else out


def _mvn_log_pdf_rows(rows: np.ndarray, mean: np.ndarray, L: np.ndarray) -> np.ndarray:
    d = mean.shape[0]
    z = solve_triangular(L, (rows - mean).T, lower=True, check_finite=False)
    maha = np.sum(z * z, axis=0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (d * LOG_2PI + log_det + maha)


def regularized_cholesky(sigma: ArrayLike, *, scale_floor: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lower Cholesky factor of sigma, adding diagonal jitter when sigma is not
    numerically positive definite.

    Returns (L, sigma_used) where sigma_used is the matrix actually factorized.
    """
    a = np.asarray(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"Covariance must be square, got shape {a.shape}")
    try:
        return cholesky(a, lower=True), a
    except LinAlgError:
        pass

    d = a.shape[0]
    scale = max(float(np.trace(a)) / d, scale_floor)
    if not np.isfinite(scale) or scale <= 0:
        raise NotPositiveDefiniteError("Covariance is not positive definite and has no usable scale for jitter")

    eps = JITTER_EPS
    for _ in range(JITTER_RETRIES):
        candidate = a + eps * scale * np.eye(d)
        try:
            return cholesky(candidate, lower=True), candidate
        except LinAlgError:
            eps *= 10.0
    raise NotPositiveDefiniteError(
        f"Covariance is not positive definite after {JITTER_RETRIES} jitter retries"
    )


def _check_count_domain(xa: np.ndarray) -> None:
    if np.any(xa < 0):
        raise DomainError("Poisson observations must be non-negative")
    if np.any(xa != np.floor(xa)):
        raise DomainError("Poisson observations must be integers")


# -----------------------------
# Mixture-level evaluation
# -----------------------------
def as_rows(x: ArrayLike, model: MixtureModel) -> np.ndarray:
    """Observations as model rows: (n,) for gaussian/poisson, (n, d) for mvn."""
    xa = np.asarray(x, dtype=float)
    if model.family == "mvn":
        rows = xa[None, :] if xa.ndim == 1 else xa
        if rows.ndim != 2 or rows.shape[1] != model.dim:
            raise DimensionMismatchError(f"Expected observations of dimension {model.dim}, got shape {xa.shape}")
        return rows
    if xa.ndim == 2 and xa.shape[1] == 1:
        xa = xa[:, 0]
    if xa.ndim > 1:
        raise DimensionMismatchError(f"Family '{model.family}' expects scalar observations, got shape {xa.shape}")
    return np.atleast_1d(xa)


def component_log_densities(rows: np.ndarray, model: MixtureModel, *, cov_floor: float = 0.0) -> np.ndarray:
    """
    (n, K) matrix of log g_k(x_i; theta_k).
    """
    if model.family == "gaussian":
        mu = np.array([c.mu for c in model.components])  # type: ignore[union-attr]
        s2 = np.array([c.sigma2 for c in model.components])  # type: ignore[union-attr]
        if np.any(s2 <= 0):
            raise InvalidParameterError("sigma2 must be > 0")
        return -0.5 * (LOG_2PI + np.log(s2)) - (rows[:, None] - mu) ** 2 / (2.0 * s2)

    if model.family == "poisson":
        lam = np.array([c.lam for c in model.components])  # type: ignore[union-attr]
        if np.any(lam <= 0):
            raise InvalidParameterError("lambda must be > 0")
        _check_count_domain(rows)
        x = rows[:, None]
        return -lam + x * np.log(lam) - gammaln(x + 1.0)

    if model.family == "mvn":
        cols = []
        for c in model.components:
            L, _ = regularized_cholesky(c.cov, scale_floor=cov_floor)  # type: ignore[union-attr]
            cols.append(_mvn_log_pdf_rows(rows, c.mean, L))  # type: ignore[union-attr]
        return np.column_stack(cols)

    raise FamilyMismatchError(f"Unknown family '{model.family}'")


def weighted_log_densities(rows: np.ndarray, model: MixtureModel, *, cov_floor: float = 0.0) -> np.ndarray:
    """
    (n, K) matrix of log w_k + log g_k(x_i); zero-weight components are -inf.
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weight_array)
    return component_log_densities(rows, model, cov_floor=cov_floor) + log_w


def mixture_log_pdf(x: ArrayLike, m: MixtureModel) -> Any:
    """
    log sum_k w_k g_k(x) by log-sum-exp over the components with w_k > 0.
    """
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 0 or (m.family == "mvn" and xa.ndim == 1)
    rows = as_rows(xa, m)
    live = m.weight_array > 0
    lw = weighted_log_densities(rows, m)[:, live]
    out = logsumexp(lw, axis=1)
    return float(out[0]) if single else out


def two_component_responsibility(x: ArrayLike, model: MixtureModel) -> Any:
    """
    w g1 / (w g1 + (1 - w) g2) for a two-component model, in logistic form.
    """
    if model.k != 2:
        raise InvalidParameterError(f"Two-component formula needs K=2, got K={model.k}")
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 0 or (model.family == "mvn" and xa.ndim == 1)
    rows = as_rows(xa, model)
    lg = component_log_densities(rows, model)
    w = model.weights[0]
    if w <= 0.0 or w >= 1.0:
        out = np.full(rows.shape[0], 1.0 if w >= 1.0 else 0.0)
    else:
        out = expit(math.log(w) + lg[:, 0] - math.log1p(-w) - lg[:, 1])
    return float(out[0]) if single else out


# -----------------------------
# Sampling
# -----------------------------
def sample_component(params: ComponentParams, size: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(params, Gaussian1DParams):
        return rng.normal(params.mu, math.sqrt(params.sigma2), size=size)
    if isinstance(params, PoissonParams):
        return rng.poisson(params.lam, size=size).astype(float)
    if isinstance(params, MVNParams):
        return rng.multivariate_normal(params.mean, params.cov, size=size, method="cholesky")
    raise FamilyMismatchError(f"Cannot sample from {type(params).__name__}")


def sample_mixture(model: MixtureModel, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw `size` observations; returns (values, generating component labels).
    """
    labels = rng.choice(model.k, size=size, p=model.weight_array / model.weight_array.sum())
    shape = (size, model.dim) if model.family == "mvn" else (size,)
    values = np.empty(shape, dtype=float)
    for k, comp in enumerate(model.components):
        idx = np.flatnonzero(labels == k)
        if idx.size:
            values[idx] = sample_component(comp, int(idx.size), rng)
    return values, labels


def make_components(family: str, **arrays: np.ndarray) -> List[ComponentParams]:
    """
    Build parameter records from stacked arrays:
    gaussian(mu, sigma2), mvn(mu (K,d), sigma (K,d,d)), poisson(lam).
    """
    if family == "gaussian":
        return [Gaussian1DParams(mu=float(m), sigma2=float(s)) for m, s in zip(arrays["mu"], arrays["sigma2"])]
    if family == "poisson":
        return [PoissonParams(lam=float(v)) for v in arrays["lam"]]
    if family == "mvn":
        return [MVNParams(mu=[float(v) for v in m], sigma=np.asarray(s, dtype=float).tolist())
                for m, s in zip(arrays["mu"], arrays["sigma"])]
    raise FamilyMismatchError(f"Unknown family '{family}'")


def normalized(weights: ArrayLike) -> List[float]:
    w = np.asarray(weights, dtype=float)
    total = float(w.sum())
    if not np.isfinite(total) or total <= 0:
        raise InvalidParameterError("weights must have a positive finite sum")
    return [float(v) for v in w / total]


def component_summary(params: ComponentParams) -> str:
    if isinstance(params, Gaussian1DParams):
        return f"mu={params.mu:.4g} sigma={math.sqrt(params.sigma2):.4g}"
    if isinstance(params, PoissonParams):
        return f"lambda={params.lam:.4g}"
    mu = ", ".join(f"{v:.4g}" for v in params.mu)
    return f"mu=({mu})"


def param_type(family: str) -> type:
    """Parameter record class for a family name."""
    if family not in _PARAM_TYPES:
        raise FamilyMismatchError(f"Unknown family '{family}' (expected one of {FAMILIES})")
    return _PARAM_TYPES[family]
