"""
Generic K-component EM for finite mixtures.

One iteration:
    E-step   responsibilities gamma[i, k] = softmax_k(log w_k + log g_k(x_i))
    M-step   closed-form component updates from the current responsibilities
             (sigma2 uses the freshly updated mu), then
             w_k = (1/n) sum_i gamma[i, k]
Convergence is declared when both the relative change of the observed-data
log-likelihood and the largest relative parameter change drop below `tol`.
Restarts are independent; the best final log-likelihood wins, ties going to
the lowest restart index.

Run-length encoded count data enter every sum through per-row multiplicities,
so a frequency table and its expansion give identical traces.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import eigh
from scipy.special import logsumexp

from src.dataset import Dataset
from src.distributions import (
    ComponentParams,
    Family,
    MixtureModel,
    make_components,
    weighted_log_densities,
)
from src.errors import (
    DegenerateComponentError,
    FamilyMismatchError,
    InvalidParameterError,
    MixtureError,
    NonFiniteLikelihoodError,
)
from src.initialization import (
    LAMBDA_FLOOR,
    InitRecipe,
    draw_components,
    initialize,
    make_rng,
    rng_algorithm,
    variance_floors,
)
from src.state import record_event

DEGENERATE_MASS = 1e-8
DegeneratePolicy = Literal["error", "reinit"]


# -----------------------------
# Types
# -----------------------------
@dataclass(frozen=True)
class ResponsibilityMatrix:
    """
    Rows are conditional expectations of the one-hot component indicators.

    For run-length encoded data each row stands for `counts[i]` identical
    observations; `n` is the number of observations, not rows.
    """
    gamma: np.ndarray  # (m, K)
    counts: np.ndarray  # (m,)

    @property
    def k(self) -> int:
        return int(self.gamma.shape[1])

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    def component_mass(self) -> np.ndarray:
        """sum_i gamma[i, k] per component."""
        return self.counts @ self.gamma


class FitConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    family: Family
    tol: float = Field(default=1e-8, gt=0)
    max_iters: int = Field(default=1000, ge=1)
    restarts: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    degenerate_policy: DegeneratePolicy = "reinit"
    threads: int = Field(default=1, ge=1)


class TraceEntry(BaseModel):
    iteration: int
    log_likelihood: float
    max_param_delta: float = 0.0
    model: MixtureModel


class FitResult(BaseModel):
    model: MixtureModel
    trace: List[TraceEntry]
    converged: bool
    iters: int
    best_of: int
    log_likelihood: float
    restart_log_likelihoods: List[float] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    logs: List[Dict[str, Any]] = Field(default_factory=list)


# -----------------------------
# Compatibility
# -----------------------------
_COMPATIBLE_KINDS = {
    "gaussian": ("univariate", "counts"),
    "mvn": ("multivariate", "univariate"),
    "poisson": ("counts",),
}


def check_compatible(data: Dataset, family: str) -> None:
    if family not in _COMPATIBLE_KINDS:
        raise FamilyMismatchError(f"Unknown family '{family}'")
    if data.kind not in _COMPATIBLE_KINDS[family]:
        raise FamilyMismatchError(f"Family '{family}' cannot be fitted to {data.kind} data")


def _rows(data: Dataset, model_or_family: Any) -> np.ndarray:
    family = model_or_family if isinstance(model_or_family, str) else model_or_family.family
    return data.as_matrix() if family == "mvn" else data.values


# -----------------------------
# E-step / likelihood
# -----------------------------
def _posterior(lw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lse = logsumexp(lw, axis=1)
    if np.any(np.isneginf(lse)):
        raise MixtureError("Every component has zero weight or zero density for some observation")
    if not np.all(np.isfinite(lse)):
        raise NonFiniteLikelihoodError("Observed-data log-likelihood is not finite (invalid observations?)")
    gamma = np.exp(lw - lse[:, None])
    return gamma, lse


def e_step(data: Dataset, model: MixtureModel) -> ResponsibilityMatrix:
    """Responsibilities as a row-wise softmax of log w_k + log g_k(x_i)."""
    check_compatible(data, model.family)
    lw = weighted_log_densities(_rows(data, model), model)
    gamma, _ = _posterior(lw)
    return ResponsibilityMatrix(gamma=gamma, counts=np.asarray(data.counts))


def log_likelihood(data: Dataset, model: MixtureModel) -> float:
    """sum_i log f(x_i); encoded rows contribute count * log f(value)."""
    check_compatible(data, model.family)
    lw = weighted_log_densities(_rows(data, model), model)
    return float(data.counts @ logsumexp(lw, axis=1))


# -----------------------------
# M-step
# -----------------------------
def update_weights(r: ResponsibilityMatrix) -> np.ndarray:
    """w_k = (1/n) sum_i gamma[i, k]."""
    w = r.component_mass() / r.n
    return w / w.sum()


def degenerate_components(r: ResponsibilityMatrix) -> List[int]:
    mass = r.component_mass()
    return [int(k) for k in np.flatnonzero(mass < DEGENERATE_MASS * r.n)]


def _raise_if_degenerate(r: ResponsibilityMatrix) -> None:
    dead = degenerate_components(r)
    if dead:
        raise DegenerateComponentError(dead)


def _update_gaussian1d(rows: np.ndarray, r: ResponsibilityMatrix, comps: Sequence[int], floors: np.ndarray) -> Dict[int, ComponentParams]:
    out: Dict[int, ComponentParams] = {}
    for k in comps:
        wk = r.counts * r.gamma[:, k]
        nk = float(wk.sum())
        mu = float(wk @ rows) / nk
        var = float(wk @ (rows - mu) ** 2) / nk
        out[k] = make_components("gaussian", mu=[mu], sigma2=[max(var, float(floors[0]))])[0]
    return out


def floor_covariance(scatter: np.ndarray, floors: np.ndarray) -> np.ndarray:
    """
    Covariance update under the constraint Sigma >= diag(floors) (Loewner order).

    The scatter is whitened by the floors, its eigenvalues are clipped at 1 and
    the result is mapped back; this maximizes the component's expected
    log-likelihood over the constrained set. The constraint is fixed for the
    whole fit. A scatter that already satisfies it is returned unchanged.
    """
    s = 1.0 / np.sqrt(np.asarray(floors, dtype=float))
    vals, vecs = eigh(scatter * np.outer(s, s))
    if vals.min() >= 1.0:
        return scatter
    clipped = (vecs * np.maximum(vals, 1.0)) @ vecs.T
    out = clipped / np.outer(s, s)
    return 0.5 * (out + out.T)


def _update_mvn(rows: np.ndarray, r: ResponsibilityMatrix, comps: Sequence[int], floors: np.ndarray) -> Dict[int, ComponentParams]:
    out: Dict[int, ComponentParams] = {}
    for k in comps:
        wk = r.counts * r.gamma[:, k]
        nk = float(wk.sum())
        mu = (wk @ rows) / nk
        centered = rows - mu
        scatter = (centered * wk[:, None]).T @ centered / nk
        scatter = 0.5 * (scatter + scatter.T)
        out[k] = make_components("mvn", mu=[mu], sigma=[floor_covariance(scatter, floors)])[0]
    return out


def _update_poisson(rows: np.ndarray, r: ResponsibilityMatrix, comps: Sequence[int], floors: np.ndarray) -> Dict[int, ComponentParams]:
    out: Dict[int, ComponentParams] = {}
    for k in comps:
        wk = r.counts * r.gamma[:, k]
        lam = float(wk @ rows) / float(wk.sum())
        out[k] = make_components("poisson", lam=[max(lam, LAMBDA_FLOOR)])[0]
    return out


_UPDATERS: Dict[str, Callable[..., Dict[int, ComponentParams]]] = {
    "gaussian": _update_gaussian1d,
    "mvn": _update_mvn,
    "poisson": _update_poisson,
}


def _m_step(data: Dataset, family: str, r: ResponsibilityMatrix, comps: Sequence[int]) -> Dict[int, ComponentParams]:
    if r.gamma.shape[0] != data.rows:
        raise InvalidParameterError("Responsibility matrix does not match the dataset")
    return _UPDATERS[family](_rows(data, family), r, comps, variance_floors(data))


def m_step_gaussian1d(data: Dataset, r: ResponsibilityMatrix) -> List[ComponentParams]:
    """Weighted mean and biased weighted variance per component."""
    check_compatible(data, "gaussian")
    _raise_if_degenerate(r)
    updated = _m_step(data, "gaussian", r, range(r.k))
    return [updated[k] for k in range(r.k)]


def m_step_mvn(data: Dataset, r: ResponsibilityMatrix) -> List[ComponentParams]:
    """Weighted mean vector and symmetrized weighted scatter, floored by `floor_covariance`."""
    check_compatible(data, "mvn")
    _raise_if_degenerate(r)
    updated = _m_step(data, "mvn", r, range(r.k))
    return [updated[k] for k in range(r.k)]


def m_step_poisson(data: Dataset, r: ResponsibilityMatrix) -> List[ComponentParams]:
    """Weighted mean per component, floored at 1e-10."""
    check_compatible(data, "poisson")
    _raise_if_degenerate(r)
    updated = _m_step(data, "poisson", r, range(r.k))
    return [updated[k] for k in range(r.k)]


# -----------------------------
# Closed-form single-distribution baseline
# -----------------------------
def mle_single(data: Dataset, family: str) -> MixtureModel:
    """K=1 maximum likelihood fit, returned as a one-component mixture."""
    check_compatible(data, family)
    r = ResponsibilityMatrix(gamma=np.ones((data.rows, 1)), counts=np.asarray(data.counts))
    component = _m_step(data, family, r, [0])[0]
    return MixtureModel(family=family, weights=[1.0], components=[component])


# -----------------------------
# EM loop
# -----------------------------
@dataclass
class _RestartOutcome:
    index: int
    trace: List[TraceEntry]
    converged: bool
    iters: int
    logs: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def final_log_likelihood(self) -> float:
        return self.trace[-1].log_likelihood


def _param_vector(model: MixtureModel) -> np.ndarray:
    parts = [model.weight_array]
    for c in model.components:
        parts.append(np.asarray([v for v in _flat_params(c)], dtype=float))
    return np.concatenate(parts)


def _flat_params(c: ComponentParams) -> List[float]:
    dumped = c.model_dump()
    flat: List[float] = []
    for value in dumped.values():
        flat.extend(np.ravel(np.asarray(value, dtype=float)).tolist())
    return flat


def _relative_change(new: float, old: float) -> float:
    return abs(new - old) / abs(old) if old != 0 else abs(new - old)


def _relative_param_delta(new: MixtureModel, old: MixtureModel) -> float:
    """Largest per-parameter |new - old| / |old| (absolute where old is 0)."""
    a, b = _param_vector(new), _param_vector(old)
    scale = np.abs(b)
    diff = np.abs(a - b)
    return float(np.max(np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), diff)))


def _run_restart(
    data: Dataset,
    config: FitConfig,
    start: Optional[MixtureModel],
    restart: int,
) -> _RestartOutcome:
    rng = make_rng(config.seed, restart)
    logs: List[Dict[str, Any]] = []
    family = config.family
    rows = _rows(data, family)
    floors = variance_floors(data)
    cov_floor = float(np.max(floors)) if family == "mvn" else 0.0

    model = start if start is not None else initialize(data, InitRecipe(family=family, k=config.k, seed=config.seed), rng)
    record_event(logs, "EM", "restart_start", f"Restart {restart} initialized", restart=restart, given_init=start is not None)

    lw = weighted_log_densities(rows, model, cov_floor=cov_floor)
    gamma, lse = _posterior(lw)
    ll = float(data.counts @ lse)
    trace = [TraceEntry(iteration=0, log_likelihood=ll, model=model)]
    converged = False
    iteration = 0

    for iteration in range(1, config.max_iters + 1):
        r = ResponsibilityMatrix(gamma=gamma, counts=np.asarray(data.counts))
        dead = degenerate_components(r)
        if dead and config.degenerate_policy == "error":
            raise DegenerateComponentError(dead, f"Degenerate components {dead} at iteration {iteration} (restart {restart})")

        live = [k for k in range(model.k) if k not in dead]
        updated = _m_step(data, family, r, live)
        # Degenerate components keep their previous parameters for now (a generalized M-step).
        for k in dead:
            updated[k] = model.components[k]
        new_model = MixtureModel(
            family=family,
            weights=[float(v) for v in update_weights(r)],
            components=[updated[k] for k in range(model.k)],
        )
        lw = weighted_log_densities(rows, new_model, cov_floor=cov_floor)
        new_gamma, new_lse = _posterior(lw)
        new_ll = float(data.counts @ new_lse)

        if dead:
            new_model, new_gamma, new_ll = _try_redraw(
                data, rows, new_model, dead, rng, cov_floor, new_gamma, new_ll, logs, restart, iteration
            )

        delta = float(np.max(np.abs(_param_vector(new_model) - _param_vector(model))))
        trace.append(TraceEntry(iteration=iteration, log_likelihood=new_ll, max_param_delta=delta, model=new_model))
        change = _relative_change(new_ll, ll)
        step = _relative_param_delta(new_model, model)
        model, gamma, ll = new_model, new_gamma, new_ll
        if change < config.tol and step < config.tol:
            converged = True
            break

    if converged:
        record_event(logs, "EM", "converged", f"Restart {restart} converged", restart=restart, iters=iteration, log_likelihood=ll)
    else:
        record_event(logs, "EM", "max_iters_reached", f"Restart {restart} hit max_iters", restart=restart, iters=iteration, log_likelihood=ll)
    return _RestartOutcome(index=restart, trace=trace, converged=converged, iters=iteration, logs=logs)


def _try_redraw(
    data: Dataset,
    rows: np.ndarray,
    model: MixtureModel,
    dead: List[int],
    rng: np.random.Generator,
    cov_floor: float,
    gamma: np.ndarray,
    ll: float,
    logs: List[Dict[str, Any]],
    restart: int,
    iteration: int,
) -> Tuple[MixtureModel, np.ndarray, float]:
    """
    Redraw degenerate components from the initialization distribution; the redraw
    is kept only if the log-likelihood does not decrease.
    """
    fresh = draw_components(data, model.family, len(dead), rng)
    components = list(model.components)
    for k, comp in zip(dead, fresh):
        components[k] = comp
    candidate = MixtureModel(family=model.family, weights=list(model.weights), components=components)
    lw = weighted_log_densities(rows, candidate, cov_floor=cov_floor)
    cand_gamma, cand_lse = _posterior(lw)
    cand_ll = float(data.counts @ cand_lse)
    accepted = cand_ll >= ll
    record_event(
        logs, "EM", "degenerate_component",
        f"Components {dead} degenerate at iteration {iteration}; redraw {'kept' if accepted else 'discarded'}",
        restart=restart, iteration=iteration, components=dead, accepted=accepted,
    )
    if accepted:
        return candidate, cand_gamma, cand_ll
    return model, gamma, ll


def em_fit(data: Dataset, config: FitConfig, init: Optional[MixtureModel] = None) -> FitResult:
    """
    Fit a K-component mixture by EM with restarts.

    With `init` given, exactly one run starts from it; otherwise each restart r
    draws its own initialization from stream (seed, r).
    """
    check_compatible(data, config.family)
    logs: List[Dict[str, Any]] = []

    if not np.all(np.isfinite(data.values)):
        raise NonFiniteLikelihoodError("Observations contain NaN or infinite values; the log-likelihood is undefined")
    if init is not None:
        if init.family != config.family or init.k != config.k:
            raise FamilyMismatchError(
                f"Initial model ({init.family}, K={init.k}) does not match config ({config.family}, K={config.k})"
            )
        if config.family == "mvn" and init.dim != data.dim:
            raise FamilyMismatchError(f"Initial model has dimension {init.dim}, data has {data.dim}")
    if data.n < config.k:
        record_event(logs, "EM", "warning", f"Fewer observations ({data.n}) than components ({config.k})", n=data.n, k=config.k)

    restarts = 1 if init is not None else config.restarts
    if init is not None and config.restarts > 1:
        record_event(logs, "EM", "warning", "Initial model given; running a single restart", restarts=config.restarts)

    def run(r: int) -> _RestartOutcome:
        return _run_restart(data, config, init, r)

    if config.threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(run, range(restarts)))
    else:
        outcomes = [run(r) for r in range(restarts)]

    finals = [o.final_log_likelihood for o in outcomes]
    best = max(range(restarts), key=lambda i: (finals[i], -i))
    chosen = outcomes[best]
    for o in outcomes:
        logs.extend(o.logs)
        record_event(logs, "EM", "restart_end", f"Restart {o.index} finished", restart=o.index,
                     log_likelihood=o.final_log_likelihood, iters=o.iters, converged=o.converged)
    record_event(logs, "EM", "selected", f"Selected restart {best}", restart=best, log_likelihood=finals[best])

    return FitResult(
        model=chosen.trace[-1].model,
        trace=chosen.trace,
        converged=chosen.converged,
        iters=chosen.iters,
        best_of=best,
        log_likelihood=finals[best],
        restart_log_likelihoods=finals,
        metadata={
            "seed": config.seed,
            "tol": config.tol,
            "max_iters": config.max_iters,
            "restarts": restarts,
            "degenerate_policy": config.degenerate_policy,
            "rng_algorithm": rng_algorithm(),
        },
        logs=logs,
    )


def em_iteration(data: Dataset, model: MixtureModel) -> MixtureModel:
    """
    One plain EM iteration (E-step, component M-step, weight update).
    """
    check_compatible(data, model.family)
    r = e_step(data, model)
    updated = _m_step(data, model.family, r, range(model.k))
    return MixtureModel(
        family=model.family,
        weights=[float(v) for v in update_weights(r)],
        components=[updated[k] for k in range(model.k)],
    )
