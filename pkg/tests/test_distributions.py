from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats
from scipy.integrate import trapezoid

from src.distributions import (
    Gaussian1DParams,
    MixtureModel,
    MVNParams,
    PoissonParams,
    gaussian_log_pdf,
    mixture_log_pdf,
    mvn_log_pdf,
    poisson_log_pmf,
    regularized_cholesky,
    sample_mixture,
    two_component_responsibility,
)
from src.dataset import Dataset
from src.em_engine import e_step
from src.errors import DimensionMismatchError, DomainError, NotPositiveDefiniteError
from src.initialization import make_rng
from tests import oracles


def _gauss_model(weights, mus, s2s) -> MixtureModel:
    return MixtureModel(
        family="gaussian",
        weights=list(weights),
        components=[Gaussian1DParams(mu=m, sigma2=s) for m, s in zip(mus, s2s)],
    )


# -----------------------------
# Component densities
# -----------------------------
def test_gaussian_standard_normal_at_zero():
    assert gaussian_log_pdf(0.0, Gaussian1DParams(mu=0.0, sigma2=1.0)) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_gaussian_one_sd_from_mean():
    # log(2.5) - log(sqrt(2 pi)) - 1/2
    got = gaussian_log_pdf(3.0, Gaussian1DParams(mu=1.0, sigma2=4.0))
    assert got == pytest.approx(-0.5 * math.log(2 * math.pi) - math.log(2.0) - 0.5, abs=1e-12)


def test_gaussian_far_tail_is_finite():
    got = gaussian_log_pdf(1e6, Gaussian1DParams(mu=0.0, sigma2=1.0))
    assert math.isfinite(got)
    assert got == pytest.approx(-5e11, rel=1e-9)


def test_gaussian_matches_decimal_oracle():
    for x, mu, s2 in [(0.3, -1.2, 0.7), (12.0, 5.0, 25.0), (-10.0, -9.99, 1.3689)]:
        got = gaussian_log_pdf(x, Gaussian1DParams(mu=mu, sigma2=s2))
        assert got == pytest.approx(oracles.gaussian_log_pdf(x, mu, s2), abs=1e-12)


def test_gaussian_vectorized_matches_scipy():
    x = np.linspace(-5, 5, 11)
    got = gaussian_log_pdf(x, Gaussian1DParams(mu=0.5, sigma2=2.0))
    np.testing.assert_allclose(got, stats.norm(0.5, math.sqrt(2.0)).logpdf(x), atol=1e-12)


def test_gaussian_rejects_nonpositive_variance():
    with pytest.raises(ValidationError):
        Gaussian1DParams(mu=0.0, sigma2=0.0)


def test_poisson_closed_forms():
    assert poisson_log_pmf(0, PoissonParams(lam=1.0)) == pytest.approx(-1.0, abs=1e-12)
    assert poisson_log_pmf(3, PoissonParams(lam=2.0)) == pytest.approx(-2 + 3 * math.log(2) - math.log(6), abs=1e-12)


def test_poisson_large_count_uses_log_gamma():
    got = poisson_log_pmf(170, PoissonParams(lam=170.0))
    assert math.isfinite(got)
    assert got == pytest.approx(oracles.poisson_log_pmf(170, 170.0), abs=1e-9)


@pytest.mark.parametrize("bad", [-1, 2.5])
def test_poisson_domain_errors(bad):
    with pytest.raises(DomainError):
        poisson_log_pmf(bad, PoissonParams(lam=1.0))


def test_poisson_alias_lambda():
    p = PoissonParams.model_validate({"lambda": 4.0})
    assert p.lam == 4.0
    assert p.model_dump(by_alias=True) == {"lambda": 4.0}


def test_mvn_reduces_to_univariate():
    p = MVNParams(mu=[1.0], sigma=[[2.0]])
    assert mvn_log_pdf([0.0], p) == pytest.approx(gaussian_log_pdf(0.0, Gaussian1DParams(mu=1.0, sigma2=2.0)), abs=1e-12)


def test_mvn_identity_2d_at_origin():
    p = MVNParams(mu=[0.0, 0.0], sigma=[[1.0, 0.0], [0.0, 1.0]])
    assert mvn_log_pdf([0.0, 0.0], p) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)


def test_mvn_matches_scipy_with_correlation():
    cov = [[2.0, 0.6], [0.6, 1.0]]
    p = MVNParams(mu=[1.0, -1.0], sigma=cov)
    X = np.array([[0.0, 0.0], [1.0, -1.0], [3.0, 2.0]])
    np.testing.assert_allclose(mvn_log_pdf(X, p), stats.multivariate_normal([1.0, -1.0], cov).logpdf(X), atol=1e-12)


def test_mvn_dimension_mismatch():
    p = MVNParams(mu=[0.0, 0.0], sigma=[[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DimensionMismatchError):
        mvn_log_pdf([0.0, 0.0, 0.0], p)


def test_mvn_rejects_asymmetric_sigma():
    with pytest.raises(ValidationError):
        MVNParams(mu=[0.0, 0.0], sigma=[[1.0, 0.5], [0.0, 1.0]])


def test_regularized_cholesky_singular_gets_jitter():
    L, used = regularized_cholesky([[1.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(L @ L.T, used, atol=1e-12)
    assert used[0, 0] > 1.0


def test_regularized_cholesky_gives_up_on_negative_definite():
    with pytest.raises(NotPositiveDefiniteError):
        regularized_cholesky([[-1.0, 0.0], [0.0, -1.0]])


# -----------------------------
# Mixtures
# -----------------------------
def test_mixture_single_component_equals_component():
    m = _gauss_model([1.0], [2.0], [3.0])
    assert mixture_log_pdf(0.5, m) == pytest.approx(gaussian_log_pdf(0.5, m.components[0]), abs=1e-12)


def test_mixture_direct_sum():
    m = _gauss_model([0.3, 0.7], [0.0, 4.0], [1.0, 1.0])
    phi = lambda z: math.exp(-z * z / 2) / math.sqrt(2 * math.pi)  # noqa: E731
    assert mixture_log_pdf(0.0, m) == pytest.approx(math.log(0.3 * phi(0.0) + 0.7 * phi(-4.0)), abs=1e-12)


def test_mixture_far_tail_does_not_underflow():
    m = _gauss_model([0.5, 0.5], [0.0, 1.0], [1.0, 1.0])
    assert math.isfinite(mixture_log_pdf(1e4, m))


def test_mixture_zero_weight_component_is_ignored():
    m = _gauss_model([1.0, 0.0], [0.0, 100.0], [1.0, 1.0])
    assert mixture_log_pdf(0.0, m) == pytest.approx(gaussian_log_pdf(0.0, m.components[0]), abs=1e-12)


def test_mixture_validation():
    with pytest.raises(ValidationError):
        _gauss_model([0.5, 0.6], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        _gauss_model([1.5, -0.5], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        MixtureModel(family="poisson", weights=[1.0], components=[Gaussian1DParams(mu=0.0, sigma2=1.0)])


def test_mixture_from_plain_dicts():
    m = MixtureModel.model_validate(
        {"family": "poisson", "weights": [0.25, 0.75], "components": [{"lambda": 1.0}, {"lambda": 5.0}]}
    )
    assert [c.lam for c in m.components] == [1.0, 5.0]


def test_poisson_mixture_pmf_sums_to_one():
    m = MixtureModel(
        family="poisson",
        weights=[0.328, 0.256, 0.416],
        components=[PoissonParams(lam=1.66), PoissonParams(lam=6.72), PoissonParams(lam=12.85)],
    )
    total = float(np.exp(mixture_log_pdf(np.arange(0, 200), m)).sum())
    assert total == pytest.approx(1.0, abs=1e-9)


def test_gaussian_mixture_integrates_to_one():
    m = _gauss_model([0.317, 0.445, 0.238], [-9.99, -0.05, 4.64], [1.17 ** 2, 1.93 ** 2, 4.86 ** 2])
    grid = np.linspace(-9.99 - 8 * 4.86, 4.64 + 8 * 4.86, 20001)
    integral = trapezoid(np.exp(mixture_log_pdf(grid, m)), grid)
    assert abs(integral - 1.0) < 1e-3


def test_sort_order_and_permutation():
    m = _gauss_model([0.2, 0.5, 0.3], [5.0, -10.0, 0.0], [1.0, 2.0, 3.0])
    order = m.sort_order()
    assert order == [1, 2, 0]
    sorted_model = m.permuted(order)
    assert [c.mu for c in sorted_model.components] == [-10.0, 0.0, 5.0]
    assert sorted_model.weights == [0.5, 0.3, 0.2]


# -----------------------------
# Log-sum-exp bounds and far tails
# -----------------------------
def _random_model(rng: np.random.Generator, family: str, k: int) -> MixtureModel:
    weights = rng.dirichlet(np.ones(k)).tolist()
    if family == "gaussian":
        comps = [Gaussian1DParams(mu=float(rng.uniform(-10, 10)), sigma2=float(rng.uniform(0.1, 9.0))) for _ in range(k)]
    elif family == "poisson":
        comps = [PoissonParams(lam=float(rng.uniform(0.2, 40.0))) for _ in range(k)]
    else:
        comps = []
        for _ in range(k):
            a = rng.normal(size=(2, 2))
            comps.append(MVNParams(mu=rng.uniform(-5, 5, size=2).tolist(), sigma=(a @ a.T + 0.1 * np.eye(2)).tolist()))
    return MixtureModel(family=family, weights=weights, components=comps)


def _component_logs(x: np.ndarray, m: MixtureModel) -> np.ndarray:
    if m.family == "gaussian":
        return np.column_stack([gaussian_log_pdf(x, c) for c in m.components])
    if m.family == "poisson":
        return np.column_stack([poisson_log_pmf(x, c) for c in m.components])
    return np.column_stack([mvn_log_pdf(x, c) for c in m.components])


@pytest.mark.parametrize("family", ["gaussian", "poisson", "mvn"])
def test_mixture_log_pdf_lies_between_component_bounds(family):
    rng = np.random.default_rng(55)
    for _ in range(30):
        m = _random_model(rng, family, int(rng.integers(1, 5)))
        if family == "gaussian":
            x = rng.uniform(-30, 30, size=50)
        elif family == "poisson":
            x = rng.integers(0, 80, size=50).astype(float)
        else:
            x = rng.uniform(-15, 15, size=(50, 2))
        logs = _component_logs(x, m)
        mix = mixture_log_pdf(x, m)
        slack = 1e-12 * np.maximum(1.0, np.abs(mix))
        assert np.all(mix >= logs.min(axis=1) + math.log(min(m.weights)) - slack)
        assert np.all(mix <= logs.max(axis=1) + slack)


def test_gaussian_forty_sigma_is_finite():
    m = _gauss_model([0.5, 0.5], [0.0, 3.0], [1.0, 4.0])
    x = np.array([-40.0, 40.0, 3.0 + 80.0, 3.0 - 80.0])
    assert np.all(np.isfinite(gaussian_log_pdf(x, m.components[0])))
    assert np.all(np.isfinite(mixture_log_pdf(x, m)))
    assert not np.any(np.isnan(e_step(Dataset.from_univariate(x), m).gamma))


def test_poisson_forty_sigma_is_finite():
    lam = 9.0
    m = MixtureModel(family="poisson", weights=[0.3, 0.7], components=[PoissonParams(lam=lam), PoissonParams(lam=1000.0)])
    x = np.array([0.0, lam + 40.0 * math.sqrt(lam), 1000.0 + 40.0 * math.sqrt(1000.0)]).round()
    assert np.all(np.isfinite(poisson_log_pmf(x, m.components[0])))
    assert np.all(np.isfinite(mixture_log_pdf(x, m)))
    assert not np.any(np.isnan(e_step(Dataset.from_counts(x.astype(int)), m).gamma))


def test_mvn_forty_sigma_is_finite():
    sigma = np.array([[2.0, 0.9], [0.9, 1.0]])
    m = MixtureModel(family="mvn", weights=[0.5, 0.5], components=[
        MVNParams(mu=[0.0, 0.0], sigma=sigma.tolist()), MVNParams(mu=[4.0, 4.0], sigma=np.eye(2).tolist())])
    L = np.linalg.cholesky(sigma)
    x = np.vstack([40.0 * L[:, 0], -40.0 * L[:, 1], [4.0, 44.0]])
    assert np.all(np.isfinite(mvn_log_pdf(x, m.components[0])))
    assert np.all(np.isfinite(mixture_log_pdf(x, m)))
    assert not np.any(np.isnan(e_step(Dataset.from_multivariate(x), m).gamma))


# -----------------------------
# Two-component formula
# -----------------------------
def test_two_component_responsibility_matches_decimal_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        w = float(rng.uniform(0.05, 0.95))
        mu = rng.uniform(-5, 5, size=2)
        s2 = rng.uniform(0.5, 4.0, size=2)
        x = float(rng.uniform(-8, 8))
        m = _gauss_model([w, 1 - w], mu, s2)
        assert two_component_responsibility(x, m) == pytest.approx(
            oracles.two_component_responsibility(x, w, mu, s2), abs=1e-12
        )


def test_two_component_responsibility_edge_weights():
    m = _gauss_model([1.0, 0.0], [0.0, 1.0], [1.0, 1.0])
    assert two_component_responsibility(3.0, m) == 1.0


# -----------------------------
# Sampling
# -----------------------------
def test_sample_mixture_shapes_and_determinism():
    m = MixtureModel(
        family="mvn",
        weights=[0.5, 0.5],
        components=[
            MVNParams(mu=[0.0, 0.0], sigma=[[1.0, 0.0], [0.0, 1.0]]),
            MVNParams(mu=[5.0, 5.0], sigma=[[1.0, 0.2], [0.2, 1.0]]),
        ],
    )
    x1, l1 = sample_mixture(m, 100, make_rng(3))
    x2, l2 = sample_mixture(m, 100, make_rng(3))
    assert x1.shape == (100, 2)
    assert set(np.unique(l1)) <= {0, 1}
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(l1, l2)
