from __future__ import annotations

import numpy as np
import pytest

from src.clustering import assign_labels
from src.dataset import Dataset
from src.distributions import Gaussian1DParams, MixtureModel, PoissonParams, gaussian_log_pdf
from src.em_engine import e_step
from src.errors import FamilyMismatchError
from src.initialization import make_rng
from src.synthesis import SubsetSpec, SynthSpec, draw_sample


def _gauss_model(weights, mus, s2s) -> MixtureModel:
    return MixtureModel(
        family="gaussian",
        weights=list(weights),
        components=[Gaussian1DParams(mu=m, sigma2=s) for m, s in zip(mus, s2s)],
    )


SIM_MODEL = _gauss_model([0.317, 0.445, 0.238], [-9.99, -0.05, 4.64], [1.17 ** 2, 1.93 ** 2, 4.86 ** 2])


def test_point_at_mean_of_far_component():
    m = _gauss_model([0.5, 0.5], [0.0, 20.0], [1.0, 1.0])
    labels = assign_labels(Dataset.from_univariate([20.0, 0.0]), m).labels
    assert labels.tolist() == [1, 0]


def test_identical_components_tie_to_lowest_index():
    m = _gauss_model([0.3, 0.7], [1.0, 1.0], [2.0, 2.0])
    labels = assign_labels(Dataset.from_univariate(np.linspace(-3, 3, 9)), m).labels
    assert set(labels.tolist()) == {0}


def test_density_rule_matches_brute_force():
    grid = np.linspace(-15, 15, 100)
    labels = assign_labels(Dataset.from_univariate(grid), SIM_MODEL).labels
    for x, label in zip(grid, labels):
        scores = [gaussian_log_pdf(x, c) for c in SIM_MODEL.components]
        assert label == int(np.argmax(scores))


def test_density_rule_ignores_weights():
    grid = Dataset.from_univariate(np.linspace(-15, 15, 100))
    reweighted = _gauss_model([0.9, 0.05, 0.05], [-9.99, -0.05, 4.64], [1.17 ** 2, 1.93 ** 2, 4.86 ** 2])
    np.testing.assert_array_equal(assign_labels(grid, SIM_MODEL).labels, assign_labels(grid, reweighted).labels)


def test_posterior_rule_is_argmax_of_e_step():
    data = Dataset.from_univariate(np.linspace(-15, 15, 100))
    labels = assign_labels(data, SIM_MODEL, rule="posterior").labels
    np.testing.assert_array_equal(labels, np.argmax(e_step(data, SIM_MODEL).gamma, axis=1))


def test_rules_agree_with_uniform_weights():
    m = _gauss_model([0.5, 0.5], [-1.0, 2.0], [1.0, 3.0])
    data = Dataset.from_univariate(np.linspace(-6, 6, 61))
    np.testing.assert_array_equal(assign_labels(data, m, "density").labels, assign_labels(data, m, "posterior").labels)


def test_k1_model_labels_everything_zero():
    m = _gauss_model([1.0], [0.0], [1.0])
    assignment = assign_labels(Dataset.from_univariate([-5.0, 0.0, 7.0]), m)
    assert assignment.labels.tolist() == [0, 0, 0]
    assert assignment.proportions().tolist() == [1.0]


def test_frequency_table_labels_follow_expansion():
    m = MixtureModel(family="poisson", weights=[0.5, 0.5], components=[PoissonParams(lam=1.0), PoissonParams(lam=10.0)])
    data = Dataset.from_frequency_table([0, 12], [2, 3])
    assert assign_labels(data, m).labels.tolist() == [0, 0, 1, 1, 1]


def test_family_mismatch():
    m = MixtureModel(family="poisson", weights=[1.0], components=[PoissonParams(lam=1.0)])
    with pytest.raises(FamilyMismatchError):
        assign_labels(Dataset.from_univariate([0.5]), m)


@pytest.mark.parametrize("rule", ["density", "posterior"])
def test_well_separated_components_recovered(rule):
    spec = SynthSpec(
        family="gaussian",
        subsets=[SubsetSpec(params={"mu": 0.0, "sigma2": 1.0}, size=500), SubsetSpec(params={"mu": 12.0, "sigma2": 1.0}, size=500)],
    )
    values, truth = draw_sample(spec, make_rng(17))
    m = _gauss_model([0.5, 0.5], [0.0, 12.0], [1.0, 1.0])
    labels = assign_labels(Dataset.from_univariate(values), m, rule).labels
    assert np.mean(labels == truth) >= 0.99
