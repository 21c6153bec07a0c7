"""
Embedded oracle suite behind `mixfit selfcheck`.

Each check is independent, returns (passed, detail) and never raises; an
exception inside a check counts as a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from src import presets
from src.dataset import Dataset
from src.distributions import (
    Gaussian1DParams,
    MixtureModel,
    MVNParams,
    PoissonParams,
    gaussian_log_pdf,
    mixture_log_pdf,
    mvn_log_pdf,
    poisson_log_pmf,
    two_component_responsibility,
)
from src.em_engine import FitConfig, e_step, em_fit, m_step_gaussian1d, update_weights

CheckFn = Callable[[], Tuple[bool, str]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status}" + (f" ({self.detail})" if self.detail else "")


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def check_gaussian_standard_normal() -> Tuple[bool, str]:
    got = gaussian_log_pdf(0.0, Gaussian1DParams(mu=0.0, sigma2=1.0))
    want = -0.5 * math.log(2.0 * math.pi)
    return _close(got, want, 1e-12), f"got {got:.12g}, want {want:.12g}"


def check_poisson_closed_form() -> Tuple[bool, str]:
    got = poisson_log_pmf(3, PoissonParams(lam=2.0))
    want = -2.0 + 3.0 * math.log(2.0) - math.log(6.0)
    return _close(got, want, 1e-12), f"got {got:.12g}, want {want:.12g}"


def check_mvn_matches_univariate() -> Tuple[bool, str]:
    worst = 0.0
    for x, mu, s2 in ((0.3, -1.0, 2.5), (7.0, 0.0, 0.01), (-4.0, 2.0, 9.0)):
        a = mvn_log_pdf([x], MVNParams(mu=[mu], sigma=[[s2]]))
        b = gaussian_log_pdf(x, Gaussian1DParams(mu=mu, sigma2=s2))
        worst = max(worst, abs(a - b))
    return worst <= 1e-12, f"max difference {worst:.3g}"


def check_mixture_direct_sum() -> Tuple[bool, str]:
    model = MixtureModel(
        family="gaussian",
        weights=[0.3, 0.7],
        components=[Gaussian1DParams(mu=0.0, sigma2=1.0), Gaussian1DParams(mu=4.0, sigma2=1.0)],
    )
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)  # noqa: E731
    want = math.log(0.3 * phi(0.0) + 0.7 * phi(-4.0))
    got = mixture_log_pdf(0.0, model)
    return _close(got, want, 1e-12), f"got {got:.12g}, want {want:.12g}"


def check_em_iteration_by_hand() -> Tuple[bool, str]:
    """One EM iteration on four points, K=2, against direct Bayes ratios and weighted moments."""
    x = [-1.0, 0.0, 3.0, 4.0]
    w, mu, s2 = [0.4, 0.6], [0.0, 3.0], [1.0, 1.0]
    dens = lambda v, m, s: math.exp(-(v - m) ** 2 / (2 * s)) / math.sqrt(2 * math.pi * s)  # noqa: E731
    gamma = []
    for v in x:
        a, b = w[0] * dens(v, mu[0], s2[0]), w[1] * dens(v, mu[1], s2[1])
        gamma.append((a / (a + b), b / (a + b)))
    want_mu, want_s2, want_w = [], [], []
    for k in range(2):
        nk = sum(g[k] for g in gamma)
        m = sum(g[k] * v for g, v in zip(gamma, x)) / nk
        want_mu.append(m)
        want_s2.append(sum(g[k] * (v - m) ** 2 for g, v in zip(gamma, x)) / nk)
        want_w.append(nk / len(x))

    data = Dataset.from_univariate(x)
    model = MixtureModel(
        family="gaussian",
        weights=w,
        components=[Gaussian1DParams(mu=m, sigma2=s) for m, s in zip(mu, s2)],
    )
    r = e_step(data, model)
    comps = m_step_gaussian1d(data, r)
    got_w = update_weights(r)
    errors = [
        float(np.max(np.abs(r.gamma - np.asarray(gamma)))),
        max(abs(c.mu - m) for c, m in zip(comps, want_mu)),
        max(abs(c.sigma2 - s) for c, s in zip(comps, want_s2)),
        float(np.max(np.abs(got_w - np.asarray(want_w)))),
    ]
    return max(errors) <= 1e-10, f"max error {max(errors):.3g}"


def check_two_component_formula() -> Tuple[bool, str]:
    model = MixtureModel(
        family="poisson",
        weights=[0.25, 0.75],
        components=[PoissonParams(lam=1.5), PoissonParams(lam=9.0)],
    )
    xs = np.arange(0, 25, dtype=float)
    data = Dataset.from_frequency_table(xs, np.ones_like(xs))
    engine = e_step(data, model).gamma[:, 0]
    formula = two_component_responsibility(xs, model)
    worst = float(np.max(np.abs(engine - formula)))
    return worst <= 1e-12, f"max difference {worst:.3g}"


def check_poisson_table_total() -> Tuple[bool, str]:
    total = sum(c for _, c in presets.PAPER_POISSON_TABLE)
    return total == presets.PAPER_POISSON_N, f"n={total}"


def check_poisson_table_reproduction() -> Tuple[bool, str]:
    values, counts = presets.poisson_table_arrays()
    data = Dataset.from_frequency_table(values, counts)
    result = em_fit(data, FitConfig(k=3, family="poisson", tol=1e-8, restarts=10, seed=0))
    model = result.model.permuted(result.model.sort_order())
    lam = [c.lam for c in model.components]  # type: ignore[union-attr]
    want_lam = presets.PAPER_POISSON_FIT["lambda"]
    want_w = presets.PAPER_POISSON_FIT["weights"]
    ok = all(_close(a, b, 0.1) for a, b in zip(lam, want_lam)) and all(
        _close(a, b, 0.02) for a, b in zip(model.weights, want_w)
    )
    detail = "lambda=(" + ", ".join(f"{v:.4g}" for v in lam) + ") w=(" + ", ".join(f"{v:.4g}" for v in model.weights) + ")"
    return ok, detail


def check_poisson_table_monotone() -> Tuple[bool, str]:
    values, counts = presets.poisson_table_arrays()
    data = Dataset.from_frequency_table(values, counts)
    result = em_fit(data, FitConfig(k=3, family="poisson", restarts=1, seed=1))
    lls = [t.log_likelihood for t in result.trace]
    bad = sum(1 for a, b in zip(lls, lls[1:]) if b < a - 1e-9 * abs(a))
    return bad == 0, f"{bad} decreases over {len(lls)} iterations"


CHECKS: List[Tuple[str, CheckFn]] = [
    ("gaussian_log_pdf_standard_normal", check_gaussian_standard_normal),
    ("poisson_log_pmf_closed_form", check_poisson_closed_form),
    ("mvn_log_pdf_matches_univariate", check_mvn_matches_univariate),
    ("mixture_log_pdf_direct_sum", check_mixture_direct_sum),
    ("em_iteration_hand_computed", check_em_iteration_by_hand),
    ("two_component_responsibility", check_two_component_formula),
    ("poisson_table_total", check_poisson_table_total),
    ("poisson_table_reproduction", check_poisson_table_reproduction),
    ("poisson_table_monotone_trace", check_poisson_table_monotone),
]


def run_checks() -> List[CheckResult]:
    results: List[CheckResult] = []
    for name, fn in CHECKS:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results
