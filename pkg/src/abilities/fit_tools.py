# src/abilities/fit_tools.py
"""
FIT provider: EM fitting, the K=1 baseline, component ordering and the fit
artefacts (ModelFile, trace CSV, baseline ModelFile).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, List

from src.distributions import MixtureModel, component_summary
from src.em_engine import FitConfig, FitResult, em_fit, log_likelihood, mle_single
from src.errors import InvalidParameterError
from src.persistence import model_store
from src.persistence.data_files import write_table

Payload = Dict[str, Any]

FIT_OPTION_KEYS = ("k", "family", "tol", "max_iters", "restarts", "seed", "degenerate_policy", "threads")


def baseline_path(out: str | Path) -> Path:
    """model.json -> model.mle.json"""
    p = Path(out)
    return p.with_name(f"{p.stem}.mle.json")


def _model_lines(model: MixtureModel) -> List[str]:
    return [
        f"  component {k + 1}: w={w:.4g} {component_summary(c)}"
        for k, (w, c) in enumerate(zip(model.weights, model.components))
    ]


def run_em(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    config = FitConfig(**{key: opts[key] for key in FIT_OPTION_KEYS if opts.get(key) is not None})
    init = None
    if opts.get("init"):
        init = model_store.read_model_file(opts["init"]).to_model()

    result = em_fit(payload["dataset"], config, init=init)
    lines = [
        f"{config.family} K={config.k}: loglik={result.log_likelihood:.10g} iters={result.iters} "
        f"converged={result.converged} best_of={result.best_of}/{len(result.restart_log_likelihoods)}"
    ]
    return {
        "fit_result": result,
        "model": result.model,
        "order": list(range(result.model.k)),
        "events": result.logs,
        "summary_lines": lines,
    }


def fit_single_mle(payload: Payload) -> Dict[str, Any]:
    data = payload["dataset"]
    family = payload["options"]["family"]
    baseline = mle_single(data, family)
    ll = log_likelihood(data, baseline)
    return {
        "baseline": baseline,
        "summary_lines": [f"baseline K=1 MLE: loglik={ll:.10g} {component_summary(baseline.components[0])}"],
    }


def sort_components(payload: Payload) -> Dict[str, Any]:
    model: MixtureModel = payload["model"]
    order = model.sort_order()
    return {"order": order, "model": model.permuted(order)}


def write_model_file(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    out = opts.get("out")
    if not out:
        raise InvalidParameterError("fit needs --out")
    result: FitResult = payload["fit_result"]
    model: MixtureModel = payload["model"]
    doc = model_store.ModelFile.from_fit(result, model, sorted_output=not opts.get("no_sort"))
    path = model_store.write_model_file(out, doc)
    return {"outputs": {"model": str(path)}, "summary_lines": _model_lines(model)}


def write_trace_file(payload: Payload) -> Dict[str, Any]:
    trace_out = payload.get("options", {}).get("trace")
    if not trace_out:
        return {}
    result: FitResult = payload["fit_result"]
    table = model_store.trace_table(result.trace, payload.get("order"))
    return {"outputs": {"trace": str(write_table(trace_out, table))}}


def write_baseline_file(payload: Payload) -> Dict[str, Any]:
    baseline = payload.get("baseline")
    if baseline is None:
        return {}
    data = payload["dataset"]
    doc = model_store.ModelFile.from_model(
        baseline,
        {"iters": 0, "converged": True, "final_log_likelihood": log_likelihood(data, baseline)},
    )
    path = model_store.write_model_file(baseline_path(payload["options"]["out"]), doc)
    return {"outputs": {"baseline": str(path)}}


TOOLS: Dict[str, Callable[[Payload], Dict[str, Any]]] = {
    "run_em": run_em,
    "fit_single_mle": fit_single_mle,
    "sort_components": sort_components,
    "write_model_file": write_model_file,
    "write_trace_file": write_trace_file,
    "write_baseline_file": write_baseline_file,
}


def call_tool(tool_name: str, payload: Payload) -> Dict[str, Any]:
    if tool_name not in TOOLS:
        raise ValueError(f"Unknown FIT tool: {tool_name}")
    return TOOLS[tool_name](payload)
