# src/abilities/data_tools.py
"""
DATA provider: synthetic samples and observation files.

Every tool takes the payload built by the runner (options + current state) and
returns a dict of state updates. Special result keys:
- "events":        structured log events to merge into state["logs"]
- "summary_lines": human-readable lines appended to state["summary"]
- "outputs":       {name: path} merged into state["outputs"]
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List

import numpy as np

from src import presets
from src.errors import InvalidParameterError
from src.initialization import make_rng
from src.persistence.data_files import load_dataset, write_freq_table, write_labels, write_raw_csv
from src.state import record_event
from src.synthesis import draw_sample, load_synth_spec, preset_spec

Payload = Dict[str, Any]


def draw_synthetic_sample(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    preset, spec_path = opts.get("preset"), opts.get("spec")
    if (preset is None) == (spec_path is None):
        raise InvalidParameterError("synth needs exactly one of --preset or --spec")
    seed = int(opts.get("seed", 0))

    if preset == "paper-poisson":
        values, counts = presets.poisson_table_arrays()
        return {
            "sample": {"family": "poisson", "frequency_table": (values, counts), "values": None, "labels": None},
            "summary_lines": [f"preset paper-poisson: {len(values)} values, n={sum(counts)}"],
        }

    spec = preset_spec(preset) if preset is not None else load_synth_spec(spec_path)
    values, labels = draw_sample(spec, make_rng(seed))
    if spec.family == "poisson":
        values = values.astype(np.int64)
    source = f"preset {preset}" if preset is not None else f"spec {spec_path}"
    return {
        "sample": {"family": spec.family, "frequency_table": None, "values": values, "labels": labels},
        "summary_lines": [f"{source}: n={values.shape[0]} ({spec.family}, seed {seed})"],
    }


def write_data_file(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    sample = payload.get("sample") or {}
    out = opts.get("out")
    if not out:
        raise InvalidParameterError("synth needs --out")
    events: List[Dict[str, Any]] = []
    outputs: Dict[str, str] = {}

    if sample.get("frequency_table") is not None:
        values, counts = sample["frequency_table"]
        outputs["data"] = str(write_freq_table(out, values, counts))
    else:
        outputs["data"] = str(write_raw_csv(out, sample["values"]))

    labels_path = opts.get("labels")
    if labels_path:
        if sample.get("labels") is None:
            record_event(events, payload.get("stage", "WRITE_DATA"), "warning",
                         "This sample has no generating labels; --labels ignored")
        else:
            outputs["labels"] = str(write_labels(labels_path, sample["labels"]))
    return {"outputs": outputs, "events": events}


def read_data_file(payload: Payload) -> Dict[str, Any]:
    opts = payload.get("options", {})
    path = opts.get("data")
    if not path:
        raise InvalidParameterError("--data is required")
    model = payload.get("model")
    family = opts.get("family") or (model.family if model is not None else None)
    if family is None:
        raise InvalidParameterError("--family is required")
    data_file = load_dataset(path, opts.get("data_format") or "raw", family)
    ds = data_file.dataset
    events: List[Dict[str, Any]] = []
    record_event(events, payload.get("stage", "LOAD_DATA"), "data_loaded", f"Loaded {ds.n} observations from {path}",
                 kind=ds.kind, n=ds.n, rows=ds.rows, dim=ds.dim, format=data_file.format)
    return {"dataset": ds, "events": events}


TOOLS: Dict[str, Callable[[Payload], Dict[str, Any]]] = {
    "draw_synthetic_sample": draw_synthetic_sample,
    "write_data_file": write_data_file,
    "read_data_file": read_data_file,
}


def call_tool(tool_name: str, payload: Payload) -> Dict[str, Any]:
    if tool_name not in TOOLS:
        raise ValueError(f"Unknown DATA tool: {tool_name}")
    return TOOLS[tool_name](payload)
