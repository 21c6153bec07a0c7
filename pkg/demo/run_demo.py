# demo/run_demo.py
"""
End-to-end demo runner.

What it demonstrates, for both simulation studies:
1) synth   writes the sample (three Gaussian subsets / the published count table)
2) fit     K=3 with 10 restarts, trace CSV and (Poisson) the K=1 baseline
3) eval    weighted component and mixture densities on a grid, ready to plot
4) cluster model-based labels for every observation

Run:
    python demo/run_demo.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Dict

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.graph_builder import load_workflow  # noqa: E402
from src.runner import command_defaults, run_command  # noqa: E402

OUT_DIR = Path("demo") / "output"


def pretty_print_logs(state: dict) -> None:
    logs = state.get("logs", [])
    print("\n================= LOGS =================")
    for i, e in enumerate(logs, start=1):
        stage = e.get("stage")
        event = e.get("event")
        msg = e.get("message")
        print(f"{i:03d}. [{stage}] {event} - {msg}")
    print("=======================================\n")


def save_demo_artifacts(prefix: str, state: dict) -> None:
    """
    Save the command summary + logs to demo/output/ as JSON files so the demo is reviewable.
    """
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    summary = {
        "command": state.get("command"),
        "status": state.get("status"),
        "outputs": state.get("outputs", {}),
        "summary": state.get("summary", []),
    }
    (OUT_DIR / f"{prefix}_summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    (OUT_DIR / f"{prefix}_logs.json").write_text(json.dumps(state.get("logs", []), indent=2, default=str), encoding="utf-8")
    print(f"Saved: {OUT_DIR}/{prefix}_summary.json")
    print(f"Saved: {OUT_DIR}/{prefix}_logs.json")


def run(workflow: Dict[str, Any], command: str, prefix: str, **options: Any) -> dict:
    state = run_command(workflow, command, {**command_defaults(workflow, command), **options})
    print(f"\n=== {prefix}: {command} -> {state.get('status')} ===")
    for line in state.get("summary", []):
        print(line)
    if state.get("error") is not None:
        pretty_print_logs(state)
        raise SystemExit(f"{command} failed: {state['error']}")
    save_demo_artifacts(prefix, state)
    return state


def gaussian_study(workflow: Dict[str, Any]) -> None:
    data = str(OUT_DIR / "gaussian_data.csv")
    model = str(OUT_DIR / "gaussian_model.json")
    run(workflow, "synth", "gaussian_synth", preset="paper-gaussian", seed=2024, out=data,
        labels=str(OUT_DIR / "gaussian_true_labels.csv"))
    fit = run(workflow, "fit", "gaussian_fit", data=data, family="gaussian", k=3, out=model,
              trace=str(OUT_DIR / "gaussian_trace.csv"))
    pretty_print_logs(fit)
    run(workflow, "eval", "gaussian_eval", model=model, grid="-25:30:1100", out=str(OUT_DIR / "gaussian_density.csv"))
    run(workflow, "cluster", "gaussian_cluster", data=data, model=model, out=str(OUT_DIR / "gaussian_labels.csv"))


def poisson_study(workflow: Dict[str, Any]) -> None:
    data = str(OUT_DIR / "poisson_table.csv")
    model = str(OUT_DIR / "poisson_model.json")
    run(workflow, "synth", "poisson_synth", preset="paper-poisson", out=data)
    fit = run(workflow, "fit", "poisson_fit", data=data, data_format="freq", family="poisson", k=3, out=model,
              trace=str(OUT_DIR / "poisson_trace.csv"), baseline_mle=True)
    pretty_print_logs(fit)
    run(workflow, "eval", "poisson_eval", model=model, grid="0:30:30", out=str(OUT_DIR / "poisson_density.csv"))
    run(workflow, "cluster", "poisson_cluster", data=data, data_format="freq", model=model,
        out=str(OUT_DIR / "poisson_labels.csv"))


def main() -> None:
    workflow = load_workflow()
    gaussian_study(workflow)
    poisson_study(workflow)


if __name__ == "__main__":
    main()
