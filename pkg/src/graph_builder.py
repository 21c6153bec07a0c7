# src/graph_builder.py
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from langchain_core.runnables import RunnableConfig
from langgraph.graph import END, StateGraph

from src.runner import Runtime, execute_stage
from src.state import CommandState, ensure_defaults, log_event

DEFAULT_WORKFLOW_PATH = Path(__file__).resolve().parent.parent / "configs" / "workflow.json"
WORKFLOW_ENV_VAR = "MIXFIT_WORKFLOW"


def load_workflow(workflow_path: str | Path | None = None) -> Dict[str, Any]:
    """
    Explicit path, else $MIXFIT_WORKFLOW, else the packaged configs/workflow.json.
    """
    path = Path(workflow_path or os.getenv(WORKFLOW_ENV_VAR) or DEFAULT_WORKFLOW_PATH)
    if not path.exists():
        raise FileNotFoundError(f"workflow.json not found at: {path.resolve()}")
    return json.loads(path.read_text(encoding="utf-8"))


def _index_stages(pipeline: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    stage_map: Dict[str, Dict[str, Any]] = {}
    for s in pipeline.get("stages", []):
        sid = s.get("id")
        if not sid:
            raise ValueError("Each stage must have an 'id'")
        if sid in stage_map:
            raise ValueError(f"Duplicate stage id: {sid}")
        stage_map[sid] = s
    if not stage_map:
        raise ValueError("pipeline must have non-empty 'stages'")
    return stage_map


def _branch_matches(when: str, state: CommandState) -> bool:
    if when == "else":
        return True
    if when.startswith("flag:"):
        return bool(state.get("options", {}).get(when[len("flag:"):]))
    raise ValueError(f"Unsupported branch condition: {when!r}")


def _make_router(stage_id: str, cfg: Dict[str, Any]) -> Callable[[CommandState], str]:
    """
    Route to the first matching branch (or `next`); any failed state goes to END.
    """
    branches: List[Dict[str, Any]] = cfg.get("branches", [])
    nxt: Optional[str] = cfg.get("next")

    def _route(state: CommandState) -> str:
        if state.get("status") == "FAILED":
            return END
        if cfg.get("terminal") is True:
            return END
        for branch in branches:
            if _branch_matches(branch["when"], state):
                log_event(
                    state,
                    stage=stage_id,
                    event="route_decision",
                    message=f"Routing to {branch['next']} ({branch['when']})",
                    when=branch["when"],
                    target=branch["next"],
                )
                return branch["next"]
        return nxt or END

    return _route


def make_stage_node(stage_id: str):
    def _node(state: CommandState, config: RunnableConfig) -> CommandState:
        state = ensure_defaults(state)
        state["current_stage"] = stage_id
        if state.get("status") in (None, "NEW"):
            state["status"] = "IN_PROGRESS"

        log_event(state, stage=stage_id, event="stage_start", message=f"Starting stage {stage_id}")

        runtime: Optional[Runtime] = None
        if config and "configurable" in config:
            runtime = config["configurable"].get("runtime")

        if runtime is None:
            log_event(state, stage=stage_id, event="warning", message="No runtime provided; no-op stage")
            log_event(state, stage=stage_id, event="stage_end", message=f"Completed stage {stage_id} (no-op)")
            return state

        try:
            state = execute_stage(runtime, stage_id, state, config)
        except Exception as exc:
            state["status"] = "FAILED"
            state["error"] = exc
            log_event(state, stage=stage_id, event="stage_failed", message=str(exc), error_type=type(exc).__name__)
            return state

        log_event(state, stage=stage_id, event="stage_end", message=f"Completed stage {stage_id}")
        return state

    return _node


def build_graph(workflow: Dict[str, Any], command: str) -> Any:
    """
    Compile the StateGraph for one command's pipeline.
    """
    pipelines = workflow.get("pipelines", {})
    if command not in pipelines:
        raise ValueError(f"No pipeline for command '{command}' in workflow.json")
    pipeline = pipelines[command]
    stage_map = _index_stages(pipeline)

    graph = StateGraph(CommandState)
    for stage_id in stage_map:
        graph.add_node(stage_id, make_stage_node(stage_id))

    entry = pipeline.get("entry") or next(iter(stage_map))
    graph.set_entry_point(entry)

    for stage_id, cfg in stage_map.items():
        targets = {b["next"] for b in cfg.get("branches", [])}
        if cfg.get("next"):
            targets.add(cfg["next"])
        unknown = targets - set(stage_map)
        if unknown:
            raise ValueError(f"Stage {stage_id} routes to unknown stages {sorted(unknown)}")
        path_map = {t: t for t in targets}
        path_map[END] = END
        graph.add_conditional_edges(stage_id, _make_router(stage_id, cfg), path_map)

    return graph.compile()
