# src/runner.py
"""
Runtime stage executor for the mixfit command pipelines.

- Read a command's stages + abilities from configs/workflow.json
- Execute stage abilities sequentially through the ability client
- Apply each ability result to the shared CommandState

graph_builder.py wraps execute_stage(runtime, stage_id, state, config) into
one LangGraph node per stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from langchain_core.runnables import RunnableConfig

from src.abilities.client import LocalAbilityClient
from src.state import CommandState, ensure_defaults, log_event, merge_events


@dataclass
class Runtime:
    """
    Holds the workflow config, the command being run and the ability client.
    """
    workflow: Dict[str, Any]
    command: str
    client: LocalAbilityClient = field(default_factory=LocalAbilityClient)


def make_runtime(workflow: Dict[str, Any], command: str) -> Runtime:
    if command not in workflow.get("pipelines", {}):
        raise ValueError(f"No pipeline for command '{command}' in workflow.json")
    return Runtime(workflow=workflow, command=command)


def command_defaults(workflow: Dict[str, Any], command: str) -> Dict[str, Any]:
    """Option defaults for a command from the `globals` block."""
    return dict(workflow.get("globals", {}).get(command, {}))


# -----------------------------
# Main stage executor (called by graph_builder node wrapper)
# -----------------------------
def execute_stage(runtime: Runtime, stage_id: str, state: CommandState, config: Optional[RunnableConfig] = None) -> CommandState:
    """
    Execute one stage of the runtime's pipeline: run its abilities in order and
    update state fields.
    """
    state = ensure_defaults(state)

    pipeline = runtime.workflow["pipelines"][runtime.command]
    abilities_cfg = runtime.workflow.get("abilities", {})

    stage_def = next((s for s in pipeline.get("stages", []) if s.get("id") == stage_id), None)
    if not stage_def:
        raise ValueError(f"Stage '{stage_id}' not found in pipeline '{runtime.command}'")

    stage_abilities: List[str] = stage_def.get("abilities", [])
    for ability_name in stage_abilities:
        if ability_name not in abilities_cfg:
            raise ValueError(f"Ability '{ability_name}' not defined in workflow.json abilities")

        ability = abilities_cfg[ability_name]
        provider = ability.get("provider")
        tool = ability.get("tool")

        tool_payload = _build_tool_payload(stage_id, state)

        log_event(
            state,
            stage=stage_id,
            event="ability_call",
            message=f"Calling {provider}.{tool}",
            provider=provider,
            tool=tool,
            ability=ability_name,
        )

        result = runtime.client.call(provider, tool, tool_payload)

        log_event(
            state,
            stage=stage_id,
            event="ability_result",
            message=f"Result received from {provider}.{tool}",
            result_keys=sorted(result.keys()),
        )

        _apply_result_to_state(state, result)

    return state


def _build_tool_payload(stage_id: str, state: CommandState) -> Dict[str, Any]:
    payload: Dict[str, Any] = dict(state)
    payload["stage"] = stage_id
    return payload


def _apply_result_to_state(state: CommandState, result: Dict[str, Any]) -> None:
    for key, value in result.items():
        if key == "events":
            merge_events(state, value)
        elif key == "summary_lines":
            state.setdefault("summary", []).extend(value)
        elif key == "outputs":
            state.setdefault("outputs", {}).update(value)
        else:
            state[key] = value  # type: ignore[literal-required]


# -----------------------------
# Whole-command entry point
# -----------------------------
def run_command(workflow: Dict[str, Any], command: str, options: Dict[str, Any]) -> CommandState:
    """
    Build the command's graph and run it to completion.

    Failures do not raise: the failing stage stores the exception in
    state["error"] and the graph routes to END.
    """
    from src.graph_builder import build_graph

    runtime = make_runtime(workflow, command)
    app = build_graph(workflow, command)
    state: CommandState = {"command": command, "options": options, "status": "NEW", "logs": []}  # type: ignore[typeddict-item]
    out = app.invoke(state, config={"configurable": {"runtime": runtime}})
    if out.get("status") == "IN_PROGRESS":
        out["status"] = "COMPLETED"
    return out
