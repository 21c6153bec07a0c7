# src/state.py
"""
Shared state schema for the mixfit command pipelines.

Design goals:
- One dict-like state carried across all LangGraph stage nodes of a command.
- Structured log events (pydantic) instead of free-text logging, shared by the
  CLI stages and the EM engine.
- Heavy numerical values (datasets, fitted models) live in the state as Python
  objects; only the log events are guaranteed JSON-serializable.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional, TypedDict

from pydantic import BaseModel, Field


# -----------------------------
# Structured log events
# -----------------------------
class LogEvent(BaseModel):
    """
    One structured log line emitted by a stage, an ability or the EM engine.
    """
    ts: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    stage: str
    event: str  # e.g. "stage_start", "ability_call", "restart_end", "degenerate_component"
    message: str

    # Structured metadata for debugging/auditing
    data: Dict[str, Any] = Field(default_factory=dict)


# -----------------------------
# Command state (LangGraph-friendly)
# -----------------------------
CommandName = Literal["synth", "fit", "cluster", "eval", "selfcheck"]
CommandStatus = Literal["NEW", "IN_PROGRESS", "COMPLETED", "FAILED"]


class CommandState(TypedDict, total=False):
    """
    The state object carried across the stage nodes of one CLI command.

    total=False: stages fill fields in as they execute.
    """

    # --- Identity / input ---
    command: CommandName
    options: Dict[str, Any]  # parsed command-line options merged over config defaults

    # --- Data / model ---
    dataset: Any  # src.dataset.Dataset
    model: Any  # src.distributions.MixtureModel
    fit_result: Any  # src.em_engine.FitResult
    baseline: Any  # K=1 MixtureModel from mle_single
    order: List[int]  # output component order applied to model and trace

    # --- synth outputs ---
    sample: Dict[str, Any]  # {"values", "labels", "frequency_table"}

    # --- cluster / eval outputs ---
    labels: Any  # src.clustering.LabelAssignment
    eval_points: Any  # numpy array of evaluation points
    density_table: Any  # pandas DataFrame

    # --- selfcheck ---
    checks: List[Dict[str, Any]]

    # --- Outputs written ---
    outputs: Dict[str, str]
    summary: List[str]

    # --- Workflow meta ---
    status: CommandStatus
    current_stage: str
    exit_code: int
    error: Any  # exception that stopped the pipeline, if any

    # --- Audit logs ---
    logs: List[Dict[str, Any]]  # serialized LogEvent models


# -----------------------------
# Helper utilities
# -----------------------------
def record_event(sink: List[Dict[str, Any]], stage: str, event: str, message: str, **data: Any) -> None:
    """
    Append a serialized LogEvent to any list (engine results, command state).
    """
    sink.append(LogEvent(stage=stage, event=event, message=message, data=data).model_dump())


def log_event(state: CommandState, stage: str, event: str, message: str, **data: Any) -> None:
    """
    Append a structured log event into the command state.
    """
    if "logs" not in state:
        state["logs"] = []
    record_event(state["logs"], stage, event, message, **data)


def ensure_defaults(state: CommandState) -> CommandState:
    """
    Ensure state has minimal defaults so nodes can safely append logs and set status.
    """
    state.setdefault("status", "NEW")
    state.setdefault("logs", [])
    state.setdefault("options", {})
    state.setdefault("outputs", {})
    state.setdefault("summary", [])
    state.setdefault("exit_code", 0)
    return state


def format_event(index: int, event: Dict[str, Any]) -> str:
    return f"{index:03d}. [{event.get('stage')}] {event.get('event')} - {event.get('message')}"


def merge_events(state: CommandState, events: Optional[List[Dict[str, Any]]]) -> None:
    state.setdefault("logs", [])
    state["logs"].extend(events or [])
