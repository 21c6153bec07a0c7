# src/abilities/check_tools.py
"""
CHECK provider: the embedded self-check suite.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List

from src.selfcheck import run_checks
from src.state import record_event

Payload = Dict[str, Any]


def run_selfcheck(payload: Payload) -> Dict[str, Any]:
    results = run_checks()
    events: List[Dict[str, Any]] = []
    for r in results:
        record_event(events, payload.get("stage", "RUN_CHECKS"), "check", r.line(), name=r.name, passed=r.passed)
    failed = [r.name for r in results if not r.passed]
    lines = [r.line() for r in results]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return {
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        "summary_lines": lines,
        "exit_code": 1 if failed else 0,
        "events": events,
    }


TOOLS: Dict[str, Callable[[Payload], Dict[str, Any]]] = {
    "run_selfcheck": run_selfcheck,
}


def call_tool(tool_name: str, payload: Payload) -> Dict[str, Any]:
    if tool_name not in TOOLS:
        raise ValueError(f"Unknown CHECK tool: {tool_name}")
    return TOOLS[tool_name](payload)
