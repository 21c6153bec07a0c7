# src/abilities/client.py
"""
Ability client: routes (provider, tool, payload) calls to the in-process
tool registries.
"""

from __future__ import annotations

from typing import Any, Dict, Literal

from src.abilities import check_tools, data_tools, eval_tools, fit_tools

ProviderName = Literal["DATA", "FIT", "EVAL", "CHECK"]

_PROVIDERS = {
    "DATA": data_tools,
    "FIT": fit_tools,
    "EVAL": eval_tools,
    "CHECK": check_tools,
}


class LocalAbilityClient:
    """
    Call tools by (provider, tool_name, payload).
    """

    def call(self, provider: ProviderName, tool: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        if provider not in _PROVIDERS:
            raise ValueError(f"Unknown provider: {provider}")
        return _PROVIDERS[provider].call_tool(tool, payload)
