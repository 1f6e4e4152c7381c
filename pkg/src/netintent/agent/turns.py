"""Turn grammar: every model reply must be one JSON object with exactly one
of the keys thought, tool_call, or final_answer.

Parsing tolerates surrounding prose and fenced code blocks by extracting the
first parseable top-level JSON object; anything else is a structured failure
the loop feeds back as corrective guidance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

VARIANT_KEYS = ("thought", "tool_call", "final_answer")

_decoder = json.JSONDecoder()


@dataclass(frozen=True)
class AgentTurn:
    kind: str  # one of VARIANT_KEYS
    raw_llm_text: str
    turn_index: int = 0
    text: str | None = None  # thought / final_answer payload
    tool_name: str | None = None
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"kind": self.kind, "turn_index": self.turn_index}
        if self.kind == "tool_call":
            obj["tool_name"] = self.tool_name
            obj["arguments"] = self.arguments
        else:
            obj["text"] = self.text
        obj["raw_llm_text"] = self.raw_llm_text
        return obj


@dataclass(frozen=True)
class ParseFailure:
    reason: str
    raw_llm_text: str

    def corrective_feedback(self) -> str:
        return (
            f"Response rejected: {self.reason}. Respond with exactly one JSON object "
            "containing exactly one of the keys \"thought\", \"tool_call\", or "
            "\"final_answer\". A tool_call value must be an object with \"name\" and "
            "\"arguments\"."
        )


def _extract_first_object(raw: str) -> Any | None:
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _end = _decoder.raw_decode(raw, idx)
        except json.JSONDecodeError:
            idx = raw.find("{", idx + 1)
            continue
        return obj
    return None


def parse_turn(raw: str, turn_index: int = 0) -> AgentTurn | ParseFailure:
    if not isinstance(raw, str) or not raw.strip():
        return ParseFailure("empty response", raw if isinstance(raw, str) else "")
    obj = _extract_first_object(raw)
    if obj is None or not isinstance(obj, dict):
        return ParseFailure("no JSON object found", raw)
    present = [k for k in VARIANT_KEYS if k in obj]
    if len(present) == 0:
        return ParseFailure(
            "JSON object has none of the keys thought/tool_call/final_answer", raw
        )
    if len(present) > 1:
        return ParseFailure(f"JSON object has multiple variant keys: {present}", raw)
    kind = present[0]
    value = obj[kind]
    if kind in ("thought", "final_answer"):
        if not isinstance(value, str):
            return ParseFailure(f"{kind} value must be a string", raw)
        return AgentTurn(kind=kind, raw_llm_text=raw, turn_index=turn_index, text=value)
    if not isinstance(value, dict):
        return ParseFailure("tool_call value must be an object", raw)
    name = value.get("name")
    if not isinstance(name, str) or not name:
        return ParseFailure("tool_call missing name", raw)
    arguments = value.get("arguments", {})
    if not isinstance(arguments, dict):
        return ParseFailure("tool_call arguments must be an object", raw)
    return AgentTurn(
        kind="tool_call",
        raw_llm_text=raw,
        turn_index=turn_index,
        tool_name=name,
        arguments=arguments,
    )
