"""LLM backends: a live HTTP chat-completion client and a scripted replay.

The scripted backend makes every agent test runnable with no model at all:
it serves an ordered list of canned raw responses, each optionally gated on
a substring of the latest observation, and falls back to a final answer when
exhausted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..errors import BackendError, ValidationError

Message = dict[str, str]

FALLBACK_FINAL = json.dumps(
    {"final_answer": "Script exhausted: no further actions were defined for this intent."}
)


class ScriptedBackend:
    """Replays canned responses in order.

    Entry shape: {"text": "<raw model output>", "when": "<optional substring>"}.
    On each completion request the cursor scans forward to the first entry
    whose `when` is absent or contained in the latest observation message;
    skipped entries are consumed. Exhaustion yields a fallback final answer.
    """

    def __init__(self, entries: list[dict[str, Any]]):
        for i, entry in enumerate(entries):
            if "text" not in entry or not isinstance(entry["text"], str):
                raise ValidationError(f"scripted entry {i} missing string 'text'")
        self.entries = entries
        self.cursor = 0

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict):
            entries = data.get("responses", [])
        else:
            entries = data
        if not isinstance(entries, list):
            raise ValidationError(f"scripted backend file {path}: expected a response list")
        return cls(entries)

    @staticmethod
    def _last_observation(messages: list[Message]) -> str:
        for message in reversed(messages):
            if message.get("role") == "user":
                return message.get("content", "")
        return ""

    def complete(self, messages: list[Message]) -> str:
        last_obs = self._last_observation(messages)
        while self.cursor < len(self.entries):
            entry = self.entries[self.cursor]
            self.cursor += 1
            condition = entry.get("when")
            if condition is None or condition in last_obs:
                return entry["text"]
        return FALLBACK_FINAL


class HttpChatBackend:
    """Chat-completion-style HTTP backend: {model, temperature, messages} in,
    first choice text out. Interoperates with common local LLM servers."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.1,
        timeout_s: float = 60.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout_s = timeout_s

    def complete(self, messages: list[Message]) -> str:
        import requests

        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": messages,
        }
        last_error: Exception | None = None
        for _attempt in range(2):  # one retry on transport failure
            try:
                resp = requests.post(self.endpoint, json=payload, timeout=self.timeout_s)
                resp.raise_for_status()
                body = resp.json()
                return _extract_choice_text(body)
            except Exception as exc:
                last_error = exc
        raise BackendError(f"llm backend unreachable: {last_error}")


def _extract_choice_text(body: dict[str, Any]) -> str:
    try:
        choice = body["choices"][0]
    except (KeyError, IndexError, TypeError):
        raise BackendError(f"malformed backend response: {json.dumps(body)[:200]}") from None
    message = choice.get("message")
    if isinstance(message, dict) and isinstance(message.get("content"), str):
        return message["content"]
    if isinstance(choice.get("text"), str):
        return choice["text"]
    raise BackendError("backend response carries no text content")
