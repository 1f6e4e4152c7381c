"""Plan -> act -> observe loop with critical-thinking safeguards.

Four mechanisms wrap every model-proposed tool call before it executes:
structured validation (schema conformance), assumption blocking (mutations
may only reference entities already seen in read-tool results), goal
tracking (repeated identical calls draw warnings and the iteration budget
is hard), and safety gate-keeping (mutations without a token suspend the
run until an operator approves one). Final answers are post-filtered: any
numeric claim that never appeared in an observation is flagged and sent
back for revision.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from ..errors import BackendError, SchemaViolation
from ..gateway import ToolCall, ToolDescriptor, ToolRegistry, ToolResult, canonical_json
from ..tools.approvals import ApprovalRegistry
from .prompt import build_system_prompt
from .turns import AgentTurn, ParseFailure, parse_turn

STATUS_RUNNING = "running"
STATUS_AWAITING = "awaiting_approval"
STATUS_DONE = "done"
STATUS_FAILED = "failed"
STATUS_STOPPED = "stopped"

MAX_PARSE_RETRIES = 2
DEFAULT_MAX_ITERATIONS = 25
DEFAULT_HISTORY_KEEP = 40

_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")

# argument key -> entity kind, for assumption checks on mutating calls
_ENTITY_ARG_KEYS = {"slice_name": "slice", "session_id": "session", "collection": "collection"}


class GatewayClient(Protocol):
    def list_tools(self) -> list[ToolDescriptor]: ...

    def call_tool(self, name: str, arguments: dict[str, Any], call_id: str) -> ToolResult: ...


class LocalGateway:
    """In-process gateway client; serializes calls through the stack lock."""

    def __init__(self, registry: ToolRegistry, lock: threading.RLock | None = None):
        self.registry = registry
        self.lock = lock if lock is not None else threading.RLock()

    def list_tools(self) -> list[ToolDescriptor]:
        with self.lock:
            return self.registry.list_tools()

    def call_tool(self, name: str, arguments: dict[str, Any], call_id: str) -> ToolResult:
        with self.lock:
            return self.registry.call_tool(
                ToolCall(call_id=call_id, name=name, arguments=arguments)
            )


class ApprovalWaiter(Protocol):
    def wait(self, token_id: str) -> str: ...


class RegistryWaiter:
    """Blocks on the approval registry's condition until the operator acts."""

    def __init__(self, approvals: ApprovalRegistry, wall_timeout_s: float = 300.0):
        self.approvals = approvals
        self.wall_timeout_s = wall_timeout_s

    def wait(self, token_id: str) -> str:
        return self.approvals.wait_for_resolution(token_id, self.wall_timeout_s)


class CallbackWaiter:
    """Resolves tokens immediately via a callback; used by tests and auto modes."""

    def __init__(self, approvals: ApprovalRegistry, decide: Callable[[str], str]):
        self.approvals = approvals
        self.decide = decide

    def wait(self, token_id: str) -> str:
        decision = self.decide(token_id)
        if decision in ("approve", "deny"):
            self.approvals.resolve(token_id, decision)
        return self.approvals.get(token_id).state


class Transcript:
    """Append-only run log; every entry gets a contiguous index for SSE resume."""

    def __init__(self, path: str | None = None, clock_ms: Callable[[], int] | None = None):
        self.entries: list[dict[str, Any]] = []
        self._cond = threading.Condition()
        self._path = path
        self._clock_ms = clock_ms if clock_ms is not None else (lambda: 0)

    def append(self, entry_type: str, **data: Any) -> dict[str, Any]:
        with self._cond:
            entry = {"index": len(self.entries), "type": entry_type, "ts": self._clock_ms()}
            entry.update(data)
            self.entries.append(entry)
            if self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
            self._cond.notify_all()
            return entry

    def snapshot(self, from_index: int = 0) -> list[dict[str, Any]]:
        with self._cond:
            return list(self.entries[from_index:])

    def wait_beyond(self, index: int, timeout_s: float) -> list[dict[str, Any]]:
        with self._cond:
            if len(self.entries) <= index:
                self._cond.wait(timeout=timeout_s)
            return list(self.entries[index:])

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.snapshot())


@dataclass
class IntentRun:
    intent_id: str
    text: str
    submitted_at: int
    transcript: Transcript
    status: str = STATUS_RUNNING
    final_answer: str | None = None
    pending_token: str | None = None
    stop_requested: bool = False

    def set_status(self, status: str) -> None:
        self.status = status
        self.transcript.append("status", status=status, intent_id=self.intent_id)

    def status_obj(self) -> dict[str, Any]:
        return {
            "intent_id": self.intent_id,
            "text": self.text,
            "submitted_at": self.submitted_at,
            "status": self.status,
            "final_answer": self.final_answer,
            "pending_token": self.pending_token,
            "transcript_len": len(self.transcript.entries),
        }


@dataclass
class AgentContext:
    system_prompt: str
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    iteration: int = 0
    observed_entities: set[tuple[str, str]] = field(default_factory=set)
    call_counts: dict[str, int] = field(default_factory=dict)
    history: list[dict[str, str]] = field(default_factory=list)  # role/content, sans system


@dataclass
class Decision:
    action: str  # allow | block | require_approval
    reason: str = ""
    warnings: list[str] = field(default_factory=list)


def entity_refs(tool_name: str, arguments: dict[str, Any]) -> list[tuple[str, str]]:
    refs = []
    for key, kind in _ENTITY_ARG_KEYS.items():
        if key in arguments and arguments[key] is not None:
            refs.append((kind, str(arguments[key])))
    return refs


def critical_think(
    turn: AgentTurn,
    context: AgentContext,
    catalog: dict[str, ToolDescriptor],
) -> Decision:
    """Gate a parsed tool_call turn; thoughts and final answers pass through."""
    if turn.kind != "tool_call":
        return Decision("allow")
    descriptor = catalog.get(turn.tool_name or "")
    if descriptor is None:
        return Decision("block", f"unknown tool '{turn.tool_name}'")
    try:
        descriptor.schema.validate(turn.arguments)
    except SchemaViolation as exc:
        return Decision("block", str(exc))

    warnings = []
    key = f"{turn.tool_name}:{canonical_json(turn.arguments)}"
    count = context.call_counts.get(key, 0) + 1
    context.call_counts[key] = count
    if count > 2:
        warnings.append(
            f"goal tracking: identical call to {turn.tool_name} repeated {count} times"
        )

    if descriptor.call_mutates(turn.arguments):
        missing = [
            ref for ref in entity_refs(turn.tool_name, turn.arguments)
            if ref not in context.observed_entities
        ]
        if missing:
            detail = ", ".join(f"{kind} '{value}'" for kind, value in missing)
            return Decision("block", f"unverified assumption: {detail}", warnings)
        if "approval_token" not in turn.arguments:
            return Decision("require_approval", "mutating call requires operator approval", warnings)
    return Decision("allow", warnings=warnings)


def harvest_entities(
    tool_name: str,
    arguments: dict[str, Any],
    result: ToolResult,
    observed: set[tuple[str, str]],
) -> None:
    """Record entities confirmed to exist by a successful read-path result."""
    if result.is_error:
        return
    content = result.content
    if tool_name == "list_collections" and isinstance(content, list):
        for entry in content:
            if isinstance(entry, dict) and "name" in entry:
                observed.add(("collection", str(entry["name"])))
    elif tool_name == "query_data" and isinstance(content, dict):
        observed.add(("collection", str(arguments.get("collection"))))
        for record in content.get("records", []):
            dims = record.get("dims", {}) if isinstance(record, dict) else {}
            if "slice" in dims:
                observed.add(("slice", str(dims["slice"])))
            if "supi" in dims:
                observed.add(("supi", str(dims["supi"])))
            if "session_id" in dims:
                observed.add(("session", str(dims["session_id"])))
    elif tool_name in ("kpi_analyze", "forecast"):
        observed.add(("collection", str(arguments.get("collection"))))
    elif tool_name == "session_tool" and arguments.get("op") == "list" and isinstance(content, list):
        for session in content:
            if isinstance(session, dict):
                if "session_id" in session:
                    observed.add(("session", str(session["session_id"])))
                if "slice_name" in session:
                    observed.add(("slice", str(session["slice_name"])))


class GroundingIndex:
    """Numbers and strings seen in observations, for final-answer fact checks."""

    def __init__(self) -> None:
        self.texts: list[str] = []
        self.numbers: set[float] = set()

    def add_text(self, text: str) -> None:
        self.texts.append(text)
        for token in _NUMBER_RE.findall(text):
            self.numbers.add(float(token))

    def add_json(self, obj: Any) -> None:
        self.add_text(canonical_json(obj))
        self._walk(obj)

    def _walk(self, obj: Any) -> None:
        if isinstance(obj, bool):
            return
        if isinstance(obj, (int, float)):
            self.numbers.add(float(obj))
        elif isinstance(obj, dict):
            for v in obj.values():
                self._walk(v)
        elif isinstance(obj, list):
            for v in obj:
                self._walk(v)

    def ungrounded_claims(self, text: str) -> list[str]:
        flags = []
        for token in _NUMBER_RE.findall(text):
            value = float(token)
            if any(abs(value - n) <= 1e-9 * max(1.0, abs(n)) for n in self.numbers):
                continue
            if any(token in t for t in self.texts):
                continue
            flags.append(token)
        return flags


def _trim_messages(
    system_prompt: str, history: list[dict[str, str]], keep: int
) -> list[dict[str, str]]:
    if len(history) <= keep:
        return [{"role": "system", "content": system_prompt}] + history
    elided = len(history) - keep
    digest = {
        "role": "user",
        "content": f"[context digest: {elided} earlier messages elided]",
    }
    return [{"role": "system", "content": system_prompt}, digest] + history[-keep:]


def _template_summary(run: IntentRun, context: AgentContext, reason: str) -> str:
    tool_calls = sum(context.call_counts.values())
    return (
        f"Run for intent {run.intent_id} ended without a clean final answer: {reason}. "
        f"Turns used: {context.iteration}/{context.max_iterations}; tool calls issued: {tool_calls}."
    )


def run_intent(
    run: IntentRun,
    backend: Any,
    gateway: GatewayClient,
    waiter: ApprovalWaiter,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    history_keep: int = DEFAULT_HISTORY_KEEP,
) -> IntentRun:
    """Drive one intent to completion; every turn and observation is logged."""
    transcript = run.transcript
    run.set_status(STATUS_RUNNING)
    try:
        catalog_list = gateway.list_tools()
        catalog = {d.name: d for d in catalog_list}
        transcript.append("catalog", tools=[d.name for d in catalog_list])
        system_prompt = build_system_prompt(catalog_list)
        context = AgentContext(system_prompt=system_prompt, max_iterations=max_iterations)
        context.history.append({"role": "user", "content": f"Operator intent: {run.text}"})
        grounding = GroundingIndex()
        grounding.add_text(run.text)

        while context.iteration < max_iterations:
            if run.stop_requested:
                run.final_answer = _template_summary(run, context, "stop requested")
                transcript.append("final", text=run.final_answer, flags=[])
                run.set_status(STATUS_STOPPED)
                return run
            context.iteration += 1
            turn = _generate_turn(run, backend, context, transcript, history_keep)
            if turn is None:  # parse retries exhausted; budget consumed
                continue
            if isinstance(turn, BackendDown):
                run.final_answer = _template_summary(run, context, f"backend failure: {turn.reason}")
                transcript.append("final", text=run.final_answer, flags=[])
                run.set_status(STATUS_FAILED)
                return run

            transcript.append("turn", turn=turn.to_json_obj())
            context.history.append({"role": "assistant", "content": turn.raw_llm_text})

            if turn.kind == "thought":
                continue

            if turn.kind == "final_answer":
                flags = grounding.ungrounded_claims(turn.text or "")
                if flags:
                    transcript.append("validator", verdict="ungrounded_claims", detail=flags)
                    _observe_text(
                        context,
                        "Your final answer contains numeric claims not present in any "
                        f"observation: {flags}. Revise it to reference only observed facts.",
                    )
                    continue
                run.final_answer = turn.text
                transcript.append("final", text=run.final_answer, flags=[])
                run.set_status(STATUS_DONE)
                return run

            # tool_call turn
            decision = critical_think(turn, context, catalog)
            for warning in decision.warnings:
                transcript.append("validator", verdict="warning", detail=warning)
            if decision.action == "block":
                transcript.append("validator", verdict="block", detail=decision.reason)
                _observe_text(context, f"BLOCKED: {decision.reason}")
                continue

            arguments = dict(turn.arguments)
            if decision.action == "require_approval":
                outcome, token_id = _gate_on_approval(
                    run, gateway, waiter, context, transcript, grounding, turn
                )
                if outcome != "approved":
                    _observe_text(
                        context,
                        f"approval {outcome} for {turn.tool_name}; the action was not executed.",
                    )
                    continue
                arguments["approval_token"] = token_id

            call_id = f"call-{context.iteration}"
            result = gateway.call_tool(turn.tool_name, arguments, call_id)
            transcript.append(
                "observation", call_id=call_id, tool=turn.tool_name, result=result.to_json_obj()
            )
            _observe_text(context, f"Observation: {canonical_json(result.to_json_obj())}")
            grounding.add_json(result.to_json_obj())
            harvest_entities(turn.tool_name, arguments, result, context.observed_entities)

        run.final_answer = _template_summary(run, context, "iteration budget exhausted")
        transcript.append("final", text=run.final_answer, flags=[])
        run.set_status(STATUS_FAILED)
        return run
    except Exception as exc:  # defensive: a run must always reach a terminal state
        run.final_answer = f"Run aborted by internal error: {type(exc).__name__}: {exc}"
        transcript.append("final", text=run.final_answer, flags=["internal_error"])
        run.set_status(STATUS_FAILED)
        return run


@dataclass
class BackendDown:
    reason: str


def _generate_turn(
    run: IntentRun,
    backend: Any,
    context: AgentContext,
    transcript: Transcript,
    history_keep: int,
) -> AgentTurn | BackendDown | None:
    retries = 0
    while True:
        messages = _trim_messages(context.system_prompt, context.history, history_keep)
        try:
            raw = backend.complete(messages)
        except BackendError as exc:
            return BackendDown(str(exc))
        parsed = parse_turn(raw, context.iteration)
        if isinstance(parsed, AgentTurn):
            return parsed
        assert isinstance(parsed, ParseFailure)
        transcript.append("validator", verdict="parse_failure", detail=parsed.reason)
        context.history.append({"role": "assistant", "content": raw})
        context.history.append({"role": "user", "content": parsed.corrective_feedback()})
        retries += 1
        if retries > MAX_PARSE_RETRIES:
            transcript.append("validator", verdict="turn_failed", detail="parse retries exhausted")
            return None


def _observe_text(context: AgentContext, text: str) -> None:
    context.history.append({"role": "user", "content": text})


def _gate_on_approval(
    run: IntentRun,
    gateway: GatewayClient,
    waiter: ApprovalWaiter,
    context: AgentContext,
    transcript: Transcript,
    grounding: GroundingIndex,
    turn: AgentTurn,
) -> tuple[str, str | None]:
    summary = f"{turn.tool_name}: {canonical_json(turn.arguments)}"
    call_id = f"call-{context.iteration}-gate"
    result = gateway.call_tool("request_confirmation", {"action_summary": summary}, call_id)
    transcript.append(
        "observation", call_id=call_id, tool="request_confirmation", result=result.to_json_obj()
    )
    grounding.add_json(result.to_json_obj())
    if result.is_error or not isinstance(result.content, dict):
        return ("failed", None)
    token_id = result.content.get("token")
    transcript.append("validator", verdict="approval_requested", detail=token_id)
    run.pending_token = token_id
    run.set_status(STATUS_AWAITING)
    state = waiter.wait(token_id)
    run.pending_token = None
    run.set_status(STATUS_RUNNING)
    transcript.append("validator", verdict=f"approval_{state}", detail=token_id)
    return (state, token_id)
