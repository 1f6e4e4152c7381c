"""Tool registry and invocation boundary between the agent and all tools.

Arguments are validated against each tool's closed parameter schema before
dispatch, so hallucinated or malformed calls never reach tool code; every
failure is a structured result, never a transport error. The same registry
is served over JSON-RPC 2.0 (methods tools/list and tools/call) with
responses that are byte-identical to in-process dispatch once canonicalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ApprovalRequired, DomainError, SchemaViolation

GROUP_DATA = "data_retrieval"
GROUP_INTENT = "intent"
GROUP_SAFETY = "safety"

ERR_UNKNOWN_TOOL = "unknown_tool"
ERR_SCHEMA = "schema_violation"
ERR_PRECONDITION = "precondition_failed"
ERR_APPROVAL = "approval_required"
ERR_INTERNAL = "internal"

_TYPES = ("string", "int", "float", "bool", "object", "array")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ParamSpec:
    type: str
    description: str = ""
    enum: tuple[Any, ...] | None = None
    minimum: float | None = None
    maximum: float | None = None

    def __post_init__(self) -> None:
        if self.type not in _TYPES:
            raise SchemaViolation(f"unknown param type {self.type!r}")

    def check(self, name: str, value: Any) -> None:
        if self.type == "string":
            ok = isinstance(value, str)
        elif self.type == "int":
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif self.type == "float":
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif self.type == "bool":
            ok = isinstance(value, bool)
        elif self.type == "object":
            ok = isinstance(value, dict)
        else:  # array
            ok = isinstance(value, list)
        if not ok:
            raise SchemaViolation(
                f"argument {name!r}: expected {self.type}, got {type(value).__name__}"
            )
        if self.enum is not None and value not in self.enum:
            raise SchemaViolation(
                f"argument {name!r}: {value!r} not in allowed values {list(self.enum)}"
            )
        if self.minimum is not None and isinstance(value, (int, float)) and value < self.minimum:
            raise SchemaViolation(f"argument {name!r}: {value} below minimum {self.minimum}")
        if self.maximum is not None and isinstance(value, (int, float)) and value > self.maximum:
            raise SchemaViolation(f"argument {name!r}: {value} above maximum {self.maximum}")

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"type": self.type}
        if self.description:
            obj["description"] = self.description
        if self.enum is not None:
            obj["enum"] = list(self.enum)
        if self.minimum is not None:
            obj["minimum"] = self.minimum
        if self.maximum is not None:
            obj["maximum"] = self.maximum
        return obj


@dataclass(frozen=True)
class ParamsSchema:
    properties: dict[str, ParamSpec] = field(default_factory=dict)
    required: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        missing = [r for r in self.required if r not in self.properties]
        if missing:
            raise SchemaViolation(f"required params not declared: {missing}")

    def validate(self, arguments: Any) -> None:
        if not isinstance(arguments, dict):
            raise SchemaViolation("arguments must be a JSON object")
        for key in arguments:
            if key not in self.properties:
                raise SchemaViolation(f"unknown argument {key!r}")
        for req in self.required:
            if req not in arguments:
                raise SchemaViolation(f"missing required argument {req!r}")
        for key, value in arguments.items():
            self.properties[key].check(key, value)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "type": "object",
            "properties": {k: v.to_json_obj() for k, v in self.properties.items()},
            "required": list(self.required),
        }


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    schema: ParamsSchema
    group: str
    mutates: bool = False
    mutating_ops: frozenset[str] | None = None  # op-dependent tools (session_tool)

    def call_mutates(self, arguments: dict[str, Any]) -> bool:
        if not self.mutates:
            return False
        if self.mutating_ops is not None:
            return arguments.get("op") in self.mutating_ops
        return True

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "name": self.name,
            "description": self.description,
            "params_schema": self.schema.to_json_obj(),
            "group": self.group,
            "mutates": self.mutates,
        }
        if self.mutating_ops is not None:
            obj["mutating_ops"] = sorted(self.mutating_ops)
        return obj


@dataclass(frozen=True)
class ToolCall:
    call_id: str
    name: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        return {"callId": self.call_id, "name": self.name, "arguments": self.arguments}


@dataclass(frozen=True)
class ToolResult:
    call_id: str
    is_error: bool
    content: Any
    error_kind: str | None = None

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "callId": self.call_id,
            "content": self.content,
            "isError": self.is_error,
        }
        if self.error_kind is not None:
            obj["errorKind"] = self.error_kind
        return obj


Handler = Callable[..., Any]


class ToolRegistry:
    """Ordered tool catalog plus validating dispatcher."""

    def __init__(self) -> None:
        self._descriptors: dict[str, ToolDescriptor] = {}
        self._handlers: dict[str, Handler] = {}
        self.dispatch_count: dict[str, int] = {}

    def register(self, descriptor: ToolDescriptor, handler: Handler) -> None:
        if descriptor.name in self._descriptors:
            raise SchemaViolation(f"tool {descriptor.name!r} already registered")
        self._descriptors[descriptor.name] = descriptor
        self._handlers[descriptor.name] = handler
        self.dispatch_count[descriptor.name] = 0

    def descriptor(self, name: str) -> ToolDescriptor | None:
        return self._descriptors.get(name)

    def list_tools(self) -> list[ToolDescriptor]:
        return list(self._descriptors.values())

    def list_tools_json(self) -> list[dict[str, Any]]:
        return [d.to_json_obj() for d in self._descriptors.values()]

    def call_tool(self, call: ToolCall) -> ToolResult:
        descriptor = self._descriptors.get(call.name)
        if descriptor is None:
            return ToolResult(
                call.call_id, True, f"unknown tool {call.name!r}", ERR_UNKNOWN_TOOL
            )
        try:
            descriptor.schema.validate(call.arguments)
        except SchemaViolation as exc:
            return ToolResult(call.call_id, True, str(exc), ERR_SCHEMA)
        self.dispatch_count[call.name] += 1
        try:
            content = self._handlers[call.name](**call.arguments)
        except ApprovalRequired as exc:
            return ToolResult(call.call_id, True, str(exc), ERR_APPROVAL)
        except DomainError as exc:
            return ToolResult(call.call_id, True, str(exc), ERR_PRECONDITION)
        except Exception as exc:  # tool bug; keep the boundary intact
            return ToolResult(call.call_id, True, f"{type(exc).__name__}: {exc}", ERR_INTERNAL)
        return ToolResult(call.call_id, False, content)


# -- JSON-RPC 2.0 layer -------------------------------------------------------

RPC_PARSE_ERROR = -32700
RPC_INVALID_REQUEST = -32600
RPC_METHOD_NOT_FOUND = -32601
RPC_INVALID_PARAMS = -32602


def _rpc_error(req_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": req_id, "error": {"code": code, "message": message}}


def handle_rpc_bytes(registry: ToolRegistry, body: bytes) -> dict[str, Any]:
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return _rpc_error(None, RPC_PARSE_ERROR, "parse error")
    return handle_rpc(registry, payload)


def handle_rpc(registry: ToolRegistry, payload: Any) -> dict[str, Any]:
    if not isinstance(payload, dict) or payload.get("jsonrpc") != "2.0":
        return _rpc_error(None, RPC_INVALID_REQUEST, "invalid request")
    req_id = payload.get("id")
    method = payload.get("method")
    params = payload.get("params", {})
    if not isinstance(method, str):
        return _rpc_error(req_id, RPC_INVALID_REQUEST, "method must be a string")
    if not isinstance(params, dict):
        return _rpc_error(req_id, RPC_INVALID_PARAMS, "params must be an object")

    if method == "tools/list":
        return {"jsonrpc": "2.0", "id": req_id, "result": {"tools": registry.list_tools_json()}}
    if method == "tools/call":
        name = params.get("name")
        arguments = params.get("arguments", {})
        if not isinstance(name, str):
            return _rpc_error(req_id, RPC_INVALID_PARAMS, "params.name must be a string")
        if not isinstance(arguments, dict):
            return _rpc_error(req_id, RPC_INVALID_PARAMS, "params.arguments must be an object")
        call_id = params.get("call_id")
        if call_id is None:
            call_id = f"rpc-{req_id}"
        result = registry.call_tool(ToolCall(call_id=str(call_id), name=name, arguments=arguments))
        return {"jsonrpc": "2.0", "id": req_id, "result": result.to_json_obj()}
    return _rpc_error(req_id, RPC_METHOD_NOT_FOUND, f"unknown method {method!r}")


# -- standard catalog ---------------------------------------------------------


def build_registry(engine: Any) -> ToolRegistry:
    """Register the stack's tool catalog against an IntentToolsEngine."""
    registry = ToolRegistry()
    dims = ParamSpec("object", "optional dimension filter, e.g. {\"slice\": \"internet\"}")
    collection = ParamSpec("string", "collection name, e.g. upf.memory_utilization_pct")
    field_spec = ParamSpec("string", "AMBR field to change", enum=("ambr_dl", "ambr_ul", "both"))
    mode_spec = ParamSpec("string", "how amount is interpreted", enum=("percent_delta", "absolute"))
    amount_spec = ParamSpec("float", "percent delta (e.g. 20 for +20%) or absolute kbps target")
    window_spec = ParamSpec(
        "object", "recurrence window {start: 'HH:MM', end: 'HH:MM', days: ['mon', ...]}"
    )
    token_spec = ParamSpec("string", "approved confirmation token for this mutation")

    registry.register(
        ToolDescriptor(
            name="list_collections",
            description="List telemetry collections with record counts and time bounds.",
            schema=ParamsSchema(),
            group=GROUP_DATA,
        ),
        lambda: engine.list_collections(),
    )
    registry.register(
        ToolDescriptor(
            name="query_data",
            description="Fetch records from a collection, optionally filtered by dimensions.",
            schema=ParamsSchema(
                properties={
                    "collection": collection,
                    "dims_filter": dims,
                    "limit": ParamSpec("int", "max records to return", minimum=1),
                    "order": ParamSpec(
                        "string", "result order", enum=("recent_first", "oldest_first")
                    ),
                },
                required=("collection",),
            ),
            group=GROUP_DATA,
        ),
        engine.query_data,
    )
    registry.register(
        ToolDescriptor(
            name="list_schedules",
            description="List scheduled policy actions and their window state.",
            schema=ParamsSchema(),
            group=GROUP_DATA,
        ),
        lambda: engine.list_schedules(),
    )
    registry.register(
        ToolDescriptor(
            name="kpi_analyze",
            description="Summary statistics (mean, spread, p95, trend slope) over recent values.",
            schema=ParamsSchema(
                properties={
                    "collection": collection,
                    "dims_filter": dims,
                    "last_n": ParamSpec("int", "how many recent values to analyze", minimum=2),
                },
                required=("collection", "last_n"),
            ),
            group=GROUP_INTENT,
        ),
        engine.kpi_analyze,
    )
    registry.register(
        ToolDescriptor(
            name="forecast",
            description=(
                "Sliding-window autoregressive forecast with holdout R^2 over recent values."
            ),
            schema=ParamsSchema(
                properties={
                    "collection": collection,
                    "dims_filter": dims,
                    "history_n": ParamSpec("int", "series length to learn from", minimum=5),
                    "window_w": ParamSpec("int", "lag-window width", minimum=1),
                    "horizon_h": ParamSpec("int", "future steps to predict", minimum=1),
                    "holdout_frac": ParamSpec(
                        "float", "held-out fraction for scoring", minimum=0.0, maximum=0.5
                    ),
                },
                required=("collection", "history_n", "window_w", "horizon_h"),
            ),
            group=GROUP_INTENT,
        ),
        engine.forecast,
    )
    registry.register(
        ToolDescriptor(
            name="feasibility_check",
            description="Evaluate whether an AMBR change fits capacity and scheduling constraints.",
            schema=ParamsSchema(
                properties={
                    "slice_name": ParamSpec("string", "target slice"),
                    "field": field_spec,
                    "mode": mode_spec,
                    "amount": amount_spec,
                    "window": window_spec,
                },
                required=("slice_name", "field", "mode", "amount"),
            ),
            group=GROUP_INTENT,
        ),
        engine.feasibility_check,
    )
    registry.register(
        ToolDescriptor(
            name="schedule_policy",
            description="Register a recurring time-windowed AMBR change (requires approval).",
            schema=ParamsSchema(
                properties={
                    "slice_name": ParamSpec("string", "target slice"),
                    "field": field_spec,
                    "mode": mode_spec,
                    "amount": amount_spec,
                    "window": window_spec,
                    "approval_token": token_spec,
                },
                required=("slice_name", "field", "mode", "amount", "window"),
            ),
            group=GROUP_INTENT,
            mutates=True,
        ),
        engine.schedule_policy,
    )
    registry.register(
        ToolDescriptor(
            name="apply_policy_now",
            description="Apply an AMBR change immediately (requires approval).",
            schema=ParamsSchema(
                properties={
                    "slice_name": ParamSpec("string", "target slice"),
                    "field": field_spec,
                    "mode": mode_spec,
                    "amount": amount_spec,
                    "approval_token": token_spec,
                },
                required=("slice_name", "field", "mode", "amount"),
            ),
            group=GROUP_INTENT,
            mutates=True,
        ),
        engine.apply_policy_now,
    )
    registry.register(
        ToolDescriptor(
            name="session_tool",
            description="Inspect or manage PDU sessions: list, modify_qos, release.",
            schema=ParamsSchema(
                properties={
                    "op": ParamSpec("string", "operation", enum=("list", "modify_qos", "release")),
                    "session_id": ParamSpec("int", "target session", minimum=1),
                    "dl_kbps": ParamSpec("int", "new downlink AMBR", minimum=1),
                    "ul_kbps": ParamSpec("int", "new uplink AMBR", minimum=1),
                    "slice_name": ParamSpec("string", "restrict list to one slice"),
                    "approval_token": token_spec,
                },
                required=("op",),
            ),
            group=GROUP_INTENT,
            mutates=True,
            mutating_ops=frozenset({"modify_qos", "release"}),
        ),
        engine.session_tool,
    )
    registry.register(
        ToolDescriptor(
            name="request_confirmation",
            description="Ask the operator to approve a described action; returns a pending token.",
            schema=ParamsSchema(
                properties={"action_summary": ParamSpec("string", "what will be done and why")},
                required=("action_summary",),
            ),
            group=GROUP_SAFETY,
        ),
        engine.request_confirmation,
    )
    return registry
