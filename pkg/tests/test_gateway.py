from __future__ import annotations

import json
import random

import pytest
import requests

from netintent.gateway import (
    ParamSpec,
    ParamsSchema,
    ToolCall,
    ToolRegistry,
    canonical_json,
    handle_rpc,
)
from netintent.errors import SchemaViolation
from netintent.server import StackServer
from netintent.stack import Stack

from conftest import make_stack_config

EXPECTED_TOOLS = {
    "feasibility_check",
    "kpi_analyze",
    "forecast",
    "schedule_policy",
    "list_collections",
    "query_data",
    "session_tool",
    "request_confirmation",
}


@pytest.fixture
def registry(stack):
    return stack.registry


class TestCatalog:
    def test_required_tools_present(self, registry):
        names = {d.name for d in registry.list_tools()}
        assert EXPECTED_TOOLS <= names

    def test_byte_identical_listings(self, registry):
        a = json.dumps(registry.list_tools_json(), sort_keys=True)
        b = json.dumps(registry.list_tools_json(), sort_keys=True)
        assert a == b

    def test_empty_registry_empty_list(self):
        assert ToolRegistry().list_tools() == []

    def test_schema_self_validation(self):
        with pytest.raises(SchemaViolation):
            ParamsSchema(properties={}, required=("ghost",))
        with pytest.raises(SchemaViolation):
            ParamSpec("quaternion")


class TestCallTool:
    def test_valid_call(self, registry):
        result = registry.call_tool(ToolCall("c1", "list_collections", {}))
        assert not result.is_error
        assert isinstance(result.content, list)

    def test_unknown_tool(self, registry):
        result = registry.call_tool(ToolCall("c1", "no_such", {}))
        assert result.is_error and result.error_kind == "unknown_tool"

    def test_schema_violation_names_field(self, registry):
        result = registry.call_tool(
            ToolCall(
                "c1",
                "schedule_policy",
                {
                    "slice_name": "streaming",
                    "field": "ambr_dl",
                    "mode": "percent_delta",
                    "amount": "twenty",
                    "window": {"start": "16:27", "end": "16:30", "days": ["mon"]},
                },
            )
        )
        assert result.is_error and result.error_kind == "schema_violation"
        assert "amount" in result.content

    def test_unknown_extra_field_rejected(self, registry):
        result = registry.call_tool(
            ToolCall("c1", "kpi_analyze", {"collection": "x", "last_n": 5, "vibes": True})
        )
        assert result.error_kind == "schema_violation"
        assert "vibes" in result.content

    def test_missing_required(self, registry):
        result = registry.call_tool(ToolCall("c1", "kpi_analyze", {"last_n": 5}))
        assert result.error_kind == "schema_violation"
        assert "collection" in result.content

    def test_precondition_failure_kind(self, registry):
        result = registry.call_tool(
            ToolCall("c1", "query_data", {"collection": "upf.ghost"})
        )
        assert result.error_kind == "precondition_failed"

    def test_approval_required_kind(self, registry):
        result = registry.call_tool(
            ToolCall(
                "c1",
                "schedule_policy",
                {
                    "slice_name": "streaming",
                    "field": "ambr_dl",
                    "mode": "percent_delta",
                    "amount": 20,
                    "window": {"start": "16:27", "end": "16:30", "days": ["mon"]},
                },
            )
        )
        assert result.error_kind == "approval_required"


def _mutate_valid_args(rng, schema: ParamsSchema, args: dict):
    """Break exactly one schema constraint of a valid argument object."""
    choice = rng.choice(["wrong_type", "extra_key", "drop_required", "bad_enum", "below_min"])
    broken = dict(args)
    if choice == "wrong_type" and args:
        key = rng.choice(sorted(args))
        spec = schema.properties[key]
        broken[key] = [1] if spec.type != "array" else "oops"
        return broken, key
    if choice == "extra_key":
        broken["hallucinated_param"] = 1
        return broken, "hallucinated_param"
    if choice == "drop_required" and schema.required:
        key = rng.choice(sorted(schema.required))
        broken.pop(key, None)
        return broken, key
    if choice == "bad_enum":
        for key, spec in schema.properties.items():
            if spec.enum is not None:
                broken[key] = "definitely_not_valid"
                return broken, key
    if choice == "below_min":
        for key, spec in schema.properties.items():
            if spec.minimum is not None:
                broken[key] = int(spec.minimum) - 10
                return broken, key
    broken["hallucinated_param"] = 1
    return broken, "hallucinated_param"


VALID_ARGS = {
    "list_collections": {},
    "list_schedules": {},
    "query_data": {"collection": "upf.memory_utilization_pct", "limit": 5},
    "kpi_analyze": {"collection": "upf.memory_utilization_pct", "last_n": 10},
    "forecast": {
        "collection": "upf.memory_utilization_pct",
        "history_n": 100,
        "window_w": 4,
        "horizon_h": 2,
        "holdout_frac": 0.2,
    },
    "feasibility_check": {
        "slice_name": "streaming",
        "field": "ambr_dl",
        "mode": "percent_delta",
        "amount": 20,
    },
    "schedule_policy": {
        "slice_name": "streaming",
        "field": "ambr_dl",
        "mode": "percent_delta",
        "amount": 20,
        "window": {"start": "16:27", "end": "16:30", "days": ["mon"]},
    },
    "apply_policy_now": {
        "slice_name": "streaming",
        "field": "ambr_dl",
        "mode": "percent_delta",
        "amount": 20,
    },
    "session_tool": {"op": "list"},
    "request_confirmation": {"action_summary": "do a thing"},
}


def test_validation_completeness_fuzz(stack):
    """Single-constraint violations always yield schema_violation, never internal,
    and never reach tool code."""
    rng = random.Random(42)
    registry = stack.registry
    for descriptor in registry.list_tools():
        args = VALID_ARGS[descriptor.name]
        for _ in range(40):
            broken, key = _mutate_valid_args(rng, descriptor.schema, args)
            if broken == args:
                continue
            before = registry.dispatch_count[descriptor.name]
            result = registry.call_tool(ToolCall("fz", descriptor.name, broken))
            assert result.is_error, (descriptor.name, broken)
            assert result.error_kind == "schema_violation", (descriptor.name, broken, result)
            assert key in result.content
            assert registry.dispatch_count[descriptor.name] == before  # blocked pre-dispatch


class TestJsonRpc:
    def test_list(self, registry):
        resp = handle_rpc(registry, {"jsonrpc": "2.0", "id": 1, "method": "tools/list"})
        assert resp["id"] == 1
        assert {t["name"] for t in resp["result"]["tools"]} >= EXPECTED_TOOLS

    def test_call(self, registry):
        resp = handle_rpc(
            registry,
            {
                "jsonrpc": "2.0",
                "id": 2,
                "method": "tools/call",
                "params": {"name": "list_collections", "arguments": {}},
            },
        )
        assert resp["result"]["isError"] is False

    def test_unknown_method(self, registry):
        resp = handle_rpc(registry, {"jsonrpc": "2.0", "id": 3, "method": "tools/destroy"})
        assert resp["error"]["code"] == -32601

    def test_invalid_request(self, registry):
        resp = handle_rpc(registry, {"id": 4})
        assert resp["error"]["code"] == -32600

    def test_parse_error(self, registry):
        from netintent.gateway import handle_rpc_bytes

        resp = handle_rpc_bytes(registry, b"{nope")
        assert resp["error"]["code"] == -32700

    def test_invalid_params(self, registry):
        resp = handle_rpc(
            registry,
            {"jsonrpc": "2.0", "id": 5, "method": "tools/call", "params": {"name": 7}},
        )
        assert resp["error"]["code"] == -32602


def test_transport_transparency():
    """Wire result equals in-process dispatch byte-for-byte, JSON-canonicalized."""
    stack = Stack(make_stack_config())
    stack.advance_clock(30_000)
    server = StackServer(stack)
    server.start()
    try:
        call = ToolCall(
            call_id="par-1",
            name="kpi_analyze",
            arguments={"collection": "upf.memory_utilization_pct", "last_n": 10},
        )
        in_process = stack.registry.call_tool(call)
        resp = requests.post(
            f"{server.base_url}/rpc",
            json={
                "jsonrpc": "2.0",
                "id": 9,
                "method": "tools/call",
                "params": {"name": call.name, "arguments": call.arguments, "call_id": "par-1"},
            },
            timeout=10,
        ).json()
        assert canonical_json(resp["result"]) == canonical_json(in_process.to_json_obj())
    finally:
        server.shutdown()


def test_mutating_declarations():
    stack = Stack(make_stack_config())
    by_name = {d.name: d for d in stack.registry.list_tools()}
    assert by_name["schedule_policy"].call_mutates({})
    assert by_name["apply_policy_now"].call_mutates({})
    assert not by_name["query_data"].call_mutates({})
    assert not by_name["session_tool"].call_mutates({"op": "list"})
    assert by_name["session_tool"].call_mutates({"op": "release"})
    assert by_name["session_tool"].call_mutates({"op": "modify_qos"})
    assert not by_name["request_confirmation"].call_mutates({})
