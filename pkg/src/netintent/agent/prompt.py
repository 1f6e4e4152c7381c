"""System prompt assembly: directives, turn grammar, and the tool catalog."""

from __future__ import annotations

from ..errors import ValidationError
from ..gateway import ToolDescriptor

DIRECTIVES = (
    "1. Call List Tools to understand which tool to use.",
    "2. Plan first.",
    "3. Discover context before acting: verify slices, collections, and sessions exist.",
    "4. Feasibility check every change before requesting it.",
    "5. Follow your plan step by step.",
    "6. Explain observations after each tool result.",
    "7. Finalize clearly with a summary grounded in what you observed.",
)

GRAMMAR = (
    "Always answer in JSON using exactly one of the keys \"thought\", \"tool_call\", "
    "or \"final_answer\".\n"
    "- {\"thought\": \"<reasoning or observation>\"}\n"
    "- {\"tool_call\": {\"name\": \"<tool>\", \"arguments\": {...}}}\n"
    "- {\"final_answer\": \"<conclusive summary for the operator>\"}"
)


def _render_tool(descriptor: ToolDescriptor) -> str:
    schema = descriptor.schema
    if schema.properties:
        params = []
        for pname, spec in schema.properties.items():
            marker = "required" if pname in schema.required else "optional"
            extra = ""
            if spec.enum is not None:
                extra = " one of " + "|".join(str(v) for v in spec.enum)
            params.append(f"    - {pname} ({spec.type}, {marker}){extra}: {spec.description}")
        param_block = "\n".join(params)
    else:
        param_block = "    (no parameters)"
    mutates = " [mutating: requires operator approval]" if descriptor.mutates else ""
    return f"- {descriptor.name} [{descriptor.group}]{mutates}: {descriptor.description}\n{param_block}"


def build_system_prompt(catalog: list[ToolDescriptor]) -> str:
    """Deterministic prompt for a fixed catalog; rejects an empty one."""
    if not catalog:
        raise ValidationError("cannot build a system prompt from an empty tool catalog")
    tool_block = "\n".join(_render_tool(d) for d in catalog)
    return (
        "You are an advanced intent agent for 5G network operations. "
        "Use tools to fulfil the operator's intent.\n\n"
        + GRAMMAR
        + "\n\nDirectives:\n"
        + "\n".join(DIRECTIVES)
        + "\n\nAvailable tools:\n"
        + tool_block
        + "\n\nNever invent entity names, values, or results: every claim in your "
        "final answer must come from a tool observation."
    )
