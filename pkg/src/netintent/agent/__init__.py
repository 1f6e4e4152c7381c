from .backends import HttpChatBackend, ScriptedBackend
from .loop import AgentContext, IntentRun, LocalGateway, run_intent
from .prompt import build_system_prompt
from .turns import AgentTurn, ParseFailure, parse_turn

__all__ = [
    "HttpChatBackend",
    "ScriptedBackend",
    "AgentContext",
    "IntentRun",
    "LocalGateway",
    "run_intent",
    "build_system_prompt",
    "AgentTurn",
    "ParseFailure",
    "parse_turn",
]
