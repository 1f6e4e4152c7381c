from .approvals import ApprovalRegistry, ApprovalToken
from .engine import IntentToolsEngine
from .policy import FeasibilityReport, PolicyChange, TimeWindow, check_feasibility
from .scheduler import PolicyScheduler, ScheduledAction

__all__ = [
    "ApprovalRegistry",
    "ApprovalToken",
    "IntentToolsEngine",
    "FeasibilityReport",
    "PolicyChange",
    "TimeWindow",
    "check_feasibility",
    "PolicyScheduler",
    "ScheduledAction",
]
