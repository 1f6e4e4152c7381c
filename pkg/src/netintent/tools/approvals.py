"""Human-in-the-loop approval tokens gating every state-mutating tool.

Tokens are single-use and expire on the virtual clock; a mutating call is
honored only with an approved, unexpired, unconsumed token. Resolution can
arrive from another thread (HTTP handler), so the registry owns a condition
variable that suspended agent runs wait on.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any

from ..clock import VirtualClock
from ..errors import ApprovalRequired, NotFoundError, ValidationError

STATE_PENDING = "pending"
STATE_APPROVED = "approved"
STATE_DENIED = "denied"
STATE_EXPIRED = "expired"

DEFAULT_TTL_MS = 10 * 60 * 1000  # ten virtual minutes


@dataclass
class ApprovalToken:
    token: str
    action_summary: str
    state: str = STATE_PENDING
    requested_at: int = 0
    expires_at: int = 0
    consumed: bool = False

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "token": self.token,
            "action_summary": self.action_summary,
            "state": self.state,
            "requested_at": self.requested_at,
            "expires_at": self.expires_at,
            "consumed": self.consumed,
        }


class ApprovalRegistry:
    def __init__(self, clock: VirtualClock, ttl_ms: int = DEFAULT_TTL_MS, lock: threading.RLock | None = None):
        if ttl_ms <= 0:
            raise ValidationError(f"approval ttl must be > 0, got {ttl_ms}")
        self.clock = clock
        self.ttl_ms = ttl_ms
        self.tokens: dict[str, ApprovalToken] = {}
        self._next_token = 1
        self.condition = threading.Condition(lock if lock is not None else threading.RLock())

    def request(self, action_summary: str) -> ApprovalToken:
        with self.condition:
            token = ApprovalToken(
                token=f"token-{self._next_token}",
                action_summary=action_summary,
                requested_at=self.clock.now_ms,
                expires_at=self.clock.now_ms + self.ttl_ms,
            )
            self._next_token += 1
            self.tokens[token.token] = token
            return token

    def get(self, token_id: str) -> ApprovalToken:
        token = self.tokens.get(token_id)
        if token is None:
            raise NotFoundError(f"unknown approval token {token_id!r}")
        return token

    def resolve(self, token_id: str, decision: str) -> ApprovalToken:
        """Operator decision. Idempotent for a repeated identical decision."""
        if decision not in ("approve", "deny"):
            raise ValidationError(f"decision must be approve|deny, got {decision!r}")
        target = STATE_APPROVED if decision == "approve" else STATE_DENIED
        with self.condition:
            token = self.get(token_id)
            if token.consumed:
                raise ValidationError(f"token {token_id} already consumed")
            if token.state == target:
                return token
            if token.state != STATE_PENDING:
                raise ValidationError(
                    f"token {token_id} is {token.state}; cannot {decision}"
                )
            token.state = target
            self.condition.notify_all()
            return token

    def consume(self, token_id: str | None) -> ApprovalToken:
        """Validate and burn a token for one mutating call."""
        with self.condition:
            if not token_id:
                raise ApprovalRequired("mutating call requires an approval_token")
            token = self.tokens.get(token_id)
            if token is None:
                raise ApprovalRequired(f"unknown approval token {token_id!r}")
            if token.consumed:
                raise ApprovalRequired(f"token {token_id} already consumed")
            if token.state == STATE_PENDING:
                raise ApprovalRequired(f"token {token_id} is unapproved (pending)")
            if token.state in (STATE_DENIED, STATE_EXPIRED):
                raise ApprovalRequired(f"token {token_id} is {token.state}")
            if self.clock.now_ms >= token.expires_at:
                token.state = STATE_EXPIRED
                raise ApprovalRequired(f"token {token_id} expired")
            token.consumed = True
            return token

    def expire_due(self, now_ms: int) -> None:
        with self.condition:
            changed = False
            for token in self.tokens.values():
                if token.consumed or token.state in (STATE_DENIED, STATE_EXPIRED):
                    continue
                if now_ms >= token.expires_at:
                    token.state = STATE_EXPIRED
                    changed = True
            if changed:
                self.condition.notify_all()

    def wait_for_resolution(self, token_id: str, wall_timeout_s: float = 300.0) -> str:
        """Block until the token leaves pending; returns its final-ish state."""
        with self.condition:
            token = self.get(token_id)
            remaining = wall_timeout_s
            while token.state == STATE_PENDING and remaining > 0:
                step = min(remaining, 1.0)
                self.condition.wait(timeout=step)
                remaining -= step
                token = self.get(token_id)
            return token.state

    def pending(self) -> list[ApprovalToken]:
        return [t for t in self.tokens.values() if t.state == STATE_PENDING]

    def describe(self, state: str | None = None) -> list[dict[str, Any]]:
        toks = sorted(self.tokens.values(), key=lambda t: t.requested_at)
        if state is not None:
            toks = [t for t in toks if t.state == state]
        return [t.to_json_obj() for t in toks]
