from __future__ import annotations

import pytest

from netintent.errors import ApprovalRequired, NotFoundError, ValidationError
from netintent.tools.approvals import ApprovalRegistry

from conftest import make_clock


def make_registry(ttl_ms=600_000):
    clock = make_clock()
    return ApprovalRegistry(clock, ttl_ms=ttl_ms), clock


class TestLifecycle:
    def test_request_then_approve_single_use(self):
        reg, _ = make_registry()
        token = reg.request("increase streaming ambr by 20%")
        assert token.state == "pending"
        reg.resolve(token.token, "approve")
        consumed = reg.consume(token.token)
        assert consumed.consumed
        with pytest.raises(ApprovalRequired, match="already consumed"):
            reg.consume(token.token)

    def test_denied_token_rejected(self):
        reg, _ = make_registry()
        token = reg.request("x")
        reg.resolve(token.token, "deny")
        with pytest.raises(ApprovalRequired, match="denied"):
            reg.consume(token.token)

    def test_pending_token_unapproved(self):
        reg, _ = make_registry()
        token = reg.request("x")
        with pytest.raises(ApprovalRequired, match="unapproved"):
            reg.consume(token.token)

    def test_missing_and_unknown_tokens(self):
        reg, _ = make_registry()
        with pytest.raises(ApprovalRequired):
            reg.consume(None)
        with pytest.raises(ApprovalRequired):
            reg.consume("token-999")

    def test_expiry_on_virtual_clock(self):
        reg, clock = make_registry(ttl_ms=60_000)
        token = reg.request("x")
        reg.resolve(token.token, "approve")
        clock.advance_to(60_000)
        reg.expire_due(clock.now_ms)
        assert reg.get(token.token).state == "expired"
        with pytest.raises(ApprovalRequired, match="expired"):
            reg.consume(token.token)

    def test_consume_checks_expiry_even_without_tick(self):
        reg, clock = make_registry(ttl_ms=60_000)
        token = reg.request("x")
        reg.resolve(token.token, "approve")
        clock.advance_to(120_000)
        with pytest.raises(ApprovalRequired, match="expired"):
            reg.consume(token.token)


class TestResolution:
    def test_idempotent_repeat_decision(self):
        reg, _ = make_registry()
        token = reg.request("x")
        reg.resolve(token.token, "approve")
        again = reg.resolve(token.token, "approve")  # double-click safe
        assert again.state == "approved"

    def test_conflicting_decision_rejected(self):
        reg, _ = make_registry()
        token = reg.request("x")
        reg.resolve(token.token, "approve")
        with pytest.raises(ValidationError):
            reg.resolve(token.token, "deny")

    def test_resolving_consumed_token_errors(self):
        reg, _ = make_registry()
        token = reg.request("x")
        reg.resolve(token.token, "approve")
        reg.consume(token.token)
        with pytest.raises(ValidationError, match="consumed"):
            reg.resolve(token.token, "approve")

    def test_unknown_token(self):
        reg, _ = make_registry()
        with pytest.raises(NotFoundError):
            reg.resolve("token-404", "approve")

    def test_bad_decision_word(self):
        reg, _ = make_registry()
        token = reg.request("x")
        with pytest.raises(ValidationError):
            reg.resolve(token.token, "maybe")


def test_pending_listing():
    reg, _ = make_registry()
    a = reg.request("a")
    b = reg.request("b")
    reg.resolve(a.token, "approve")
    assert [t.token for t in reg.pending()] == [b.token]
    assert [t["token"] for t in reg.describe("pending")] == [b.token]
