"""Headless operator surface: boot the stack, drive the clock, submit intents,
inspect traces, resolve approvals. Every command other than `run` is a pure
HTTP client of a stack in another process.

Exit codes: 0 success, 1 domain/API error, 2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
import time

import click

from .clock import parse_duration_ms
from .errors import ValidationError

DEFAULT_URL = "http://127.0.0.1:8640"
ENV_URL = "NETINTENT_URL"


def _base_url() -> str:
    return os.environ.get(ENV_URL, DEFAULT_URL).rstrip("/")


def _request(method: str, path: str, **kwargs):
    import requests  # deferred: keeps bare CLI invocations fast

    url = _base_url() + path
    try:
        resp = requests.request(method, url, timeout=kwargs.pop("timeout", 30), **kwargs)
    except requests.RequestException as exc:
        raise click.ClickException(f"cannot reach stack at {url}: {exc}") from exc
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("error", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{method} {path} -> {resp.status_code}: {detail}")
    return resp


@click.group()
def main() -> None:
    """Operator CLI for the intent-driven network stack."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--realtime", is_flag=True, help="advance one tick per wall second")
def run(config_path: str, realtime: bool) -> None:
    """Boot the full stack and serve until interrupted."""
    from .server import StackServer  # deferred: only `run` needs the heavy stack
    from .stack import Stack, StackConfig

    try:
        config = StackConfig.from_file(config_path)
        stack = Stack(config)
        server = StackServer(stack)
    except ValidationError as exc:
        raise click.ClickException(str(exc)) from exc
    except OSError as exc:
        raise click.ClickException(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    click.echo(f"listening on {server.base_url}", err=False)
    sys.stdout.flush()
    if realtime:
        import threading

        def _free_run() -> None:
            while True:
                time.sleep(stack.clock.tick_ms / 1000.0)
                stack.advance_clock(stack.clock.tick_ms)

        threading.Thread(target=_free_run, daemon=True).start()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


@main.group()
def clock() -> None:
    """Virtual clock control."""


@clock.command("advance")
@click.argument("duration")
def clock_advance(duration: str) -> None:
    """Advance the virtual clock, e.g. `clock advance 3m`."""
    try:
        ms = parse_duration_ms(duration)
    except ValidationError as exc:
        raise click.UsageError(str(exc)) from exc
    resp = _request("POST", "/clock/advance", json={"duration_ms": ms})
    body = resp.json()
    click.echo(f"now {body['now_iso']} ({body['now_ms']} ms)")


@clock.command("show")
def clock_show() -> None:
    body = _request("GET", "/clock").json()
    click.echo(f"now {body['now_iso']} ({body['now_ms']} ms, tick {body['tick_ms']} ms)")


@main.group()
def intent() -> None:
    """Submit and inspect intents."""


@intent.command("submit")
@click.argument("text")
@click.option("--follow", is_flag=True, help="stream transcript entries until the run ends")
def intent_submit(text: str, follow: bool) -> None:
    resp = _request("POST", "/intents", json={"text": text})
    intent_id = resp.json()["intent_id"]
    click.echo(intent_id)
    if not follow:
        return
    index = 0
    while True:
        trace = _request("GET", f"/intents/{intent_id}/trace").json()
        for entry in trace["entries"][index:]:
            click.echo(json.dumps(entry, sort_keys=True))
            index += 1
        if trace["intent"]["status"] in ("done", "failed", "stopped"):
            break
        time.sleep(0.2)


@intent.command("trace")
@click.argument("intent_id")
@click.option("--json", "as_json", is_flag=True, help="print raw transcript JSON")
def intent_trace(intent_id: str, as_json: bool) -> None:
    trace = _request("GET", f"/intents/{intent_id}/trace").json()
    if as_json:
        click.echo(json.dumps(trace, sort_keys=True))
        return
    info = trace["intent"]
    click.echo(f"intent {info['intent_id']} [{info['status']}]: {info['text']}")
    for entry in trace["entries"]:
        kind = entry["type"]
        if kind == "turn":
            turn = entry["turn"]
            if turn["kind"] == "tool_call":
                click.echo(
                    f"  #{entry['index']} tool_call {turn['tool_name']} "
                    f"{json.dumps(turn['arguments'], sort_keys=True)}"
                )
            else:
                click.echo(f"  #{entry['index']} {turn['kind']}: {turn.get('text', '')}")
        elif kind == "observation":
            result = entry["result"]
            status = "error" if result["isError"] else "ok"
            click.echo(f"  #{entry['index']} observation [{entry['tool']}] {status}")
        elif kind == "validator":
            click.echo(f"  #{entry['index']} validator {entry['verdict']}: {entry.get('detail')}")
        elif kind == "final":
            click.echo(f"  #{entry['index']} final: {entry['text']}")
        elif kind == "status":
            click.echo(f"  #{entry['index']} status -> {entry['status']}")
    if info.get("final_answer"):
        click.echo(f"final answer: {info['final_answer']}")


@intent.command("show")
@click.argument("intent_id")
def intent_show(intent_id: str) -> None:
    click.echo(json.dumps(_request("GET", f"/intents/{intent_id}").json(), sort_keys=True))


@main.command()
@click.argument("token")
@click.option("--decision", type=click.Choice(["approve", "deny"]), required=True)
def approve(token: str, decision: str) -> None:
    """Resolve a pending approval token."""
    body = _request("POST", f"/approvals/{token}", json={"decision": decision}).json()
    click.echo(f"{body['token']} {body['state']}")


@main.group()
def schedules() -> None:
    """Scheduled policy actions."""


@schedules.command("list")
def schedules_list() -> None:
    for action in _request("GET", "/schedules").json():
        change = action["change"]
        window = action["window"]
        click.echo(
            f"{action['action_id']} [{action['state']}] slice={change['slice_name']} "
            f"{change['field']} {change['mode']} {change['amount']} "
            f"window {window['start']}-{window['end']} {','.join(window['days'])}"
        )


@main.group()
def collections() -> None:
    """Telemetry collections."""


@collections.command("list")
def collections_list() -> None:
    for info in _request("GET", "/collections").json():
        click.echo(
            f"{info['name']} count={info['count']} ts=[{info['min_ts']}..{info['max_ts']}]"
        )


if __name__ == "__main__":
    main()
