"""Reasoner handles that drive the turn loop.

All reasoners see only the rendered prompt, the accumulated context, and
tool results; none can touch the environment directly. Handles are
stateless between runs apart from declared schedules, so a fresh instance
per run reproduces identical behavior.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

from manipbench.artifacts import TraceLoadError, load_trace_records
from manipbench.domain import Action, ActionKind
from manipbench.dsl import EpisodeScript, serialize
from manipbench.engine import (
    ReasonerTurnError,
    RunView,
    ToolCall,
    ToolKind,
    TURN_FAILURE_KIND,
)
from manipbench.planner import plan_for

SCRIPT_NAME = "episode"

_FENCED_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


class GiveUpReasoner:
    """Degenerate reasoner: concludes immediately that attempts are futile."""

    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]:
        return (ToolCall.give_up(),)


class OracleReasoner:
    """Analytic planner wrapper: one deliberate attempt, then finish or fold.

    With a fixed seed a retry would replay the identical trajectory, so a
    failed first attempt means further attempts are unlikely to succeed.
    """

    def plan_script(self, view: RunView) -> EpisodeScript:
        return plan_for(view.task, view.initial_obs)

    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]:
        attempts = view.context.attempts
        if not attempts:
            script = self.plan_script(view)
            return (
                ToolCall.write_script(SCRIPT_NAME, serialize(script)),
                ToolCall.exec_script(SCRIPT_NAME),
            )
        if attempts[-1].outcome.success:
            return (ToolCall.finish(SCRIPT_NAME),)
        return (ToolCall.give_up(),)


@dataclass(frozen=True)
class Perturbation:
    """Rigid offset applied to every move_to target of an attempt."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0

    def apply(self, script: EpisodeScript) -> EpisodeScript:
        actions = []
        for a in script.statements:
            if a.kind is ActionKind.MOVE_TO:
                t = a.target
                actions.append(
                    Action.move_to(t.x + self.dx, t.y + self.dy, t.z + self.dz, t.yaw)
                )
            else:
                actions.append(a)
        return EpisodeScript.from_actions(actions)


class NoisyReasoner:
    """Wraps a planning reasoner; attempt k gets schedule[k] applied to its
    script, and attempts past the schedule run the base plan unchanged.
    Whether to retry is decided purely from the observed failure history."""

    def __init__(self, base, schedule: Sequence[Perturbation]):
        self.base = base
        self.schedule = tuple(schedule)

    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]:
        attempts = view.context.attempts
        if attempts and attempts[-1].outcome.success:
            return (ToolCall.finish(SCRIPT_NAME),)
        k = len(attempts) + 1
        if attempts and k > len(self.schedule) + 1:
            return (ToolCall.give_up(),)
        script = self.base.plan_script(view)
        if k <= len(self.schedule):
            script = self.schedule[k - 1].apply(script)
        return (
            ToolCall.write_script(SCRIPT_NAME, serialize(script)),
            ToolCall.exec_script(SCRIPT_NAME),
        )


def reasoner_noisy(base, schedule: Sequence[Perturbation | float]) -> NoisyReasoner:
    """Build a schedule-perturbed wrapper; bare floats mean a z offset."""
    coerced = tuple(
        p if isinstance(p, Perturbation) else Perturbation(dz=float(p)) for p in schedule
    )
    return NoisyReasoner(base, coerced)


# -- LLM-backed reasoner -----------------------------------------------------


@dataclass
class LLMConfig:
    endpoint: str
    model: str
    max_tokens: int = 1024
    api_key: Optional[str] = None
    timeout_s: float = 60.0
    retries: int = 3
    backoff_s: float = 1.0
    transcript_tail: int = 6
    # injectable for tests; defaults to an HTTP POST
    transport: Optional[Callable[[dict, "LLMConfig"], dict]] = None


def _http_transport(payload: dict, config: LLMConfig) -> dict:
    headers = {"content-type": "application/json"}
    if config.api_key:
        headers["authorization"] = f"Bearer {config.api_key}"
    resp = requests.post(
        config.endpoint, json=payload, headers=headers, timeout=config.timeout_s
    )
    resp.raise_for_status()
    return resp.json()


class LLMReasoner:
    """Chat-completion-backed reasoner.

    Each turn posts {model, messages, max_tokens} and expects either exactly
    one fenced script block (dispatched as WRITE_SCRIPT + EXEC_SCRIPT) or a
    literal FINISH / GIVE_UP token. Transport failures retry with exponential
    backoff before surfacing as a failed turn.
    """

    def __init__(self, config: LLMConfig):
        self.config = config
        self.last_token_count: Optional[int] = None

    def _request(self, prompt: str) -> dict:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": self.config.max_tokens,
        }
        transport = self.config.transport or _http_transport
        last_exc: Optional[Exception] = None
        for attempt in range(self.config.retries):
            try:
                return transport(payload, self.config)
            except Exception as exc:  # noqa: BLE001 - any transport fault retries
                last_exc = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(self.config.backoff_s * (2**attempt))
        raise ReasonerTurnError(f"transport failure after {self.config.retries} attempts: {last_exc}")

    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]:
        self.last_token_count = None
        prompt = view.prompt
        tail = view.transcript[-self.config.transcript_tail :]
        if tail:
            rendered = "\n".join(
                f"[{call.kind.value} {call.name}] -> {result[:2000]}"
                for call, result in tail
            )
            prompt = prompt + "\n\n## Recent tool results\n" + rendered

        data = self._request(prompt)
        try:
            reply = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ReasonerTurnError(f"malformed completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        if isinstance(usage.get("completion_tokens"), int):
            self.last_token_count = usage["completion_tokens"]

        blocks = _FENCED_RE.findall(reply)
        if len(blocks) > 1:
            raise ReasonerTurnError("ambiguous script: reply contains multiple fenced blocks")
        if len(blocks) == 1:
            return (
                ToolCall.write_script(SCRIPT_NAME, blocks[0].strip("\n")),
                ToolCall.exec_script(SCRIPT_NAME),
            )
        if re.search(r"\bGIVE_UP\b", reply):
            return (ToolCall.give_up(),)
        if re.search(r"\bFINISH\b", reply):
            name = _last_written_name(view)
            if name is None:
                raise ReasonerTurnError("FINISH with no previously written script")
            return (ToolCall.finish(name),)
        raise ReasonerTurnError("reply carries no script block and no control token")


def _last_written_name(view: RunView) -> Optional[str]:
    for call, _ in reversed(view.transcript):
        if call.kind is ToolKind.WRITE_SCRIPT:
            return call.name
    return None


def reasoner_llm(config: LLMConfig) -> LLMReasoner:
    return LLMReasoner(config)


# -- trace replay ------------------------------------------------------------


class ReplayReasoner:
    """Re-emits a recorded tool-call sequence verbatim, one turn at a time.

    Results are recomputed by the engine, never copied from the log; a
    replay against a different seed may therefore fail honestly.
    """

    def __init__(self, turns: Sequence[tuple[ToolCall, ...]]):
        self._turns = list(turns)
        self._cursor = 0

    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]:
        if self._cursor >= len(self._turns):
            return (ToolCall.give_up(),)
        calls = self._turns[self._cursor]
        self._cursor += 1
        return calls


def reasoner_replay(trace_file: str | Path) -> ReplayReasoner:
    """Load a trace log into a replay handle; malformed logs fail to load."""
    records = load_trace_records(trace_file)
    turns: dict[int, list[ToolCall]] = {}
    for rec in records:
        if rec.kind == TURN_FAILURE_KIND:
            continue
        try:
            kind = ToolKind(rec.kind)
        except ValueError as exc:
            raise TraceLoadError(f"unknown tool kind {rec.kind!r}") from exc
        turns.setdefault(rec.turn, []).append(
            ToolCall(kind=kind, name=rec.name, payload=rec.payload)
        )
    ordered = [tuple(turns[t]) for t in sorted(turns)]
    return ReplayReasoner(ordered)
