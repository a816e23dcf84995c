"""Turn loop orchestration: prompt assembly, tool dispatch, attempt accounting.

One reasoner emission is one turn; an emission carries one or more tool
calls (an LLM reply with a script becomes WRITE_SCRIPT + EXEC_SCRIPT).
Every executed script resets the environment to the run's fixed seed, so
attempts stay comparable. FINISH is verified by a fresh re-execution of the
named script; the claim is only honored if that re-execution succeeds.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Protocol

from manipbench.domain import (
    AttemptRecord,
    Context,
    Observation,
    TaskSpec,
    context_append,
    context_render,
    DEFAULT_CONTEXT_BUDGET,
)
from manipbench.dsl import EpisodeScript, ParseError, Trace, execute, parse, summarize
from manipbench.ledger import ResourceLedger, ledger_record, synthetic_tokens
from manipbench.prompts import (
    DEFAULT_COACHING_TIPS,
    DEFAULT_TEMPLATE,
    PromptTemplate,
    fetch_doc,
    render_prompt,
)

TURN_FAILURE_KIND = "turn_failure"


class ToolKind(str, Enum):
    WRITE_SCRIPT = "WRITE_SCRIPT"
    EXEC_SCRIPT = "EXEC_SCRIPT"
    READ = "READ"
    FETCH_DOC = "FETCH_DOC"
    FINISH = "FINISH"
    GIVE_UP = "GIVE_UP"


@dataclass(frozen=True)
class ToolCall:
    kind: ToolKind
    name: str = ""
    payload: str = ""

    @staticmethod
    def write_script(name: str, payload: str) -> "ToolCall":
        return ToolCall(ToolKind.WRITE_SCRIPT, name=name, payload=payload)

    @staticmethod
    def exec_script(name: str) -> "ToolCall":
        return ToolCall(ToolKind.EXEC_SCRIPT, name=name)

    @staticmethod
    def read(name: str) -> "ToolCall":
        return ToolCall(ToolKind.READ, name=name)

    @staticmethod
    def fetch_doc(key: str) -> "ToolCall":
        return ToolCall(ToolKind.FETCH_DOC, payload=key)

    @staticmethod
    def finish(name: str) -> "ToolCall":
        return ToolCall(ToolKind.FINISH, name=name)

    @staticmethod
    def give_up() -> "ToolCall":
        return ToolCall(ToolKind.GIVE_UP)


@dataclass(frozen=True)
class RunView:
    """Everything a reasoner may condition on: instruction, tools, history."""

    task: TaskSpec
    prompt: str
    initial_obs: Observation
    context: Context
    transcript: tuple[tuple[ToolCall, str], ...]


class Reasoner(Protocol):
    def next_turn(self, view: RunView) -> tuple[ToolCall, ...]: ...


class ReasonerTurnError(RuntimeError):
    """A turn that produced no usable tool calls; the run continues."""


@dataclass
class Workspace:
    """Named text artifacts plus an append-only audit list of dispatches."""

    artifacts: dict[str, str] = field(default_factory=dict)
    audit: list[tuple[int, ToolCall]] = field(default_factory=list)

    def write(self, name: str, payload: str) -> None:
        self.artifacts[name] = payload

    def read(self, name: str) -> str:
        return self.artifacts[name]

    def has(self, name: str) -> bool:
        return name in self.artifacts


class RunCondition(str, Enum):
    PILOT = "pilot"
    BASELINE = "baseline"
    COACHING = "coaching"


@dataclass(frozen=True)
class RunPolicy:
    trial_cap: Optional[int] = None
    max_turns: int = 200
    condition: RunCondition = RunCondition.BASELINE

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValueError("max_turns must be positive")
        if self.trial_cap is not None and self.trial_cap < 1:
            raise ValueError("trial_cap must be positive when present")
        if self.condition is RunCondition.PILOT and self.trial_cap is None:
            raise ValueError("the pilot condition requires a trial cap")
        if self.condition is RunCondition.BASELINE and self.trial_cap is not None:
            raise ValueError("the baseline condition runs without a trial cap")

    @staticmethod
    def pilot(cap: int = 10) -> "RunPolicy":
        return RunPolicy(trial_cap=cap, condition=RunCondition.PILOT)

    @staticmethod
    def baseline() -> "RunPolicy":
        return RunPolicy(condition=RunCondition.BASELINE)

    @staticmethod
    def coaching() -> "RunPolicy":
        return RunPolicy(condition=RunCondition.COACHING)


@dataclass(frozen=True)
class RunResult:
    success: bool
    num_tries: int
    num_turns: int
    final_script: Optional[EpisodeScript]
    context: Context
    ledger: ResourceLedger

    def __post_init__(self) -> None:
        if self.success and self.final_script is None:
            raise ValueError("a successful run must carry its final script")


@dataclass(frozen=True)
class TraceRecord:
    """One tool dispatch; the turn field groups calls of one emission."""

    turn: int
    kind: str
    name: str
    payload_hash: str
    payload: str
    result_summary: str
    wall_ms: int

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "turn": self.turn,
                "kind": self.kind,
                "name": self.name,
                "payload_hash": self.payload_hash,
                "payload": self.payload,
                "result_summary": self.result_summary,
                "wall_ms": self.wall_ms,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json_obj(obj: dict) -> "TraceRecord":
        return TraceRecord(
            turn=int(obj["turn"]),
            kind=str(obj["kind"]),
            name=str(obj.get("name", "")),
            payload_hash=str(obj.get("payload_hash", "")),
            payload=str(obj.get("payload", "")),
            result_summary=str(obj.get("result_summary", "")),
            wall_ms=int(obj.get("wall_ms", 0)),
        )


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def canonical_obs_json(obs: Observation) -> str:
    return json.dumps(obs.to_json_obj(), sort_keys=True, separators=(",", ":"))


def obs_sequence_sha(initial: Observation, trace: Trace) -> str:
    """Deterministic digest of an execution's observation sequence."""
    lines = [canonical_obs_json(initial)]
    lines.extend(canonical_obs_json(step.post) for step in trace.steps)
    return sha256_text("\n".join(lines))


def exec_result_summary(initial: Observation, trace: Trace) -> str:
    return json.dumps(
        {
            "success": trace.outcome.success,
            "error": trace.outcome.error,
            "statements": len(trace.steps),
            "initial_obs": initial.to_json_obj(),
            "final_obs": trace.outcome.final_obs.to_json_obj(),
            "obs_sha": obs_sequence_sha(initial, trace),
        },
        sort_keys=True,
    )


def build_prompt(
    task: TaskSpec,
    template: PromptTemplate,
    tips: Optional[tuple[str, ...]],
    initial_obs: Observation,
    ctx: Context,
    exemplar: Optional[str] = None,
) -> str:
    parts = [render_prompt(task, template, tips)]
    if exemplar:
        parts.append(
            "## Example solved episode (from a previously solved task)\n```\n"
            + exemplar.strip()
            + "\n```"
        )
    parts.append("## Current scene (privileged observation)\n" + initial_obs.compact_line())
    history = context_render(ctx)
    if history:
        parts.append("## Previous attempts\n" + history)
    return "\n\n".join(parts)


class _DispatchFailure(Exception):
    """Internal: a tool call that could not be honored this turn."""


def run_task(
    task: TaskSpec,
    reasoner: Reasoner,
    policy: RunPolicy,
    env,
    seed: int,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    coaching_tips: Optional[tuple[str, ...]] = None,
    exemplar: Optional[str] = None,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
) -> RunResult:
    """Drive one full run of the turn loop; returns the accounted result.

    The loop ends on FINISH or GIVE_UP, when the trial cap is exhausted by a
    failing attempt, or at max_turns. Malformed reasoner output is recorded
    as a failed turn and the loop continues.
    """
    ledger = ResourceLedger()
    workspace = Workspace()
    ctx = Context(attempts=(), char_budget=context_budget)
    initial_obs = env.reset(task, seed)
    transcript: list[tuple[ToolCall, str]] = []

    tips: Optional[tuple[str, ...]] = None
    if policy.condition is RunCondition.COACHING:
        tips = tuple(coaching_tips) if coaching_tips else DEFAULT_COACHING_TIPS

    run_started = time.monotonic()
    success = False
    final_script: Optional[EpisodeScript] = None
    turn = 0
    ended = False

    def emit(record: TraceRecord) -> None:
        if on_record is not None:
            on_record(record)

    while not ended and turn < policy.max_turns:
        turn += 1
        prompt = build_prompt(task, template, tips, initial_obs, ctx, exemplar)
        view = RunView(
            task=task,
            prompt=prompt,
            initial_obs=initial_obs,
            context=ctx,
            transcript=tuple(transcript),
        )
        ledger = ledger_record(ledger, "turn")
        turn_started = time.monotonic()
        try:
            calls = tuple(reasoner.next_turn(view))
        except ReasonerTurnError as exc:
            wall = int((time.monotonic() - turn_started) * 1000)
            emit(
                TraceRecord(
                    turn=turn,
                    kind=TURN_FAILURE_KIND,
                    name="",
                    payload_hash=sha256_text(""),
                    payload="",
                    result_summary=f"error: {exc}",
                    wall_ms=wall,
                )
            )
            continue

        tokens = getattr(reasoner, "last_token_count", None)
        if tokens is None:
            tokens = sum(synthetic_tokens(c.name + c.payload) for c in calls)
        ledger = ledger_record(ledger, "tokens", tokens)

        executed_this_turn = 0
        for call in calls:
            call_started = time.monotonic()
            ledger = ledger_record(ledger, "tool", call.kind.value)
            workspace.audit.append((turn, call))
            try:
                if call.kind is ToolKind.WRITE_SCRIPT:
                    if not call.payload:
                        raise _DispatchFailure("WRITE_SCRIPT requires a non-empty payload")
                    workspace.write(call.name, call.payload)
                    summary = f"stored {len(call.payload)} chars"

                elif call.kind is ToolKind.EXEC_SCRIPT:
                    if not workspace.has(call.name):
                        raise _DispatchFailure(f"no artifact named {call.name!r}")
                    if policy.trial_cap is not None and ledger.tries >= policy.trial_cap:
                        raise _DispatchFailure("trial cap reached")
                    if executed_this_turn >= 1:
                        raise _DispatchFailure("one execution per turn")
                    try:
                        script = parse(workspace.read(call.name))
                    except ParseError as exc:
                        raise _DispatchFailure(f"parse error: {exc}") from exc
                    attempt_initial = env.reset(task, seed)
                    trace = execute(script, env)
                    executed_this_turn += 1
                    ledger = ledger_record(ledger, "try")
                    rec = AttemptRecord(
                        index=len(ctx.attempts) + 1,
                        script=script,
                        observations=summarize(trace),
                        outcome=trace.outcome,
                    )
                    ctx = context_append(ctx, rec)
                    summary = exec_result_summary(attempt_initial, trace)

                elif call.kind is ToolKind.READ:
                    if not workspace.has(call.name):
                        raise _DispatchFailure(f"no artifact named {call.name!r}")
                    summary = workspace.read(call.name)

                elif call.kind is ToolKind.FETCH_DOC:
                    key = call.payload or call.name
                    try:
                        summary = fetch_doc(key)
                    except KeyError as exc:
                        raise _DispatchFailure(str(exc)) from exc

                elif call.kind is ToolKind.FINISH:
                    if not workspace.has(call.name):
                        raise _DispatchFailure(f"no artifact named {call.name!r}")
                    try:
                        script = parse(workspace.read(call.name))
                    except ParseError as exc:
                        raise _DispatchFailure(f"parse error: {exc}") from exc
                    verify_initial = env.reset(task, seed)
                    verify_trace = execute(script, env)
                    verified = verify_trace.outcome.success
                    if verified:
                        success = True
                        final_script = script
                    summary = json.dumps(
                        {
                            "verified": verified,
                            "obs_sha": obs_sequence_sha(verify_initial, verify_trace),
                        },
                        sort_keys=True,
                    )
                    ended = True

                else:  # GIVE_UP
                    summary = "give_up"
                    ended = True

            except _DispatchFailure as exc:
                summary = f"error: {exc}"

            wall = int((time.monotonic() - call_started) * 1000)
            emit(
                TraceRecord(
                    turn=turn,
                    kind=call.kind.value,
                    name=call.name,
                    payload_hash=sha256_text(call.payload),
                    payload=call.payload,
                    result_summary=summary,
                    wall_ms=wall,
                )
            )
            transcript.append((call, summary))

            if (
                policy.trial_cap is not None
                and ledger.tries >= policy.trial_cap
                and ctx.attempts
                and not ctx.attempts[-1].outcome.success
            ):
                ended = True
            if ended:
                break

    ledger = ledger_record(ledger, "wall", int((time.monotonic() - run_started) * 1000))
    return RunResult(
        success=success,
        num_tries=ledger.tries,
        num_turns=turn,
        final_script=final_script,
        context=ctx,
        ledger=ledger,
    )
