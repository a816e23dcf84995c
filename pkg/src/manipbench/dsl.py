"""Closed episode-script language: grammar, parser, serializer, executor.

One statement per line:

    move_to <x> <y> <z> [yaw]
    gripper open|close
    wait <ticks>

``#`` starts a comment; blank lines are ignored; numbers are plain decimals
(no exponents, no inf/nan). Serialization is canonical: yaw is always
explicit, so ``parse(serialize(s))`` reproduces the statements exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from manipbench.domain import (
    Action,
    ActionKind,
    GripCommand,
    Observation,
    Outcome,
)

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)\Z")
_INT_RE = re.compile(r"\d+\Z")

EPISODE_FILE_EXTENSION = ".episode"


class ParseError(ValueError):
    """Malformed script text; carries the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ExecError(RuntimeError):
    """Raised by environments when a step cannot be applied."""


def _parse_number(token: str, line_no: int, what: str) -> float:
    if not _NUMBER_RE.match(token):
        raise ParseError(line_no, f"{what} must be a decimal number, got {token!r}")
    return float(token)


def format_number(x: float) -> str:
    """Shortest decimal text that parses back to exactly *x*, never exponent form."""
    s = repr(float(x))
    if "e" in s or "E" in s:
        s = format(Decimal(float(x)), "f")
    return s


@dataclass(frozen=True)
class EpisodeScript:
    """An ordered action program. Equality compares statements only."""

    statements: tuple[Action, ...]
    source_text: str = field(compare=False)

    def __len__(self) -> int:
        return len(self.statements)

    @staticmethod
    def from_actions(actions: tuple[Action, ...] | list[Action]) -> "EpisodeScript":
        acts = tuple(actions)
        return EpisodeScript(statements=acts, source_text=serialize_actions(acts))


def parse(text: str) -> EpisodeScript:
    """Parse script text; raises ParseError with the offending line number."""
    statements: list[Action] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        verb = tokens[0]
        args = tokens[1:]
        if verb == "move_to":
            if len(args) not in (3, 4):
                raise ParseError(line_no, f"move_to takes 3 or 4 arguments, got {len(args)}")
            x = _parse_number(args[0], line_no, "x")
            y = _parse_number(args[1], line_no, "y")
            z = _parse_number(args[2], line_no, "z")
            yaw = _parse_number(args[3], line_no, "yaw") if len(args) == 4 else 0.0
            try:
                statements.append(Action.move_to(x, y, z, yaw))
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from exc
        elif verb == "gripper":
            if len(args) != 1:
                raise ParseError(line_no, f"gripper takes 1 argument, got {len(args)}")
            if args[0] not in ("open", "close"):
                raise ParseError(line_no, f"gripper argument must be open|close, got {args[0]!r}")
            statements.append(Action.gripper(GripCommand(args[0])))
        elif verb == "wait":
            if len(args) != 1:
                raise ParseError(line_no, f"wait takes 1 argument, got {len(args)}")
            if not _INT_RE.match(args[0]) or int(args[0]) < 1:
                raise ParseError(line_no, f"wait ticks must be a positive integer, got {args[0]!r}")
            statements.append(Action.wait(int(args[0])))
        else:
            raise ParseError(line_no, f"unknown verb {verb!r}")
    return EpisodeScript(statements=tuple(statements), source_text=text)


def serialize_actions(actions: tuple[Action, ...]) -> str:
    lines = []
    for a in actions:
        if a.kind is ActionKind.MOVE_TO:
            t = a.target
            lines.append(
                "move_to "
                + " ".join(format_number(v) for v in (t.x, t.y, t.z, t.yaw))
            )
        elif a.kind is ActionKind.GRIPPER:
            lines.append(f"gripper {a.grip.value}")
        else:
            lines.append(f"wait {a.ticks}")
    return "\n".join(lines)


def serialize(script: EpisodeScript) -> str:
    """Canonical text for a script; round-trips through parse()."""
    return serialize_actions(script.statements)


@dataclass(frozen=True)
class TraceStep:
    action: Action
    pre: Observation
    post: Observation


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]
    outcome: Outcome
    events: tuple[tuple[int, str], ...] = ()  # (statement index, note)


def execute(script: EpisodeScript, env) -> Trace:
    """Apply statements in order via env.step(); one execution = one try.

    A step error truncates the trace and is recorded in the outcome; the
    success flag is env.check_success() after the last statement.
    """
    steps: list[TraceStep] = []
    events: list[tuple[int, str]] = []
    error: Optional[str] = None
    for idx, action in enumerate(script.statements, start=1):
        pre = env.get_obs()
        try:
            post = env.step(action)
        except ExecError as exc:
            error = str(exc)
            break
        for note in getattr(env, "last_step_events", ()):
            events.append((idx, note))
        steps.append(TraceStep(action=action, pre=pre, post=post))
    final_obs = env.get_obs()
    success = bool(env.check_success()) if error is None else False
    outcome = Outcome(success=success, error=error, final_obs=final_obs)
    return Trace(steps=tuple(steps), outcome=outcome, events=tuple(events))


def summarize(trace: Trace) -> "ObsSummary":
    """Bounded per-attempt observation summary: endpoints + first anomaly note."""
    from manipbench.domain import ObsSummary

    initial = trace.steps[0].pre if trace.steps else trace.outcome.final_obs
    note = None
    if trace.events:
        stmt, text = trace.events[0]
        note = f"statement {stmt}: {text}"
    elif trace.outcome.error:
        note = trace.outcome.error
    return ObsSummary(initial=initial, final=trace.outcome.final_obs, note=note)
