"""Shared domain types: tasks, poses, actions, observations, and attempt history.

Everything here is an immutable value object; the operations are pure
functions, so instances can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Optional

if TYPE_CHECKING:
    from manipbench.dsl import EpisodeScript

# Tabletop workspace, meters. MOVE_TO targets must stay inside.
WORKSPACE_X = (-0.5, 0.5)
WORKSPACE_Y = (-0.5, 0.5)
WORKSPACE_Z = (0.0, 0.6)

DEFAULT_CONTEXT_BUDGET = 6000


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class TaskFamily(str, Enum):
    PICK = "PICK"
    PUSH = "PUSH"
    PULL = "PULL"
    STACK = "STACK"
    PLACE = "PLACE"
    PEG_INSERT = "PEG_INSERT"


class GripCommand(str, Enum):
    OPEN = "open"
    CLOSE = "close"


class ActionKind(str, Enum):
    MOVE_TO = "move_to"
    GRIPPER = "gripper"
    WAIT = "wait"


def normalize_yaw(yaw: float) -> float:
    """Map an angle to (-pi, pi]. Idempotent for values already in range."""
    r = math.remainder(yaw, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "z", "yaw"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"pose.{name} must be finite, got {v!r}")
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "z", float(self.z))

    def xyz(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance_to(self, other: "Pose") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )

    def xy_distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def _in_range(v: float, lohi: tuple[float, float]) -> bool:
    return lohi[0] <= v <= lohi[1]


@dataclass(frozen=True)
class Action:
    """One primitive command: absolute gripper move, grip toggle, or wait."""

    kind: ActionKind
    target: Optional[Pose] = None
    grip: Optional[GripCommand] = None
    ticks: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.MOVE_TO:
            if self.target is None or self.grip is not None or self.ticks is not None:
                raise ValueError("move_to takes exactly a target pose")
            t = self.target
            if not (_in_range(t.x, WORKSPACE_X) and _in_range(t.y, WORKSPACE_Y) and _in_range(t.z, WORKSPACE_Z)):
                raise ValueError(
                    f"move_to target ({t.x}, {t.y}, {t.z}) outside workspace bounds"
                )
        elif self.kind is ActionKind.GRIPPER:
            if self.grip is None or self.target is not None or self.ticks is not None:
                raise ValueError("gripper takes exactly open|close")
        elif self.kind is ActionKind.WAIT:
            if self.ticks is None or self.target is not None or self.grip is not None:
                raise ValueError("wait takes exactly a tick count")
            if not isinstance(self.ticks, int) or self.ticks < 1:
                raise ValueError("wait ticks must be a positive integer")
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown action kind {self.kind!r}")

    @staticmethod
    def move_to(x: float, y: float, z: float, yaw: float = 0.0) -> "Action":
        return Action(ActionKind.MOVE_TO, target=Pose(x, y, z, yaw))

    @staticmethod
    def gripper(grip: GripCommand) -> "Action":
        return Action(ActionKind.GRIPPER, grip=grip)

    @staticmethod
    def wait(ticks: int) -> "Action":
        return Action(ActionKind.WAIT, ticks=ticks)


@dataclass(frozen=True)
class ObjectSpec:
    """Static description of one scene object and its spawn ranges."""

    id: str
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    half_extents: tuple[float, float, float] = (0.02, 0.02, 0.02)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("object id must be non-empty")
        for name, (lo, hi) in (("x_range", self.x_range), ("y_range", self.y_range)):
            if lo > hi:
                raise ValueError(f"{self.id}.{name} must satisfy low <= high")
        if any(h <= 0 for h in self.half_extents):
            raise ValueError(f"{self.id}.half_extents must be positive")


@dataclass(frozen=True)
class SceneRandomization:
    """Per-seed sampling ranges for object poses, yaw, and the goal."""

    objects: tuple[ObjectSpec, ...]
    yaw_range: tuple[float, float] = (0.0, 0.0)
    goal_x_range: tuple[float, float] = (0.0, 0.0)
    goal_y_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.objects:
            raise ValueError("scene needs at least one object")
        for name in ("yaw_range", "goal_x_range", "goal_y_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must satisfy low <= high")


@dataclass(frozen=True)
class SuccessParams:
    """Tolerances for the per-family success predicate."""

    position_tolerance: float = 0.015
    height_threshold: float = 0.1
    clearance: float = 0.001

    def __post_init__(self) -> None:
        if self.position_tolerance <= 0 or self.height_threshold <= 0 or self.clearance <= 0:
            raise ValueError("success tolerances must be strictly positive")


@dataclass(frozen=True)
class TaskSpec:
    id: str
    instruction: str
    scene: SceneRandomization
    success: SuccessParams
    family: TaskFamily

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("task id must be non-empty")
        if not self.instruction.strip():
            raise ValueError("task instruction must be non-empty")


@dataclass(frozen=True)
class Observation:
    """Privileged ground-truth state as delivered to agents."""

    gripper_pose: Pose
    gripper_open: bool
    held_object: Optional[str]
    objects: Mapping[str, Pose]
    tick: int

    def __post_init__(self) -> None:
        if self.held_object is not None and self.held_object not in self.objects:
            raise ValueError(f"held object {self.held_object!r} not present in objects")
        if self.tick < 0:
            raise ValueError("tick must be non-negative")

    def compact_line(self) -> str:
        """Single-line deterministic rendering used in prompts and summaries."""
        g = self.gripper_pose
        parts = [
            f"gripper=({g.x:.4f},{g.y:.4f},{g.z:.4f},{g.yaw:.4f})",
            f"open={self.gripper_open}",
            f"held={self.held_object or '-'}",
            f"tick={self.tick}",
        ]
        objs = ", ".join(
            f"{name}=({p.x:.4f},{p.y:.4f},{p.z:.4f},{p.yaw:.4f})"
            for name, p in sorted(self.objects.items())
        )
        parts.append(f"objects[{objs}]")
        return " ".join(parts)

    def to_json_obj(self) -> dict:
        return {
            "gripper": [self.gripper_pose.x, self.gripper_pose.y, self.gripper_pose.z, self.gripper_pose.yaw],
            "open": self.gripper_open,
            "held": self.held_object,
            "objects": {
                name: [p.x, p.y, p.z, p.yaw] for name, p in sorted(self.objects.items())
            },
            "tick": self.tick,
        }


@dataclass(frozen=True)
class Outcome:
    success: bool
    error: Optional[str]
    final_obs: Observation

    def __post_init__(self) -> None:
        if self.error is not None and self.success:
            raise ValueError("an outcome with an error cannot be a success")


@dataclass(frozen=True)
class ObsSummary:
    """Bounded observation digest kept per attempt: endpoints plus first anomaly."""

    initial: Observation
    final: Observation
    note: Optional[str] = None


@dataclass(frozen=True)
class AttemptRecord:
    index: int
    script: "EpisodeScript"
    observations: ObsSummary
    outcome: Outcome

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("attempt index must be >= 1")


@dataclass(frozen=True)
class Context:
    """Ordered history of prior attempts conditioning the next one."""

    attempts: tuple[AttemptRecord, ...] = ()
    char_budget: int = DEFAULT_CONTEXT_BUDGET

    def __post_init__(self) -> None:
        if self.char_budget < 1:
            raise ValueError("char_budget must be positive")
        indices = [a.index for a in self.attempts]
        if indices != sorted(indices) or len(set(indices)) != len(indices):
            raise ValueError("attempts must be ordered by strictly increasing index")


def context_append(ctx: Context, rec: AttemptRecord) -> Context:
    """Return a new context with *rec* appended; indices must stay contiguous."""
    expected = ctx.attempts[-1].index + 1 if ctx.attempts else 1
    if rec.index != expected:
        raise ContractError(
            f"attempt index {rec.index} does not follow {expected - 1} (expected {expected})"
        )
    return Context(attempts=ctx.attempts + (rec,), char_budget=ctx.char_budget)


def _attempt_header(rec: AttemptRecord) -> str:
    status = "SUCCESS" if rec.outcome.success else "FAILURE"
    suffix = f" (error: {rec.outcome.error})" if rec.outcome.error else ""
    return f"=== Attempt {rec.index}: {status}{suffix} ==="


def _render_attempt_full(rec: AttemptRecord) -> str:
    lines = [_attempt_header(rec), "script:", rec.script.source_text.rstrip("\n")]
    lines.append(f"initial: {rec.observations.initial.compact_line()}")
    lines.append(f"final: {rec.observations.final.compact_line()}")
    if rec.observations.note:
        lines.append(f"note: {rec.observations.note}")
    return "\n".join(lines)


def context_render(ctx: Context) -> str:
    """Deterministic text rendering of the attempt history for prompt inclusion.

    When the full rendering exceeds the budget, older attempts are compacted
    to their one-line header (oldest first) and then dropped entirely; the
    newest attempt always stays intact. Everything except the newest block
    fits inside char_budget.
    """
    if not ctx.attempts:
        return ""
    newest = _render_attempt_full(ctx.attempts[-1])
    older = list(ctx.attempts[:-1])
    parts = [_render_attempt_full(a) for a in older]

    def prefix_cost(prefix: list[str]) -> int:
        # each prefix part is followed by one separating newline
        return sum(len(p) + 1 for p in prefix)

    i = 0
    while prefix_cost(parts) > ctx.char_budget and i < len(parts):
        parts[i] = _attempt_header(older[i])
        i += 1

    dropped = 0
    while parts and prefix_cost(_with_marker(parts, dropped)) > ctx.char_budget:
        parts.pop(0)
        dropped += 1
    parts = _with_marker(parts, dropped)
    if parts and prefix_cost(parts) > ctx.char_budget:
        parts = []  # budget smaller than even the omission marker
    return "\n".join(parts + [newest])


def _with_marker(parts: list[str], dropped: int) -> list[str]:
    if dropped == 0:
        return parts
    return [f"[{dropped} earlier attempts omitted]"] + parts
