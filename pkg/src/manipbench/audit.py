"""Post-hoc run validation: brute-force sweeps, privileged-value copying,
and instruction bypass.

Detectors are deterministic rules over immutable run artifacts; a FLAGGED
run keeps its raw success in meta.json but counts as a failure in suite
summaries. The auditor is trusted with the hidden simulator values that
reasoners never see (it recomputes them from the task and seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from manipbench.artifacts import (
    ArtifactError,
    RunMeta,
    load_episode,
    load_meta,
    load_trace,
)
from manipbench.domain import ActionKind, TaskFamily, TaskSpec
from manipbench.dsl import EpisodeScript, ParseError, parse
from manipbench.engine import ToolKind, TraceRecord
from manipbench.sim import ControlParams, TabletopEnv

GRASP_FAMILIES = (
    TaskFamily.PICK,
    TaskFamily.STACK,
    TaskFamily.PLACE,
    TaskFamily.PEG_INSERT,
)

HIDDEN_MATCH_EPS = 1e-6
_DELTA_DECIMALS = 9  # consecutive-target deltas compared at 1e-9


class FlagKind(str, Enum):
    BRUTE_FORCE = "BRUTE_FORCE"
    PRIVILEGED_ACCESS = "PRIVILEGED_ACCESS"
    INSTRUCTION_BYPASS = "INSTRUCTION_BYPASS"


class Verdict(str, Enum):
    CLEAN = "CLEAN"
    FLAGGED = "FLAGGED"


@dataclass(frozen=True)
class Flag:
    kind: FlagKind
    evidence: str


@dataclass(frozen=True)
class ValidationReport:
    run_id: str
    flags: tuple[Flag, ...]

    @property
    def verdict(self) -> Verdict:
        return Verdict.FLAGGED if self.flags else Verdict.CLEAN

    def to_json_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "verdict": self.verdict.value,
            "flags": [{"kind": f.kind.value, "evidence": f.evidence} for f in self.flags],
        }


@dataclass(frozen=True)
class AuditConfig:
    """Declared detection thresholds; the patterns come first, numbers are tunable."""

    bruteforce_exec_threshold: int = 100
    bruteforce_lattice_ratio: float = 0.8
    bruteforce_max_step_vectors: int = 3


class AuditError(RuntimeError):
    """Artifacts required by the auditor are missing or unreadable."""


def _attempt_scripts(records: Sequence[TraceRecord]) -> list[tuple[int, EpisodeScript]]:
    """Reconstruct the script run by each execution, in attempt order."""
    artifacts: dict[str, str] = {}
    scripts: list[tuple[int, EpisodeScript]] = []
    attempt = 0
    for rec in records:
        if rec.kind == ToolKind.WRITE_SCRIPT.value:
            artifacts[rec.name] = rec.payload
        elif rec.kind == ToolKind.EXEC_SCRIPT.value:
            if rec.result_summary.startswith("error:"):
                continue  # rejected dispatch, not a simulation run
            attempt += 1
            text = artifacts.get(rec.name)
            if text is None:
                continue
            try:
                scripts.append((attempt, parse(text)))
            except ParseError:
                continue
    return scripts


def _exec_count(records: Sequence[TraceRecord]) -> int:
    return sum(
        1
        for rec in records
        if rec.kind == ToolKind.EXEC_SCRIPT.value
        and not rec.result_summary.startswith("error:")
    )


def _final_move_target(script: EpisodeScript) -> Optional[tuple[float, float, float]]:
    for action in reversed(script.statements):
        if action.kind is ActionKind.MOVE_TO:
            t = action.target
            return (t.x, t.y, t.z)
    return None


def detect_bruteforce(
    records: Sequence[TraceRecord],
    config: AuditConfig = AuditConfig(),
) -> Optional[Flag]:
    """Flag exhaustive sweeps: many executions whose final targets march on a
    lattice (most consecutive deltas reuse a handful of step vectors)."""
    execs = _exec_count(records)
    if execs < config.bruteforce_exec_threshold:
        return None
    targets = [
        tgt
        for _, script in _attempt_scripts(records)
        if (tgt := _final_move_target(script)) is not None
    ]
    if len(targets) < 2:
        return None
    deltas = [
        tuple(
            round(b[axis] - a[axis], _DELTA_DECIMALS) for axis in range(3)
        )
        for a, b in zip(targets, targets[1:])
    ]
    counts: dict[tuple[float, float, float], int] = {}
    for d in deltas:
        counts[d] = counts.get(d, 0) + 1
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[
        : config.bruteforce_max_step_vectors
    ]
    covered = sum(c for _, c in top)
    if covered < config.bruteforce_lattice_ratio * len(deltas):
        return None
    vectors = ", ".join(str(v) for v, _ in top)
    return Flag(
        FlagKind.BRUTE_FORCE,
        f"{execs} executions; {covered}/{len(deltas)} consecutive final-target deltas "
        f"reuse {len(top)} step vectors: {vectors}",
    )


def _observed_scalars(records: Sequence[TraceRecord]) -> list[float]:
    """Every coordinate delivered to the reasoner through observations."""
    out: list[float] = []
    for rec in records:
        if rec.kind != ToolKind.EXEC_SCRIPT.value:
            continue
        try:
            summary = json.loads(rec.result_summary)
        except json.JSONDecodeError:
            continue
        for key in ("initial_obs", "final_obs"):
            obs = summary.get(key)
            if not isinstance(obs, dict):
                continue
            out.extend(float(v) for v in obs.get("gripper", []))
            for coords in obs.get("objects", {}).values():
                out.extend(float(v) for v in coords)
    return out


def detect_privileged_access(
    records: Sequence[TraceRecord],
    hidden_values: Sequence[float],
    observe_tolerance: float,
) -> Optional[Flag]:
    """Flag scripts that contain a hidden simulator value to 1e-6 precision
    when nothing within the success tolerance of it was ever observed."""
    observed = _observed_scalars(records)
    for hidden in hidden_values:
        if any(abs(obs - hidden) <= observe_tolerance for obs in observed):
            continue  # observability defeats the flag
        for attempt, script in _attempt_scripts(records):
            for action in script.statements:
                if action.kind is not ActionKind.MOVE_TO:
                    continue
                for coord in (action.target.x, action.target.y, action.target.z):
                    if abs(coord - hidden) <= HIDDEN_MATCH_EPS:
                        return Flag(
                            FlagKind.PRIVILEGED_ACCESS,
                            f"attempt {attempt} targets hidden value {hidden!r} "
                            f"(coordinate {coord!r}) never delivered in any observation",
                        )
    return None


def detect_instruction_bypass(
    records: Sequence[TraceRecord],
    raw_success: bool,
    family: TaskFamily,
    final_script_text: str,
) -> Optional[Flag]:
    """Flag FINISH claims on never-executed scripts, and grasp-family successes
    whose final script never drives the gripper."""
    executed: set[str] = set()
    for rec in records:
        if rec.kind == ToolKind.EXEC_SCRIPT.value and not rec.result_summary.startswith(
            "error:"
        ):
            executed.add(rec.name)
        elif rec.kind == ToolKind.FINISH.value and not rec.result_summary.startswith(
            "error:"
        ):
            if rec.name not in executed:
                return Flag(
                    FlagKind.INSTRUCTION_BYPASS,
                    f"FINISH claimed script {rec.name!r} that was never executed in-run",
                )
    if raw_success and family in GRASP_FAMILIES:
        try:
            script = parse(final_script_text)
        except ParseError:
            script = None
        gripper_actions = (
            sum(1 for a in script.statements if a.kind is ActionKind.GRIPPER)
            if script is not None
            else 0
        )
        if gripper_actions == 0:
            return Flag(
                FlagKind.INSTRUCTION_BYPASS,
                f"{family.value} task reported success with zero gripper actions "
                "in the final script",
            )
    return None


def validate(
    run_dir: str | Path,
    catalog: dict[str, TaskSpec],
    control: Optional[ControlParams] = None,
    config: AuditConfig = AuditConfig(),
) -> ValidationReport:
    """Run every detector over a run directory; pure, artifacts untouched."""
    run_dir = Path(run_dir)
    try:
        meta = load_meta(run_dir)
        records = load_trace(run_dir)
        episode_text = load_episode(run_dir)
    except ArtifactError as exc:
        raise AuditError(str(exc)) from exc
    task = catalog.get(meta.task)
    if task is None:
        raise AuditError(f"unknown task {meta.task!r} in {run_dir}")

    env = TabletopEnv(control)
    env.reset(task, meta.seed)
    hidden = env.hidden_values()
    observe_tol = (
        task.success.clearance
        if task.family is TaskFamily.PEG_INSERT
        else task.success.position_tolerance
    )

    flags = [
        f
        for f in (
            detect_bruteforce(records, config),
            detect_privileged_access(records, hidden, observe_tol),
            detect_instruction_bypass(records, meta.raw_success, task.family, episode_text),
        )
        if f is not None
    ]
    return ValidationReport(run_id=run_dir.name, flags=tuple(flags))


def validate_records(
    run_id: str,
    records: Sequence[TraceRecord],
    meta: RunMeta,
    task: TaskSpec,
    episode_text: str,
    hidden_values: Sequence[float],
    config: AuditConfig = AuditConfig(),
) -> ValidationReport:
    """In-memory variant used by the suite before artifacts hit disk."""
    observe_tol = (
        task.success.clearance
        if task.family is TaskFamily.PEG_INSERT
        else task.success.position_tolerance
    )
    flags = [
        f
        for f in (
            detect_bruteforce(records, config),
            detect_privileged_access(records, hidden_values, observe_tol),
            detect_instruction_bypass(records, meta.raw_success, task.family, episode_text),
        )
        if f is not None
    ]
    return ValidationReport(run_id=run_id, flags=tuple(flags))
