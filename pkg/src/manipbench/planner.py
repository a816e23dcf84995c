"""Analytic waypoint planners computed from privileged observations.

These are the deterministic stand-ins for a reasoning model: high approach,
straight descent, grasp or sweep, transport, release. Plans assume objects
start at rest (object center height equals its half height), which holds
right after reset.
"""

from __future__ import annotations

import math

from manipbench.domain import (
    Action,
    GripCommand,
    Observation,
    TaskFamily,
    TaskSpec,
)
from manipbench.dsl import EpisodeScript
from manipbench.sim import GOAL_MARKER_ID, GRIPPER_RADIUS, PUSH_MARGIN

SAFE_Z = 0.25
APPROACH_GAP = 0.03
_PLACE_HOVER = 0.01
_CARRY_MARGIN = 0.05


class UnsupportedTaskError(ValueError):
    """The planner has no strategy for this task family."""


def _require(obs: Observation, name: str):
    if name not in obs.objects:
        raise UnsupportedTaskError(f"observation has no object {name!r}")
    return obs.objects[name]


def oracle_plan(task: TaskSpec, obs: Observation) -> EpisodeScript:
    """Waypoint plan for the coarse families; succeeds under zero noise.

    PEG_INSERT is refused: no open-loop waypoint plan can beat the
    sub-noise insertion clearance (see insertion_waypoint_plan for the
    naive attempt).
    """
    family = task.family
    if family is TaskFamily.PEG_INSERT:
        raise UnsupportedTaskError("oracle_plan does not support PEG_INSERT")
    target = _require(obs, task.scene.objects[0].id)
    goal = _require(obs, GOAL_MARKER_ID)

    if family is TaskFamily.PICK:
        carry_z = max(SAFE_Z, goal.z + _CARRY_MARGIN)
        actions = [
            Action.move_to(target.x, target.y, SAFE_Z),
            Action.move_to(target.x, target.y, target.z),
            Action.gripper(GripCommand.CLOSE),
            Action.move_to(target.x, target.y, carry_z),
            Action.move_to(goal.x, goal.y, carry_z),
            Action.wait(1),
        ]
        return EpisodeScript.from_actions(actions)

    if family in (TaskFamily.PUSH, TaskFamily.PULL):
        dx, dy = goal.x - target.x, goal.y - target.y
        span = math.hypot(dx, dy)
        if span < 1e-9:
            return EpisodeScript.from_actions([Action.wait(1)])
        ux, uy = dx / span, dy / span
        # target.z doubles as the cube half extent because it starts at rest
        contact = target.z + GRIPPER_RADIUS
        sx = target.x - ux * (contact + APPROACH_GAP)
        sy = target.y - uy * (contact + APPROACH_GAP)
        stop_x = goal.x - ux * (contact + PUSH_MARGIN)
        stop_y = goal.y - uy * (contact + PUSH_MARGIN)
        actions = [
            Action.move_to(sx, sy, SAFE_Z),
            Action.move_to(sx, sy, target.z),
            Action.move_to(stop_x, stop_y, target.z),
        ]
        return EpisodeScript.from_actions(actions)

    if family is TaskFamily.STACK:
        base = _require(obs, task.scene.objects[1].id)
        place_z = 2.0 * base.z + target.z + 0.002
        return EpisodeScript.from_actions(
            _transport(target, base.x, base.y, place_z)
        )

    if family is TaskFamily.PLACE:
        place_z = target.z + _PLACE_HOVER
        return EpisodeScript.from_actions(
            _transport(target, goal.x, goal.y, place_z)
        )

    raise UnsupportedTaskError(f"oracle_plan does not support {family}")


def insertion_waypoint_plan(task: TaskSpec, obs: Observation) -> EpisodeScript:
    """The deliberate peg-insertion attempt: carry the peg over the observed
    socket position and lower it straight down. Arrival noise exceeds the
    clearance, so this rarely works; that is the point."""
    if task.family is not TaskFamily.PEG_INSERT:
        raise UnsupportedTaskError("insertion_waypoint_plan expects PEG_INSERT")
    peg = _require(obs, task.scene.objects[0].id)
    goal = _require(obs, GOAL_MARKER_ID)
    return EpisodeScript.from_actions(
        _transport(peg, goal.x, goal.y, peg.z + _PLACE_HOVER)
    )


def plan_for(task: TaskSpec, obs: Observation) -> EpisodeScript:
    """Family-dispatching helper: oracle plan, or the naive insertion plan."""
    if task.family is TaskFamily.PEG_INSERT:
        return insertion_waypoint_plan(task, obs)
    return oracle_plan(task, obs)


def _transport(target, dest_x: float, dest_y: float, dest_z: float) -> list[Action]:
    return [
        Action.move_to(target.x, target.y, SAFE_Z),
        Action.move_to(target.x, target.y, target.z),
        Action.gripper(GripCommand.CLOSE),
        Action.move_to(target.x, target.y, SAFE_Z),
        Action.move_to(dest_x, dest_y, SAFE_Z),
        Action.move_to(dest_x, dest_y, dest_z),
        Action.gripper(GripCommand.OPEN),
    ]
