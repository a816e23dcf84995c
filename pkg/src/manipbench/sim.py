"""Deterministic seeded kinematic tabletop environment.

Quasi-static point-gripper world: absolute position control, rigid
attachment on grasp, axis-aligned box collision with push displacement,
and seeded Gaussian arrival noise (clamped at six sigma). Given the same
(task, seed, action sequence) the observation sequence is bit-identical
across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from manipbench.domain import (
    Observation,
    Pose,
    Action,
    ActionKind,
    GripCommand,
    TaskFamily,
    TaskSpec,
    WORKSPACE_X,
    WORKSPACE_Y,
    WORKSPACE_Z,
    normalize_yaw,
)
from manipbench.dsl import ExecError

HOME_POSE = Pose(0.0, 0.0, 0.30, 0.0)
GRIPPER_RADIUS = 0.01
PUSH_MARGIN = 0.002
# Paths with less lateral travel than this are treated as straight descents
# (the fingers straddle the object) and do not shove anything.
NEAR_VERTICAL_XY = 0.01
GOAL_MARKER_ID = "goal"
_PLACEMENT_MARGIN = 0.005
_RESTING_EPS = 0.003
_INSERT_DEPTH_SLACK = 0.005
_MAX_PLACEMENT_TRIES = 200

# Hidden exact-goal offset, as multiples of the per-family tolerance. The
# exact value stays sub-tolerance for coarse tasks but dominates the 1 mm
# insertion clearance, which is what starves waypoint control of precision.
_OFFSET_RANGE_COARSE = (0.15, 0.25)   # x position_tolerance
_OFFSET_RANGE_INSERT = (2.5, 4.0)     # x clearance


class SimError(ExecError):
    """Base for environment faults recorded in outcomes."""


class ResetError(RuntimeError):
    """Scene sampling could not satisfy the non-overlap constraint."""


class UsageError(RuntimeError):
    """Environment driven outside its contract (e.g. step before reset)."""


class TickLimitError(SimError):
    """The per-execution tick budget was exhausted."""


@dataclass(frozen=True)
class ControlParams:
    max_step: float = 0.02
    noise_sigma: float = 0.002
    grasp_tolerance: float = 0.015
    tick_limit: int = 2000

    def __post_init__(self) -> None:
        if min(self.max_step, self.noise_sigma, self.grasp_tolerance) <= 0 or self.tick_limit <= 0:
            raise ValueError("control parameters must be positive")
        if self.noise_sigma >= self.grasp_tolerance:
            raise ValueError("noise sigma must stay below the grasp tolerance")


@dataclass
class _ObjState:
    pose: Pose
    half_extents: tuple[float, float, float]


@dataclass
class _World:
    gripper: Pose
    gripper_open: bool
    attachment: Optional[str]
    attach_offset: tuple[float, float, float, float]
    objects: dict[str, _ObjState]
    goal_coarse: Pose
    goal_exact: tuple[float, float]
    tick: int
    seed: int


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _segment_hits_box(
    p0: tuple[float, float, float],
    p1: tuple[float, float, float],
    center: tuple[float, float, float],
    half: tuple[float, float, float],
) -> bool:
    """Slab test: does the segment p0->p1 intersect the axis-aligned box?"""
    t_min, t_max = 0.0, 1.0
    for axis in range(3):
        d = p1[axis] - p0[axis]
        lo = center[axis] - half[axis]
        hi = center[axis] + half[axis]
        if abs(d) < 1e-12:
            if p0[axis] < lo or p0[axis] > hi:
                return False
            continue
        t0 = (lo - p0[axis]) / d
        t1 = (hi - p0[axis]) / d
        if t0 > t1:
            t0, t1 = t1, t0
        t_min = max(t_min, t0)
        t_max = min(t_max, t1)
        if t_min > t_max:
            return False
    return True


class TabletopEnv:
    """Single-owner simulated environment: reset / step / get_obs / check_success."""

    def __init__(self, control: Optional[ControlParams] = None):
        self.control = control or ControlParams()
        self._task: Optional[TaskSpec] = None
        self._world: Optional[_World] = None
        self._rng: Optional[np.random.Generator] = None
        self.last_step_events: tuple[str, ...] = ()

    # -- lifecycle ---------------------------------------------------------

    def reset(self, task: TaskSpec, seed: int) -> Observation:
        """Sample the scene deterministically from the seed and home the gripper."""
        rng = np.random.default_rng(seed)
        objects: dict[str, _ObjState] = {}
        placed: list[tuple[float, float, tuple[float, float, float]]] = []
        for spec in task.scene.objects:
            hx, hy, hz = spec.half_extents
            for attempt in range(_MAX_PLACEMENT_TRIES):
                x = float(rng.uniform(*spec.x_range))
                y = float(rng.uniform(*spec.y_range))
                if all(
                    abs(x - px) >= hx + ph[0] + _PLACEMENT_MARGIN
                    or abs(y - py) >= hy + ph[1] + _PLACEMENT_MARGIN
                    for px, py, ph in placed
                ):
                    break
            else:
                raise ResetError(
                    f"could not place {spec.id!r} without overlap after "
                    f"{_MAX_PLACEMENT_TRIES} tries (seed {seed})"
                )
            yaw = float(rng.uniform(*task.scene.yaw_range))
            objects[spec.id] = _ObjState(pose=Pose(x, y, hz, yaw), half_extents=spec.half_extents)
            placed.append((x, y, spec.half_extents))

        gx = float(rng.uniform(*task.scene.goal_x_range))
        gy = float(rng.uniform(*task.scene.goal_y_range))
        gz = self._goal_height(task, objects)
        angle = float(rng.uniform(0.0, math.tau))
        lo, hi = self._offset_range(task)
        mag = float(rng.uniform(lo, hi))
        exact = (gx + mag * math.cos(angle), gy + mag * math.sin(angle))

        self._task = task
        self._rng = rng
        self._world = _World(
            gripper=HOME_POSE,
            gripper_open=True,
            attachment=None,
            attach_offset=(0.0, 0.0, 0.0, 0.0),
            objects=objects,
            goal_coarse=Pose(gx, gy, gz, 0.0),
            goal_exact=exact,
            tick=0,
            seed=seed,
        )
        self.last_step_events = ()
        return self.get_obs()

    @staticmethod
    def _goal_height(task: TaskSpec, objects: dict[str, _ObjState]) -> float:
        target = task.scene.objects[0].id
        if task.family is TaskFamily.PICK:
            return task.success.height_threshold
        return objects[target].half_extents[2]

    @staticmethod
    def _offset_range(task: TaskSpec) -> tuple[float, float]:
        if task.family is TaskFamily.PEG_INSERT:
            c = task.success.clearance
            return (_OFFSET_RANGE_INSERT[0] * c, _OFFSET_RANGE_INSERT[1] * c)
        t = task.success.position_tolerance
        return (_OFFSET_RANGE_COARSE[0] * t, _OFFSET_RANGE_COARSE[1] * t)

    # -- stepping ----------------------------------------------------------

    def step(self, action: Action) -> Observation:
        world = self._require_world()
        events: list[str] = []
        if action.kind is ActionKind.MOVE_TO:
            self._move_to(action.target, events)
        elif action.kind is ActionKind.GRIPPER:
            self._grip(action.grip, events)
        else:
            self._advance_ticks(action.ticks)
        self.last_step_events = tuple(events)
        return self.get_obs()

    def _require_world(self) -> _World:
        if self._world is None:
            raise UsageError("step called before reset")
        return self._world

    def _advance_ticks(self, n: int) -> None:
        world = self._world
        if world.tick + n > self.control.tick_limit:
            raise TickLimitError(
                f"tick limit exceeded ({self.control.tick_limit} per execution)"
            )
        world.tick += n

    def _noise(self) -> tuple[float, float, float]:
        sigma = self.control.noise_sigma
        bound = 6.0 * sigma
        draws = [float(self._rng.normal(0.0, sigma)) for _ in range(3)]
        return tuple(_clamp(d, -bound, bound) for d in draws)

    def _move_to(self, target: Pose, events: list[str]) -> None:
        world = self._world
        start = world.gripper.xyz()
        dist = math.sqrt(
            (target.x - start[0]) ** 2
            + (target.y - start[1]) ** 2
            + (target.z - start[2]) ** 2
        )
        n_ticks = max(1, math.ceil(dist / self.control.max_step - 1e-12))
        self._advance_ticks(n_ticks)

        nx, ny, nz = self._noise()
        end_x = _clamp(target.x + nx, *WORKSPACE_X)
        end_y = _clamp(target.y + ny, *WORKSPACE_Y)
        end_z = _clamp(target.z + nz, *WORKSPACE_Z)
        if world.attachment is not None:
            held = world.objects[world.attachment]
            # keep the carried object above its resting height
            min_z = held.half_extents[2] - world.attach_offset[2]
            end_z = max(end_z, min_z)
        end = (end_x, end_y, end_z)

        self._displace_swept(start, end, events)

        world.gripper = Pose(end_x, end_y, end_z, target.yaw)
        if world.attachment is not None:
            off = world.attach_offset
            held = world.objects[world.attachment]
            held.pose = Pose(
                end_x + off[0],
                end_y + off[1],
                end_z + off[2],
                normalize_yaw(target.yaw + off[3]),
            )

    def _displace_swept(
        self,
        p0: tuple[float, float, float],
        p1: tuple[float, float, float],
        events: list[str],
    ) -> None:
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        horiz = math.hypot(dx, dy)
        if horiz < NEAR_VERTICAL_XY:
            return
        ux, uy = dx / horiz, dy / horiz
        world = self._world
        for oid in sorted(world.objects):
            if oid == world.attachment:
                continue
            obj = world.objects[oid]
            hx, hy, hz = obj.half_extents
            inflated = (hx + GRIPPER_RADIUS, hy + GRIPPER_RADIUS, hz + GRIPPER_RADIUS)
            if not _segment_hits_box(p0, p1, obj.pose.xyz(), inflated):
                continue
            shove = max(hx, hy) + GRIPPER_RADIUS + PUSH_MARGIN
            new_x = _clamp(p1[0] + ux * shove, *WORKSPACE_X)
            new_y = _clamp(p1[1] + uy * shove, *WORKSPACE_Y)
            obj.pose = Pose(new_x, new_y, obj.pose.z, obj.pose.yaw)
            events.append(f"gripper path displaced {oid}")

    def _grip(self, grip: GripCommand, events: list[str]) -> None:
        world = self._world
        self._advance_ticks(1)
        if grip is GripCommand.CLOSE:
            if not world.gripper_open:
                events.append("gripper already closed")
                return
            world.gripper_open = False
            candidates = sorted(
                (obj.pose.distance_to(world.gripper), oid)
                for oid, obj in world.objects.items()
            )
            for dist, oid in candidates:
                if dist <= self.control.grasp_tolerance:
                    obj = world.objects[oid]
                    world.attachment = oid
                    world.attach_offset = (
                        obj.pose.x - world.gripper.x,
                        obj.pose.y - world.gripper.y,
                        obj.pose.z - world.gripper.z,
                        normalize_yaw(obj.pose.yaw - world.gripper.yaw),
                    )
                    events.append(f"grasped {oid}")
                    return
            events.append("gripper closed on nothing")
        else:
            if world.gripper_open:
                events.append("gripper already open")
                return
            world.gripper_open = True
            if world.attachment is not None:
                oid = world.attachment
                obj = world.objects[oid]
                rest_z = self._rest_height(oid)
                obj.pose = Pose(obj.pose.x, obj.pose.y, rest_z, obj.pose.yaw)
                world.attachment = None
                world.attach_offset = (0.0, 0.0, 0.0, 0.0)
                events.append(f"released {oid}")

    def _rest_height(self, oid: str) -> float:
        """Resting z for the object center: table plane or the top of a support."""
        world = self._world
        obj = world.objects[oid]
        hx, hy, hz = obj.half_extents
        rest = hz
        for other_id, other in world.objects.items():
            if other_id == oid:
                continue
            ox, oy, oz = other.half_extents
            if (
                abs(obj.pose.x - other.pose.x) < hx + ox
                and abs(obj.pose.y - other.pose.y) < hy + oy
            ):
                rest = max(rest, other.pose.z + oz + hz)
        return rest

    # -- observation & evaluation ------------------------------------------

    def get_obs(self) -> Observation:
        """Privileged state; the goal marker shows the coarse goal only."""
        world = self._require_world()
        objects = {oid: obj.pose for oid, obj in world.objects.items()}
        objects[GOAL_MARKER_ID] = world.goal_coarse
        return Observation(
            gripper_pose=world.gripper,
            gripper_open=world.gripper_open,
            held_object=world.attachment,
            objects=objects,
            tick=world.tick,
        )

    def check_success(self) -> bool:
        world = self._require_world()
        task = self._task
        target_id = task.scene.objects[0].id
        target = world.objects[target_id]
        ex, ey = world.goal_exact
        tol = task.success.position_tolerance
        family = task.family

        if family is TaskFamily.PICK:
            xy = math.hypot(target.pose.x - ex, target.pose.y - ey)
            return xy <= tol and target.pose.z >= task.success.height_threshold
        if family in (TaskFamily.PUSH, TaskFamily.PULL, TaskFamily.PLACE):
            gz = world.goal_coarse.z
            d = math.sqrt(
                (target.pose.x - ex) ** 2
                + (target.pose.y - ey) ** 2
                + (target.pose.z - gz) ** 2
            )
            return d <= tol
        if family is TaskFamily.STACK:
            if len(task.scene.objects) < 2 or world.attachment == target_id:
                return False
            base = world.objects[task.scene.objects[1].id]
            xy = math.hypot(target.pose.x - base.pose.x, target.pose.y - base.pose.y)
            rest_z = base.pose.z + base.half_extents[2] + target.half_extents[2]
            return xy <= tol and abs(target.pose.z - rest_z) <= _RESTING_EPS
        if family is TaskFamily.PEG_INSERT:
            if world.attachment == target_id:
                return False
            xy = math.hypot(target.pose.x - ex, target.pose.y - ey)
            depth_ok = target.pose.z <= target.half_extents[2] + _INSERT_DEPTH_SLACK
            return xy <= task.success.clearance and depth_ok
        raise UsageError(f"unknown task family {family!r}")  # pragma: no cover

    def hidden_values(self) -> tuple[float, ...]:
        """Exact internal goal coordinates. For the trusted auditor only:
        these never appear in observations."""
        world = self._require_world()
        return world.goal_exact
