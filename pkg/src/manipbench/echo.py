"""The bundled echo test environment used for bridge parity checks.

A deliberately tiny, noise-free environment whose whole state derives from
(task id, seed) via splitmix64, with every coordinate quantized to nine
significant digits after each update. Because the arithmetic below is plain
IEEE-754 on quantized inputs, an independent implementation that follows
this module's docstrings reproduces bit-identical observation sequences.

Semantics (normative for reimplementations):

- stream: s0 = (seed mod 2^64) XOR fnv1a64(task_id); each draw advances
  s += 0x9E3779B97F4A7C15 (mod 2^64) and returns splitmix64_mix(s) / 2^64.
- reset: gripper (0, 0, 0.3, yaw 0), open; object "obj0" at
  x = q(-0.3 + 0.6*u1), y = q(-0.3 + 0.6*u2), z = 0.02, yaw = q(-pi + 2*pi*u3);
  marker "goal" at x = q(-0.3 + 0.6*u4), y = q(-0.3 + 0.6*u5), z = 0.1, yaw 0;
  tick 0. (q = nine-significant-digit quantization.)
- move_to: tick += max(1, ceil(dist/0.02 - 1e-9)) with dist the 3D euclidean
  distance via sqrt; gripper lands exactly on the quantized target; a held
  object follows at its quantized grasp offset, each coordinate re-quantized.
- gripper close: holds obj0 if the 3D distance to it is <= 0.015; open drops
  it back to z = 0.02 in place. wait advances the tick.
- success: obj0 within 0.05 of the goal in xy (squared comparison) and
  z >= 0.1.
"""

from __future__ import annotations

import math

from manipbench.domain import Action, ActionKind, GripCommand, Observation, Pose
from manipbench.dsl import ExecError
from manipbench.wire import quantize

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

ECHO_TASK_ID = "echo"
_GRASP_TOL = 0.015
_STEP = 0.02
_OBJ = "obj0"
_GOAL = "goal"


def fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def splitmix64_mix(x: int) -> int:
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class _Stream:
    def __init__(self, seed: int, task_id: str):
        self.state = (seed & _MASK64) ^ fnv1a64(task_id)

    def unit(self) -> float:
        self.state = (self.state + _GAMMA) & _MASK64
        return splitmix64_mix(self.state) / 2.0**64


class EchoEnv:
    """Four-op environment with exactly reproducible cross-language behavior."""

    def __init__(self):
        self._reset_done = False
        self.last_step_events: tuple[str, ...] = ()

    def reset(self, task, seed: int) -> Observation:
        task_id = getattr(task, "id", task)
        u = _Stream(int(seed), str(task_id))
        self._gripper = Pose(0.0, 0.0, 0.3, 0.0)
        self._open = True
        self._held = False
        self._offset = (0.0, 0.0, 0.0)
        self._obj = Pose(
            quantize(-0.3 + 0.6 * u.unit()),
            quantize(-0.3 + 0.6 * u.unit()),
            0.02,
            quantize(-math.pi + 2.0 * math.pi * u.unit()),
        )
        self._goal = Pose(
            quantize(-0.3 + 0.6 * u.unit()),
            quantize(-0.3 + 0.6 * u.unit()),
            0.1,
            0.0,
        )
        self._tick = 0
        self._reset_done = True
        return self.get_obs()

    def _require_reset(self) -> None:
        if not self._reset_done:
            raise ExecError("echo environment used before reset")

    def step(self, action: Action) -> Observation:
        self._require_reset()
        if action.kind is ActionKind.MOVE_TO:
            t = action.target
            g = self._gripper
            dist = math.sqrt((t.x - g.x) ** 2 + (t.y - g.y) ** 2 + (t.z - g.z) ** 2)
            self._tick += max(1, math.ceil(dist / _STEP - 1e-9))
            self._gripper = Pose(quantize(t.x), quantize(t.y), quantize(t.z), quantize(t.yaw))
            if self._held:
                ox, oy, oz = self._offset
                self._obj = Pose(
                    quantize(self._gripper.x + ox),
                    quantize(self._gripper.y + oy),
                    quantize(self._gripper.z + oz),
                    self._obj.yaw,
                )
        elif action.kind is ActionKind.GRIPPER:
            self._tick += 1
            if action.grip is GripCommand.CLOSE:
                if self._open:
                    self._open = False
                    g, o = self._gripper, self._obj
                    dist = math.sqrt(
                        (o.x - g.x) ** 2 + (o.y - g.y) ** 2 + (o.z - g.z) ** 2
                    )
                    if dist <= _GRASP_TOL:
                        self._held = True
                        self._offset = (
                            quantize(o.x - g.x),
                            quantize(o.y - g.y),
                            quantize(o.z - g.z),
                        )
            else:
                if not self._open:
                    self._open = True
                    if self._held:
                        self._held = False
                        self._obj = Pose(self._obj.x, self._obj.y, 0.02, self._obj.yaw)
                        self._offset = (0.0, 0.0, 0.0)
        else:
            self._tick += action.ticks
        return self.get_obs()

    def get_obs(self) -> Observation:
        self._require_reset()
        return Observation(
            gripper_pose=self._gripper,
            gripper_open=self._open,
            held_object=_OBJ if self._held else None,
            objects={_OBJ: self._obj, _GOAL: self._goal},
            tick=self._tick,
        )

    def check_success(self) -> bool:
        self._require_reset()
        dx = self._obj.x - self._goal.x
        dy = self._obj.y - self._goal.y
        return dx * dx + dy * dy <= 0.05 * 0.05 and self._obj.z >= 0.1
