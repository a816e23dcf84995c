"""Server-side echo test environment.

Implements the normative echo semantics: all state derives from
(task id, seed) through a splitmix64 stream, every coordinate is quantized
to nine significant digits after each update, movement is noise-free and
lands exactly on the (quantized) target. Independent client-side
implementations that follow the same rules observe bit-identical
sequences.

The environment speaks wire shapes directly: observations are returned as
the protocol's observation object, actions arrive as {kind, ...} objects.
"""

from __future__ import annotations

import math

from envbridge.protocol import FrameError, decode_target, encode_pose, quantize

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_STEP = 0.02
_GRASP_TOL = 0.015
_OBJ = "obj0"
_GOAL = "goal"


def _fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _mix(x: int) -> int:
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class EnvError(RuntimeError):
    """Environment-contract violation surfaced as an error frame."""


class EchoEnv:
    def __init__(self):
        self._ready = False

    def reset(self, task_id: str, seed: int) -> dict:
        state = (int(seed) & _MASK64) ^ _fnv1a64(str(task_id))

        def unit() -> float:
            nonlocal state
            state = (state + _GAMMA) & _MASK64
            return _mix(state) / 2.0**64

        self._gripper = [0.0, 0.0, 0.3, 0.0]
        self._open = True
        self._held = False
        self._offset = [0.0, 0.0, 0.0]
        self._obj = [
            quantize(-0.3 + 0.6 * unit()),
            quantize(-0.3 + 0.6 * unit()),
            0.02,
            quantize(-math.pi + 2.0 * math.pi * unit()),
        ]
        self._goal = [
            quantize(-0.3 + 0.6 * unit()),
            quantize(-0.3 + 0.6 * unit()),
            0.1,
            0.0,
        ]
        self._tick = 0
        self._ready = True
        return self.get_obs()

    def _require_ready(self) -> None:
        if not self._ready:
            raise EnvError("environment used before reset")

    def step(self, action: dict) -> dict:
        self._require_ready()
        if not isinstance(action, dict) or "kind" not in action:
            raise FrameError(f"bad action frame: {action!r}")
        kind = action["kind"]
        if kind == "move_to":
            x, y, z, yaw = decode_target(action.get("target"))
            g = self._gripper
            dist = math.sqrt((x - g[0]) ** 2 + (y - g[1]) ** 2 + (z - g[2]) ** 2)
            self._tick += max(1, math.ceil(dist / _STEP - 1e-9))
            self._gripper = [quantize(x), quantize(y), quantize(z), quantize(yaw)]
            if self._held:
                self._obj[0] = quantize(self._gripper[0] + self._offset[0])
                self._obj[1] = quantize(self._gripper[1] + self._offset[1])
                self._obj[2] = quantize(self._gripper[2] + self._offset[2])
        elif kind == "gripper":
            grip = action.get("grip")
            if grip not in ("open", "close"):
                raise FrameError(f"gripper action must be open|close, got {grip!r}")
            self._tick += 1
            if grip == "close":
                if self._open:
                    self._open = False
                    g, o = self._gripper, self._obj
                    dist = math.sqrt(
                        (o[0] - g[0]) ** 2 + (o[1] - g[1]) ** 2 + (o[2] - g[2]) ** 2
                    )
                    if dist <= _GRASP_TOL:
                        self._held = True
                        self._offset = [
                            quantize(o[0] - g[0]),
                            quantize(o[1] - g[1]),
                            quantize(o[2] - g[2]),
                        ]
            else:
                if not self._open:
                    self._open = True
                    if self._held:
                        self._held = False
                        self._obj[2] = 0.02
                        self._offset = [0.0, 0.0, 0.0]
        elif kind == "wait":
            ticks = action.get("ticks")
            if not isinstance(ticks, int) or ticks < 1:
                raise FrameError(f"wait ticks must be a positive integer, got {ticks!r}")
            self._tick += ticks
        else:
            raise FrameError(f"unknown action kind {kind!r}")
        return self.get_obs()

    def get_obs(self) -> dict:
        self._require_ready()
        return {
            "gripper": encode_pose(*self._gripper),
            "open": self._open,
            "held": _OBJ if self._held else None,
            "objects": {
                _GOAL: encode_pose(*self._goal),
                _OBJ: encode_pose(*self._obj),
            },
            "tick": self._tick,
        }

    def check_success(self) -> bool:
        self._require_ready()
        dx = self._obj[0] - self._goal[0]
        dy = self._obj[1] - self._goal[1]
        return dx * dx + dy * dy <= 0.05 * 0.05 and self._obj[2] >= 0.1


ENV_REGISTRY = {
    "echo": EchoEnv,
}


def make_env(name: str):
    if name not in ENV_REGISTRY:
        raise KeyError(f"unknown environment {name!r}; available: {sorted(ENV_REGISTRY)}")
    return ENV_REGISTRY[name]()
