"""Control-mode adapter: absolute end-effector targets over delta-native envs.

Wrapped environments accept absolute move_to semantics regardless of the
raw environment's native action space. Delta-native backends receive
bounded per-tick deltas; absolute-native backends are passed through.
"""

from __future__ import annotations

import math
from typing import Protocol, runtime_checkable


class AdapterError(RuntimeError):
    """The raw environment's action space cannot carry absolute targets."""


@runtime_checkable
class AbsoluteNative(Protocol):
    control_mode: str  # "absolute"

    def command_pose(self, x: float, y: float, z: float, yaw: float) -> None: ...


@runtime_checkable
class DeltaNative(Protocol):
    control_mode: str  # "delta"
    delta_cap: float

    def command_delta(self, dx: float, dy: float, dz: float) -> None: ...

    def current_pose(self) -> tuple[float, float, float, float]: ...


class _AbsolutePassthrough:
    def __init__(self, raw):
        self.raw = raw
        self.native_calls = 0

    def move_to(self, x: float, y: float, z: float, yaw: float = 0.0) -> None:
        self.raw.command_pose(x, y, z, yaw)
        self.native_calls += 1


class _DeltaConverter:
    def __init__(self, raw):
        self.raw = raw
        self.native_calls = 0

    def move_to(self, x: float, y: float, z: float, yaw: float = 0.0) -> None:
        cx, cy, cz, _ = self.raw.current_pose()
        dx, dy, dz = x - cx, y - cy, z - cz
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        cap = self.raw.delta_cap
        if dist <= 0.0:
            self.raw.command_delta(0.0, 0.0, 0.0)
            self.native_calls += 1
            return
        n = max(1, math.ceil(dist / cap - 1e-9))
        for i in range(1, n + 1):
            frac = i / n
            tx, ty, tz = cx + dx * frac, cy + dy * frac, cz + dz * frac
            px, py, pz, _ = self.raw.current_pose()
            self.raw.command_delta(tx - px, ty - py, tz - pz)
            self.native_calls += 1


def adapt_absolute_control(raw):
    """Wrap a raw environment so callers command absolute targets.

    Absolute-native backends get an identity wrapper; delta-native
    backends get a bounded-step converter; anything else is refused.
    """
    mode = getattr(raw, "control_mode", None)
    if mode == "absolute":
        return _AbsolutePassthrough(raw)
    if mode == "delta":
        if not hasattr(raw, "command_delta") or not hasattr(raw, "current_pose"):
            raise AdapterError("delta-native environment lacks the delta interface")
        return _DeltaConverter(raw)
    raise AdapterError(f"unsupported native action space {mode!r}")
