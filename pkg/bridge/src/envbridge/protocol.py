"""Wire frame encoding for the bridge protocol.

One JSON object per line. Requests: {id, op, args}; responses: {id, ok,
data} or {id, ok: false, error}. All coordinates are decimal strings with
nine significant digits so observation parity is bit-exact across
independent implementations.
"""

from __future__ import annotations

import json
import math

PROTOCOL_VERSION = "faea-bridge/1"

OPS = ("hello", "reset", "step", "get_obs", "check_success", "close")


class FrameError(ValueError):
    """A line that is not a valid protocol frame."""


def fmt_num(x: float) -> str:
    if not math.isfinite(x):
        raise FrameError(f"cannot encode non-finite number {x!r}")
    return format(float(x), ".9g")


def quantize(x: float) -> float:
    return float(fmt_num(x))


def parse_num(value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise FrameError(f"bad number on wire: {value!r}") from exc
    if not math.isfinite(v):
        raise FrameError(f"non-finite number on wire: {value!r}")
    return v


def encode_frame(obj: dict) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def decode_frame(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FrameError(f"malformed frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise FrameError("frame must be a JSON object")
    return obj


def encode_pose(x: float, y: float, z: float, yaw: float) -> list[str]:
    return [fmt_num(x), fmt_num(y), fmt_num(z), fmt_num(yaw)]


def decode_target(values) -> tuple[float, float, float, float]:
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        raise FrameError(f"pose must be four numbers, got {values!r}")
    x, y, z, yaw = (parse_num(v) for v in values)
    return x, y, z, yaw
