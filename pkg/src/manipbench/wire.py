"""Frame codec for the environment bridge protocol (version faea-bridge/1).

Newline-delimited JSON, one object per line. Requests carry {id, op, args};
responses echo the id and carry {ok, data} or {ok: false, error}. Every
coordinate crosses the wire as a decimal string with nine significant
digits, which makes parity checks bit-exact across implementations.
"""

from __future__ import annotations

import json
import math
from typing import Mapping

from manipbench.domain import (
    Action,
    ActionKind,
    GripCommand,
    Observation,
    Pose,
)

PROTOCOL_VERSION = "faea-bridge/1"

OPS = ("hello", "reset", "step", "get_obs", "check_success", "close")


class WireError(ValueError):
    """A frame that cannot be encoded or decoded."""


def fmt_num(x: float) -> str:
    """Nine-significant-digit decimal string."""
    if not math.isfinite(x):
        raise WireError(f"cannot encode non-finite number {x!r}")
    return format(float(x), ".9g")


def parse_num(s) -> float:
    try:
        v = float(s)
    except (TypeError, ValueError) as exc:
        raise WireError(f"bad number on wire: {s!r}") from exc
    if not math.isfinite(v):
        raise WireError(f"non-finite number on wire: {s!r}")
    return v


def quantize(x: float) -> float:
    """The float a value becomes after one trip over the wire."""
    return float(fmt_num(x))


def encode_pose(pose: Pose) -> list[str]:
    return [fmt_num(pose.x), fmt_num(pose.y), fmt_num(pose.z), fmt_num(pose.yaw)]


def decode_pose(values) -> Pose:
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        raise WireError(f"pose must be four numbers, got {values!r}")
    x, y, z, yaw = (parse_num(v) for v in values)
    return Pose(x, y, z, yaw)


def encode_obs(obs: Observation) -> dict:
    return {
        "gripper": encode_pose(obs.gripper_pose),
        "open": obs.gripper_open,
        "held": obs.held_object,
        "objects": {name: encode_pose(p) for name, p in sorted(obs.objects.items())},
        "tick": obs.tick,
    }


def decode_obs(data) -> Observation:
    if not isinstance(data, Mapping):
        raise WireError(f"observation frame must be an object, got {data!r}")
    try:
        objects = {
            str(name): decode_pose(p) for name, p in data["objects"].items()
        }
        return Observation(
            gripper_pose=decode_pose(data["gripper"]),
            gripper_open=bool(data["open"]),
            held_object=data.get("held"),
            objects=objects,
            tick=int(data["tick"]),
        )
    except (KeyError, AttributeError, TypeError, ValueError) as exc:
        raise WireError(f"bad observation frame: {exc}") from exc


def encode_action(action: Action) -> dict:
    if action.kind is ActionKind.MOVE_TO:
        return {"kind": "move_to", "target": encode_pose(action.target)}
    if action.kind is ActionKind.GRIPPER:
        return {"kind": "gripper", "grip": action.grip.value}
    return {"kind": "wait", "ticks": action.ticks}


def decode_action(data) -> Action:
    if not isinstance(data, Mapping) or "kind" not in data:
        raise WireError(f"bad action frame: {data!r}")
    kind = data["kind"]
    try:
        if kind == "move_to":
            p = decode_pose(data["target"])
            return Action.move_to(p.x, p.y, p.z, p.yaw)
        if kind == "gripper":
            return Action.gripper(GripCommand(data["grip"]))
        if kind == "wait":
            return Action.wait(int(data["ticks"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise WireError(f"bad action frame: {exc}") from exc
    raise WireError(f"unknown action kind {kind!r}")


def encode_frame(obj: dict) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def decode_frame(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"malformed frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireError("frame must be a JSON object")
    return obj
