"""Client-side handle for environments served over the bridge wire protocol.

connect_remote() returns an object satisfying the same four-op contract as
the local simulator: reset / step / get_obs / check_success, plus close().
Remote handles are single-owner like local environments.
"""

from __future__ import annotations

import socket

from manipbench.domain import Action, Observation
from manipbench.wire import (
    PROTOCOL_VERSION,
    WireError,
    decode_frame,
    decode_obs,
    encode_action,
    encode_frame,
)


class TransportError(RuntimeError):
    """Connection-level failure: refused, closed mid-frame, timed out."""


class ProtocolError(RuntimeError):
    """The peer spoke, but not the protocol we expect."""


class RemoteEnv:
    """Blocking wire-protocol client over a connected socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._reader = sock.makefile("rb")
        self._next_id = 0
        self._hello()

    def _hello(self) -> None:
        data = self._call("hello", {"version": PROTOCOL_VERSION})
        version = data.get("version") if isinstance(data, dict) else None
        if version != PROTOCOL_VERSION:
            raise ProtocolError(
                f"protocol version mismatch: peer speaks {version!r}, "
                f"expected {PROTOCOL_VERSION!r}"
            )

    def _call(self, op: str, args: dict):
        self._next_id += 1
        frame_id = self._next_id
        try:
            self._sock.sendall(encode_frame({"id": frame_id, "op": op, "args": args}))
            line = self._reader.readline()
        except OSError as exc:
            raise TransportError(f"transport failure during {op!r}: {exc}") from exc
        if not line:
            raise TransportError(f"connection closed during {op!r}")
        try:
            frame = decode_frame(line)
        except WireError as exc:
            raise ProtocolError(f"malformed response frame: {exc}") from exc
        if frame.get("id") != frame_id:
            raise ProtocolError(
                f"response id {frame.get('id')!r} does not echo request id {frame_id}"
            )
        if not frame.get("ok"):
            raise ProtocolError(str(frame.get("error", "unspecified peer error")))
        return frame.get("data")

    # -- four-op environment contract ---------------------------------------

    def reset(self, task, seed: int) -> Observation:
        task_id = getattr(task, "id", task)
        data = self._call("reset", {"task": str(task_id), "seed": int(seed)})
        return self._obs(data)

    def step(self, action: Action) -> Observation:
        data = self._call("step", {"action": encode_action(action)})
        return self._obs(data)

    def get_obs(self) -> Observation:
        return self._obs(self._call("get_obs", {}))

    def check_success(self) -> bool:
        data = self._call("check_success", {})
        if not isinstance(data, dict) or not isinstance(data.get("success"), bool):
            raise ProtocolError(f"bad check_success payload: {data!r}")
        return data["success"]

    def close(self) -> None:
        try:
            self._call("close", {})
        except (TransportError, ProtocolError):
            pass
        try:
            self._reader.close()
            self._sock.close()
        except OSError:
            pass

    @staticmethod
    def _obs(data) -> Observation:
        try:
            return decode_obs(data)
        except WireError as exc:
            raise ProtocolError(str(exc)) from exc

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def connect_remote(endpoint: str, timeout_s: float = 10.0) -> RemoteEnv:
    """Connect to a bridge server at "host:port"; handshakes protocol v1."""
    host, sep, port_text = endpoint.rpartition(":")
    if not sep or not port_text.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    try:
        sock = socket.create_connection((host or "127.0.0.1", int(port_text)), timeout=timeout_s)
    except OSError as exc:
        raise TransportError(f"cannot connect to {endpoint}: {exc}") from exc
    sock.settimeout(timeout_s)
    return RemoteEnv(sock)
