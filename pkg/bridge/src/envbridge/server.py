"""Single-session bridge server over TCP or stdio.

One client connection at a time, sequential request handling, one fresh
environment instance per connection. Malformed frames and environment
faults produce error responses; the connection stays open.
"""

from __future__ import annotations

import socket
import socketserver
import sys
from typing import Callable, Optional

from envbridge.echo_env import EnvError
from envbridge.protocol import (
    FrameError,
    OPS,
    PROTOCOL_VERSION,
    decode_frame,
    encode_frame,
)


class BridgeSession:
    """Protocol state machine for one connection: hello first, then the four ops."""

    def __init__(self, env):
        self.env = env
        self.hello_done = False
        self.closed = False

    def handle_line(self, line: bytes | str) -> bytes:
        try:
            frame = decode_frame(line)
        except FrameError as exc:
            return encode_frame({"id": None, "ok": False, "error": str(exc)})
        frame_id = frame.get("id")
        op = frame.get("op")
        args = frame.get("args")
        if args is None:
            args = {}
        if not isinstance(args, dict):
            return self._error(frame_id, "args must be an object")
        if not isinstance(op, str) or op not in OPS:
            return self._error(frame_id, f"unknown op {op!r}")
        if op != "hello" and not self.hello_done:
            return self._error(frame_id, "handshake required: send hello first")
        try:
            return self._dispatch(frame_id, op, args)
        except (FrameError, EnvError) as exc:
            return self._error(frame_id, str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            return self._error(frame_id, f"bad arguments for {op}: {exc}")

    def _dispatch(self, frame_id, op: str, args: dict) -> bytes:
        if op == "hello":
            version = args.get("version")
            if version != PROTOCOL_VERSION:
                return self._error(
                    frame_id,
                    f"unsupported protocol version {version!r}, expected {PROTOCOL_VERSION!r}",
                )
            self.hello_done = True
            return self._ok(frame_id, {"version": PROTOCOL_VERSION})
        if op == "reset":
            obs = self.env.reset(str(args["task"]), int(args["seed"]))
            return self._ok(frame_id, obs)
        if op == "step":
            return self._ok(frame_id, self.env.step(args["action"]))
        if op == "get_obs":
            return self._ok(frame_id, self.env.get_obs())
        if op == "check_success":
            return self._ok(frame_id, {"success": bool(self.env.check_success())})
        # close
        self.closed = True
        return self._ok(frame_id, {})

    @staticmethod
    def _ok(frame_id, data) -> bytes:
        return encode_frame({"id": frame_id, "ok": True, "data": data})

    @staticmethod
    def _error(frame_id, message: str) -> bytes:
        return encode_frame({"id": frame_id, "ok": False, "error": message})


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        timeout = self.server.timeout_s
        if timeout:
            self.connection.settimeout(timeout)
        session = BridgeSession(self.server.env_factory())
        try:
            for line in self.rfile:
                response = session.handle_line(line)
                self.wfile.write(response)
                self.wfile.flush()
                if session.closed:
                    break
        except (OSError, socket.timeout):
            pass


class BridgeServer(socketserver.TCPServer):
    """Sequential TCP server: one environment and one client at a time."""

    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        env_factory: Callable[[], object],
        timeout_s: Optional[float] = None,
    ):
        self.env_factory = env_factory
        self.timeout_s = timeout_s
        super().__init__(address, _Handler)


def serve_tcp(
    env_factory: Callable[[], object],
    host: str,
    port: int,
    timeout_s: Optional[float] = None,
) -> None:
    """Listen and serve until the process is terminated."""
    with BridgeServer((host, port), env_factory, timeout_s) as server:
        server.serve_forever()


def serve_stdio(
    env_factory: Callable[[], object],
    stdin=None,
    stdout=None,
) -> None:
    """Serve one session over stdin/stdout (for pipe-spawned deployments)."""
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    session = BridgeSession(env_factory())
    for line in stdin:
        stdout.write(session.handle_line(line))
        stdout.flush()
        if session.closed:
            break
