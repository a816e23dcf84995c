"""env-bridge entry point.

    env-bridge --listen 127.0.0.1:7777 --env echo [--timeout-ms 30000]
    env-bridge --stdio --env echo
"""

from __future__ import annotations

import argparse
import sys

from envbridge.echo_env import make_env
from envbridge.server import serve_stdio, serve_tcp


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="env-bridge", description=__doc__)
    transport = parser.add_mutually_exclusive_group(required=True)
    transport.add_argument("--listen", metavar="HOST:PORT", help="serve over TCP")
    transport.add_argument("--stdio", action="store_true", help="serve over stdin/stdout")
    parser.add_argument("--env", default="echo", help="environment name (default: echo)")
    parser.add_argument(
        "--timeout-ms", type=int, default=0, help="per-connection read timeout (0 = none)"
    )
    args = parser.parse_args(argv)

    try:
        make_env(args.env)  # fail fast on unknown names
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    factory = lambda: make_env(args.env)  # noqa: E731 - one fresh env per connection
    timeout_s = args.timeout_ms / 1000.0 if args.timeout_ms else None

    if args.stdio:
        serve_stdio(factory)
        return 0
    host, sep, port_text = args.listen.rpartition(":")
    if not sep or not port_text.isdigit():
        print(f"error: --listen must look like HOST:PORT, got {args.listen!r}", file=sys.stderr)
        return 2
    try:
        serve_tcp(factory, host or "127.0.0.1", int(port_text), timeout_s)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
