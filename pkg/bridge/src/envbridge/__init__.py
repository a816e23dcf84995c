"""env-bridge: serves four-op manipulation environments over a newline-
delimited JSON wire protocol (version faea-bridge/1).

The package is deliberately dependency-free and does not import the client
harness; the two sides meet only on the wire.
"""

from envbridge.protocol import PROTOCOL_VERSION
from envbridge.echo_env import EchoEnv
from envbridge.adapter import AdapterError, adapt_absolute_control
from envbridge.server import BridgeSession, serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "BridgeSession",
    "EchoEnv",
    "PROTOCOL_VERSION",
    "adapt_absolute_control",
    "serve_stdio",
    "serve_tcp",
]
