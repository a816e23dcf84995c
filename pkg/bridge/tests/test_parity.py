"""Bridge parity acceptance: the primary harness driving the bridge's echo
environment observes exactly what its local echo environment produces.

These tests exercise the external interface end to end: the primary's
connect_remote client against this package's TCP server, plus the stdio
transport through the installed CLI.
"""

import json
import random
import socket
import subprocess
import sys
import threading

import pytest

from manipbench.domain import Action, GripCommand
from manipbench.echo import EchoEnv as LocalEchoEnv
from manipbench.remote import connect_remote

from envbridge.echo_env import make_env
from envbridge.server import BridgeServer


@pytest.fixture()
def bridge_endpoint():
    server = BridgeServer(("127.0.0.1", 0), lambda: make_env("echo"))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield f"{host}:{port}"
    server.shutdown()
    server.server_close()


def random_script(rng: random.Random, length: int) -> list[Action]:
    actions = []
    for _ in range(length):
        roll = rng.random()
        if roll < 0.55:
            actions.append(
                Action.move_to(
                    rng.uniform(-0.45, 0.45),
                    rng.uniform(-0.45, 0.45),
                    rng.uniform(0.0, 0.55),
                    rng.uniform(-3.0, 3.0),
                )
            )
        elif roll < 0.8:
            actions.append(Action.gripper(rng.choice([GripCommand.OPEN, GripCommand.CLOSE])))
        else:
            actions.append(Action.wait(rng.randint(1, 9)))
    return actions


def test_criterion_9_parity_twenty_triples(bridge_endpoint):
    rng = random.Random(2024)
    triples = [
        (f"echo_task_{i % 4}", i, random_script(rng, rng.randint(4, 12))) for i in range(20)
    ]
    remote = connect_remote(bridge_endpoint)
    local = LocalEchoEnv()
    mismatches = 0
    for task_id, seed, script in triples:
        local_seq = [local.reset(task_id, seed)]
        remote_seq = [remote.reset(task_id, seed)]
        for action in script:
            local_seq.append(local.step(action))
            remote_seq.append(remote.step(action))
        assert local.check_success() == remote.check_success()
        if local_seq != remote_seq:
            mismatches += 1
    remote.close()
    assert mismatches == 0
    print("\n[PASS] criterion 9a: 20/20 (task, seed, script) triples observation-identical")


def test_criterion_9_fuzz_never_crashes_server(bridge_endpoint):
    rng = random.Random(99)
    host, port = bridge_endpoint.rsplit(":", 1)
    sock = socket.create_connection((host, int(port)), timeout=5)
    reader = sock.makefile("rb")

    def ask(obj):
        sock.sendall((json.dumps(obj) + "\n").encode())
        return json.loads(reader.readline())

    assert ask({"id": 0, "op": "hello", "args": {"version": "faea-bridge/1"}})["ok"]
    for i in range(200):
        kind = rng.randint(0, 3)
        if kind == 0:
            payload = bytes(rng.randrange(256) for _ in range(rng.randint(1, 40))).replace(b"\n", b"x") + b"\n"
        elif kind == 1:
            payload = json.dumps(rng.choice([[1], 7, "x", None, True])).encode() + b"\n"
        elif kind == 2:
            payload = json.dumps({"id": i, "op": rng.choice(["warp", "", "reset"]), "args": rng.choice([None, [], {"seed": "NaN"}, {}])}).encode() + b"\n"
        else:
            payload = b'{"id": 1, "op": "step", "args": {"action": {"kind": "move_to", "target": [1]}}}\n'
        sock.sendall(payload)
        reply = json.loads(reader.readline())
        assert isinstance(reply, dict) and "ok" in reply
        assert reply["ok"] is False, payload
    # server is alive and correct after 200 garbage frames
    assert ask({"id": 1, "op": "reset", "args": {"task": "echo", "seed": 1}})["ok"] is True
    assert ask({"id": 2, "op": "check_success", "args": {}})["ok"] is True
    sock.close()
    print("\n[PASS] criterion 9b: 200 malformed frames -> 200 error replies, server healthy")


def test_parity_through_stdio_cli():
    # the installed CLI serving over pipes must agree with the local echo env
    proc = subprocess.Popen(
        [sys.executable, "-m", "envbridge.cli", "--stdio", "--env", "echo"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
    )

    def ask(obj):
        proc.stdin.write((json.dumps(obj) + "\n").encode())
        proc.stdin.flush()
        return json.loads(proc.stdout.readline())

    try:
        assert ask({"id": 1, "op": "hello", "args": {"version": "faea-bridge/1"}})["ok"]
        reply = ask({"id": 2, "op": "reset", "args": {"task": "pipe_task", "seed": 3}})
        local_obs = LocalEchoEnv().reset("pipe_task", 3)
        assert reply["data"]["objects"]["obj0"] == [
            format(v, ".9g")
            for v in (
                local_obs.objects["obj0"].x,
                local_obs.objects["obj0"].y,
                local_obs.objects["obj0"].z,
                local_obs.objects["obj0"].yaw,
            )
        ]
        ask({"id": 3, "op": "close", "args": {}})
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)
    assert proc.returncode == 0
