from __future__ import annotations

import pytest

from manipbench.catalog import builtin_catalog
from manipbench.domain import (
    AttemptRecord,
    Context,
    ObsSummary,
    Observation,
    Outcome,
    Pose,
)
from manipbench.dsl import parse


@pytest.fixture(scope="session")
def catalog():
    return builtin_catalog()


def make_obs(
    gx: float = 0.0,
    gy: float = 0.0,
    gz: float = 0.3,
    tick: int = 0,
    held: str | None = None,
    objects: dict[str, Pose] | None = None,
) -> Observation:
    objs = objects if objects is not None else {"cube": Pose(0.1, 0.2, 0.02)}
    if held is not None and held not in objs:
        objs = {**objs, held: Pose(0.1, 0.2, 0.02)}
    return Observation(
        gripper_pose=Pose(gx, gy, gz),
        gripper_open=held is None,
        held_object=held,
        objects=objs,
        tick=tick,
    )


def make_attempt(
    index: int,
    success: bool = False,
    error: str | None = None,
    script_text: str = "move_to 0.1 0.2 0.25 0.0\ngripper close",
    note: str | None = None,
) -> AttemptRecord:
    final = make_obs(tick=7)
    return AttemptRecord(
        index=index,
        script=parse(script_text),
        observations=ObsSummary(initial=make_obs(), final=final, note=note),
        outcome=Outcome(success=success, error=error, final_obs=final),
    )


def make_context(n_attempts: int, char_budget: int = 6000) -> Context:
    ctx = Context(char_budget=char_budget)
    attempts = tuple(make_attempt(i) for i in range(1, n_attempts + 1))
    return Context(attempts=attempts, char_budget=char_budget)
