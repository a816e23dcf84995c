import math

import pytest
from hypothesis import given, strategies as st

from manipbench.domain import (
    Action,
    Context,
    ContractError,
    GripCommand,
    Observation,
    Outcome,
    Pose,
    SuccessParams,
    SceneRandomization,
    ObjectSpec,
    TaskFamily,
    TaskSpec,
    context_append,
    context_render,
    normalize_yaw,
)

from conftest import make_attempt, make_context, make_obs


class TestPose:
    def test_yaw_normalized_into_half_open_interval(self):
        assert Pose(0, 0, 0, yaw=7.0).yaw == pytest.approx(7.0 - math.tau)
        assert Pose(0, 0, 0, yaw=-math.pi).yaw == math.pi
        assert Pose(0, 0, 0, yaw=math.pi).yaw == math.pi

    @given(st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_normalize_yaw_idempotent(self, yaw):
        once = normalize_yaw(yaw)
        assert -math.pi < once <= math.pi
        assert normalize_yaw(once) == once

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose(float("nan"), 0, 0)
        with pytest.raises(ValueError):
            Pose(0, float("inf"), 0)


class TestAction:
    def test_kind_field_exclusivity(self):
        with pytest.raises(ValueError):
            Action(kind=Action.move_to(0, 0, 0).kind)  # MOVE_TO without target
        with pytest.raises(ValueError):
            Action.wait(0)
        with pytest.raises(ValueError):
            Action.wait(-3)

    def test_move_to_workspace_bounds(self):
        Action.move_to(0.5, -0.5, 0.6)  # corners allowed
        with pytest.raises(ValueError):
            Action.move_to(0.51, 0, 0.1)
        with pytest.raises(ValueError):
            Action.move_to(0, 0, -0.01)


class TestTaskSpec:
    def _scene(self):
        return SceneRandomization(
            objects=(ObjectSpec("cube", (0.0, 0.1), (0.0, 0.1)),),
            goal_x_range=(-0.2, -0.1),
            goal_y_range=(-0.1, 0.1),
        )

    def test_instruction_must_be_non_empty(self):
        with pytest.raises(ValueError):
            TaskSpec("t", "   ", self._scene(), SuccessParams(), TaskFamily.PICK)

    def test_ranges_must_be_ordered(self):
        with pytest.raises(ValueError):
            ObjectSpec("cube", (0.2, 0.1), (0.0, 0.1))
        with pytest.raises(ValueError):
            SceneRandomization(
                objects=(ObjectSpec("cube", (0.0, 0.1), (0.0, 0.1)),),
                goal_x_range=(0.3, 0.1),
            )

    def test_tolerances_strictly_positive(self):
        with pytest.raises(ValueError):
            SuccessParams(position_tolerance=0.0)
        with pytest.raises(ValueError):
            SuccessParams(clearance=-0.001)


class TestContextAppend:
    def test_append_to_empty(self):
        ctx = context_append(Context(), make_attempt(1))
        assert len(ctx.attempts) == 1
        assert ctx.attempts[0].index == 1

    def test_append_preserves_order(self):
        ctx = make_context(2)
        ctx = context_append(ctx, make_attempt(3))
        assert [a.index for a in ctx.attempts] == [1, 2, 3]

    def test_out_of_order_index_rejected(self):
        ctx = make_context(2)
        with pytest.raises(ContractError):
            context_append(ctx, make_attempt(2))
        with pytest.raises(ContractError):
            context_append(ctx, make_attempt(5))

    @given(st.integers(min_value=0, max_value=8))
    def test_append_only_prefix_preserved(self, n):
        ctx = make_context(n)
        new = context_append(ctx, make_attempt(n + 1))
        assert new.attempts[: len(ctx.attempts)] == ctx.attempts


class TestContextRender:
    def test_empty_renders_empty(self):
        assert context_render(Context()) == ""

    def test_failed_attempt_shows_script_and_error(self):
        rec = make_attempt(1, error="no grasp")
        ctx = context_append(Context(), rec)
        text = context_render(ctx)
        assert "no grasp" in text
        assert rec.script.source_text in text

    def test_overflow_compacts_oldest_keeps_newest(self):
        long_script = "\n".join(f"move_to 0.1 0.2 {0.25 + i / 1000}" for i in range(6))
        a1 = make_attempt(1, error="first failure", script_text=long_script)
        a2 = make_attempt(2, error="second failure")
        full = Context(attempts=(a1, a2), char_budget=100000)
        full_text = context_render(full)
        tight = Context(attempts=(a1, a2), char_budget=len(full_text) // 2)
        text = context_render(tight)
        # oldest reduced to its one-line header, newest rendered in full
        assert "=== Attempt 1: FAILURE (error: first failure) ===" in text
        assert a1.script.source_text not in text
        assert a2.script.source_text in text
        assert len(text) < len(full_text)

    def test_render_deterministic(self):
        ctx = make_context(3)
        assert context_render(ctx) == context_render(ctx)
        clone = make_context(3)
        assert context_render(ctx) == context_render(clone)

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=4000))
    def test_budget_bound_everything_but_newest(self, n, budget):
        ctx = make_context(n, char_budget=budget)
        from manipbench.domain import _render_attempt_full

        newest_full = _render_attempt_full(ctx.attempts[-1])
        rendered = context_render(ctx)
        assert rendered.endswith(newest_full)
        assert len(rendered) - len(newest_full) <= budget


class TestObservationAndOutcome:
    def test_held_object_must_be_known(self):
        with pytest.raises(ValueError):
            Observation(
                gripper_pose=Pose(0, 0, 0.3),
                gripper_open=False,
                held_object="ghost",
                objects={"cube": Pose(0, 0, 0.02)},
                tick=0,
            )

    def test_error_implies_failure(self):
        with pytest.raises(ValueError):
            Outcome(success=True, error="boom", final_obs=make_obs())
