import json
from pathlib import Path

import pytest

from manipbench.artifacts import TraceLoadError
from manipbench.catalog import builtin_catalog
from manipbench.engine import (
    ReasonerTurnError,
    RunPolicy,
    RunView,
    ToolCall,
    ToolKind,
    run_task,
)
from manipbench.domain import Context
from manipbench.reasoners import (
    LLMConfig,
    LLMReasoner,
    OracleReasoner,
    reasoner_llm,
    reasoner_replay,
)
from manipbench.sim import TabletopEnv

CATALOG = builtin_catalog()


def view_stub(transcript=()) -> RunView:
    env = TabletopEnv()
    obs = env.reset(CATALOG["pick_cube"], 0)
    return RunView(
        task=CATALOG["pick_cube"],
        prompt="prompt",
        initial_obs=obs,
        context=Context(),
        transcript=tuple(transcript),
    )


def fake_reply(content: str, completion_tokens: int | None = 42):
    payload = {"choices": [{"message": {"content": content}}]}
    if completion_tokens is not None:
        payload["usage"] = {"completion_tokens": completion_tokens}
    return payload


def make_llm(replies, failures=0):
    """LLM reasoner with a canned transport; `failures` initial transport errors."""
    state = {"calls": 0, "fails": failures, "requests": []}

    def transport(payload, config):
        state["requests"].append(payload)
        if state["fails"] > 0:
            state["fails"] -= 1
            raise ConnectionError("synthetic transport fault")
        reply = replies[min(state["calls"], len(replies) - 1)]
        state["calls"] += 1
        return reply

    config = LLMConfig(
        endpoint="http://localhost:0/v1/chat/completions",
        model="test-model",
        backoff_s=0.0,
        transport=transport,
    )
    return reasoner_llm(config), state


class TestLLMReasoner:
    def test_single_fenced_block_becomes_write_and_exec(self):
        reasoner, _ = make_llm([fake_reply("plan:\n```\nmove_to 0 0 0.3 0.0\nwait 1\n```")])
        calls = reasoner.next_turn(view_stub())
        assert [c.kind for c in calls] == [ToolKind.WRITE_SCRIPT, ToolKind.EXEC_SCRIPT]
        assert calls[0].payload == "move_to 0 0 0.3 0.0\nwait 1"
        assert reasoner.last_token_count == 42

    def test_language_tag_on_fence_is_accepted(self):
        reasoner, _ = make_llm([fake_reply("```episode\nwait 1\n```")])
        calls = reasoner.next_turn(view_stub())
        assert calls[0].payload == "wait 1"

    def test_give_up_token_ends_the_run(self):
        reasoner, _ = make_llm([fake_reply("I am stuck. GIVE_UP")])
        calls = reasoner.next_turn(view_stub())
        assert [c.kind for c in calls] == [ToolKind.GIVE_UP]
        env = TabletopEnv()
        result = run_task(CATALOG["pick_cube"], reasoner, RunPolicy.baseline(), env, 0)
        assert result.success is False
        assert result.num_turns == 1

    def test_two_fenced_blocks_is_ambiguous(self):
        reasoner, _ = make_llm([fake_reply("```\nwait 1\n```\ntext\n```\nwait 2\n```")])
        with pytest.raises(ReasonerTurnError, match="ambiguous script"):
            reasoner.next_turn(view_stub())

    def test_reply_without_block_or_token_fails_the_turn(self):
        reasoner, _ = make_llm([fake_reply("thinking out loud, no action")])
        with pytest.raises(ReasonerTurnError):
            reasoner.next_turn(view_stub())

    def test_finish_token_targets_last_written_script(self):
        reasoner, _ = make_llm([fake_reply("success observed. FINISH")])
        transcript = ((ToolCall.write_script("episode", "wait 1"), "stored"),)
        calls = reasoner.next_turn(view_stub(transcript))
        assert calls == (ToolCall.finish("episode"),)

    def test_finish_without_prior_write_fails_the_turn(self):
        reasoner, _ = make_llm([fake_reply("FINISH")])
        with pytest.raises(ReasonerTurnError):
            reasoner.next_turn(view_stub())

    def test_transient_transport_faults_are_retried(self):
        reasoner, state = make_llm([fake_reply("```\nwait 1\n```")], failures=2)
        calls = reasoner.next_turn(view_stub())
        assert calls[0].kind is ToolKind.WRITE_SCRIPT
        assert len(state["requests"]) == 3  # two faults + one success

    def test_persistent_transport_failure_becomes_turn_failure(self):
        reasoner, state = make_llm([fake_reply("unused")], failures=10)
        with pytest.raises(ReasonerTurnError, match="transport failure"):
            reasoner.next_turn(view_stub())
        assert len(state["requests"]) == 3  # the configured retry budget

    def test_request_payload_shape(self):
        reasoner, state = make_llm([fake_reply("```\nwait 1\n```")])
        reasoner.next_turn(view_stub())
        payload = state["requests"][0]
        assert payload["model"] == "test-model"
        assert payload["max_tokens"] == 1024
        assert payload["messages"][0]["role"] == "user"

    def test_synthetic_tokens_used_when_usage_missing(self):
        reasoner, _ = make_llm([fake_reply("```\nwait 1\n```", completion_tokens=None)])
        env = TabletopEnv()
        result = run_task(CATALOG["pick_cube"], reasoner, RunPolicy.baseline(), env, 0)
        assert result.ledger.tokens_out > 0

    def test_full_llm_run_succeeds_with_scripted_model(self):
        task = CATALOG["pick_cube"]
        probe = TabletopEnv()
        obs = probe.reset(task, 0)
        from manipbench.dsl import serialize
        from manipbench.planner import oracle_plan

        script_text = serialize(oracle_plan(task, obs))
        reasoner, _ = make_llm(
            [fake_reply(f"attempt:\n```\n{script_text}\n```"), fake_reply("FINISH")]
        )
        env = TabletopEnv()
        result = run_task(task, reasoner, RunPolicy.baseline(), env, 0)
        assert result.success is True
        assert result.num_tries == 1
        assert result.ledger.tokens_out == 84  # two replies at 42 reported tokens


class TestReplayReasoner:
    def _record_run(self, tmp_path: Path, seed=0, task_id="pick_cube"):
        records = []
        env = TabletopEnv()
        result = run_task(
            CATALOG[task_id],
            OracleReasoner(),
            RunPolicy.baseline(),
            env,
            seed,
            on_record=records.append,
        )
        trace_file = tmp_path / "trace.jsonl"
        trace_file.write_text(
            "".join(r.to_json_line() + "\n" for r in records), encoding="utf-8"
        )
        return result, records, trace_file

    def test_replay_reproduces_run_result(self, tmp_path):
        original, records, trace_file = self._record_run(tmp_path)
        replayed_records = []
        env = TabletopEnv()
        replayed = run_task(
            CATALOG["pick_cube"],
            reasoner_replay(trace_file),
            RunPolicy.baseline(),
            env,
            0,
            on_record=replayed_records.append,
        )
        assert (replayed.success, replayed.num_tries, replayed.num_turns) == (
            original.success,
            original.num_tries,
            original.num_turns,
        )
        # deterministic end to end: identical dispatches and identical results
        assert [(r.kind, r.name, r.payload, r.result_summary) for r in replayed_records] == [
            (r.kind, r.name, r.payload, r.result_summary) for r in records
        ]

    def test_truncated_log_is_a_load_error(self, tmp_path):
        _, records, trace_file = self._record_run(tmp_path)
        text = trace_file.read_text(encoding="utf-8")
        trace_file.write_text(text[: len(text) // 2], encoding="utf-8")
        with pytest.raises(TraceLoadError):
            reasoner_replay(trace_file)

    def test_replay_against_other_seed_recomputes_success(self, tmp_path):
        original, _, trace_file = self._record_run(tmp_path, seed=0)
        assert original.success is True
        env = TabletopEnv()
        replayed = run_task(
            CATALOG["pick_cube"],
            reasoner_replay(trace_file),
            RunPolicy.baseline(),
            env,
            seed=913,
        )
        assert replayed.success is False  # never copied from the log
