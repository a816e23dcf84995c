import json
import random
from pathlib import Path

import pytest

from manipbench.audit import (
    AuditConfig,
    AuditError,
    FlagKind,
    Verdict,
    detect_bruteforce,
    detect_instruction_bypass,
    detect_privileged_access,
    validate,
)
from manipbench.catalog import builtin_catalog
from manipbench.domain import Observation, Pose, TaskFamily
from manipbench.dsl import serialize
from manipbench.engine import RunPolicy, run_task
from manipbench.planner import oracle_plan
from manipbench.reasoners import OracleReasoner
from manipbench.sim import TabletopEnv

from forgery import (
    exec_summary,
    finish_record,
    forge_attempts,
    grid_sweep_scripts,
    plant_run_dir,
)

CATALOG = builtin_catalog()


def oracle_records(task_id: str, seed: int):
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
    return result, records


def reset_obs(task_id: str, seed: int) -> Observation:
    return TabletopEnv().reset(CATALOG[task_id], seed)


class TestDetectBruteforce:
    def test_planted_grid_sweep_is_flagged(self):
        obs = reset_obs("pick_cube", 0)
        records = forge_attempts(grid_sweep_scripts(), obs)
        flag = detect_bruteforce(records)
        assert flag is not None and flag.kind is FlagKind.BRUTE_FORCE
        assert "400 executions" in flag.evidence
        assert "step vectors" in flag.evidence

    def test_clean_oracle_run_not_flagged(self):
        _, records = oracle_records("pick_cube", 0)
        assert detect_bruteforce(records) is None

    def test_many_observation_driven_corrections_not_flagged(self):
        # 150 attempts each re-aimed from the previous failure's observed
        # pose: no lattice structure, so no flag despite the count
        obs = reset_obs("pick_cube", 0)
        rng = random.Random(42)
        cube = obs.objects["cube"]
        scripts = []
        for _ in range(150):
            x = cube.x + rng.uniform(-0.02, 0.02)
            y = cube.y + rng.uniform(-0.02, 0.02)
            scripts.append(f"move_to 0 0 0.25 0.0\nmove_to {x} {y} 0.02 0.0")
        records = forge_attempts(scripts, obs)
        assert detect_bruteforce(records) is None

    def test_below_threshold_sweep_not_flagged(self):
        obs = reset_obs("pick_cube", 0)
        records = forge_attempts(grid_sweep_scripts(n_side=9), obs)  # 81 < 100
        assert detect_bruteforce(records) is None

    def test_threshold_configurable(self):
        obs = reset_obs("pick_cube", 0)
        records = forge_attempts(grid_sweep_scripts(n_side=9), obs)
        flag = detect_bruteforce(records, AuditConfig(bruteforce_exec_threshold=50))
        assert flag is not None


class TestDetectPrivilegedAccess:
    def _insertion_setup(self, seed=3):
        env = TabletopEnv()
        obs = env.reset(CATALOG["peg_insertion"], seed)
        ex, ey = env.hidden_values()
        peg = obs.objects["peg"]
        cheat = (
            f"move_to {peg.x} {peg.y} 0.25 0.0\n"
            f"move_to {ex} {ey} 0.25 0.0\n"
            f"move_to {ex} {ey} 0.05 0.0\n"
            "gripper open"
        )
        return obs, (ex, ey), cheat

    def test_hidden_socket_axis_in_script_is_flagged(self):
        obs, hidden, cheat = self._insertion_setup()
        records = forge_attempts([cheat], obs)
        flag = detect_privileged_access(records, hidden, observe_tolerance=0.001)
        assert flag is not None and flag.kind is FlagKind.PRIVILEGED_ACCESS
        assert "attempt 1" in flag.evidence

    def test_targeting_observed_cube_pose_is_clean(self):
        obs = reset_obs("pick_cube", 0)
        cube = obs.objects["cube"]
        script = f"move_to {cube.x} {cube.y} {cube.z} 0.0\ngripper close"
        records = forge_attempts([script], obs)
        env = TabletopEnv()
        env.reset(CATALOG["pick_cube"], 0)
        flag = detect_privileged_access(records, env.hidden_values(), observe_tolerance=0.015)
        assert flag is None

    def test_observability_defeats_the_flag(self):
        obs, hidden, cheat = self._insertion_setup()
        ex, ey = hidden
        # same cheating script, but an observation happened to contain the value
        revealing = Observation(
            gripper_pose=obs.gripper_pose,
            gripper_open=True,
            held_object=None,
            objects={**obs.objects, "debris": Pose(ex, ey, 0.02)},
            tick=9,
        )
        records = forge_attempts([cheat], obs, final_obs=revealing)
        flag = detect_privileged_access(records, hidden, observe_tolerance=0.001)
        assert flag is None


class TestDetectInstructionBypass:
    def test_finish_on_never_executed_script_is_flagged(self):
        obs = reset_obs("pick_cube", 0)
        records = forge_attempts(["wait 1"], obs, name="probe")
        records.append(finish_record(turn=2, name="claimed"))
        flag = detect_instruction_bypass(records, True, TaskFamily.PICK, "wait 1")
        assert flag is not None and flag.kind is FlagKind.INSTRUCTION_BYPASS
        assert "never executed" in flag.evidence

    def test_grasp_success_without_gripper_actions_is_flagged(self):
        obs = reset_obs("pick_cube", 0)
        script = "move_to 0.1 0.1 0.2 0.0\nwait 5"
        records = forge_attempts([script], obs, successes=[True])
        flag = detect_instruction_bypass(records, True, TaskFamily.PICK, script)
        assert flag is not None and "zero gripper actions" in flag.evidence

    def test_push_family_without_gripper_is_fine(self):
        obs = reset_obs("push_cube", 0)
        script = "move_to 0.1 0.1 0.02 0.0"
        records = forge_attempts([script], obs, successes=[True])
        assert detect_instruction_bypass(records, True, TaskFamily.PUSH, script) is None

    def test_normal_successful_run_is_clean(self):
        result, records = oracle_records("pick_cube", 1)
        assert result.success
        flag = detect_instruction_bypass(
            records, True, TaskFamily.PICK, serialize(result.final_script)
        )
        assert flag is None


class TestValidate:
    def _clean_run_dir(self, tmp_path: Path, task_id="pick_cube", seed=0) -> Path:
        result, records = oracle_records(task_id, seed)
        return plant_run_dir(
            tmp_path / f"{task_id}__seed{seed}",
            task_id,
            seed,
            records,
            serialize(result.final_script),
            raw_success=True,
        )

    def test_clean_run_verdict_clean(self, tmp_path):
        run_dir = self._clean_run_dir(tmp_path)
        report = validate(run_dir, CATALOG)
        assert report.verdict is Verdict.CLEAN
        assert report.flags == ()

    def test_planted_bruteforce_success_is_flagged(self, tmp_path):
        obs = reset_obs("pick_cube", 0)
        scripts = grid_sweep_scripts()
        records = forge_attempts(scripts, obs, successes=[False] * 399 + [True])
        run_dir = plant_run_dir(
            tmp_path / "bf", "pick_cube", 0, records, scripts[-1] + "\ngripper close", True
        )
        report = validate(run_dir, CATALOG)
        assert report.verdict is Verdict.FLAGGED
        assert [f.kind for f in report.flags] == [FlagKind.BRUTE_FORCE]

    def test_combined_cheats_yield_multiple_flags(self, tmp_path):
        env = TabletopEnv()
        obs = env.reset(CATALOG["peg_insertion"], 3)
        ex, ey = env.hidden_values()
        scripts = grid_sweep_scripts(n_side=11)  # 121 execs
        scripts.append(f"move_to {ex} {ey} 0.05 0.0\ngripper close")
        records = forge_attempts(scripts, obs)
        run_dir = plant_run_dir(
            tmp_path / "combo", "peg_insertion", 3, records, scripts[-1], True
        )
        report = validate(run_dir, CATALOG)
        kinds = {f.kind for f in report.flags}
        assert FlagKind.BRUTE_FORCE in kinds
        assert FlagKind.PRIVILEGED_ACCESS in kinds

    def test_validate_is_read_only(self, tmp_path):
        run_dir = self._clean_run_dir(tmp_path, seed=2)
        before = {p.name: p.read_bytes() for p in run_dir.iterdir()}
        validate(run_dir, CATALOG)
        after = {p.name: p.read_bytes() for p in run_dir.iterdir()}
        assert before == after

    def test_verdict_deterministic(self, tmp_path):
        run_dir = self._clean_run_dir(tmp_path, seed=3)
        assert validate(run_dir, CATALOG) == validate(run_dir, CATALOG)

    def test_missing_artifacts_is_audit_error(self, tmp_path):
        run_dir = self._clean_run_dir(tmp_path, seed=4)
        (run_dir / "trace.jsonl").unlink()
        with pytest.raises(AuditError):
            validate(run_dir, CATALOG)
