"""Suite runner: drives (task, seed) runs end to end, audits them, and emits
the artifact tree plus the aggregate reports.

Layout of an output directory:

    <out>/<task>__seed<N>/   meta.json, episode.episode, trace.jsonl, validation.json
    <out>/report.csv          per-category aggregate rows
    <out>/report.md           category table plus tool-usage histogram
    <out>/suite.json          config echo + per-run ledgers (wall times live here,
                              never in meta.json, which stays byte-reproducible)
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from manipbench import artifacts
from manipbench.artifacts import RunMeta
from manipbench.audit import ValidationReport, validate, validate_records
from manipbench.catalog import SUITES, builtin_catalog, category_of
from manipbench.domain import TaskSpec
from manipbench.dsl import execute, parse, serialize
from manipbench.engine import RunCondition, RunPolicy, TraceRecord, run_task
from manipbench.ledger import (
    ResourceLedger,
    RunStats,
    aggregate,
    render_category_csv,
    render_category_markdown,
    render_histogram_markdown,
    tool_histogram,
)
from manipbench.reasoners import (
    GiveUpReasoner,
    LLMConfig,
    OracleReasoner,
    Perturbation,
    reasoner_llm,
    reasoner_noisy,
    reasoner_replay,
)
from manipbench.sim import TabletopEnv

SUITE_FILE = "suite.json"
REPORT_CSV = "report.csv"
REPORT_MD = "report.md"

REASONER_NAMES = ("oracle", "noisy", "llm", "replay", "give_up")


class SuiteConfigError(ValueError):
    """Configuration that cannot be turned into runnable work."""


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    tasks: tuple[str, ...]
    seeds: tuple[int, ...]
    condition: RunCondition
    reasoner: str
    out_dir: Path
    parallelism: int = 1
    trial_cap: Optional[int] = None
    coaching_tips: Optional[tuple[str, ...]] = None
    exemplar: Optional[str] = None
    noisy_schedule: tuple[float, ...] = ()
    llm: Optional[LLMConfig] = None
    replay_from: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.seeds:
            raise SuiteConfigError("seed list must be non-empty")
        if self.reasoner not in REASONER_NAMES:
            raise SuiteConfigError(f"unknown reasoner {self.reasoner!r}")
        if self.parallelism < 1:
            raise SuiteConfigError("parallelism must be >= 1")
        if self.condition is RunCondition.PILOT and self.trial_cap is None:
            object.__setattr__(self, "trial_cap", 10)


def resolve_tasks(suite: str, catalog: dict[str, TaskSpec]) -> tuple[str, ...]:
    """A suite is either a named roster or a comma-separated task id list."""
    if suite in SUITES:
        ids = SUITES[suite]
    else:
        ids = tuple(part.strip() for part in suite.split(",") if part.strip())
    if not ids:
        raise SuiteConfigError(f"suite {suite!r} resolves to no tasks")
    for task_id in ids:
        if task_id not in catalog:
            raise SuiteConfigError(f"unknown task {task_id!r}")
    return ids


def _policy(config: SuiteConfig) -> RunPolicy:
    if config.condition is RunCondition.PILOT:
        return RunPolicy(trial_cap=config.trial_cap or 10, condition=RunCondition.PILOT)
    if config.trial_cap is not None:
        # an explicit cap outside the pilot condition is honored as pilot-style
        return RunPolicy(trial_cap=config.trial_cap, condition=RunCondition.PILOT)
    return RunPolicy(condition=config.condition)


def _make_reasoner(config: SuiteConfig, run_id: str):
    if config.reasoner == "oracle":
        return OracleReasoner()
    if config.reasoner == "give_up":
        return GiveUpReasoner()
    if config.reasoner == "noisy":
        schedule = [Perturbation(dz=dz) for dz in config.noisy_schedule]
        return reasoner_noisy(OracleReasoner(), schedule)
    if config.reasoner == "llm":
        if config.llm is None:
            raise SuiteConfigError("llm reasoner requires llm.* configuration")
        return reasoner_llm(config.llm)
    if config.reasoner == "replay":
        if config.replay_from is None:
            raise SuiteConfigError("replay reasoner requires --replay-from DIR")
        trace = Path(config.replay_from) / run_id / artifacts.TRACE_FILE
        return reasoner_replay(trace)
    raise SuiteConfigError(f"unknown reasoner {config.reasoner!r}")


@dataclass
class RunOutput:
    run_id: str
    meta: RunMeta
    ledger: ResourceLedger
    completed: bool
    error: Optional[str] = None


def execute_run(
    task: TaskSpec,
    seed: int,
    config: SuiteConfig,
    catalog: dict[str, TaskSpec],
) -> RunOutput:
    """One full run: turn loop, audit, artifact directory."""
    run_id = artifacts.run_dir_name(task.id, seed)
    run_dir = config.out_dir / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    records: list[TraceRecord] = []
    env = TabletopEnv()
    reasoner = _make_reasoner(config, run_id)
    result = run_task(
        task,
        reasoner,
        _policy(config),
        env,
        seed,
        coaching_tips=config.coaching_tips,
        exemplar=config.exemplar,
        on_record=records.append,
    )

    episode_text = (
        serialize(result.final_script) if result.final_script is not None else _last_script(records)
    )
    raw_success = result.success

    # audit before meta: flagged successes are reported as failures
    probe = TabletopEnv()
    probe.reset(task, seed)
    provisional = RunMeta(
        task=task.id,
        seed=seed,
        success=raw_success,
        raw_success=raw_success,
        num_tries=result.num_tries,
        num_turns=result.num_turns,
    )
    report = validate_records(
        run_id, records, provisional, task, episode_text, probe.hidden_values()
    )
    flags = tuple(f.kind.value for f in report.flags)
    meta = RunMeta(
        task=task.id,
        seed=seed,
        success=raw_success and not flags,
        raw_success=raw_success,
        num_tries=result.num_tries,
        num_turns=result.num_turns,
        flags=flags,
    )

    artifacts.write_trace(run_dir, records)
    artifacts.write_episode(run_dir, episode_text)
    artifacts.write_meta(run_dir, meta)
    artifacts.write_validation(run_dir, report.to_json_obj())
    return RunOutput(run_id=run_id, meta=meta, ledger=result.ledger, completed=True)


def _last_script(records: Sequence[TraceRecord]) -> str:
    for rec in reversed(records):
        if rec.kind == "WRITE_SCRIPT":
            return rec.payload
    return ""


def run_suite(config: SuiteConfig, catalog: Optional[dict[str, TaskSpec]] = None) -> int:
    """Run every (task, seed) pair; exit 0 iff all runs completed."""
    catalog = catalog or builtin_catalog()
    task_ids = config.tasks or resolve_tasks(config.suite, catalog)
    for task_id in task_ids:
        if task_id not in catalog:
            raise SuiteConfigError(f"unknown task {task_id!r}")
    config.out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(catalog[t], seed) for t in task_ids for seed in config.seeds]
    outputs: list[RunOutput] = []
    if config.parallelism == 1:
        for task, seed in jobs:
            outputs.append(_run_guarded(task, seed, config, catalog))
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [
                pool.submit(_run_guarded, task, seed, config, catalog) for task, seed in jobs
            ]
            outputs = [f.result() for f in futures]

    outputs.sort(key=lambda o: o.run_id)
    _write_suite_file(config, outputs)
    write_reports(config.out_dir)
    return 0 if all(o.completed for o in outputs) else 1


def _run_guarded(task, seed, config, catalog) -> RunOutput:
    try:
        return execute_run(task, seed, config, catalog)
    except Exception as exc:  # noqa: BLE001 - partial failures must not kill the suite
        run_id = artifacts.run_dir_name(task.id, seed)
        return RunOutput(
            run_id=run_id,
            meta=RunMeta(task.id, seed, False, False, 0, 0),
            ledger=ResourceLedger(),
            completed=False,
            error=str(exc),
        )


def _write_suite_file(config: SuiteConfig, outputs: Sequence[RunOutput]) -> None:
    payload = {
        "suite": config.suite,
        "tasks": list(config.tasks),
        "seeds": list(config.seeds),
        "condition": config.condition.value,
        "reasoner": config.reasoner,
        "runs": {
            o.run_id: {
                "completed": o.completed,
                "error": o.error,
                "ledger": o.ledger.to_json_obj(),
            }
            for o in outputs
        },
    }
    (config.out_dir / SUITE_FILE).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def collect_run_stats(out_dir: Path) -> list[RunStats]:
    """Rebuild aggregation inputs from run directories plus suite.json."""
    suite_path = out_dir / SUITE_FILE
    ledgers: dict[str, ResourceLedger] = {}
    if suite_path.is_file():
        payload = json.loads(suite_path.read_text(encoding="utf-8"))
        for run_id, info in payload.get("runs", {}).items():
            ledgers[run_id] = ResourceLedger.from_json_obj(info["ledger"])
    stats = []
    for run_dir in sorted(p for p in out_dir.iterdir() if p.is_dir()):
        try:
            meta = artifacts.load_meta(run_dir)
        except artifacts.ArtifactError:
            continue
        ledger = ledgers.get(run_dir.name, ResourceLedger())
        # reported success already folds in the audit policy
        stats.append(RunStats(task_id=meta.task, success=meta.success, ledger=ledger))
    return stats


def write_reports(out_dir: Path) -> None:
    stats = collect_run_stats(out_dir)
    summaries = aggregate(stats, category_of)
    hist = tool_histogram(stats)
    (out_dir / REPORT_CSV).write_text(render_category_csv(summaries), encoding="utf-8")
    md = (
        "# Suite report\n\n"
        + render_category_markdown(summaries)
        + "\n\n## Tool usage\n\n"
        + render_histogram_markdown(hist, label=out_dir.name or "suite")
        + "\n"
    )
    (out_dir / REPORT_MD).write_text(md, encoding="utf-8")


@dataclass(frozen=True)
class ReplayOutcome:
    matches: bool
    recomputed_success: bool
    stored: RunMeta
    detail: str


def replay_run(
    run_dir: str | Path, catalog: Optional[dict[str, TaskSpec]] = None
) -> ReplayOutcome:
    """Re-execute the stored final script and compare against meta.json."""
    catalog = catalog or builtin_catalog()
    run_dir = Path(run_dir)
    meta = artifacts.load_meta(run_dir)
    episode_text = artifacts.load_episode(run_dir)
    task = catalog.get(meta.task)
    if task is None:
        raise artifacts.ArtifactError(f"unknown task {meta.task!r}")
    env = TabletopEnv()
    env.reset(task, meta.seed)
    script = parse(episode_text)
    trace = execute(script, env)
    recomputed = trace.outcome.success
    matches = recomputed == meta.raw_success
    detail = (
        "replay matches stored meta"
        if matches
        else f"replay success={recomputed} but meta.raw_success={meta.raw_success}"
    )
    return ReplayOutcome(
        matches=matches, recomputed_success=recomputed, stored=meta, detail=detail
    )


def audit_run(
    run_dir: str | Path, catalog: Optional[dict[str, TaskSpec]] = None
) -> ValidationReport:
    """Recompute the validation report for an existing run directory and
    rewrite validation.json; the other artifacts are never touched."""
    catalog = catalog or builtin_catalog()
    run_dir = Path(run_dir)
    report = validate(run_dir, catalog)
    artifacts.write_validation(run_dir, report.to_json_obj())
    return report
