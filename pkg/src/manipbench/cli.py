"""Command-line benchmark runner.

    manipbench run --suite core5 --seeds 0..4 --condition baseline \
        --reasoner oracle --out runs/ [--parallel N] [--cap K] \
        [--coaching-file PATH] [--exemplar PATH] [--config PATH] [--replay-from DIR]
    manipbench replay --run runs/pick_cube__seed0
    manipbench audit  --run runs/pick_cube__seed0
    manipbench report --out runs/

Exit codes: 0 success, 1 runtime mismatch/partial failure, 2 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from manipbench.artifacts import ArtifactError
from manipbench.audit import AuditError
from manipbench.catalog import builtin_catalog
from manipbench.config import ConfigError, config_get, load_config
from manipbench.engine import RunCondition
from manipbench.reasoners import LLMConfig
from manipbench.suite import (
    SuiteConfig,
    SuiteConfigError,
    audit_run,
    replay_run,
    resolve_tasks,
    run_suite,
    write_reports,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def parse_seeds(text: str) -> tuple[int, ...]:
    """Accept "0..4", "0,3,7", or a single integer."""
    text = text.strip()
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in text.split(",") if part.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manipbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark suite")
    run_p.add_argument("--suite", required=True, help="named suite or comma-separated task ids")
    run_p.add_argument("--seeds", required=True, help="e.g. 0..4 or 0,3,7")
    run_p.add_argument(
        "--condition",
        choices=[c.value for c in RunCondition],
        default=RunCondition.BASELINE.value,
    )
    run_p.add_argument(
        "--reasoner", choices=["oracle", "noisy", "llm", "replay", "give_up"], default="oracle"
    )
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--parallel", type=int, default=1)
    run_p.add_argument("--cap", type=int, default=None, help="trial cap (pilot condition)")
    run_p.add_argument("--coaching-file", default=None, help="file with one tip per line")
    run_p.add_argument("--exemplar", default=None, help="solved episode file included in prompts")
    run_p.add_argument("--config", default=None, help="key=value configuration file")
    run_p.add_argument("--replay-from", default=None, help="suite dir with trace logs to replay")
    run_p.add_argument(
        "--schedule",
        default="",
        help="comma-separated z offsets for the noisy reasoner, e.g. 0.05,0.05,0",
    )

    replay_p = sub.add_parser("replay", help="re-execute a run's final script")
    replay_p.add_argument("--run", required=True)

    audit_p = sub.add_parser("audit", help="recompute a run's validation report")
    audit_p.add_argument("--run", required=True)

    report_p = sub.add_parser("report", help="regenerate suite reports")
    report_p.add_argument("--out", required=True)
    return parser


def _suite_config(args: argparse.Namespace) -> SuiteConfig:
    catalog = builtin_catalog()
    tasks = resolve_tasks(args.suite, catalog)
    seeds = parse_seeds(args.seeds)
    file_values = load_config(args.config)

    coaching = None
    if args.coaching_file:
        path = Path(args.coaching_file)
        if not path.is_file():
            raise SuiteConfigError(f"coaching file not found: {path}")
        coaching = tuple(
            line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()
        )

    exemplar = None
    if args.exemplar:
        path = Path(args.exemplar)
        if not path.is_file():
            raise SuiteConfigError(f"exemplar file not found: {path}")
        exemplar = path.read_text(encoding="utf-8")

    llm = None
    if args.reasoner == "llm":
        endpoint = config_get(file_values, "llm.endpoint")
        model = config_get(file_values, "llm.model")
        if not endpoint or not model:
            raise SuiteConfigError("llm reasoner needs llm.endpoint and llm.model configured")
        llm = LLMConfig(
            endpoint=endpoint,
            model=model,
            max_tokens=int(config_get(file_values, "llm.max_tokens", "1024")),
            api_key=config_get(file_values, "llm.api_key"),
        )

    schedule = tuple(float(p) for p in args.schedule.split(",") if p.strip())

    return SuiteConfig(
        suite=args.suite,
        tasks=tasks,
        seeds=seeds,
        condition=RunCondition(args.condition),
        reasoner=args.reasoner,
        out_dir=Path(args.out),
        parallelism=args.parallel,
        trial_cap=args.cap,
        coaching_tips=coaching,
        exemplar=exemplar,
        noisy_schedule=schedule,
        llm=llm,
        replay_from=Path(args.replay_from) if args.replay_from else None,
    )


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _suite_config(args)
            return run_suite(config)
        if args.command == "replay":
            outcome = replay_run(args.run)
            print(outcome.detail)
            return EXIT_OK if outcome.matches else EXIT_RUNTIME
        if args.command == "audit":
            report = audit_run(args.run)
            print(f"{report.run_id}: {report.verdict.value}")
            for flag in report.flags:
                print(f"  {flag.kind.value}: {flag.evidence}")
            return EXIT_OK
        if args.command == "report":
            write_reports(Path(args.out))
            return EXIT_OK
    except (SuiteConfigError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactError, AuditError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_CONFIG  # pragma: no cover - argparse enforces the commands


if __name__ == "__main__":
    raise SystemExit(main())
