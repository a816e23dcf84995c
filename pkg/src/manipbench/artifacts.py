"""Run-directory artifact schemas and IO.

Every completed run directory holds exactly four files:

    meta.json        frozen, versioned summary (byte-stable across reruns)
    episode.episode  final (or last written) script text
    trace.jsonl      one JSON object per tool dispatch
    validation.json  audit report

meta.json deliberately contains nothing wall-clock dependent so identical
configurations reproduce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from manipbench.engine import TraceRecord

META_SCHEMA_VERSION = 1
META_FILE = "meta.json"
EPISODE_FILE = "episode.episode"
TRACE_FILE = "trace.jsonl"
VALIDATION_FILE = "validation.json"
RUN_FILES = (META_FILE, EPISODE_FILE, TRACE_FILE, VALIDATION_FILE)


class ArtifactError(RuntimeError):
    """A run directory is missing or carries malformed artifacts."""


class TraceLoadError(ValueError):
    """The trace log is truncated or malformed."""


@dataclass(frozen=True)
class RunMeta:
    task: str
    seed: int
    success: bool
    raw_success: bool
    num_tries: int
    num_turns: int
    flags: tuple[str, ...] = ()
    schema_version: int = META_SCHEMA_VERSION

    def to_json_obj(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task": self.task,
            "seed": self.seed,
            "success": self.success,
            "raw_success": self.raw_success,
            "num_tries": self.num_tries,
            "num_turns": self.num_turns,
            "flags": list(self.flags),
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "RunMeta":
        return RunMeta(
            task=str(obj["task"]),
            seed=int(obj["seed"]),
            success=bool(obj["success"]),
            raw_success=bool(obj["raw_success"]),
            num_tries=int(obj["num_tries"]),
            num_turns=int(obj["num_turns"]),
            flags=tuple(obj.get("flags", [])),
            schema_version=int(obj.get("schema_version", META_SCHEMA_VERSION)),
        )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run_dir_name(task_id: str, seed: int) -> str:
    return f"{task_id}__seed{seed}"


def write_meta(run_dir: Path, meta: RunMeta) -> None:
    (run_dir / META_FILE).write_text(canonical_json(meta.to_json_obj()), encoding="utf-8")


def load_meta(run_dir: Path) -> RunMeta:
    path = run_dir / META_FILE
    if not path.is_file():
        raise ArtifactError(f"missing {path}")
    try:
        return RunMeta.from_json_obj(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ArtifactError(f"malformed {path}: {exc}") from exc


def write_episode(run_dir: Path, text: str) -> None:
    (run_dir / EPISODE_FILE).write_text(text, encoding="utf-8")


def load_episode(run_dir: Path) -> str:
    path = run_dir / EPISODE_FILE
    if not path.is_file():
        raise ArtifactError(f"missing {path}")
    return path.read_text(encoding="utf-8")


def write_trace(run_dir: Path, records: Sequence[TraceRecord]) -> None:
    lines = "".join(rec.to_json_line() + "\n" for rec in records)
    (run_dir / TRACE_FILE).write_text(lines, encoding="utf-8")


def load_trace_records(trace_file: str | Path) -> list[TraceRecord]:
    path = Path(trace_file)
    if not path.is_file():
        raise ArtifactError(f"missing {path}")
    records = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(TraceRecord.from_json_obj(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TraceLoadError(f"{path}:{line_no}: {exc}") from exc
    return records


def load_trace(run_dir: Path) -> list[TraceRecord]:
    return load_trace_records(run_dir / TRACE_FILE)


def write_validation(run_dir: Path, report_obj: dict) -> None:
    (run_dir / VALIDATION_FILE).write_text(canonical_json(report_obj), encoding="utf-8")
