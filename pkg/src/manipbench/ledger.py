"""Resource accounting: per-run ledgers, category aggregation, tool histograms."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Mapping, Sequence

DEFAULT_TOKEN_RATE = Decimal("0.00001")  # USD per output token; configuration, not a price sheet

# Table columns for the tool-usage report; FINISH/GIVE_UP fold into "OTHER".
HISTOGRAM_COLUMNS = ("EXEC_SCRIPT", "WRITE_SCRIPT", "READ", "FETCH_DOC", "OTHER")


@dataclass(frozen=True)
class ResourceLedger:
    """Immutable per-run counters; cost is exact decimal arithmetic."""

    tokens_out: int = 0
    turns: int = 0
    tries: int = 0
    wall_ms: int = 0
    tool_counts: tuple[tuple[str, int], ...] = ()
    rate: Decimal = DEFAULT_TOKEN_RATE

    def __post_init__(self) -> None:
        if min(self.tokens_out, self.turns, self.tries, self.wall_ms) < 0:
            raise ValueError("ledger counters must be non-negative")
        if self.tries > self.turns:
            raise ValueError("tries cannot exceed turns")

    @property
    def cost_usd(self) -> Decimal:
        return Decimal(self.tokens_out) * self.rate

    def tool_count_map(self) -> dict[str, int]:
        return dict(self.tool_counts)

    def to_json_obj(self) -> dict:
        return {
            "tokens_out": self.tokens_out,
            "turns": self.turns,
            "tries": self.tries,
            "wall_ms": self.wall_ms,
            "cost_usd": str(self.cost_usd),
            "tool_counts": self.tool_count_map(),
        }

    @staticmethod
    def from_json_obj(obj: Mapping) -> "ResourceLedger":
        return ResourceLedger(
            tokens_out=int(obj["tokens_out"]),
            turns=int(obj["turns"]),
            tries=int(obj["tries"]),
            wall_ms=int(obj["wall_ms"]),
            tool_counts=tuple(sorted(obj.get("tool_counts", {}).items())),
        )


def ledger_record(ledger: ResourceLedger, event: str, value: int | str = 1) -> ResourceLedger:
    """Apply one accounting event, returning a new ledger.

    Events: "turn", "try", ("tokens", n), ("tool", kind), ("wall", ms).
    A try is rejected unless a turn already covers it, which keeps
    turns >= tries an unconditional invariant.
    """
    if event == "turn":
        return replace(ledger, turns=ledger.turns + 1)
    if event == "try":
        if ledger.tries + 1 > ledger.turns:
            raise ValueError("a try must be recorded within an already-counted turn")
        return replace(ledger, tries=ledger.tries + 1)
    if event == "tokens":
        n = int(value)
        if n < 0:
            raise ValueError("token increments must be non-negative")
        return replace(ledger, tokens_out=ledger.tokens_out + n)
    if event == "wall":
        ms = int(value)
        if ms < 0:
            raise ValueError("wall-time increments must be non-negative")
        return replace(ledger, wall_ms=ledger.wall_ms + ms)
    if event == "tool":
        kind = str(value)
        counts = dict(ledger.tool_counts)
        counts[kind] = counts.get(kind, 0) + 1
        return replace(ledger, tool_counts=tuple(sorted(counts.items())))
    raise ValueError(f"unknown ledger event {event!r}")


def synthetic_tokens(text: str) -> int:
    """Deterministic token estimate for non-LLM reasoners: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class RunStats:
    """Flat per-run record consumed by aggregation: outcome plus its ledger."""

    task_id: str
    success: bool
    ledger: ResourceLedger


@dataclass(frozen=True)
class CategorySummary:
    category: str
    task_count: int
    mean_cost_usd: Decimal
    mean_tokens: float
    mean_turns: float
    mean_tries: float
    mean_minutes: float
    success_rate: float


def aggregate(
    runs: Sequence[RunStats],
    grouping: Callable[[str], str],
) -> list[CategorySummary]:
    """Per-category means and success rates, ordered by category name.

    Totals are accumulated with integer/exact arithmetic so the result is
    independent of run order and of how the input was partitioned.
    """
    buckets: dict[str, list[RunStats]] = {}
    for run in runs:
        buckets.setdefault(grouping(run.task_id), []).append(run)
    out = []
    for name in sorted(buckets):
        group = buckets[name]
        n = len(group)
        cost_total = sum((r.ledger.cost_usd for r in group), Decimal(0))
        out.append(
            CategorySummary(
                category=name,
                task_count=n,
                mean_cost_usd=cost_total / n,
                mean_tokens=sum(r.ledger.tokens_out for r in group) / n,
                mean_turns=sum(r.ledger.turns for r in group) / n,
                mean_tries=sum(r.ledger.tries for r in group) / n,
                mean_minutes=sum(r.ledger.wall_ms for r in group) / n / 60000.0,
                success_rate=float(Fraction(sum(r.success for r in group), n)),
            )
        )
    return out


def tool_histogram(runs: Sequence[RunStats]) -> dict[str, int]:
    """Whole-percent tool-usage shares with largest-remainder correction,
    so non-empty histograms sum to exactly 100."""
    totals: dict[str, int] = {}
    for run in runs:
        for kind, count in run.ledger.tool_counts:
            totals[kind] = totals.get(kind, 0) + count
    grand = sum(totals.values())
    if grand == 0:
        return {}
    shares = {k: Fraction(v * 100, grand) for k, v in totals.items()}
    floors = {k: int(s) for k, s in shares.items()}
    leftover = 100 - sum(floors.values())
    by_remainder = sorted(shares, key=lambda k: (floors[k] - shares[k], k))
    for k in by_remainder[:leftover]:
        floors[k] += 1
    return floors


def _fmt_tokens(mean_tokens: float) -> str:
    return f"{mean_tokens / 1000:.1f}K"


def render_category_markdown(summaries: Sequence[CategorySummary]) -> str:
    lines = [
        "| Category | Tasks | Cost/Task | Tokens/Task | Turns/Task | Tries/Task | Time/Task (min) | Success |",
        "| --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for s in summaries:
        lines.append(
            f"| {s.category} | {s.task_count} | ${s.mean_cost_usd:.2f} | {_fmt_tokens(s.mean_tokens)} "
            f"| {s.mean_turns:.1f} | {s.mean_tries:.1f} | {s.mean_minutes:.1f} | {s.success_rate:.0%} |"
        )
    return "\n".join(lines)


def render_histogram_markdown(hist: Mapping[str, int], label: str = "all") -> str:
    header = "| Suite | " + " | ".join(HISTOGRAM_COLUMNS) + " |"
    divider = "| --- |" + " --- |" * len(HISTOGRAM_COLUMNS)
    named = {c: 0 for c in HISTOGRAM_COLUMNS}
    for kind, pct in hist.items():
        key = kind if kind in named else "OTHER"
        named[key] += pct
    row = f"| {label} | " + " | ".join(f"{named[c]}%" for c in HISTOGRAM_COLUMNS) + " |"
    return "\n".join([header, divider, row])


def render_category_csv(summaries: Sequence[CategorySummary]) -> str:
    lines = [
        "category,task_count,mean_cost_usd,mean_tokens,mean_turns,mean_tries,mean_minutes,success_rate"
    ]
    for s in summaries:
        lines.append(
            f"{s.category},{s.task_count},{s.mean_cost_usd},{s.mean_tokens:.6g},"
            f"{s.mean_turns:.6g},{s.mean_tries:.6g},{s.mean_minutes:.6g},{s.success_rate:.6g}"
        )
    return "\n".join(lines) + "\n"
