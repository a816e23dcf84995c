"""manipbench: a seeded tabletop manipulation harness for episode-script agents.

A reasoner iteratively writes episode scripts, executes them in a
deterministic kinematic simulator, accumulates the attempt history, and
terminates on success or give-up. Runs are audited post hoc for brute
force, privileged-value copying, and instruction bypass, with full
resource accounting.
"""

from manipbench.domain import (
    Action,
    ActionKind,
    AttemptRecord,
    Context,
    GripCommand,
    Observation,
    ObsSummary,
    Outcome,
    Pose,
    SceneRandomization,
    SuccessParams,
    TaskFamily,
    TaskSpec,
    context_append,
    context_render,
)
from manipbench.dsl import EpisodeScript, ParseError, Trace, execute, parse, serialize
from manipbench.sim import ControlParams, TabletopEnv
from manipbench.echo import EchoEnv
from manipbench.remote import RemoteEnv, connect_remote
from manipbench.planner import insertion_waypoint_plan, oracle_plan
from manipbench.prompts import DEFAULT_COACHING_TIPS, DEFAULT_TEMPLATE, PromptTemplate, render_prompt
from manipbench.engine import (
    RunCondition,
    RunPolicy,
    RunResult,
    RunView,
    ToolCall,
    ToolKind,
    run_task,
)
from manipbench.reasoners import (
    GiveUpReasoner,
    LLMConfig,
    NoisyReasoner,
    OracleReasoner,
    Perturbation,
    reasoner_llm,
    reasoner_noisy,
    reasoner_replay,
)
from manipbench.audit import ValidationReport, validate
from manipbench.ledger import ResourceLedger, aggregate, ledger_record, tool_histogram
from manipbench.catalog import SUITES, builtin_catalog
from manipbench.suite import SuiteConfig, audit_run, replay_run, run_suite

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "AttemptRecord",
    "Context",
    "ControlParams",
    "DEFAULT_COACHING_TIPS",
    "DEFAULT_TEMPLATE",
    "EchoEnv",
    "EpisodeScript",
    "GiveUpReasoner",
    "GripCommand",
    "LLMConfig",
    "NoisyReasoner",
    "Observation",
    "ObsSummary",
    "OracleReasoner",
    "Outcome",
    "ParseError",
    "Perturbation",
    "Pose",
    "PromptTemplate",
    "RemoteEnv",
    "ResourceLedger",
    "RunCondition",
    "RunPolicy",
    "RunResult",
    "RunView",
    "SceneRandomization",
    "SuccessParams",
    "SuiteConfig",
    "SUITES",
    "TabletopEnv",
    "TaskFamily",
    "TaskSpec",
    "ToolCall",
    "ToolKind",
    "Trace",
    "ValidationReport",
    "aggregate",
    "audit_run",
    "builtin_catalog",
    "connect_remote",
    "context_append",
    "context_render",
    "execute",
    "insertion_waypoint_plan",
    "ledger_record",
    "oracle_plan",
    "parse",
    "reasoner_llm",
    "reasoner_noisy",
    "reasoner_replay",
    "render_prompt",
    "replay_run",
    "run_suite",
    "run_task",
    "serialize",
    "tool_histogram",
    "validate",
]
