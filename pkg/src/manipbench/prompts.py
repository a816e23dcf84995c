"""Prompt template rendering, coaching tips, and canned documentation."""

from __future__ import annotations

from dataclasses import dataclass

from manipbench.domain import TaskSpec

TASK_PLACEHOLDER = "{{TASK_DESCRIPTION}}"


class TemplateError(ValueError):
    """Template does not carry exactly one task-description placeholder."""


@dataclass(frozen=True)
class PromptTemplate:
    instruction_block: str
    requirements_block: str
    guidelines_block: str
    output_block: str
    coaching_tips: tuple[str, ...] = ()

    def blocks(self) -> tuple[str, ...]:
        return (
            self.instruction_block,
            self.requirements_block,
            self.guidelines_block,
            self.output_block,
        )


DEFAULT_COACHING_TIPS: tuple[str, ...] = (
    "Think about how a human would accomplish the task. Break it down into descriptive actions.",
    "Build the episode iteratively in each ReAct cycle: record state, plan movements, review progress.",
    "Keep a high z height when moving to avoid collisions.",
    "Rotate gripper when it keeps hitting unintended objects.",
    "Beware of obstacles in the action trajectory.",
)

DEFAULT_TEMPLATE = PromptTemplate(
    instruction_block=(
        "# Instruction\n"
        "You are an expert in robotics control. Your primary goal is to create a single\n"
        "script containing an episode that reaches success:\n"
        f"- with task: {TASK_PLACEHOLDER}"
    ),
    requirements_block=(
        "## Requirements\n"
        "- The final script must use success() as the metric\n"
        "- Contains a sequence of actions\n"
        "- Do not cheat or reference other tasks"
    ),
    guidelines_block=(
        "## Guidelines\n"
        "- Follow the ReAct cycle\n"
        "- Keep the final script simple\n"
        "- Write the episode as one fenced code block in the script language\n"
        "- Reply with the single word FINISH once an executed script reports success\n"
        "- Reply with the single word GIVE_UP if further attempts are unlikely to succeed"
    ),
    output_block=(
        "## Output\n"
        "- meta.json: success status and num_tries\n"
        "- episode.episode: final script\n"
        "- trace.jsonl: trajectory dump"
    ),
    coaching_tips=DEFAULT_COACHING_TIPS,
)


def render_prompt(
    task: TaskSpec,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    coaching: tuple[str, ...] | list[str] | None = None,
) -> str:
    """Substitute the task instruction; append a coaching block iff tips given."""
    blocks = template.blocks()
    holes = sum(b.count(TASK_PLACEHOLDER) for b in blocks)
    if holes != 1:
        raise TemplateError(
            f"template must contain exactly one {TASK_PLACEHOLDER}, found {holes}"
        )
    rendered = [b.replace(TASK_PLACEHOLDER, task.instruction) for b in blocks]
    if coaching:
        tips = "\n".join(f"- {tip}" for tip in coaching)
        rendered.append("## Coaching Tips\n" + tips)
    return "\n\n".join(rendered)


# Canned, versioned documentation served by the FETCH_DOC tool. Static text
# keeps documentation retrieval deterministic.
DOCS: dict[str, str] = {
    "env_api": (
        "env api v1\n"
        "reset(task, seed) -> observation: sample the scene from the seed, home the gripper.\n"
        "step(action) -> observation: absolute end-effector position control; move_to\n"
        "  advances toward the target at most 0.02 m per tick and lands with small\n"
        "  Gaussian arrival noise; gripper close attaches the nearest object within\n"
        "  0.015 m; open releases and the object drops to rest; wait advances ticks.\n"
        "get_obs() -> observation: ground-truth object and gripper poses, held object,\n"
        "  tick count, plus a 'goal' marker at the goal position.\n"
        "check_success() -> bool: the per-task success metric; success() for scripts.\n"
    ),
    "dsl_grammar": (
        "script grammar v1\n"
        "one statement per line; '#' starts a comment; blank lines ignored.\n"
        "move_to <x> <y> <z> [yaw]   absolute gripper target in meters/radians\n"
        "gripper open|close          toggle the gripper\n"
        "wait <ticks>                advance the simulation\n"
        "numbers are plain decimals; yaw defaults to 0.\n"
    ),
}


def fetch_doc(key: str) -> str:
    if key not in DOCS:
        raise KeyError(f"unknown documentation key {key!r}")
    return DOCS[key]
