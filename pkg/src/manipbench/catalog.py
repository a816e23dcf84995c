"""Built-in task roster spanning every task family, with difficulty groups."""

from __future__ import annotations

from manipbench.domain import (
    ObjectSpec,
    SceneRandomization,
    SuccessParams,
    TaskFamily,
    TaskSpec,
)

_YAW = (-0.6, 0.6)


def _task(
    task_id: str,
    instruction: str,
    family: TaskFamily,
    objects: tuple[ObjectSpec, ...],
    goal_x: tuple[float, float],
    goal_y: tuple[float, float],
    success: SuccessParams,
) -> TaskSpec:
    return TaskSpec(
        id=task_id,
        instruction=instruction,
        scene=SceneRandomization(
            objects=objects, yaw_range=_YAW, goal_x_range=goal_x, goal_y_range=goal_y
        ),
        success=success,
        family=family,
    )


def builtin_catalog() -> dict[str, TaskSpec]:
    cube = (0.02, 0.02, 0.02)
    sphere = (0.015, 0.015, 0.015)
    tasks = [
        _task(
            "pick_cube",
            "Pick up the cube and lift it to the goal marker height.",
            TaskFamily.PICK,
            (ObjectSpec("cube", (0.05, 0.25), (-0.20, 0.20), cube),),
            (-0.30, -0.10),
            (-0.20, 0.20),
            SuccessParams(position_tolerance=0.015, height_threshold=0.15),
        ),
        _task(
            "push_cube",
            "Push the cube along the table until it rests on the goal marker.",
            TaskFamily.PUSH,
            (ObjectSpec("cube", (-0.05, 0.10), (-0.15, 0.15), cube),),
            (0.20, 0.35),
            (-0.15, 0.15),
            SuccessParams(position_tolerance=0.015),
        ),
        _task(
            "pull_cube",
            "Pull the cube back toward the robot until it rests on the goal marker.",
            TaskFamily.PULL,
            (ObjectSpec("cube", (0.20, 0.35), (-0.15, 0.15), cube),),
            (-0.10, 0.05),
            (-0.15, 0.15),
            SuccessParams(position_tolerance=0.015),
        ),
        _task(
            "stack_cube",
            "Stack the small cube squarely on top of the base cube.",
            TaskFamily.STACK,
            (
                ObjectSpec("cube_top", (-0.20, -0.05), (-0.20, -0.02), cube),
                ObjectSpec("cube_base", (0.05, 0.20), (0.02, 0.20), cube),
            ),
            (0.05, 0.20),
            (0.02, 0.20),
            SuccessParams(position_tolerance=0.015),
        ),
        _task(
            "place_sphere",
            "Place the sphere gently onto the goal marker.",
            TaskFamily.PLACE,
            (ObjectSpec("sphere", (0.05, 0.25), (-0.20, 0.20), sphere),),
            (-0.30, -0.10),
            (-0.20, 0.20),
            SuccessParams(position_tolerance=0.015),
        ),
        _task(
            "lift_peg_upright",
            "Lift the peg and hold it upright at the goal marker height.",
            TaskFamily.PICK,
            (ObjectSpec("peg", (0.05, 0.25), (-0.20, 0.20), (0.01, 0.01, 0.05)),),
            (-0.25, -0.05),
            (-0.20, 0.20),
            SuccessParams(position_tolerance=0.015, height_threshold=0.20),
        ),
        _task(
            "peg_insertion",
            "Insert the peg into the socket at the goal marker.",
            TaskFamily.PEG_INSERT,
            (ObjectSpec("peg", (0.10, 0.25), (-0.15, 0.15), (0.01, 0.01, 0.04)),),
            (-0.25, -0.10),
            (-0.15, 0.15),
            SuccessParams(position_tolerance=0.015, clearance=0.001),
        ),
    ]
    return {t.id: t for t in tasks}


TASK_CATEGORIES: dict[str, str] = {
    "pick_cube": "easy",
    "push_cube": "easy",
    "pull_cube": "easy",
    "stack_cube": "medium",
    "place_sphere": "medium",
    "lift_peg_upright": "medium",
    "peg_insertion": "hard",
}

SUITES: dict[str, tuple[str, ...]] = {
    "easy": ("pick_cube", "push_cube", "pull_cube"),
    "medium": ("stack_cube", "place_sphere", "lift_peg_upright"),
    "hard": ("peg_insertion",),
    "core5": ("pick_cube", "push_cube", "pull_cube", "stack_cube", "place_sphere"),
    "all": (
        "pick_cube",
        "push_cube",
        "pull_cube",
        "stack_cube",
        "place_sphere",
        "lift_peg_upright",
        "peg_insertion",
    ),
}


def category_of(task_id: str) -> str:
    return TASK_CATEGORIES.get(task_id, "uncategorized")
