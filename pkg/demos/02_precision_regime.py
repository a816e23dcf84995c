"""Why peg insertion stays near 0%: clearance below the control noise.

The insertion socket accepts the peg only within 1 mm of a hidden exact
axis, while move_to arrivals carry ~2 mm Gaussian noise and the observable
goal marker sits 2.5-4 mm off the exact axis. Deliberate waypoint control
cannot reliably win that game, which is the structural point.
"""

import math

from manipbench import OracleReasoner, RunPolicy, TabletopEnv, builtin_catalog, run_task

catalog = builtin_catalog()
task = catalog["peg_insertion"]

print(f"task: {task.id} (clearance {task.success.clearance * 1000:.0f} mm)")
print(f"{'seed':>4} | {'coarse->exact offset':>20} | result")
print("-" * 48)

successes = 0
for seed in range(20):
    env = TabletopEnv()
    obs = env.reset(task, seed)
    ex, ey = env.hidden_values()
    goal = obs.objects["goal"]
    offset_mm = math.hypot(goal.x - ex, goal.y - ey) * 1000
    result = run_task(task, OracleReasoner(), RunPolicy.baseline(), env, seed)
    successes += result.success
    print(f"{seed:>4} | {offset_mm:>17.2f} mm | {'SUCCESS' if result.success else 'fail'}")

print("-" * 48)
print(f"success rate: {successes}/20 ({successes / 20:.0%}) — precision regime holds")
