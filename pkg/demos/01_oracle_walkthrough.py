"""Walk one oracle-driven run from prompt to verified success.

Shows the pieces individually: reset a seeded scene, plan from the
privileged observation, execute the episode, then let the full turn loop
do the same thing with accounting.
"""

from manipbench import (
    OracleReasoner,
    RunPolicy,
    TabletopEnv,
    builtin_catalog,
    oracle_plan,
    run_task,
)
from manipbench.dsl import execute, serialize

catalog = builtin_catalog()
task = catalog["pick_cube"]
seed = 0

print(f"task: {task.id} — {task.instruction}")

env = TabletopEnv()
obs = env.reset(task, seed)
print(f"\nscene (seed {seed}):")
print(" ", obs.compact_line())

script = oracle_plan(task, obs)
print("\nplanned episode:")
for line in serialize(script).splitlines():
    print("   ", line)

trace = execute(script, env)
print(f"\nexecuted {len(trace.steps)} statements, success={trace.outcome.success}")
print("  final:", trace.outcome.final_obs.compact_line())

print("\nnow the full turn loop (write -> execute -> finish):")
env = TabletopEnv()
result = run_task(task, OracleReasoner(), RunPolicy.baseline(), env, seed)
print(
    f"  success={result.success} tries={result.num_tries} turns={result.num_turns} "
    f"tokens={result.ledger.tokens_out} cost=${result.ledger.cost_usd}"
)
