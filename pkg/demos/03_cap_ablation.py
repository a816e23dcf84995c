"""Trial-cap ablation: the same correcting reasoner under a 10-try cap and
without one.

The noisy reasoner starts 5 cm too high and its correction schedule only
lands at attempt 12. The capped (pilot) run is cut off at 10 tries; the
uncapped (baseline) run recovers.
"""

from manipbench import (
    OracleReasoner,
    Perturbation,
    RunPolicy,
    TabletopEnv,
    builtin_catalog,
    reasoner_noisy,
)
from manipbench.engine import run_task

catalog = builtin_catalog()
task = catalog["pick_cube"]
schedule = [Perturbation(dz=0.05)] * 11 + [Perturbation()]  # corrected on attempt 12

for label, policy in (("pilot (cap 10)", RunPolicy.pilot(10)), ("baseline (no cap)", RunPolicy.baseline())):
    env = TabletopEnv()
    result = run_task(task, reasoner_noisy(OracleReasoner(), schedule), policy, env, seed=0)
    marks = "".join("+" if a.outcome.success else "." for a in result.context.attempts)
    print(f"{label:<18} attempts [{marks:<12}] success={result.success} tries={result.num_tries}")

print("\nthe cap, not the reasoner, decided the pilot run.")
