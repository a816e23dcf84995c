"""Plant a brute-force run next to an honest one and watch the audit sort them.

The forged run sweeps 400 final poses on a 1 cm lattice and claims success;
the detector flags the lattice, the report counts it as a failure, and the
raw outcome stays preserved in meta.json.
"""

import json
import tempfile
from pathlib import Path

from manipbench import builtin_catalog
from manipbench.artifacts import RunMeta, load_meta, write_meta
from manipbench.audit import validate
from manipbench.engine import RunCondition
from manipbench.sim import TabletopEnv
from manipbench.suite import SuiteConfig, run_suite, collect_run_stats, write_reports

import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from forgery import forge_attempts, grid_sweep_scripts, plant_run_dir  # noqa: E402

catalog = builtin_catalog()
out = Path(tempfile.mkdtemp(prefix="audit_tour_"))

print("1. honest oracle run...")
run_suite(
    SuiteConfig(
        suite="pick_cube",
        tasks=("pick_cube",),
        seeds=(0,),
        condition=RunCondition.BASELINE,
        reasoner="oracle",
        out_dir=out,
    )
)

print("2. planting a 20x20 grid-sweep cheat that "'"reached"'" success...")
obs = TabletopEnv().reset(catalog["pick_cube"], 1)
scripts = grid_sweep_scripts()
records = forge_attempts(scripts, obs, successes=[False] * 399 + [True])
cheat_dir = plant_run_dir(
    out / "pick_cube__seed1", "pick_cube", 1, records, scripts[-1] + "\ngripper close", True
)

print("3. auditing both...")
for run_dir in sorted(p for p in out.iterdir() if p.is_dir()):
    report = validate(run_dir, catalog)
    print(f"   {run_dir.name}: {report.verdict.value}")
    for flag in report.flags:
        print(f"      {flag.kind.value}: {flag.evidence[:96]}...")
    meta = load_meta(run_dir)
    flags = tuple(f.kind.value for f in report.flags)
    write_meta(
        run_dir,
        RunMeta(
            task=meta.task,
            seed=meta.seed,
            success=meta.raw_success and not flags,
            raw_success=meta.raw_success,
            num_tries=meta.num_tries,
            num_turns=meta.num_turns,
            flags=flags,
        ),
    )

write_reports(out)
print("\n4. suite summary counts the flagged success as a failure:")
print((out / "report.csv").read_text().strip())
cheat_meta = json.loads((cheat_dir / "meta.json").read_text())
print(
    f"\n   cheat meta: success={cheat_meta['success']} raw_success={cheat_meta['raw_success']} "
    f"flags={cheat_meta['flags']}"
)
print(f"\nartifacts left in {out}")
