#!/usr/bin/env python3
# Run a scaled-down benchmark setting across all eight procedures, write the
# results CSV, and print per-procedure medians.  The same CSV feeds the
# standalone plotting script.

import statistics
import sys

from mixedmc.simbench import (PROCEDURE_LABELS, run_procedures, scaled_clone,
                              settings_registry, write_results_csv)

setting = scaled_clone({s.setting_id: s for s in settings_registry()}[1], 0.25)
print(f"setting 1 scaled to {setting.n}x{setting.p}, rank {setting.r}, "
      f"pi={setting.obs_prob}")

results = run_procedures(setting, list(PROCEDURE_LABELS), reps=5, base_seed=0)
write_results_csv("benchmark_mini.csv", results)
print(f"{len(results)} runs -> benchmark_mini.csv\n")

print(f"{'procedure':28s} {'frob_scaled':>12s} {'max_norm':>9s}")
for pid, label in PROCEDURE_LABELS.items():
    ok = [r for r in results if r.procedure_id == pid and r.status == "ok"]
    if not ok:
        print(f"{pid} {label:26s} {'all failed':>12s}")
        continue
    fr = statistics.median(r.frob_scaled for r in ok)
    mx = statistics.median(r.max_norm for r in ok)
    print(f"{pid} {label:26s} {fr:12.4f} {mx:9.4f}")

print(f"\nnext: {sys.executable} plots/render.py benchmark_mini.csv "
      f"--settings {setting.setting_id} --out figs/")
