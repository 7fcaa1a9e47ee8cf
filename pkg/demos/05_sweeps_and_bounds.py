#!/usr/bin/env python3
"""Sweeping a horizon axis and checking the closed-form guarantee.

Reproduces a desk-scale slice of the benchmark experiments: random
instances from the standard generator, tuned exploration, one summary
row per (horizon, replication).  The emitted CSV is exactly what
plots/plot.py consumes.
"""

import pathlib
import tempfile

from cal.harness import CellSpec, emit_csv, read_summary_csv, sweep
from cal import bound, tune

cell = CellSpec(horizon=1000, seed=2024, replications=8, mechanism="avcg1",
                theorem="T1_AVCG1_rev", tau="auto", delta="auto", mu=None,
                alpha=1.5, preset="paper-posdep", n_ads=8, n_slots=2,
                v_max=1.0, q_min=0.01)

rows = sweep(cell, "T", [500, 1000, 2000])
out = pathlib.Path(tempfile.gettempdir()) / "demo_sweep.csv"
emit_csv(rows, out)
print(f"wrote {len(rows)} rows to {out}\n")

print("per-horizon summary (mean over replications):")
for value in (500, 1000, 2000):
    cell_rows = [r for r in read_summary_csv(out) if r[1] == value]
    mean_rt = sum(r[3] for r in cell_rows) / len(cell_rows)
    b = cell_rows[0][6]
    print(f"  T={value:5d}: mean R_T={mean_rt:8.2f}  bound={b:9.1f}  "
          f"relative={mean_rt / b:+.5f}")

print("\nclosed forms on their own:")
tuned = tune("T1", T=2000, N=8, K=2, min_obs=0.8)
print(f"  tuned tau={tuned.tau}, delta={tuned.delta:.4f}")
print(f"  guarantee value B={bound('T1', T=2000, K=2, N=8, v_max=1.0, min_obs=0.8):.1f}")
print(f"\nrender the CSV with:  python3 plots/plot.py --csv {out} "
      "--x value --out demo_sweep.png")
