"""Driving experiments through the JSON config harness.

Builds a small config in memory, runs it through the same machinery the
CLI uses, and pokes at the outputs: per-run CSV traces, the JSON summary,
and an SVG of the log-error curves. The shipped configs under configs/
are the full-size experiment presets.

Run:  python3 demos/experiment_harness.py
"""

import json
from pathlib import Path

import lowrank_gd as lg

out_dir = Path("out/demo_harness")
raw = {
    "kind": "sym",
    "dim": 120,
    "rank": 4,
    "spectrum": {"experiment": {"hi": 7, "lo": 2}},
    "eta": 0.05,
    "epsilon": 1e-6,
    "max_iters": 20000,
    "init": {"scheme": "moderate", "alpha": [0.5, 0.005], "seed": 1},
    "repeats": 3,
    "out_dir": str(out_dir),
}

config = lg.parse_config(raw)
result = lg.run_experiment(config)

summary = json.loads(Path(result.summary_path).read_text())
print(f"step size within the local theory's bound: {summary['eta_within_theory']}")
print(f"initialization regimes: {summary['alpha_regimes']}")
for run in summary["runs"]:
    print(f"  {run['variant']} rep{run['repeat']} (seed {run['seed']}): "
          f"tolerance at iteration {run['iterations_to_tolerance']}, "
          f"{run['wall_time_s'] * 1e3:.0f} ms")

plot = lg.emit_plot(result.csv_paths, out_dir / "errors.svg")
print(f"wrote {len(result.csv_paths)} CSV traces and {plot}")
print("equivalent CLI: lowrank-gd run --config <file> --plot")
