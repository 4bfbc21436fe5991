"""Watch training from the logs: per-step tensor summaries, histogram
trends, and scans for dead or saturated weights.

Every training run appends one summary record per parameter tensor per
epoch to runs/<id>/log.jsonl and checkpoints the model each epoch, so
all of this works offline after training has finished (or crashed).
"""

import tempfile
from pathlib import Path

from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)
out = wb.demo_train(dataset_id="bars8", epochs=8, run_id="run-demo")
run = wb.workspace.get_run("run-demo")

print("logged tensors:", run.nodes())
print("\nloss per epoch:")
for step, value in run.read_series("loss", "mean"):
    print(f"  epoch {step}: {value:.4f}")

# Min/max envelope of the first dense layer's weights over training.
env = wb.scan("minmax", "run-demo", "dense1/weights")
for step, lo, hi in env.payload["series"]:
    print(f"  step {step}: weights in [{lo:+.3f}, {hi:+.3f}]")

# Histogram trend: every epoch's 30-bin histogram rebinned onto one
# common axis, so the rows are directly comparable.
trend = wb.scan("histo_trend", "run-demo", "dense1/weights")
print(f"\nhisto_trend: {len(trend.payload['matrix'])} steps x "
      f"{len(trend.payload['matrix'][0])} bins on "
      f"[{trend.payload['edges'][0]:.3f}, {trend.payload['edges'][-1]:.3f}]")

# Weight pathology scans compare the last few checkpoints.
for scan_id in ("dead_weight", "saturated_weight"):
    result = wb.scan(scan_id, "run-demo", "dense1/weights")
    print(f"{scan_id}: fraction={result.payload['fraction']:.3f} "
          f"({len(result.payload['flagged_indices'])} weights flagged)")

# Every explainer and node kind has a documentation card.
card = wb.doc("dead_weight")
print(f"\ndoc card: {card.title} — {card.body.splitlines()[0]}")
