"""Close the loop: ask the advisor what to change, apply its strongest
recommendation, retrain, and compare the two models.

The advisor runs a small set of rules over the model architecture, the
training logs, and the evaluation metrics. Rules that can be acted on
automatically carry a ready-to-apply transition.
"""

import json
import tempfile
from pathlib import Path

from explainlab.pipeline import TransitionFunction
from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)
out = wb.demo_train(dataset_id="bars8", arch="mlp", epochs=15, run_id="run-mlp")

print("recommendations for the trained MLP:")
recs = wb.recommendations(out["state_id"], run_id="run-mlp")
for rec in recs:
    print(f"  [{rec.severity}] {rec.rule_id}: {rec.title}")

# R1 fires because the input is spatial but the model has no convolution;
# its transition inserts a conv -> relu -> maxpool block.
r1 = next(rec for rec in recs if rec.rule_id == "R1")
patched_id = wb.workspace.apply_transition(out["state_id"], r1.transition)
print(f"\napplied {r1.rule_id}: {out['state_id']} -> {patched_id}")
print("patched graph:", wb.workspace.get_state(patched_id).graph.kinds())

# Retrain the patched model (a transition too, so lineage stays intact).
retrain = TransitionFunction(
    transition_id="t-retrain", kind="retrain",
    payload={"dataset_id": "bars8", "run_id": "run-cnn"},
)
cnn_id = wb.workspace.apply_transition(patched_id, retrain)

report = wb.workspace.compare_states(out["state_id"], cnn_id, "bars8")
print(f"\nMLP {out['state_id']} vs CNN {cnn_id}:")
for metric, delta in report["metric_deltas"].items():
    print(f"  {metric:<16} {delta:+.4f}")

print("\nlineage (parent/transition per state):")
print((root / "lineage.json").read_text())
