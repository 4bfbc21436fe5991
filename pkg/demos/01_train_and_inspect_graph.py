"""Train a small MLP on the synthetic bars dataset and inspect the model.

The workbench stores everything under a workspace directory: registered
model states (as .emodel.json files), training runs, and provenance.
"""

import tempfile
from pathlib import Path

from explainlab.graph import load_model
from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)

# demo_train registers a fresh MLP, trains it with minibatch SGD, and
# registers the trained model as a new state with lineage.
out = wb.demo_train(dataset_id="bars8", arch="mlp", seed=7, epochs=10, run_id="run-demo")
print(f"workspace:     {root}")
print(f"initial state: {out['initial_state']}")
print(f"trained state: {out['state_id']} (run {out['run_id']})")

state = wb.workspace.get_state(out["state_id"])
print("\narchitecture:")
shapes = state.graph.node_shapes()
for node in state.graph.nodes:
    print(f"  {node.name:<10} {node.kind:<8} -> {shapes[node.name]}")

metrics = wb.metrics(out["state_id"], split="test")
print(f"\ntest accuracy:  {metrics.accuracy:.3f}")
print(f"test mean loss: {metrics.mean_loss:.4f}")

# Model files round-trip bit-exactly: save -> load -> save is identical.
path = root / "states" / f"{out['state_id']}.emodel.json"
reloaded = load_model(path)
print(f"\nreloaded {reloaded.state_id}: step={reloaded.step}, "
      f"params for {sorted(reloaded.parameters)}")
