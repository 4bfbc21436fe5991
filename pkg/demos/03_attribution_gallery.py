"""Run every attribution explainer on one test sample and render the
heatmaps to SVG files.

All eight explainers answer the same question — which input pixels drove
the model's score for the predicted class? — with different trade-offs.
"""

import tempfile
from pathlib import Path

from explainlab.render import attribution_svg
from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)
out = wb.demo_train(dataset_id="bars8", epochs=10)

# Pick a sample worth explaining: a misclassified one if any exists,
# otherwise the one the model is least confident about.
index, misclassified = wb.pick_diagnosis_sample(out["state_id"])
x, label = wb.get_sample("bars8", "test", index)
print(f"sample {index}: label={label}, misclassified={misclassified}")

gallery = [
    ("saliency", {}),
    ("gradient_x_input", {}),
    ("integrated_gradients", {"m": 64}),
    ("smoothgrad", {"n": 16, "sigma_rel": 0.1, "seed": 0}),
    ("occlusion", {"window": 2}),
    ("lime", {"segments": "grid2", "n_samples": 500, "seed": 0}),
    ("lrp_epsilon", {"epsilon": 0.01}),
]
out_dir = root / "gallery"
out_dir.mkdir()
for explainer_id, params in gallery:
    amap = wb.explain(explainer_id, out["state_id"], sample=index, params=params)
    svg = attribution_svg(amap)
    path = out_dir / f"{explainer_id}.svg"
    path.write_text(svg)
    total = float(amap.values.sum())
    print(f"  {explainer_id:<22} sum={total:+.4f}  -> {path.name}")

print(f"\nheatmaps written to {out_dir}")
print("shared color scale: blue = pushes the score down, red = pushes it up,")
print("each map normalized by its own max |value|.")
