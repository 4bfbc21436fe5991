"""Keep the evidence: save findings as provenance cards, annotate and
group them, then assemble and export a report.

Cards live in an append-only event log, so the full history (including
re-annotations) survives and exports are reproducible byte-for-byte.
"""

import tempfile
from pathlib import Path

from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)
out = wb.demo_train(dataset_id="bars8", epochs=10)
store = wb.provenance

index, _ = wb.pick_diagnosis_sample(out["state_id"])
amap = wb.explain("saliency", out["state_id"], sample=index)
att = store.add_card(
    "attribution", amap.to_dict(),
    source={"state_id": out["state_id"], "sample": amap.sample_id},
    annotation="attribution hugs the bar pixels",
)
metrics = wb.metrics(out["state_id"], split="test")
met = store.add_card(
    "metrics", metrics.to_dict(), source={"state_id": out["state_id"], "split": "test"},
)
note = store.add_card("note", {"text": "model looks healthy, try a conv block next"})

# Annotations keep their history; the latest one wins.
store.annotate(att, "actually: mass concentrated on two pixels only")
store.group([att, met, note], "session-1")

report = store.assemble_report("Bars diagnosis", [
    ("Attribution", [att], "Saliency on the least-confident test sample."),
    ("Metrics and notes", [met, note], ""),
])
print(f"cards: {[c.card_id for c in store.list_cards()]}")
print(f"report: {report.report_id}")

for fmt in ("markdown", "json", "svg_bundle"):
    files = store.export_report(report, fmt=fmt)
    print(f"  {fmt}: {[f.name for f in files]}")

md = next(p for p in store.export_report(report, fmt="markdown") if p.suffix == ".md")
print("\n--- report.md ---")
print(md.read_text())
