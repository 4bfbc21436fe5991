"""Drive the whole workbench over its HTTP API.

This is the same API the browser UI uses. The script talks to an
in-process test client so it runs anywhere; to serve it for real, run
`explainlab serve --workspace <dir>` and point a browser at it.
"""

import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from explainlab.service import create_app
from explainlab.workbench import Workbench

root = Path(tempfile.mkdtemp(prefix="explainlab-demo-"))
wb = Workbench(root)
client = TestClient(create_app(root))

# Register a fresh model, then train it as a background job and poll.
state_id = wb.workspace.register_state(wb.build_state("mlp", "bars8", {
    "seed": 7, "epochs": 10, "learning_rate": 0.1, "batch_size": 16,
}))
job = client.post("/api/train", json={"state": state_id, "run_id": "run-http"}).json()
print(f"training job {job['job_id']} started")
while True:
    status = client.get(f"/api/train/{job['job_id']}").json()
    if status["status"] in ("done", "failed"):
        break
    time.sleep(0.1)
trained = status["state_id"]
print(f"job {status['status']}: trained state {trained}")

# Explore what the server knows.
print("\nexplainers:", [e["id"] for e in client.get("/api/explainers").json()["explainers"]])
graph = client.get("/api/runs/run-http/graph").json()
print("graph kinds:", [n["kind"] for n in graph["nodes"]])
series = client.get("/api/runs/run-http/series/loss", params={"stat": "mean"}).json()
print("loss:", [round(p["value"], 3) for p in series["series"]])

# Explain a sample and save the result as a provenance card.
amap = client.post("/api/explain", json={
    "explainer": "integrated_gradients", "state": trained, "sample": 0, "params": {"m": 64},
}).json()
print(f"\nIG on sample 0: target={amap['target']}, shape={amap['shape']}")
card = client.post("/api/provenance/cards", json={
    "kind": "attribution", "payload": amap, "annotation": "saved over HTTP",
}).json()
print("card:", card["card_id"])

# Ask the advisor and apply its strongest recommendation.
recs = client.get(f"/api/states/{trained}/recommendations",
                  params={"run": "run-http"}).json()["recommendations"]
print("\nrecommendations:", [(r["rule_id"], r["severity"]) for r in recs])
r1 = next(r for r in recs if r["rule_id"] == "R1")
patched = client.post("/api/transitions/apply",
                      json={"state": trained, "transition": r1["transition"]}).json()
print("patched state:", patched["state_id"])
compare = client.get(f"/api/states/{trained}/compare/{patched['state_id']}").json()
print("accuracy delta (untrained patch):", round(compare["metric_deltas"]["accuracy"], 3))
