"""HTTP service exposing the workbench to the browser UI.

All endpoints are JSON and share the Workbench facade with the CLI.
Training runs as background jobs: POST /api/train returns a job id to
poll; only one job per source state may run at a time.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import Busy, ExplainLabError, InvalidInput, NotFound
from .graph import state_to_dict
from .render import attribution_svg
from .workbench import Workbench, all_descriptors


class TrainJobs:
    """Background training jobs, one at a time per source state."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs = {}
        self._busy_states = set()

    def start(self, workbench: Workbench, state_id: str, dataset_id: str,
              run_id: Optional[str], epochs: Optional[int]) -> str:
        with self._lock:
            if state_id in self._busy_states:
                raise Busy(f"a training job for state {state_id!r} is already running")
            job_id = uuid.uuid4().hex[:12]
            self._busy_states.add(state_id)
            self._jobs[job_id] = {"status": "queued", "source_state": state_id}

        def work():
            self._jobs[job_id]["status"] = "running"
            try:
                rid = run_id or f"run-{state_id}-{job_id[:6]}"
                new_id, run = workbench.workspace.train(state_id, dataset_id, rid, epochs=epochs)
                self._jobs[job_id].update({"status": "done", "state_id": new_id, "run_id": run.run_id})
            except Exception as exc:  # surface, don't crash the server
                self._jobs[job_id].update({"status": "failed", "message": str(exc)})
            finally:
                with self._lock:
                    self._busy_states.discard(state_id)

        threading.Thread(target=work, daemon=True).start()
        return job_id

    def status(self, job_id: str) -> dict:
        if job_id not in self._jobs:
            raise NotFound(f"unknown training job {job_id!r}")
        return dict(self._jobs[job_id])


def create_app(workspace_root, static_dir: Optional[str] = None) -> FastAPI:
    wb = Workbench(workspace_root)
    jobs = TrainJobs()
    app = FastAPI(title="explainlab", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ExplainLabError)
    async def handle_error(_request: Request, exc: ExplainLabError):
        return JSONResponse(status_code=exc.http_status, content={"code": exc.code, "message": exc.message})

    # -- runs ---------------------------------------------------------------

    @app.get("/api/runs")
    def runs():
        return {"runs": wb.workspace.list_runs()}

    @app.get("/api/runs/{run_id}/graph")
    def run_graph(run_id: str):
        run = wb.workspace.get_run(run_id)
        ckpts = run.checkpoints()
        if not ckpts:
            raise NotFound(f"run {run_id!r} has no checkpoints")
        from .graph import load_model

        state = load_model(list(ckpts.values())[-1])
        shapes = state.graph.node_shapes()
        return {
            "run_id": run_id,
            "nodes": [
                {"name": n.name, "kind": n.kind, "params": dict(n.params),
                 "trainable": n.trainable, "output_shape": list(shapes[n.name])}
                for n in state.graph.nodes
            ],
            "input_shape": list(state.graph.input_shape),
            "num_classes": state.graph.num_classes,
            "logged_nodes": run.nodes(),
        }

    @app.get("/api/runs/{run_id}/series/{node:path}")
    def run_series(run_id: str, node: str, stat: str = "mean"):
        run = wb.workspace.get_run(run_id)
        pairs = run.read_series(node, stat)
        return {"run_id": run_id, "node": node, "stat": stat,
                "series": [{"step": s, "value": v} for s, v in pairs]}

    @app.get("/api/runs/{run_id}/histos/{node:path}")
    def run_histos(run_id: str, node: str):
        run = wb.workspace.get_run(run_id)
        pairs = run.read_histo_series(node)
        return {"run_id": run_id, "node": node,
                "histograms": [{"step": s, **h} for s, h in pairs]}

    # -- registry -------------------------------------------------------------

    @app.get("/api/explainers")
    def explainers():
        return {
            "explainers": [
                {"id": d.id, "level": d.level, "abstraction": d.abstraction,
                 "dependencies": list(d.dependencies), "applicability": d.applicability,
                 "doc": d.doc, "kind": d.kind}
                for d in all_descriptors()
            ]
        }

    @app.get("/api/doc/{key}")
    def doc(key: str):
        return wb.doc(key).to_dict()

    @app.get("/api/states")
    def states():
        return {"states": wb.workspace.list_states()}

    @app.get("/api/states/{state_id}")
    def state(state_id: str):
        s = wb.workspace.get_state(state_id)
        shapes = s.graph.node_shapes()
        return {
            "state_id": s.state_id,
            "step": s.step,
            "hyperparams": s.hyperparams,
            "lineage": s.lineage,
            "graph": {
                "nodes": [
                    {"name": n.name, "kind": n.kind, "params": dict(n.params),
                     "trainable": n.trainable, "output_shape": list(shapes[n.name])}
                    for n in s.graph.nodes
                ],
                "input_shape": list(s.graph.input_shape),
                "num_classes": s.graph.num_classes,
            },
        }

    # -- explainers ------------------------------------------------------------

    @app.post("/api/explain")
    async def explain(request: Request):
        body = await request.json()
        for field in ("explainer", "state"):
            if field not in body:
                raise InvalidInput(f"missing field {field!r}")
        amap = wb.explain(
            body["explainer"],
            body["state"],
            dataset_id=body.get("dataset", "bars8"),
            split=body.get("split", "test"),
            sample=int(body.get("sample", 0)),
            target=body.get("target"),
            params=body.get("params") or {},
        )
        out = amap.to_dict()
        if body.get("svg"):
            out["svg"] = attribution_svg(amap)
        return out

    @app.post("/api/scan")
    async def scan(request: Request):
        body = await request.json()
        for field in ("explainer", "run", "node"):
            if field not in body:
                raise InvalidInput(f"missing field {field!r}")
        result = wb.scan(body["explainer"], body["run"], body["node"], params=body.get("params") or {})
        return result.to_dict()

    @app.get("/api/states/{state_id}/metrics")
    def state_metrics(state_id: str, split: str = "test", dataset: str = "bars8"):
        return wb.metrics(state_id, dataset, split).to_dict()

    @app.get("/api/states/{a}/compare/{b}")
    def compare(a: str, b: str, dataset: str = "bars8", split: str = "test"):
        return wb.workspace.compare_states(a, b, dataset, split)

    @app.get("/api/states/{state_id}/recommendations")
    def recommendations(state_id: str, run: Optional[str] = None, dataset: str = "bars8"):
        recs = wb.recommendations(state_id, run_id=run, dataset_id=dataset)
        return {"state_id": state_id, "recommendations": [r.to_dict() for r in recs]}

    # -- transitions / training ---------------------------------------------------

    @app.post("/api/transitions/apply")
    async def apply_transition(request: Request):
        body = await request.json()
        from .pipeline import TransitionFunction

        t = body.get("transition") or {}
        if "state" not in body or "kind" not in t:
            raise InvalidInput("need 'state' and 'transition.kind'")
        transition = TransitionFunction(
            transition_id=t.get("transition_id", "manual"),
            kind=t["kind"],
            payload=t.get("payload") or {},
            provenance=t.get("provenance", "manual"),
        )
        new_id = wb.workspace.apply_transition(body["state"], transition)
        return {"state_id": new_id, "parent": body["state"]}

    @app.post("/api/train")
    async def train(request: Request):
        body = await request.json()
        if "state" not in body:
            raise InvalidInput("missing field 'state'")
        wb.workspace.get_state(body["state"])  # 404 before queuing
        job_id = jobs.start(
            wb, body["state"], body.get("dataset", "bars8"),
            body.get("run_id"), body.get("epochs"),
        )
        return {"job_id": job_id}

    @app.get("/api/train/{job_id}")
    def train_status(job_id: str):
        return jobs.status(job_id)

    # -- provenance / reporting -----------------------------------------------------

    @app.post("/api/provenance/cards")
    async def add_card(request: Request):
        body = await request.json()
        card_id = wb.provenance.add_card(
            body.get("kind", "note"),
            body.get("payload") or {},
            source=body.get("source") or {},
            annotation=body.get("annotation", ""),
            created_at=body.get("created_at"),
        )
        return wb.provenance.get_card(card_id).to_dict()

    @app.patch("/api/provenance/cards/{card_id}")
    async def patch_card(card_id: str, request: Request):
        body = await request.json()
        if "annotation" in body:
            wb.provenance.annotate(card_id, body["annotation"])
        if "group_id" in body:
            wb.provenance.group([card_id], body["group_id"])
        return wb.provenance.get_card(card_id).to_dict()

    @app.delete("/api/provenance/cards/{card_id}")
    def delete_card(card_id: str):
        wb.provenance.delete(card_id)
        return {"deleted": card_id}

    @app.get("/api/provenance/cards")
    def list_cards(kind: Optional[str] = None, group: Optional[str] = None):
        return {"cards": [c.to_dict() for c in wb.provenance.list_cards(kind=kind, group=group)]}

    @app.post("/api/reports")
    async def create_report(request: Request):
        body = await request.json()
        sections = [
            (s.get("heading", ""), list(s.get("card_ids", [])), s.get("narrative", ""))
            for s in body.get("sections", [])
        ]
        report = wb.provenance.assemble_report(body.get("title", "Report"), sections)
        return report.to_dict()

    @app.post("/api/reports/{report_id}/export")
    def export_report(report_id: str, format: str = "markdown"):
        report = wb.provenance.get_report(report_id)
        written = wb.provenance.export_report(report, fmt=format)
        return {"report_id": report_id, "format": format,
                "files": [str(p.relative_to(wb.root)) for p in written]}

    @app.get("/api/states/{state_id}/export")
    def export_state(state_id: str):
        return state_to_dict(wb.workspace.get_state(state_id))

    # -- static UI ---------------------------------------------------------------

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return {"service": "explainlab", "api": "/api", "ui": "not bundled"}

    return app


def serve(workspace_root, bind: str = "127.0.0.1:8642", static_dir: Optional[str] = None) -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(workspace_root, static_dir=static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8642))
