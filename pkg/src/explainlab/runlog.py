"""Run logging: aggregated tensor summaries written at training time.

A run directory holds an append-only JSON-lines log (one summary record per
line), per-epoch model checkpoints and a small meta file:

    runs/<run_id>/log.jsonl
    runs/<run_id>/ckpt_<step>.emodel.json
    runs/<run_id>/meta.json

Aggregation happens when a record is written; readers only ever re-serve
the stored aggregates. Readers ignore a torn final line, so a crash during
a write never corrupts earlier records.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import LogOrderViolation, NotFound
from .graph import ModelState, save_model

HISTOGRAM_BINS = 30

STAT_NAMES = ("min", "max", "mean", "std", "l2")


def summarize_tensor(values: np.ndarray) -> dict:
    """Aggregate one tensor into scalar stats plus a 30-bin histogram.

    std is the population standard deviation. The histogram uses equal-width
    bins between the tensor's own min and max; a constant tensor gets a
    single-width range [min-0.5, min+0.5] so all mass lands in one bin.
    """
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        raise ValueError("cannot summarize an empty tensor")
    lo = float(flat.min())
    hi = float(flat.max())
    if lo == hi:
        edges = np.linspace(lo - 0.5, lo + 0.5, HISTOGRAM_BINS + 1)
    else:
        edges = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
    counts, _ = np.histogram(flat, bins=edges)
    return {
        "stats": {
            "min": lo,
            "max": hi,
            "mean": float(flat.mean()),
            "std": float(flat.std()),
            "l2": float(np.sqrt(np.sum(flat * flat))),
        },
        "histogram": {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
        "count": int(flat.size),
    }


def graph_fingerprint(state: ModelState) -> str:
    spec = json.dumps(
        {
            "nodes": [{"name": n.name, "kind": n.kind, "params": dict(n.params)} for n in state.graph.nodes],
            "input_shape": list(state.graph.input_shape),
            "num_classes": state.graph.num_classes,
        },
        sort_keys=True,
    )
    return hashlib.sha256(spec.encode("utf-8")).hexdigest()[:16]


class RunLog:
    """Single-writer, many-reader log of one training run."""

    def __init__(self, root, run_id: str, create: bool = False, meta: Optional[dict] = None):
        self.run_id = run_id
        self.dir = Path(root) / run_id
        self.log_path = self.dir / "log.jsonl"
        if create:
            self.dir.mkdir(parents=True, exist_ok=True)
            meta_obj = {"run_id": run_id, "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
            meta_obj.update(meta or {})
            (self.dir / "meta.json").write_text(json.dumps(meta_obj), encoding="utf-8")
        elif not self.dir.is_dir():
            raise NotFound(f"run {run_id!r} not found under {root}")
        self._last_step = max((r["step"] for r in self.records()), default=-1)

    @property
    def meta(self) -> dict:
        path = self.dir / "meta.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {"run_id": self.run_id}

    # -- writing ----------------------------------------------------------

    def log_step(self, state: ModelState, step: int, extras: Optional[dict] = None) -> list:
        """Append one record per trainable parameter tensor (plus extras).

        Tensors are named "<node>/weights" and "<node>/bias"; extras map a
        plain series name (e.g. "loss") to an array of raw values.
        """
        if step <= self._last_step:
            raise LogOrderViolation(f"step {step} not after last logged step {self._last_step}")
        records = []
        for node in state.graph.nodes:
            if not node.trainable:
                continue
            p = state.parameters[node.name]
            records.append(self._record(step, f"{node.name}/weights", p["weights"]))
            records.append(self._record(step, f"{node.name}/bias", p["bias"]))
        for name, values in (extras or {}).items():
            records.append(self._record(step, name, np.asarray(values, dtype=np.float64)))
        with open(self.log_path, "a+b") as fh:
            # A torn tail line (crash artifact) must not swallow new records:
            # terminate it so appends always start on a fresh line.
            fh.seek(0, os.SEEK_END)
            if fh.tell() > 0:
                fh.seek(-1, os.SEEK_END)
                if fh.read(1) != b"\n":
                    fh.write(b"\n")
            for rec in records:
                fh.write((json.dumps(rec) + "\n").encode("utf-8"))
                fh.flush()
            os.fsync(fh.fileno())
        self._last_step = step
        return records

    @staticmethod
    def _record(step: int, node: str, values: np.ndarray) -> dict:
        rec = {"step": int(step), "node": node}
        rec.update(summarize_tensor(values))
        return rec

    def save_checkpoint(self, state: ModelState, step: int) -> Path:
        path = self.dir / f"ckpt_{step}.emodel.json"
        save_model(state, path)
        return path

    # -- reading ----------------------------------------------------------

    def records(self) -> list:
        """All valid records, de-duplicated by (step, node), sorted by step.

        A truncated final line (crash artifact) is ignored.
        """
        if not self.log_path.exists():
            return []
        out = {}
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn record at the tail
                key = (rec["step"], rec["node"])
                if key not in out:
                    out[key] = rec
        return sorted(out.values(), key=lambda r: (r["step"], r["node"]))

    def nodes(self) -> list:
        return sorted({r["node"] for r in self.records()})

    def read_series(self, node: str, stat: str) -> list:
        """Ordered (step, value) pairs for one stat of one logged tensor."""
        if stat not in STAT_NAMES:
            raise NotFound(f"unknown stat {stat!r}; expected one of {STAT_NAMES}")
        pairs = [(r["step"], r["stats"][stat]) for r in self.records() if r["node"] == node]
        if not pairs:
            raise NotFound(f"node {node!r} was never logged in run {self.run_id!r}")
        return pairs

    def read_histo_series(self, node: str) -> list:
        """Ordered (step, histogram) pairs; histograms returned verbatim."""
        pairs = [(r["step"], r["histogram"]) for r in self.records() if r["node"] == node]
        if not pairs:
            raise NotFound(f"node {node!r} was never logged in run {self.run_id!r}")
        return pairs

    def checkpoints(self) -> dict:
        """Map step -> checkpoint path, sorted by step."""
        found = {}
        for path in self.dir.glob("ckpt_*.emodel.json"):
            stem = path.name[len("ckpt_") : -len(".emodel.json")]
            try:
                found[int(stem)] = path
            except ValueError:
                continue
        return dict(sorted(found.items()))


def list_runs(root) -> list:
    root = Path(root)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if (p / "meta.json").exists() or (p / "log.jsonl").exists())
