"""Low-abstraction introspection explainers over logged runs.

These consume aggregated run logs and model checkpoints rather than data
samples: min/max trend lines, re-binned histogram trends, and dead/saturated
weight scans. The look-up explainer serves static documentation cards for
node kinds and explainer ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .attribution import ExplainerDescriptor
from .errors import InsufficientCheckpoints, NotFound
from .graph import load_model
from .runlog import HISTOGRAM_BINS, RunLog

INTROSPECTION_DESCRIPTORS = (
    ExplainerDescriptor(
        "minmax", "not_applicable", "low", ("model",), "trainable nodes",
        "Per-step min/max envelope of a logged parameter tensor.",
        kind="introspection",
    ),
    ExplainerDescriptor(
        "histo_trend", "not_applicable", "low", ("model",), "trainable nodes",
        "Logged histograms re-binned onto a common axis across steps.",
        kind="introspection",
    ),
    ExplainerDescriptor(
        "dead_weight", "global", "low", ("model",), "trainable nodes",
        "Weights stuck near zero across recent checkpoints.",
        kind="introspection",
    ),
    ExplainerDescriptor(
        "saturated_weight", "global", "low", ("model",), "trainable nodes",
        "Weights stuck at large magnitude across recent checkpoints.",
        kind="introspection",
    ),
)

LOOKUP_DESCRIPTOR = ExplainerDescriptor(
    "lookup_doc", "not_applicable", "low", ("model",), "node kinds and explainer ids",
    "Wiki-style documentation card for a graph node kind or explainer.",
    kind="doc",
)


@dataclass
class IntrospectionResult:
    explainer_id: str
    node: str
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"explainer_id": self.explainer_id, "node": self.node, "payload": self.payload}


def minmax(run: RunLog, node: str) -> IntrospectionResult:
    """(step, min, max) triples straight from the logged aggregates."""
    mins = run.read_series(node, "min")
    maxs = dict(run.read_series(node, "max"))
    series = [(step, lo, maxs[step]) for step, lo in mins]
    return IntrospectionResult("minmax", node, {"series": series})


def rebin_histogram(edges, counts, target_edges) -> np.ndarray:
    """Distribute bin counts onto new bins proportionally to overlap length."""
    edges = np.asarray(edges, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    target_edges = np.asarray(target_edges, dtype=np.float64)
    out = np.zeros(len(target_edges) - 1)
    for i in range(len(counts)):
        lo, hi = edges[i], edges[i + 1]
        width = hi - lo
        if counts[i] == 0 or width <= 0:
            continue
        overlap_lo = np.maximum(target_edges[:-1], lo)
        overlap_hi = np.minimum(target_edges[1:], hi)
        overlap = np.clip(overlap_hi - overlap_lo, 0.0, None)
        out += counts[i] * overlap / width
    return out


def histo_trend(run: RunLog, node: str) -> IntrospectionResult:
    """All logged histograms of a node on one common 30-bin axis.

    The common axis spans [min over steps of min, max over steps of max];
    each stored histogram's counts are re-distributed proportionally to bin
    overlap, so every row keeps its total mass (as reals).
    """
    histos = run.read_histo_series(node)
    lo = min(h["edges"][0] for _, h in histos)
    hi = max(h["edges"][-1] for _, h in histos)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    common = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
    steps = []
    matrix = []
    for step, h in histos:
        steps.append(step)
        matrix.append(rebin_histogram(h["edges"], h["counts"], common).tolist())
    return IntrospectionResult(
        "histo_trend", node, {"edges": [float(e) for e in common], "steps": steps, "matrix": matrix}
    )


def _checkpoint_tensors(run: RunLog, node: str, window: int) -> list:
    """The node's parameter tensor from the last `window` checkpoints."""
    name, _, part = node.partition("/")
    part = part or "weights"
    ckpts = run.checkpoints()
    if len(ckpts) < 2:
        raise InsufficientCheckpoints(
            f"weight scans need at least 2 checkpoints, run {run.run_id!r} has {len(ckpts)}"
        )
    paths = list(ckpts.values())[-window:]
    tensors = []
    for path in paths:
        state = load_model(path)
        if name not in state.parameters:
            raise NotFound(f"node {name!r} has no parameters in run {run.run_id!r}")
        tensors.append(state.parameters[name][part])
    return tensors


def _weight_scan(explainer_id, run, node, magnitude_pred, delta, window, thresholds) -> IntrospectionResult:
    tensors = _checkpoint_tensors(run, node, window)
    stack = np.stack([t.ravel() for t in tensors])
    mag_ok = np.all(magnitude_pred(np.abs(stack)), axis=0)
    if len(tensors) > 1:
        moves = np.max(np.abs(np.diff(stack, axis=0)), axis=0)
    else:
        moves = np.zeros(stack.shape[1])
    frozen = moves <= delta
    flagged = np.flatnonzero(mag_ok & frozen)
    payload = {
        "fraction": float(len(flagged) / stack.shape[1]),
        "flagged_indices": [int(i) for i in flagged],
        "thresholds": thresholds,
        "checkpoints_used": len(tensors),
    }
    return IntrospectionResult(explainer_id, node, payload)


def dead_weight(run: RunLog, node: str, tau_dead: float = 1e-3, delta: float = 1e-4, window: int = 5) -> IntrospectionResult:
    """Fraction and indices of weights with |w| <= tau_dead at every recent
    checkpoint and at most `delta` total movement between checkpoints."""
    return _weight_scan(
        "dead_weight", run, node, lambda a: a <= tau_dead, delta, window,
        {"tau_dead": tau_dead, "delta": delta, "window": window},
    )


def saturated_weight(run: RunLog, node: str, tau_sat: float = 1.0, delta: float = 1e-4, window: int = 5) -> IntrospectionResult:
    """Like dead_weight, but flags weights stuck at |w| >= tau_sat."""
    return _weight_scan(
        "saturated_weight", run, node, lambda a: a >= tau_sat, delta, window,
        {"tau_sat": tau_sat, "delta": delta, "window": window},
    )


_INTROSPECTION_FUNCS = {
    "minmax": minmax,
    "histo_trend": histo_trend,
    "dead_weight": dead_weight,
    "saturated_weight": saturated_weight,
}


def run_introspection(explainer_id: str, run: RunLog, node: str, **params) -> IntrospectionResult:
    func = _INTROSPECTION_FUNCS.get(explainer_id)
    if func is None:
        raise NotFound(f"unknown introspection explainer {explainer_id!r}")
    return func(run, node, **params)


# ---------------------------------------------------------------------------
# Look-up documentation cards


@dataclass
class DocCard:
    key: str
    title: str
    body: str
    references: list

    def to_dict(self) -> dict:
        return {"key": self.key, "title": self.title, "body": self.body, "references": self.references}


def _docs_dir():
    return resources.files("explainlab") / "docs"


def lookup_doc(key: str) -> DocCard:
    """Documentation card for a node kind or registered explainer id.

    Cards ship as markdown files with a front-matter block:

        ---
        title: ...
        references:
          - ...
        ---
        body text
    """
    path = _docs_dir() / f"{key}.md"
    try:
        text = path.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        raise NotFound(f"no documentation card for {key!r}")
    title, references, body = _parse_front_matter(text)
    return DocCard(key=key, title=title, body=body, references=references)


def list_doc_keys() -> list:
    return sorted(p.name[:-3] for p in _docs_dir().iterdir() if p.name.endswith(".md"))


def _parse_front_matter(text: str) -> tuple:
    lines = text.splitlines()
    title = ""
    references = []
    body_start = 0
    if lines and lines[0].strip() == "---":
        in_refs = False
        for i, line in enumerate(lines[1:], start=1):
            if line.strip() == "---":
                body_start = i + 1
                break
            if line.startswith("title:"):
                title = line[len("title:"):].strip()
                in_refs = False
            elif line.startswith("references:"):
                in_refs = True
            elif in_refs and line.lstrip().startswith("- "):
                references.append(line.lstrip()[2:].strip())
    body = "\n".join(lines[body_start:]).strip()
    return title, references, body
