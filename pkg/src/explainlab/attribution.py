"""High-abstraction, local-level attribution explainers.

Each explainer consumes a model state plus one input sample and produces an
AttributionMap: signed per-input-element relevance scores for the selected
target class. All methods differentiate (or probe) the pre-softmax score of
the target class and are deterministic given (state, sample, params, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.linear_model import Ridge

from .errors import InvalidParam, NotFound
from .graph import ModelState, backprop, backward, forward, pre_softmax_scores


@dataclass(frozen=True)
class ExplainerDescriptor:
    """Taxonomy record for one registered explainer."""

    id: str
    level: str  # global | local | not_applicable
    abstraction: str  # low | high
    dependencies: tuple  # subset of (data, model, domain)
    applicability: str
    doc: str
    kind: str = "attribution"  # attribution | introspection | doc


# Taxonomy of the implemented attribution methods. "gradient" is the same
# computation as "saliency" (signed input gradient); both are registered.
_GRAD_DEPS = ("data", "model", "domain")

ATTRIBUTION_DESCRIPTORS = (
    ExplainerDescriptor(
        "lime", "local", "high", ("data",), "whole model",
        "Local linear surrogate fitted on mask perturbations of one sample.",
    ),
    ExplainerDescriptor(
        "lrp_epsilon", "local", "high", _GRAD_DEPS, "whole model",
        "Layer-wise relevance propagation with the epsilon stabilizer.",
    ),
    ExplainerDescriptor(
        "saliency", "local", "high", _GRAD_DEPS, "whole model",
        "Signed gradient of the target score w.r.t. the input.",
    ),
    ExplainerDescriptor(
        "gradient", "local", "high", _GRAD_DEPS, "whole model",
        "Raw input gradient; identical computation to saliency.",
    ),
    ExplainerDescriptor(
        "gradient_x_input", "local", "high", _GRAD_DEPS, "whole model",
        "Input gradient multiplied elementwise by the input.",
    ),
    ExplainerDescriptor(
        "occlusion", "local", "high", _GRAD_DEPS, "whole model",
        "Score drop when a sliding window of the input is blanked out.",
    ),
    ExplainerDescriptor(
        "smoothgrad", "local", "high", _GRAD_DEPS, "whole model",
        "Mean saliency over Gaussian-noised copies of the sample.",
    ),
    ExplainerDescriptor(
        "integrated_gradients", "local", "high", _GRAD_DEPS, "whole model",
        "Path integral of gradients from a baseline to the sample.",
    ),
)


@dataclass
class AttributionMap:
    explainer_id: str
    state_id: str
    sample_id: str
    target_class: int
    values: np.ndarray  # shaped like the input, or per-segment for LIME
    prediction: np.ndarray
    meta: dict = field(default_factory=dict)
    segments: Optional[np.ndarray] = None  # LIME: segment id per input element

    def to_dict(self) -> dict:
        out = {
            "explainer_id": self.explainer_id,
            "state_id": self.state_id,
            "sample": self.sample_id,
            "target": self.target_class,
            "shape": list(self.values.shape),
            "values": [float(v) for v in self.values.ravel()],
            "prediction": [float(v) for v in self.prediction.ravel()],
            "meta": self.meta,
        }
        if self.segments is not None:
            out["segments"] = [int(s) for s in self.segments.ravel()]
            out["segments_shape"] = list(self.segments.shape)
        return out


def _target_score(state: ModelState, x: np.ndarray, target: int) -> float:
    return float(pre_softmax_scores(state, x)[target])


def _make_map(explainer_id, state, x, target, values, meta=None, sample_id="", segments=None, prediction=None):
    if prediction is None:
        prediction, _ = forward(state, x)
    return AttributionMap(
        explainer_id=explainer_id,
        state_id=state.state_id,
        sample_id=sample_id,
        target_class=target,
        values=np.asarray(values, dtype=np.float64),
        prediction=prediction,
        meta=meta or {},
        segments=segments,
    )


def saliency(state: ModelState, x: np.ndarray, target: int, sample_id: str = "") -> AttributionMap:
    grads = backward(state, x, target)
    return _make_map("saliency", state, x, target, grads.input, sample_id=sample_id)


def gradient(state: ModelState, x: np.ndarray, target: int, sample_id: str = "") -> AttributionMap:
    out = saliency(state, x, target, sample_id)
    out.explainer_id = "gradient"
    return out


def gradient_x_input(state: ModelState, x: np.ndarray, target: int, sample_id: str = "") -> AttributionMap:
    grads = backward(state, x, target)
    values = grads.input * np.asarray(x, dtype=np.float64)
    return _make_map("gradient_x_input", state, x, target, values, sample_id=sample_id)


def integrated_gradients(
    state: ModelState,
    x: np.ndarray,
    target: int,
    baseline: Optional[np.ndarray] = None,
    m: int = 64,
    sample_id: str = "",
) -> AttributionMap:
    """Midpoint Riemann sum of gradients along the straight baseline->x path."""
    if m < 1:
        raise InvalidParam(f"integrated_gradients needs m >= 1, got {m}")
    x = np.asarray(x, dtype=np.float64)
    base = np.zeros_like(x) if baseline is None else np.asarray(baseline, dtype=np.float64)
    diff = x - base
    total = np.zeros_like(x)
    for i in range(m):
        alpha = (i + 0.5) / m
        total += backward(state, base + alpha * diff, target).input
    values = diff * total / m
    meta = {"m": m, "baseline": "zeros" if baseline is None else "custom"}
    return _make_map("integrated_gradients", state, x, target, values, meta, sample_id)


def smoothgrad(
    state: ModelState,
    x: np.ndarray,
    target: int,
    n: int = 25,
    sigma_rel: float = 0.15,
    seed: int = 0,
    sample_id: str = "",
) -> AttributionMap:
    """Mean saliency over n Gaussian-noised copies; sigma is relative to the
    sample's value range, so sigma_rel=0 degenerates to plain saliency."""
    if n < 1:
        raise InvalidParam(f"smoothgrad needs n >= 1, got {n}")
    x = np.asarray(x, dtype=np.float64)
    sigma = sigma_rel * (float(x.max()) - float(x.min()))
    rng = np.random.default_rng(seed)
    total = np.zeros_like(x)
    for _ in range(n):
        noisy = x if sigma == 0.0 else x + rng.normal(0.0, sigma, size=x.shape)
        total += backward(state, noisy, target).input
    meta = {"n": n, "sigma_rel": sigma_rel, "sigma": sigma, "seed": seed}
    return _make_map("smoothgrad", state, x, target, total / n, meta, sample_id)


def occlusion(
    state: ModelState,
    x: np.ndarray,
    target: int,
    window: int = 2,
    stride: int = 1,
    baseline_value: float = 0.0,
    sample_id: str = "",
) -> AttributionMap:
    """Score drop per sliding-window blank-out, averaged over the windows
    covering each input element. Rank-3 inputs slide over H and W (all
    channels replaced together); rank-1 inputs slide over the single axis."""
    x = np.asarray(x, dtype=np.float64)
    if window < 1 or stride < 1:
        raise InvalidParam("occlusion needs window >= 1 and stride >= 1")
    spatial = x.shape[:2] if x.ndim == 3 else x.shape[:1]
    if any(window > s for s in spatial):
        raise InvalidParam(f"occlusion window {window} larger than input {x.shape}")
    base_score = _target_score(state, x, target)
    acc = np.zeros_like(x)
    cover = np.zeros_like(x)
    if x.ndim == 3:
        positions = [
            (i, j)
            for i in range(0, x.shape[0] - window + 1, stride)
            for j in range(0, x.shape[1] - window + 1, stride)
        ]
        for i, j in positions:
            probe = x.copy()
            probe[i : i + window, j : j + window, :] = baseline_value
            delta = base_score - _target_score(state, probe, target)
            acc[i : i + window, j : j + window, :] += delta
            cover[i : i + window, j : j + window, :] += 1.0
    else:
        for i in range(0, x.shape[0] - window + 1, stride):
            probe = x.copy()
            probe[i : i + window] = baseline_value
            delta = base_score - _target_score(state, probe, target)
            acc[i : i + window] += delta
            cover[i : i + window] += 1.0
    values = np.divide(acc, cover, out=np.zeros_like(acc), where=cover > 0)
    meta = {"window": window, "stride": stride, "baseline_value": baseline_value}
    return _make_map("occlusion", state, x, target, values, meta, sample_id)


def grid_segments(shape: tuple, grid: int) -> np.ndarray:
    """Segment id per input element: grid x grid spatial blocks; the last
    block on each axis absorbs any remainder. Channels share a segment."""
    if len(shape) == 3:
        h, w, c = shape
        rows = np.minimum(np.arange(h) // grid, h // grid - 1 if h >= grid else 0)
        cols = np.minimum(np.arange(w) // grid, w // grid - 1 if w >= grid else 0)
        ncols = int(cols.max()) + 1
        seg2d = rows[:, None] * ncols + cols[None, :]
        return np.repeat(seg2d[:, :, None], c, axis=2).astype(np.int64)
    n = shape[0]
    ids = np.minimum(np.arange(n) // grid, n // grid - 1 if n >= grid else 0)
    return ids.astype(np.int64)


def _parse_segments(x: np.ndarray, segments) -> np.ndarray:
    if isinstance(segments, np.ndarray):
        if segments.shape != x.shape:
            raise InvalidParam("segment mask shape must match the input")
        return segments.astype(np.int64)
    if isinstance(segments, str):
        if segments == "identity":
            return np.arange(x.size).reshape(x.shape)
        if segments.startswith("grid"):
            try:
                grid = int(segments[len("grid"):])
            except ValueError:
                raise InvalidParam(f"bad segmentation spec {segments!r}")
            if grid < 1:
                raise InvalidParam(f"bad segmentation spec {segments!r}")
            if grid == 1:
                return np.arange(x.size).reshape(x.shape)
            return grid_segments(x.shape, grid)
    raise InvalidParam(f"unknown segmentation {segments!r}")


def lime(
    state: ModelState,
    x: np.ndarray,
    target: int,
    segments="grid2",
    n_samples: int = 1000,
    kernel_width_rel: float = 0.25,
    ridge_lambda: float = 1e-3,
    seed: int = 0,
    baseline_value: float = 0.0,
    sample_id: str = "",
) -> AttributionMap:
    """Local linear surrogate: sample binary segment masks, blank masked-off
    segments to the baseline value, then fit a weighted ridge regression of
    the target score on the masks. Coefficients are per-segment attributions;
    the exponential kernel on normalized Hamming distance weighs samples."""
    x = np.asarray(x, dtype=np.float64)
    seg_map = _parse_segments(x, segments)
    seg_ids = np.unique(seg_map)
    n_seg = len(seg_ids)
    if n_samples < n_seg:
        raise InvalidParam(f"lime needs n_samples >= segment count ({n_seg}), got {n_samples}")
    # Re-index segments to 0..n_seg-1 for the design matrix.
    remap = {int(s): i for i, s in enumerate(seg_ids)}
    seg_idx = np.vectorize(remap.get)(seg_map)

    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(n_samples, n_seg)).astype(np.float64)
    masks[0, :] = 1.0  # anchor the surrogate at the unperturbed sample

    ys = np.empty(n_samples)
    for i in range(n_samples):
        on = masks[i][seg_idx].astype(bool)
        probe = np.where(on, x, baseline_value)
        ys[i] = _target_score(state, probe, target)

    dist = 1.0 - masks.mean(axis=1)  # fraction of segments off
    weights = np.exp(-(dist ** 2) / (kernel_width_rel ** 2))

    model = Ridge(alpha=ridge_lambda, fit_intercept=True)
    model.fit(masks, ys, sample_weight=weights)
    pred = model.predict(masks)
    ss_res = float(np.sum(weights * (ys - pred) ** 2))
    ybar = float(np.average(ys, weights=weights))
    ss_tot = float(np.sum(weights * (ys - ybar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    meta = {
        "segments": segments if isinstance(segments, str) else "custom",
        "n_samples": n_samples,
        "kernel_width_rel": kernel_width_rel,
        "ridge_lambda": ridge_lambda,
        "seed": seed,
        "intercept": float(model.intercept_),
        "r2": r2,
    }
    return _make_map(
        "lime", state, x, target, model.coef_, meta, sample_id, segments=seg_idx
    )


def lrp_epsilon(
    state: ModelState,
    x: np.ndarray,
    target: int,
    epsilon: float = 0.01,
    sample_id: str = "",
    return_layers: bool = False,
) -> AttributionMap:
    """Layer-wise relevance propagation, epsilon rule.

    Relevance starts as the pre-softmax target score and is propagated back
    through each layer: linear layers use R_i = sum_j a_i w_ij / (z_j +
    eps*sign(z_j)) * R_j, relu passes relevance through, maxpool routes it to
    the max element of each window, flatten reshapes.
    """
    x = np.asarray(x, dtype=np.float64)
    prediction, cache = forward(state, x)
    scores = pre_softmax_scores(state, x, cache)
    score = float(scores[target])

    nodes = list(state.graph.nodes)
    if nodes[-1].kind == "softmax":
        nodes = nodes[:-1]

    relevance = np.zeros_like(scores)
    relevance[target] = score
    layer_relevances = {nodes[-1].name: relevance.copy()}

    def stabilize(z):
        sign = np.where(z >= 0, 1.0, -1.0)
        return z + epsilon * sign

    for i in range(len(nodes) - 1, 0, -1):
        node = nodes[i]
        a_in = cache[nodes[i - 1].name]
        kind = node.kind
        if kind == "dense":
            p = state.parameters[node.name]
            z = cache[node.name]
            s = relevance / stabilize(z)
            relevance = a_in * (p["weights"] @ s)
        elif kind == "conv2d":
            p = state.parameters[node.name]
            w = p["weights"]
            z = cache[node.name]
            s = relevance / stabilize(z)
            k = w.shape[0]
            ho, wo, _ = s.shape
            back = np.zeros_like(a_in)
            for a_ in range(k):
                for b_ in range(k):
                    back[a_ : a_ + ho, b_ : b_ + wo, :] += s @ w[a_, b_].T
            relevance = a_in * back
        elif kind == "relu":
            pass  # relevance passes through unchanged
        elif kind == "flatten":
            relevance = relevance.reshape(a_in.shape)
        elif kind == "maxpool2":
            from .graph import _maxpool2_mask

            mask = _maxpool2_mask(a_in)
            h, w_, c = a_in.shape
            ho, wo = h // 2, w_ // 2
            up = np.zeros_like(a_in)
            up[: 2 * ho, : 2 * wo, :] = np.repeat(np.repeat(relevance, 2, axis=0), 2, axis=1)
            relevance = up * mask
        layer_relevances[nodes[i - 1].name] = relevance.copy()

    meta = {"epsilon": epsilon, "target_score": score}
    out = _make_map("lrp_epsilon", state, x, target, relevance, meta, sample_id, prediction=prediction)
    if return_layers:
        out.meta["layer_relevances"] = layer_relevances
    return out


_ATTRIBUTION_FUNCS = {
    "saliency": saliency,
    "gradient": gradient,
    "gradient_x_input": gradient_x_input,
    "integrated_gradients": integrated_gradients,
    "smoothgrad": smoothgrad,
    "occlusion": occlusion,
    "lime": lime,
    "lrp_epsilon": lrp_epsilon,
}


def run_attribution(explainer_id: str, state: ModelState, x: np.ndarray, target: int, **params) -> AttributionMap:
    """Dispatch an attribution explainer by id."""
    func = _ATTRIBUTION_FUNCS.get(explainer_id)
    if func is None:
        raise NotFound(f"unknown attribution explainer {explainer_id!r}")
    return func(state, x, target, **params)
