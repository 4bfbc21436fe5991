"""Shared test helpers: random chain models and finite-difference gradients.

The finite-difference code here is the independent oracle for the engine's
analytic gradients: it only ever calls the forward pass.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from explainlab.graph import (
    GraphDef,
    ModelState,
    NodeDef,
    new_state,
    pre_softmax_scores,
)


def random_chain_state(rng: np.random.Generator, perturb: bool = True) -> tuple:
    """A random small chain model plus a matching random input sample.

    Mixes dense / conv2d / relu / maxpool2 blocks. With ``perturb`` (the
    default) parameters are shifted to mixed-sign values with nonzero biases
    so gradients are generic; without it the state keeps its canonical
    initialization (He-uniform weights, zero biases).
    """
    num_classes = int(rng.integers(2, 4))
    nodes = [NodeDef("input", "input")]
    if rng.random() < 0.5:
        side = int(rng.integers(4, 7))
        channels = int(rng.integers(1, 3))
        input_shape = (side, side, channels)
        if rng.random() < 0.8:
            k = 3
            filters = int(rng.integers(2, 4))
            nodes.append(NodeDef("conv", "conv2d", {"filters": filters, "kernel_size": k}))
            out = side - k + 1
            if rng.random() < 0.5:
                nodes.append(NodeDef("relu_c", "relu"))
            if out >= 2 and rng.random() < 0.7:
                nodes.append(NodeDef("pool", "maxpool2"))
        nodes.append(NodeDef("flatten", "flatten"))
    else:
        input_shape = (int(rng.integers(4, 10)),)
    nodes.append(NodeDef("dense1", "dense", {"units": int(rng.integers(3, 7))}))
    if rng.random() < 0.7:
        nodes.append(NodeDef("relu1", "relu"))
    nodes.append(NodeDef("dense2", "dense", {"units": num_classes}))
    if rng.random() < 0.5:
        nodes.append(NodeDef("softmax", "softmax"))
    graph = GraphDef(tuple(nodes), input_shape, num_classes)
    state = new_state(graph, {"seed": int(rng.integers(0, 10_000))})
    if perturb:
        params = {
            name: {
                "weights": p["weights"] + 0.1 * rng.normal(size=p["weights"].shape),
                "bias": rng.normal(0.0, 0.2, size=p["bias"].shape),
            }
            for name, p in state.parameters.items()
        }
        state = replace(state, parameters=params)
    x = rng.normal(0.0, 1.0, size=input_shape)
    return state, x


def positive_chain_state(rng: np.random.Generator) -> tuple:
    """All-positive weights, zero biases, all-positive input (for LRP)."""
    state, x = random_chain_state(rng)
    params = {
        name: {"weights": np.abs(p["weights"]) + 0.01, "bias": np.zeros_like(p["bias"])}
        for name, p in state.parameters.items()
    }
    return replace(state, parameters=params), np.abs(x) + 0.01


def zero_bias_state(rng: np.random.Generator) -> tuple:
    """Mixed-sign weights but zero biases (for the LRP leak bound)."""
    state, x = random_chain_state(rng)
    params = {
        name: {"weights": p["weights"].copy(), "bias": np.zeros_like(p["bias"])}
        for name, p in state.parameters.items()
    }
    return replace(state, parameters=params), x


def _score(state: ModelState, x: np.ndarray, target: int) -> float:
    return float(pre_softmax_scores(state, x)[target])


def fd_input_gradient(state: ModelState, x: np.ndarray, target: int, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the pre-softmax target score w.r.t. x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    xf = x.ravel()
    for i in range(x.size):
        orig = xf[i]
        xf[i] = orig + h
        hi = _score(state, x, target)
        xf[i] = orig - h
        lo = _score(state, x, target)
        xf[i] = orig
        flat[i] = (hi - lo) / (2 * h)
    return grad


def fd_param_gradients(state: ModelState, x: np.ndarray, target: int, h: float = 1e-5) -> dict:
    """Central finite differences w.r.t. every weight and bias entry."""
    out = {}
    for name, p in state.parameters.items():
        out[name] = {}
        for part in ("weights", "bias"):
            tensor = p[part]
            grad = np.zeros_like(tensor)
            tf = tensor.ravel()
            gf = grad.ravel()
            for i in range(tensor.size):
                orig = tf[i]
                tf[i] = orig + h
                hi = _score(state, x, target)
                tf[i] = orig - h
                lo = _score(state, x, target)
                tf[i] = orig
                gf[i] = (hi - lo) / (2 * h)
            out[name][part] = grad
    return out


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def linear_state(w: np.ndarray, num_classes: int = 1) -> ModelState:
    """A bare input->dense model with the given (n, num_classes) weights."""
    w = np.asarray(w, dtype=np.float64)
    graph = GraphDef(
        nodes=(NodeDef("input", "input"), NodeDef("dense", "dense", {"units": num_classes})),
        input_shape=(w.shape[0],),
        num_classes=num_classes,
    )
    state = new_state(graph, {"seed": 0})
    return replace(
        state,
        parameters={"dense": {"weights": w.reshape(w.shape[0], num_classes), "bias": np.zeros(num_classes)}},
    )
