"""Computational-graph model engine.

Feed-forward chain graphs over a small op set (input, dense, conv2d, relu,
flatten, maxpool2, softmax) with forward evaluation, reverse-mode gradients
and bit-exact JSON serialization. Everything runs in float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import CorruptModel, InvalidInput, UnsupportedFormat

MODEL_FORMAT_VERSION = 1

NODE_KINDS = ("input", "dense", "conv2d", "relu", "flatten", "maxpool2", "softmax")
TRAINABLE_KINDS = ("dense", "conv2d")


@dataclass(frozen=True)
class NodeDef:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    @property
    def trainable(self) -> bool:
        return self.kind in TRAINABLE_KINDS

    def validate(self) -> None:
        if self.kind not in NODE_KINDS:
            raise CorruptModel(f"unknown node kind {self.kind!r}")
        if self.kind == "dense":
            units = self.params.get("units")
            if not isinstance(units, int) or units < 1:
                raise CorruptModel(f"dense node {self.name!r} needs positive units")
        elif self.kind == "conv2d":
            filters = self.params.get("filters")
            k = self.params.get("kernel_size")
            if not isinstance(filters, int) or filters < 1:
                raise CorruptModel(f"conv2d node {self.name!r} needs positive filters")
            if not isinstance(k, int) or k < 1 or k % 2 == 0:
                raise CorruptModel(f"conv2d node {self.name!r} needs odd kernel_size >= 1")


@dataclass(frozen=True)
class GraphDef:
    nodes: tuple
    input_shape: tuple
    num_classes: int
    version: int = MODEL_FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))

    def validate(self) -> None:
        if not self.nodes:
            raise CorruptModel("graph has no nodes")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise CorruptModel("node names not unique")
        if self.nodes[0].kind != "input":
            raise CorruptModel("first node must be the input node")
        if any(n.kind == "input" for n in self.nodes[1:]):
            raise CorruptModel("graph must have exactly one input node")
        if self.num_classes < 1:
            raise CorruptModel("num_classes must be positive")
        for node in self.nodes:
            node.validate()
        # Raises CorruptModel on any inconsistent shape chain.
        self.node_shapes()

    def node_shapes(self) -> dict:
        """Output shape of every node, inferred along the chain."""
        shapes = {}
        shape = self.input_shape
        for node in self.nodes:
            shape = _infer_shape(node, shape, self.num_classes)
            shapes[node.name] = shape
        return shapes

    def find(self, name: str) -> Optional[NodeDef]:
        for node in self.nodes:
            if node.name == name:
                return node
        return None

    def kinds(self) -> list:
        return [n.kind for n in self.nodes]


def _infer_shape(node: NodeDef, in_shape: tuple, num_classes: int) -> tuple:
    kind = node.kind
    if kind == "input":
        return in_shape
    if kind == "dense":
        if len(in_shape) != 1:
            raise CorruptModel(f"dense node {node.name!r} needs a flat input, got {in_shape}")
        return (node.params["units"],)
    if kind == "conv2d":
        if len(in_shape) != 3:
            raise CorruptModel(f"conv2d node {node.name!r} needs a HxWxC input, got {in_shape}")
        h, w, _ = in_shape
        k = node.params["kernel_size"]
        if h < k or w < k:
            raise CorruptModel(f"conv2d node {node.name!r}: kernel {k} larger than input {in_shape}")
        return (h - k + 1, w - k + 1, node.params["filters"])
    if kind == "relu":
        return in_shape
    if kind == "flatten":
        return (int(np.prod(in_shape)),)
    if kind == "maxpool2":
        if len(in_shape) != 3:
            raise CorruptModel(f"maxpool2 node {node.name!r} needs a HxWxC input, got {in_shape}")
        h, w, c = in_shape
        if h < 2 or w < 2:
            raise CorruptModel(f"maxpool2 node {node.name!r}: input {in_shape} too small")
        return (h // 2, w // 2, c)
    if kind == "softmax":
        if len(in_shape) != 1:
            raise CorruptModel(f"softmax node {node.name!r} needs a flat input, got {in_shape}")
        return in_shape
    raise CorruptModel(f"unknown node kind {kind!r}")


@dataclass(frozen=True)
class ModelState:
    """One configuration of a model: graph, parameters, training metadata."""

    state_id: str
    graph: GraphDef
    parameters: dict  # node name -> {"weights": ndarray, "bias": ndarray}
    hyperparams: dict  # learning_rate, epochs, batch_size, seed
    lineage: Optional[dict] = None  # {"parent": state_id, "transition": transition_id}
    step: int = 0

    def validate(self) -> None:
        self.graph.validate()
        in_shape = self.graph.input_shape
        shape = in_shape
        for node in self.graph.nodes:
            if node.trainable:
                if node.name not in self.parameters:
                    raise CorruptModel(f"missing parameters for node {node.name!r}")
                w = self.parameters[node.name]["weights"]
                b = self.parameters[node.name]["bias"]
                ws, bs = _param_shapes(node, shape)
                if tuple(w.shape) != ws or tuple(b.shape) != bs:
                    raise CorruptModel(
                        f"parameter shape mismatch on {node.name!r}: "
                        f"got {tuple(w.shape)}/{tuple(b.shape)}, want {ws}/{bs}"
                    )
            shape = _infer_shape(node, shape, self.graph.num_classes)

    def with_id(self, state_id: str) -> "ModelState":
        return replace(self, state_id=state_id)


def _param_shapes(node: NodeDef, in_shape: tuple) -> tuple:
    if node.kind == "dense":
        return (in_shape[0], node.params["units"]), (node.params["units"],)
    if node.kind == "conv2d":
        k = node.params["kernel_size"]
        f = node.params["filters"]
        return (k, k, in_shape[2], f), (f,)
    raise ValueError(f"node {node.name!r} has no parameters")


def he_uniform_init(graph: GraphDef, seed: int) -> dict:
    """He-uniform weights, zero biases, deterministic from the seed."""
    rng = np.random.default_rng(seed)
    params = {}
    shape = graph.input_shape
    for node in graph.nodes:
        if node.trainable:
            ws, bs = _param_shapes(node, shape)
            if node.kind == "dense":
                fan_in = ws[0]
            else:
                fan_in = ws[0] * ws[1] * ws[2]
            limit = math.sqrt(6.0 / fan_in)
            params[node.name] = {
                "weights": rng.uniform(-limit, limit, size=ws),
                "bias": np.zeros(bs),
            }
        shape = _infer_shape(node, shape, graph.num_classes)
    return params


def new_state(graph: GraphDef, hyperparams: dict, state_id: str = "") -> ModelState:
    graph.validate()
    hp = {"learning_rate": 0.1, "epochs": 10, "batch_size": 16, "seed": 0}
    hp.update(hyperparams or {})
    state = ModelState(
        state_id=state_id,
        graph=graph,
        parameters=he_uniform_init(graph, int(hp["seed"])),
        hyperparams=hp,
    )
    state.validate()
    return state


# ---------------------------------------------------------------------------
# Forward / backward


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def forward(state: ModelState, x: np.ndarray) -> tuple:
    """Evaluate the chain on one sample.

    Returns (output vector, cache) where the cache maps every node name to
    its activation; the input node's activation is the sample itself.
    """
    x = np.asarray(x, dtype=np.float64)
    if tuple(x.shape) != state.graph.input_shape:
        raise InvalidInput(
            f"input shape {tuple(x.shape)} != graph input shape {state.graph.input_shape}"
        )
    cache = {}
    a = x
    for node in state.graph.nodes:
        kind = node.kind
        if kind == "input":
            pass
        elif kind == "dense":
            p = state.parameters[node.name]
            a = a @ p["weights"] + p["bias"]
        elif kind == "conv2d":
            p = state.parameters[node.name]
            a = _conv2d(a, p["weights"], p["bias"])
        elif kind == "relu":
            a = np.maximum(a, 0.0)
        elif kind == "flatten":
            a = a.reshape(-1)
        elif kind == "maxpool2":
            a = _maxpool2(a)
        elif kind == "softmax":
            a = _softmax(a)
        cache[node.name] = a
    return cache[state.graph.nodes[-1].name], cache


def pre_softmax_scores(state: ModelState, x: np.ndarray, cache: Optional[dict] = None) -> np.ndarray:
    """Scores feeding the softmax node, or the raw output if there is none."""
    if cache is None:
        _, cache = forward(state, x)
    nodes = state.graph.nodes
    if nodes[-1].kind == "softmax":
        return cache[nodes[-2].name]
    return cache[nodes[-1].name]


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = w.shape[0]
    ho = x.shape[0] - k + 1
    wo = x.shape[1] - k + 1
    out = np.tile(b, (ho, wo, 1))
    for a_ in range(k):
        for b_ in range(k):
            # window [ho, wo, c] @ [c, f]
            out += x[a_ : a_ + ho, b_ : b_ + wo, :] @ w[a_, b_]
    return out


def _maxpool2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xr = x[: 2 * ho, : 2 * wo, :].reshape(ho, 2, wo, 2, c)
    return xr.max(axis=(1, 3))


def _maxpool2_mask(x: np.ndarray) -> np.ndarray:
    """Routing mask: 1 on the (first) max element of each 2x2 window."""
    h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xr = x[: 2 * ho, : 2 * wo, :].reshape(ho, 2, wo, 2, c).transpose(0, 2, 4, 1, 3).reshape(ho, wo, c, 4)
    idx = np.argmax(xr, axis=-1)
    mask4 = np.zeros_like(xr)
    np.put_along_axis(mask4, idx[..., None], 1.0, axis=-1)
    mask = np.zeros_like(x)
    mask[: 2 * ho, : 2 * wo, :] = (
        mask4.reshape(ho, wo, c, 2, 2).transpose(0, 3, 1, 4, 2).reshape(2 * ho, 2 * wo, c)
    )
    return mask


@dataclass
class Gradients:
    input: np.ndarray
    params: dict  # node name -> {"weights": ndarray, "bias": ndarray}


def backprop(state: ModelState, x: np.ndarray, dscores: np.ndarray, cache: Optional[dict] = None) -> Gradients:
    """Reverse-mode pass seeded with a gradient w.r.t. the pre-softmax scores."""
    if cache is None:
        _, cache = forward(state, x)
    nodes = state.graph.nodes
    if nodes[-1].kind == "softmax":
        nodes = nodes[:-1]
    param_grads = {}
    grad = np.asarray(dscores, dtype=np.float64)
    for i in range(len(nodes) - 1, 0, -1):
        node = nodes[i]
        a_in = cache[nodes[i - 1].name]
        kind = node.kind
        if kind == "dense":
            p = state.parameters[node.name]
            param_grads[node.name] = {"weights": np.outer(a_in, grad), "bias": grad.copy()}
            grad = grad @ p["weights"].T
        elif kind == "conv2d":
            p = state.parameters[node.name]
            w = p["weights"]
            k = w.shape[0]
            ho, wo, _ = grad.shape
            dw = np.zeros_like(w)
            dx = np.zeros_like(a_in)
            for a_ in range(k):
                for b_ in range(k):
                    win = a_in[a_ : a_ + ho, b_ : b_ + wo, :]
                    dw[a_, b_] = np.einsum("ijc,ijf->cf", win, grad)
                    dx[a_ : a_ + ho, b_ : b_ + wo, :] += grad @ w[a_, b_].T
            param_grads[node.name] = {"weights": dw, "bias": grad.sum(axis=(0, 1))}
            grad = dx
        elif kind == "relu":
            grad = grad * (a_in > 0)
        elif kind == "flatten":
            grad = grad.reshape(a_in.shape)
        elif kind == "maxpool2":
            mask = _maxpool2_mask(a_in)
            h, w_, c = a_in.shape
            ho, wo = h // 2, w_ // 2
            up = np.zeros_like(a_in)
            up[: 2 * ho, : 2 * wo, :] = np.repeat(np.repeat(grad, 2, axis=0), 2, axis=1)
            grad = up * mask
    return Gradients(input=grad, params=param_grads)


def backward(state: ModelState, x: np.ndarray, target: int, cache: Optional[dict] = None) -> Gradients:
    """Gradient of the pre-softmax score of ``target`` w.r.t. input and parameters."""
    if not 0 <= target < state.graph.num_classes:
        raise InvalidInput(f"target {target} out of range for {state.graph.num_classes} classes")
    if cache is None:
        _, cache = forward(state, x)
    scores = pre_softmax_scores(state, x, cache)
    seed = np.zeros_like(scores)
    seed[target] = 1.0
    return backprop(state, x, seed, cache)


# ---------------------------------------------------------------------------
# Serialization ("*.emodel.json")


def _tensor_to_json(t: np.ndarray) -> dict:
    return {"shape": list(t.shape), "data": [float(v) for v in np.asarray(t, dtype=np.float64).ravel()]}


def _tensor_from_json(obj: dict) -> np.ndarray:
    shape = tuple(int(s) for s in obj["shape"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.size != int(np.prod(shape)):
        raise CorruptModel("tensor data length does not match shape")
    if not np.all(np.isfinite(data)):
        raise CorruptModel("tensor contains non-finite values")
    return data.reshape(shape)


def state_to_dict(state: ModelState) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "state_id": state.state_id,
        "step": state.step,
        "graph": {
            "nodes": [{"name": n.name, "kind": n.kind, "params": dict(n.params)} for n in state.graph.nodes],
            "input_shape": list(state.graph.input_shape),
            "num_classes": state.graph.num_classes,
            "version": state.graph.version,
        },
        "hyperparams": dict(state.hyperparams),
        "lineage": dict(state.lineage) if state.lineage else None,
        "parameters": {
            name: {"weights": _tensor_to_json(p["weights"]), "bias": _tensor_to_json(p["bias"])}
            for name, p in state.parameters.items()
        },
    }


def state_from_dict(obj: dict) -> ModelState:
    version = obj.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedFormat(f"unsupported model format version {version!r}")
    try:
        g = obj["graph"]
        graph = GraphDef(
            nodes=tuple(NodeDef(n["name"], n["kind"], dict(n.get("params", {}))) for n in g["nodes"]),
            input_shape=tuple(g["input_shape"]),
            num_classes=int(g["num_classes"]),
            version=int(g.get("version", MODEL_FORMAT_VERSION)),
        )
        params = {
            name: {"weights": _tensor_from_json(p["weights"]), "bias": _tensor_from_json(p["bias"])}
            for name, p in obj.get("parameters", {}).items()
        }
        state = ModelState(
            state_id=obj.get("state_id", ""),
            graph=graph,
            parameters=params,
            hyperparams=dict(obj.get("hyperparams", {})),
            lineage=dict(obj["lineage"]) if obj.get("lineage") else None,
            step=int(obj.get("step", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model file: {exc}") from exc
    state.validate()
    return state


def save_model(state: ModelState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_dict(state), fh)


def load_model(path) -> ModelState:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptModel(f"not valid JSON: {exc}") from exc
    return state_from_dict(obj)
