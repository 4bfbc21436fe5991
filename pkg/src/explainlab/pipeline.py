"""Pipeline spine: datasets, SGD training, metrics, state registry and
transition functions.

A workspace directory persists everything the pipeline produces:

    workspace/states/<id>.emodel.json   registered model states
    workspace/lineage.json              parent/transition pointers
    workspace/runs/<run_id>/...         training run logs and checkpoints
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidInput, InvalidPatch, NotFound
from .graph import (
    CorruptModel,
    GraphDef,
    ModelState,
    NodeDef,
    _infer_shape,
    _param_shapes,
    _softmax,
    backprop,
    forward,
    he_uniform_init,
    load_model,
    new_state,
    pre_softmax_scores,
    save_model,
)
from .runlog import RunLog, graph_fingerprint

# ---------------------------------------------------------------------------
# Datasets


@dataclass
class Dataset:
    dataset_id: str
    train: list  # (ndarray, int) pairs
    test: list
    input_shape: tuple
    num_classes: int

    def split(self, name: str) -> list:
        if name == "train":
            return self.train
        if name == "test":
            return self.test
        raise NotFound(f"unknown split {name!r}")


def bars8(seed: int = 7, n_train: int = 400, n_test: int = 100) -> Dataset:
    """Desk-scale 8x8 grayscale set: a full vertical bar (class 0) or
    horizontal bar (class 1) at a random position, intensity 1 plus a little
    Gaussian noise on the bar pixels. Attribution ground truth is the bar."""
    rng = np.random.default_rng(seed)

    def make(n):
        samples = []
        for _ in range(n):
            x = np.zeros((8, 8, 1))
            label = int(rng.integers(0, 2))
            pos = int(rng.integers(0, 8))
            noise = rng.normal(0.0, 0.05, size=8)
            if label == 0:
                x[:, pos, 0] = 1.0 + noise
            else:
                x[pos, :, 0] = 1.0 + noise
            samples.append((x, label))
        return samples

    return Dataset(f"bars8-{seed}", make(n_train), make(n_test), (8, 8, 1), 2)


def load_idx(images_path, labels_path, dataset_id: str = "idx", test_fraction: float = 0.2) -> Dataset:
    """Load an IDX image/label file pair (the MNIST container format)."""
    images = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise InvalidInput(f"{len(images)} images but {len(labels)} labels")
    samples = [(img[..., None].astype(np.float64) / 255.0, int(lab)) for img, lab in zip(images, labels)]
    n_test = int(len(samples) * test_fraction)
    train = samples[: len(samples) - n_test]
    test = samples[len(samples) - n_test :]
    num_classes = int(max(labels)) + 1
    return Dataset(dataset_id, train, test, train[0][0].shape, num_classes)


def _read_idx_images(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != 0x00000803:
        raise InvalidInput(f"bad IDX image magic {magic:#010x}")
    data = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if data.size != n * rows * cols:
        raise InvalidInput("IDX image payload truncated")
    return data.reshape(n, rows, cols)


def _read_idx_labels(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, n = struct.unpack(">II", raw[:8])
    if magic != 0x00000801:
        raise InvalidInput(f"bad IDX label magic {magic:#010x}")
    data = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if data.size != n:
        raise InvalidInput("IDX label payload truncated")
    return data


# ---------------------------------------------------------------------------
# Reference architectures


def build_mlp(input_shape=(8, 8, 1), hidden: int = 16, num_classes: int = 2) -> GraphDef:
    return GraphDef(
        nodes=(
            NodeDef("input", "input"),
            NodeDef("flatten", "flatten"),
            NodeDef("dense1", "dense", {"units": hidden}),
            NodeDef("relu1", "relu"),
            NodeDef("dense2", "dense", {"units": num_classes}),
            NodeDef("softmax", "softmax"),
        ),
        input_shape=input_shape,
        num_classes=num_classes,
    )


def build_cnn(input_shape=(8, 8, 1), filters: int = 8, kernel_size: int = 3, hidden: int = 16, num_classes: int = 2) -> GraphDef:
    return GraphDef(
        nodes=(
            NodeDef("input", "input"),
            NodeDef("conv1", "conv2d", {"filters": filters, "kernel_size": kernel_size}),
            NodeDef("relu_conv1", "relu"),
            NodeDef("pool1", "maxpool2"),
            NodeDef("flatten", "flatten"),
            NodeDef("dense1", "dense", {"units": hidden}),
            NodeDef("relu1", "relu"),
            NodeDef("dense2", "dense", {"units": num_classes}),
            NodeDef("softmax", "softmax"),
        ),
        input_shape=input_shape,
        num_classes=num_classes,
    )


ARCHITECTURES = {"mlp": build_mlp, "cnn": build_cnn}


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class MetricsSnapshot:
    state_id: str
    split: str
    accuracy: float
    macro_precision: float
    macro_recall: float
    mean_loss: float
    confusion: list  # num_classes x num_classes counts, rows = true class

    def to_dict(self) -> dict:
        return {
            "state_id": self.state_id,
            "split": self.split,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "mean_loss": self.mean_loss,
            "confusion": self.confusion,
        }


def evaluate(state: ModelState, samples: list, split: str = "test") -> MetricsSnapshot:
    if not samples:
        raise InvalidInput("cannot evaluate on an empty split")
    k = state.graph.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    losses = []
    for x, label in samples:
        scores = pre_softmax_scores(state, x)
        probs = _softmax(scores)
        pred = int(np.argmax(probs))
        confusion[label, pred] += 1
        losses.append(-float(np.log(max(probs[label], 1e-300))))
    return MetricsSnapshot(
        state_id=state.state_id,
        split=split,
        accuracy=float(np.trace(confusion) / confusion.sum()),
        macro_precision=_macro(confusion, axis=0),
        macro_recall=_macro(confusion, axis=1),
        mean_loss=float(np.mean(losses)),
        confusion=confusion.tolist(),
    )


def _macro(confusion: np.ndarray, axis: int) -> float:
    diag = np.diag(confusion).astype(np.float64)
    totals = confusion.sum(axis=axis).astype(np.float64)
    per_class = np.divide(diag, totals, out=np.zeros_like(diag), where=totals > 0)
    return float(per_class.mean())


# ---------------------------------------------------------------------------
# Training


def sgd_train(
    state: ModelState,
    dataset: Dataset,
    run: RunLog,
    epochs: Optional[int] = None,
    checkpoint_every: int = 1,
) -> ModelState:
    """Plain minibatch SGD on softmax cross-entropy.

    Shuffles per epoch from the state's seed, logs aggregated parameter
    summaries plus the epoch's per-sample losses each epoch, and writes a
    checkpoint every `checkpoint_every` epochs. Deterministic given the seed.
    """
    if not dataset.train:
        raise InvalidInput("dataset has no training samples")
    hp = state.hyperparams
    lr = float(hp["learning_rate"])
    batch_size = int(hp["batch_size"])
    n_epochs = int(hp["epochs"]) if epochs is None else int(epochs)
    rng = np.random.default_rng(int(hp["seed"]))

    params = {name: {k: v.copy() for k, v in p.items()} for name, p in state.parameters.items()}
    current = replace(state, parameters=params)
    run.save_checkpoint(current, step=current.step)

    order = np.arange(len(dataset.train))
    for epoch in range(1, n_epochs + 1):
        rng.shuffle(order)
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            grad_acc = None
            for idx in batch:
                x, label = dataset.train[idx]
                _, cache = forward(current, x)
                scores = pre_softmax_scores(current, x, cache)
                probs = _softmax(scores)
                epoch_losses.append(-float(np.log(max(probs[label], 1e-300))))
                dscores = probs.copy()
                dscores[label] -= 1.0
                grads = backprop(current, x, dscores, cache)
                if grad_acc is None:
                    grad_acc = grads.params
                else:
                    for name, g in grads.params.items():
                        grad_acc[name]["weights"] += g["weights"]
                        grad_acc[name]["bias"] += g["bias"]
            scale = lr / len(batch)
            for name, g in grad_acc.items():
                params[name]["weights"] -= scale * g["weights"]
                params[name]["bias"] -= scale * g["bias"]
        step = current.step + 1
        current = replace(current, step=step)
        if not all(np.isfinite(l) for l in epoch_losses):
            # Divergence is a flagged run, not a crash.
            meta_path = run.dir / "meta.json"
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            meta["diverged_at_step"] = step
            meta_path.write_text(json.dumps(meta), encoding="utf-8")
            break
        run.log_step(current, step, extras={"loss": np.asarray(epoch_losses)})
        if checkpoint_every and (epoch % checkpoint_every == 0 or epoch == n_epochs):
            run.save_checkpoint(current, step=step)
    return current


# ---------------------------------------------------------------------------
# Transitions


@dataclass
class TransitionFunction:
    transition_id: str
    kind: str  # hyperparam_change | architecture_patch | retrain
    payload: dict = field(default_factory=dict)
    provenance: str = "manual"

    def to_dict(self) -> dict:
        return {
            "transition_id": self.transition_id,
            "kind": self.kind,
            "payload": self.payload,
            "provenance": self.provenance,
        }


def _patched_graph(graph: GraphDef, after: str, inserts: list) -> GraphDef:
    if graph.find(after) is None:
        raise InvalidPatch(f"patch target node {after!r} does not exist")
    existing = {n.name for n in graph.nodes}
    new_nodes = []
    counter = 0
    for spec in inserts:
        kind = spec["kind"]
        counter += 1
        base = f"{kind}_p"
        name = base + str(counter)
        while name in existing:
            counter += 1
            name = base + str(counter)
        existing.add(name)
        params = {k: v for k, v in spec.items() if k != "kind"}
        new_nodes.append(NodeDef(name, kind, params))
    nodes = []
    for node in graph.nodes:
        nodes.append(node)
        if node.name == after:
            nodes.extend(new_nodes)
    patched = GraphDef(nodes=tuple(nodes), input_shape=graph.input_shape, num_classes=graph.num_classes)
    try:
        patched.validate()
    except CorruptModel as exc:
        raise InvalidPatch(f"patch produces an invalid graph: {exc}") from exc
    return patched


def apply_patch(state: ModelState, after: str, inserts: list, seed: Optional[int] = None) -> ModelState:
    """Insert layers after a node. New layers get fresh seeded parameters;
    downstream layers whose parameter shapes changed are re-initialized,
    everything else keeps its trained values."""
    graph = _patched_graph(state.graph, after, inserts)
    init_seed = int(state.hyperparams.get("seed", 0)) if seed is None else int(seed)
    fresh = he_uniform_init(graph, init_seed)
    params = {}
    shape = graph.input_shape
    for node in graph.nodes:
        if node.trainable:
            ws, bs = _param_shapes(node, shape)
            old = state.parameters.get(node.name)
            if old is not None and tuple(old["weights"].shape) == ws and tuple(old["bias"].shape) == bs:
                params[node.name] = {"weights": old["weights"].copy(), "bias": old["bias"].copy()}
            else:
                params[node.name] = fresh[node.name]
        shape = _infer_shape(node, shape, graph.num_classes)
    return replace(state, graph=graph, parameters=params, step=0)


# ---------------------------------------------------------------------------
# Workspace / state registry


class Workspace:
    """State registry plus run storage rooted at one directory.

    Registered states are immutable; every transition yields a new state
    with lineage pointing at its parent. Lineage forms a forest.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.states_dir = self.root / "states"
        self.runs_dir = self.root / "runs"
        self.states_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.lineage_path = self.root / "lineage.json"
        self._datasets = {}

    # -- datasets ----------------------------------------------------------

    def get_dataset(self, dataset_id: str) -> Dataset:
        if dataset_id in self._datasets:
            return self._datasets[dataset_id]
        if dataset_id == "bars8" or dataset_id.startswith("bars8-"):
            seed = int(dataset_id.split("-", 1)[1]) if "-" in dataset_id else 7
            ds = bars8(seed)
            self._datasets[dataset_id] = ds
            return ds
        raise NotFound(f"unknown dataset {dataset_id!r}")

    def add_dataset(self, dataset: Dataset) -> None:
        self._datasets[dataset.dataset_id] = dataset

    # -- registry ----------------------------------------------------------

    def _lineage(self) -> dict:
        if self.lineage_path.exists():
            return json.loads(self.lineage_path.read_text(encoding="utf-8"))
        return {}

    def _write_lineage(self, lineage: dict) -> None:
        self.lineage_path.write_text(json.dumps(lineage, indent=1, sort_keys=True), encoding="utf-8")

    def _next_id(self) -> str:
        taken = {p.stem.replace(".emodel", "") for p in self.states_dir.glob("*.emodel.json")}
        i = 1
        while f"s{i:04d}" in taken:
            i += 1
        return f"s{i:04d}"

    def register_state(self, state: ModelState) -> str:
        state.validate()
        state_id = state.state_id or self._next_id()
        path = self.states_dir / f"{state_id}.emodel.json"
        if path.exists():
            raise InvalidInput(f"state id {state_id!r} already registered")
        state = state.with_id(state_id)
        lineage = self._lineage()
        if state.lineage:
            parent = state.lineage.get("parent")
            if parent and not (self.states_dir / f"{parent}.emodel.json").exists():
                raise NotFound(f"lineage parent {parent!r} not registered")
        lineage[state_id] = dict(state.lineage) if state.lineage else None
        self._assert_forest(lineage)
        save_model(state, path)
        self._write_lineage(lineage)
        return state_id

    @staticmethod
    def _assert_forest(lineage: dict) -> None:
        for start in lineage:
            seen = set()
            node = start
            while node is not None:
                if node in seen:
                    raise InvalidInput(f"lineage cycle through {node!r}")
                seen.add(node)
                entry = lineage.get(node)
                node = entry.get("parent") if entry else None

    def get_state(self, state_id: str) -> ModelState:
        path = self.states_dir / f"{state_id}.emodel.json"
        if not path.exists():
            raise NotFound(f"state {state_id!r} not registered")
        return load_model(path)

    def list_states(self) -> list:
        """All registered states with lineage, sorted by id."""
        lineage = self._lineage()
        out = []
        for path in sorted(self.states_dir.glob("*.emodel.json")):
            state_id = path.name[: -len(".emodel.json")]
            entry = lineage.get(state_id)
            out.append(
                {
                    "state_id": state_id,
                    "parent": entry.get("parent") if entry else None,
                    "transition": entry.get("transition") if entry else None,
                }
            )
        return out

    # -- training ----------------------------------------------------------

    def train(self, state_id: str, dataset_id: str, run_id: str, epochs: Optional[int] = None) -> tuple:
        """Train a registered state; registers and returns the final state."""
        state = self.get_state(state_id)
        dataset = self.get_dataset(dataset_id)
        run = RunLog(
            self.runs_dir,
            run_id,
            create=True,
            meta={
                "dataset_id": dataset_id,
                "graph_fingerprint": graph_fingerprint(state),
                "source_state": state_id,
            },
        )
        trained = sgd_train(state, dataset, run, epochs=epochs)
        transition = TransitionFunction(
            transition_id=f"retrain-{run_id}", kind="retrain",
            payload={"epochs": epochs if epochs is not None else state.hyperparams["epochs"],
                     "seed": state.hyperparams["seed"], "dataset_id": dataset_id},
        )
        new_id = self.register_state(
            replace(trained, state_id="", lineage={"parent": state_id, "transition": transition.transition_id})
        )
        return new_id, run

    def get_run(self, run_id: str) -> RunLog:
        return RunLog(self.runs_dir, run_id)

    def list_runs(self) -> list:
        from .runlog import list_runs

        return list_runs(self.runs_dir)

    # -- transitions -------------------------------------------------------

    def apply_transition(self, state_id: str, t: TransitionFunction) -> str:
        state = self.get_state(state_id)
        if t.kind == "hyperparam_change":
            field_name = t.payload.get("field")
            if field_name not in state.hyperparams:
                raise InvalidPatch(f"unknown hyperparameter {field_name!r}")
            hp = dict(state.hyperparams)
            hp[field_name] = t.payload["value"]
            new = replace(state, hyperparams=hp)
        elif t.kind == "architecture_patch":
            new = apply_patch(state, t.payload.get("after", "input"), t.payload.get("insert", []),
                              seed=t.payload.get("seed"))
        elif t.kind == "retrain":
            dataset_id = t.payload.get("dataset_id", "bars8")
            hp = dict(state.hyperparams)
            if "epochs" in t.payload:
                hp["epochs"] = int(t.payload["epochs"])
            if "seed" in t.payload:
                hp["seed"] = int(t.payload["seed"])
            staged = replace(state, hyperparams=hp, state_id="")
            staged_id = self.register_state(
                replace(staged, lineage={"parent": state_id, "transition": t.transition_id})
            )
            run_id = t.payload.get("run_id", f"run-{staged_id}")
            new_id, _ = self.train(staged_id, dataset_id, run_id)
            return new_id
        else:
            raise InvalidPatch(f"unknown transition kind {t.kind!r}")
        return self.register_state(
            replace(new, state_id="", lineage={"parent": state_id, "transition": t.transition_id})
        )

    # -- comparison --------------------------------------------------------

    def compare_states(self, a_id: str, b_id: str, dataset_id: str, split: str = "test",
                       sample: Optional[np.ndarray] = None, target: int = 0) -> dict:
        """Point-wise comparison report: metric deltas (b - a), per-node
        parameter-stat deltas, and optionally an attribution difference map."""
        a = self.get_state(a_id)
        b = self.get_state(b_id)
        samples = self.get_dataset(dataset_id).split(split)
        ma = evaluate(a, samples, split)
        mb = evaluate(b, samples, split)
        report = {
            "a": a_id,
            "b": b_id,
            "split": split,
            "metric_deltas": {
                "accuracy": mb.accuracy - ma.accuracy,
                "macro_precision": mb.macro_precision - ma.macro_precision,
                "macro_recall": mb.macro_recall - ma.macro_recall,
                "mean_loss": mb.mean_loss - ma.mean_loss,
            },
            "metrics_a": ma.to_dict(),
            "metrics_b": mb.to_dict(),
            "parameter_deltas": {},
        }
        for name in sorted(set(a.parameters) & set(b.parameters)):
            pa, pb = a.parameters[name], b.parameters[name]
            if pa["weights"].shape != pb["weights"].shape:
                continue
            report["parameter_deltas"][name] = {
                "weights_mean": float(pb["weights"].mean() - pa["weights"].mean()),
                "weights_std": float(pb["weights"].std() - pa["weights"].std()),
                "weights_l2": float(np.linalg.norm(pb["weights"]) - np.linalg.norm(pa["weights"])),
            }
        if sample is not None and a.graph.input_shape == b.graph.input_shape:
            from .attribution import saliency

            sa = saliency(a, sample, target)
            sb = saliency(b, sample, target)
            report["attribution_diff"] = {
                "explainer_id": "saliency",
                "target": target,
                "values": [float(v) for v in (sb.values - sa.values).ravel()],
                "shape": list(sa.values.shape),
            }
        return report
