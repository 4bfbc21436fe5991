"""High-level workbench facade.

One object wrapping the state registry, run logs, explainer registry,
recommendation engine and provenance store, rooted at a workspace
directory. The HTTP service and the CLI both drive this class, so the two
paths cannot diverge.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from . import advisor
from .attribution import ATTRIBUTION_DESCRIPTORS, AttributionMap, run_attribution
from .errors import ExplainLabError, InvalidInput, NotFound
from .graph import ModelState, forward, new_state
from .introspection import (
    INTROSPECTION_DESCRIPTORS,
    LOOKUP_DESCRIPTOR,
    IntrospectionResult,
    dead_weight,
    lookup_doc,
    run_introspection,
    saturated_weight,
)
from .pipeline import ARCHITECTURES, Workspace
from .provenance import ProvenanceStore
from .runlog import RunLog


def all_descriptors() -> tuple:
    return ATTRIBUTION_DESCRIPTORS + INTROSPECTION_DESCRIPTORS + (LOOKUP_DESCRIPTOR,)


class Workbench:
    def __init__(self, root, config_path=None):
        self.root = Path(root)
        self.workspace = Workspace(self.root)
        self.provenance = ProvenanceStore(self.root)
        config = Path(config_path) if config_path else self.root / "config.txt"
        self.thresholds = advisor.load_thresholds(config)

    # -- model / data helpers -----------------------------------------------

    def build_state(self, arch: str, dataset_id: str, hyperparams: dict) -> ModelState:
        if arch not in ARCHITECTURES:
            raise InvalidInput(f"unknown architecture {arch!r}; choose from {sorted(ARCHITECTURES)}")
        dataset = self.workspace.get_dataset(dataset_id)
        graph = ARCHITECTURES[arch](input_shape=dataset.input_shape, num_classes=dataset.num_classes)
        return new_state(graph, hyperparams)

    def get_sample(self, dataset_id: str, split: str, index: int) -> tuple:
        samples = self.workspace.get_dataset(dataset_id).split(split)
        if not 0 <= index < len(samples):
            raise NotFound(f"sample {index} out of range for split {split!r} ({len(samples)} samples)")
        return samples[index]

    def demo_train(self, dataset_id: str = "bars8", arch: str = "mlp", seed: int = 7,
                   epochs: int = 30, learning_rate: float = 0.1, batch_size: int = 16,
                   run_id: Optional[str] = None) -> dict:
        """Register a fresh model, train it, return the ids involved."""
        state = self.build_state(arch, dataset_id, {
            "seed": seed, "epochs": epochs, "learning_rate": learning_rate, "batch_size": batch_size,
        })
        initial_id = self.workspace.register_state(state)
        run_id = run_id or f"run-{initial_id}"
        final_id, run = self.workspace.train(initial_id, dataset_id, run_id)
        return {"initial_state": initial_id, "state_id": final_id, "run_id": run.run_id}

    # -- explainers -----------------------------------------------------------

    def explain(self, explainer_id: str, state_id: str, dataset_id: str = "bars8",
                split: str = "test", sample: int = 0, target: Optional[int] = None,
                params: Optional[dict] = None) -> AttributionMap:
        state = self.workspace.get_state(state_id)
        x, label = self.get_sample(dataset_id, split, sample)
        if target is None:
            probs, _ = forward(state, x)
            target = int(np.argmax(probs))
        amap = run_attribution(explainer_id, state, x, int(target), **(params or {}))
        amap.sample_id = f"{dataset_id}/{split}/{sample}"
        amap.meta.setdefault("label", label)
        return amap

    def scan(self, explainer_id: str, run_id: str, node: str,
             params: Optional[dict] = None) -> IntrospectionResult:
        run = self.workspace.get_run(run_id)
        return run_introspection(explainer_id, run, node, **(params or {}))

    def doc(self, key: str):
        return lookup_doc(key)

    # -- metrics / recommendations ---------------------------------------------

    def metrics(self, state_id: str, dataset_id: str = "bars8", split: str = "test"):
        from .pipeline import evaluate

        state = self.workspace.get_state(state_id)
        samples = self.workspace.get_dataset(dataset_id).split(split)
        return evaluate(state, samples, split)

    def recommendations(self, state_id: str, run_id: Optional[str] = None,
                        dataset_id: str = "bars8") -> list:
        """Evaluate the rule set with whatever evidence is available."""
        state = self.workspace.get_state(state_id)
        metrics = None
        try:
            dataset = self.workspace.get_dataset(dataset_id)
            metrics = {
                "train": self.metrics(state_id, dataset_id, "train"),
                "test": self.metrics(state_id, dataset_id, "test"),
            } if dataset.train and dataset.test else None
        except NotFound:
            pass
        introspection = {}
        loss_series = None
        if run_id is not None:
            run = self.workspace.get_run(run_id)
            try:
                loss_series = run.read_series("loss", "mean")
            except NotFound:
                pass
            for node in state.graph.nodes:
                if not node.trainable:
                    continue
                key = f"{node.name}/weights"
                try:
                    introspection[key] = dead_weight(run, key)
                    introspection[key + "#sat"] = saturated_weight(run, key)
                except ExplainLabError:
                    continue
        return advisor.recommend(state, metrics=metrics, introspection=introspection,
                                 loss_series=loss_series, thresholds=self.thresholds)

    # -- scenario helpers --------------------------------------------------------

    def find_misclassified(self, state_id: str, dataset_id: str = "bars8",
                           split: str = "test") -> Optional[int]:
        state = self.workspace.get_state(state_id)
        for i, (x, label) in enumerate(self.workspace.get_dataset(dataset_id).split(split)):
            probs, _ = forward(state, x)
            if int(np.argmax(probs)) != label:
                return i
        return None

    def pick_diagnosis_sample(self, state_id: str, dataset_id: str = "bars8",
                              split: str = "test") -> tuple:
        """Sample worth diagnosing: the first misclassified one, else the
        least-confident one. Returns (index, is_misclassified)."""
        mis = self.find_misclassified(state_id, dataset_id, split)
        if mis is not None:
            return mis, True
        state = self.workspace.get_state(state_id)
        samples = self.workspace.get_dataset(dataset_id).split(split)
        confidences = []
        for x, label in samples:
            probs, _ = forward(state, x)
            confidences.append(float(probs[label]))
        return int(np.argmin(confidences)), False
