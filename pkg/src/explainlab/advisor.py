"""Heuristic refinement recommendations.

Five rules map (graph architecture, metrics, introspection findings) to an
ordered list of recommendations, some carrying an executable transition.
Rules degrade gracefully: missing metrics or logs simply skip the rules
that need them. Thresholds are overridable via a key=value config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .pipeline import TransitionFunction

SEVERITY_ORDER = {"strong": 0, "suggested": 1, "info": 2}

DEFAULT_THRESHOLDS = {
    "dead_fraction": 0.2,
    "saturated_fraction": 0.2,
    "overfit_gap": 0.1,
    "plateau_epochs": 3,
    "lr_factor": 0.1,
    "conv_filters": 8,
    "conv_kernel": 3,
}


@dataclass
class Recommendation:
    rec_id: str
    rule_id: str
    title: str
    rationale: str
    references: list = field(default_factory=list)
    transition: Optional[TransitionFunction] = None
    severity: str = "info"

    def to_dict(self) -> dict:
        return {
            "rec_id": self.rec_id,
            "rule_id": self.rule_id,
            "title": self.title,
            "rationale": self.rationale,
            "references": self.references,
            "transition": self.transition.to_dict() if self.transition else None,
            "severity": self.severity,
        }


def load_thresholds(path) -> dict:
    """Read key=value overrides; unknown keys are ignored."""
    out = dict(DEFAULT_THRESHOLDS)
    path = Path(path)
    if not path.exists():
        return out
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            out[key] = type(DEFAULT_THRESHOLDS[key])(float(value))
    return out


def recommend(
    state,
    metrics: Optional[dict] = None,
    introspection: Optional[dict] = None,
    loss_series: Optional[list] = None,
    thresholds: Optional[dict] = None,
) -> list:
    """Ordered recommendations for one model state.

    metrics: optional {"train": MetricsSnapshot, "test": MetricsSnapshot}.
    introspection: optional {node: IntrospectionResult} from weight scans.
    loss_series: optional (step, mean loss) pairs from the training log.
    Ordering is deterministic: severity desc, then rule id asc.
    """
    th = dict(DEFAULT_THRESHOLDS)
    th.update(thresholds or {})
    recs = []
    kinds = state.graph.kinds()

    # R1: image-shaped input but no convolution anywhere.
    if len(state.graph.input_shape) >= 2 and "conv2d" not in kinds:
        f, k = int(th["conv_filters"]), int(th["conv_kernel"])
        recs.append(
            Recommendation(
                rec_id="R1-conv-block",
                rule_id="R1",
                title="Add a convolutional block",
                rationale=(
                    "The input has spatial structure but the model treats it as a flat "
                    "vector. A convolution + relu + pooling block in front of the dense "
                    "layers lets the model pick up local patterns (edges, bars, strokes) "
                    "with far fewer parameters, which usually improves both accuracy and "
                    "the plausibility of attribution maps."
                ),
                references=[
                    "LeCun et al.: Gradient-Based Learning Applied to Document Recognition, Proc. IEEE 1998",
                ],
                transition=TransitionFunction(
                    transition_id="t-R1-conv-block",
                    kind="architecture_patch",
                    payload={
                        "after": "input",
                        "insert": [
                            {"kind": "conv2d", "filters": f, "kernel_size": k},
                            {"kind": "relu"},
                            {"kind": "maxpool2"},
                        ],
                    },
                    provenance="R1-conv-block",
                ),
                severity="strong",
            )
        )

    # R2: a dense layer with a large dead-weight fraction.
    for node, result in (introspection or {}).items():
        if result.explainer_id != "dead_weight":
            continue
        if result.payload["fraction"] > th["dead_fraction"]:
            recs.append(
                Recommendation(
                    rec_id=f"R2-width-{node}",
                    rule_id="R2",
                    title=f"Reduce the width of {node.split('/')[0]}",
                    rationale=(
                        f"{result.payload['fraction']:.0%} of the weights in {node} sit near "
                        "zero and have stopped moving. Those units contribute nothing; a "
                        "narrower layer trains faster and generalizes at least as well."
                    ),
                    references=[
                        "Frankle, Carbin: The Lottery Ticket Hypothesis, ICLR 2019",
                    ],
                    severity="suggested",
                )
            )
            break

    # R3: training loss plateaued or rising.
    window = int(th["plateau_epochs"])
    if loss_series and len(loss_series) >= window:
        tail = [v for _, v in loss_series[-window:]]
        if all(tail[i + 1] >= tail[i] for i in range(len(tail) - 1)):
            current_lr = float(state.hyperparams.get("learning_rate", 0.1))
            new_lr = current_lr * th["lr_factor"]
            recs.append(
                Recommendation(
                    rec_id="R3-lower-lr",
                    rule_id="R3",
                    title="Lower the learning rate",
                    rationale=(
                        f"Training loss has not decreased over the last {window} logged "
                        "epochs. The optimizer is likely overshooting; shrinking the "
                        f"learning rate to {new_lr:g} lets it settle into the minimum."
                    ),
                    references=[
                        "Bengio: Practical Recommendations for Gradient-Based Training of Deep Architectures, 2012",
                    ],
                    transition=TransitionFunction(
                        transition_id="t-R3-lower-lr",
                        kind="hyperparam_change",
                        payload={"field": "learning_rate", "value": new_lr},
                        provenance="R3-lower-lr",
                    ),
                    severity="suggested",
                )
            )

    # R4: train/test accuracy gap.
    if metrics and "train" in metrics and "test" in metrics:
        gap = metrics["train"].accuracy - metrics["test"].accuracy
        if gap > th["overfit_gap"]:
            recs.append(
                Recommendation(
                    rec_id="R4-overfit",
                    rule_id="R4",
                    title="Counter overfitting: more data or a smaller model",
                    rationale=(
                        f"Train accuracy exceeds test accuracy by {gap:.2f}. The model is "
                        "memorizing the training split; add data, or shrink the model so "
                        "it has to generalize."
                    ),
                    references=[
                        "Goodfellow, Bengio, Courville: Deep Learning, MIT Press 2016, ch. 7",
                    ],
                    severity="suggested",
                )
            )

    # R5: saturated weights.
    for node, result in (introspection or {}).items():
        if result.explainer_id != "saturated_weight":
            continue
        if result.payload["fraction"] > th["saturated_fraction"]:
            current_lr = float(state.hyperparams.get("learning_rate", 0.1))
            recs.append(
                Recommendation(
                    rec_id=f"R5-saturated-{node}",
                    rule_id="R5",
                    title="Saturated weights: lower the learning rate, consider re-init",
                    rationale=(
                        f"{result.payload['fraction']:.0%} of the weights in {node} are "
                        "stuck at large magnitude. Early-training blow-up is the usual "
                        f"cause; a learning rate below {current_lr * th['lr_factor']:g} "
                        "or re-initializing the layer frees them."
                    ),
                    references=[
                        "Glorot, Bengio: Understanding the Difficulty of Training Deep Feedforward Neural Networks, AISTATS 2010",
                    ],
                    severity="info",
                )
            )
            break

    recs.sort(key=lambda r: (SEVERITY_ORDER[r.severity], r.rule_id))
    return recs
