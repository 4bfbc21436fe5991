"""explainlab: an interactive explainable-ML workbench.

Understanding, diagnosis and refinement of small feed-forward models via a
toolbox of explainers, with run logging, provenance tracking and report
export. Served over HTTP for the browser UI or driven headless via the CLI.
"""

from .graph import (
    GraphDef,
    ModelState,
    NodeDef,
    backward,
    forward,
    load_model,
    new_state,
    save_model,
)

__all__ = [
    "GraphDef",
    "NodeDef",
    "ModelState",
    "forward",
    "backward",
    "new_state",
    "save_model",
    "load_model",
]

__version__ = "0.1.0"
