"""Headless CLI driving the same Workbench facade as the HTTP service.

Exit codes: 0 success, 1 workbench error (NotFound, InvalidInput, ...),
2 usage error.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .errors import ExplainLabError
from .render import attribution_svg
from .workbench import Workbench

EXPLAINER_CHOICES = (
    "saliency", "gradient", "gradient_x_input", "integrated_gradients",
    "smoothgrad", "occlusion", "lime", "lrp_epsilon",
)
SCAN_CHOICES = ("minmax", "histo_trend", "dead_weight", "saturated_weight")


def workspace_option(func):
    @click.option(
        "--workspace", "-w", default=None,
        help="Workspace directory (fallback: $EXPLAINER_WORKSPACE, then ./workspace).",
    )
    @click.option("--config", default=None, help="Rule-threshold config file (key=value lines).")
    @functools.wraps(func)
    def wrapper(*args, workspace=None, config=None, **kwargs):
        root = workspace or os.environ.get("EXPLAINER_WORKSPACE") or "workspace"
        try:
            return func(*args, workbench=Workbench(root, config_path=config), **kwargs)
        except ExplainLabError as exc:
            click.echo(f"error [{exc.code}]: {exc.message}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """explainlab: explainable-ML workbench."""


@main.command("demo-train")
@click.option("--dataset", default="bars8", show_default=True)
@click.option("--arch", type=click.Choice(["mlp", "cnn"]), default="mlp", show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--lr", type=float, default=0.1, show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--run-id", default=None)
@workspace_option
def demo_train(workbench, dataset, arch, seed, epochs, lr, batch_size, run_id):
    """Build, register and train a model on a built-in dataset."""
    out = workbench.demo_train(dataset_id=dataset, arch=arch, seed=seed, epochs=epochs,
                               learning_rate=lr, batch_size=batch_size, run_id=run_id)
    click.echo(json.dumps(out))


@main.command("explain")
@click.option("--state", required=True)
@click.option("--explainer", type=click.Choice(EXPLAINER_CHOICES), required=True)
@click.option("--sample", type=int, default=0, show_default=True)
@click.option("--dataset", default="bars8", show_default=True)
@click.option("--split", default="test", show_default=True)
@click.option("--target", type=int, default=None, help="Class to explain (default: predicted).")
@click.option("--param", "params", multiple=True, help="Extra key=value explainer parameter.")
@click.option("--out", default=None, help="Write the heatmap SVG here.")
@click.option("--json", "as_json", is_flag=True, help="Print the AttributionMap JSON.")
@workspace_option
def explain(workbench, state, explainer, sample, dataset, split, target, params, out, as_json):
    """Run an attribution explainer on one sample."""
    kwargs = {}
    for p in params:
        if "=" not in p:
            raise click.UsageError(f"--param expects key=value, got {p!r}")
        key, value = p.split("=", 1)
        try:
            kwargs[key] = json.loads(value)
        except json.JSONDecodeError:
            kwargs[key] = value
    amap = workbench.explain(explainer, state, dataset_id=dataset, split=split,
                             sample=sample, target=target, params=kwargs)
    if out:
        Path(out).write_text(attribution_svg(amap), encoding="utf-8")
        click.echo(f"wrote {out}")
    if as_json or not out:
        click.echo(json.dumps(amap.to_dict()))


@main.command("scan")
@click.option("--run", "run_id", required=True)
@click.option("--node", required=True)
@click.option("--explainer", type=click.Choice(SCAN_CHOICES), default="dead_weight", show_default=True)
@workspace_option
def scan(workbench, run_id, node, explainer):
    """Run an introspection explainer over a logged run."""
    result = workbench.scan(explainer, run_id, node)
    click.echo(json.dumps(result.to_dict()))


@main.command("recommend")
@click.option("--state", required=True)
@click.option("--run", "run_id", default=None)
@click.option("--dataset", default="bars8", show_default=True)
@workspace_option
def recommend(workbench, state, run_id, dataset):
    """List refinement recommendations for a state."""
    recs = workbench.recommendations(state, run_id=run_id, dataset_id=dataset)
    click.echo(json.dumps([r.to_dict() for r in recs]))


@main.command("apply")
@click.option("--state", required=True)
@click.option("--rule", default=None, help="Apply the transition of this recommendation rule (e.g. R1).")
@click.option("--transition-file", default=None, help="JSON file with a transition to apply.")
@click.option("--run", "run_id", default=None, help="Run id used when evaluating rules.")
@click.option("--dataset", default="bars8", show_default=True)
@workspace_option
def apply(workbench, state, rule, transition_file, run_id, dataset):
    """Apply a refinement transition, producing a new state."""
    from .pipeline import TransitionFunction

    if bool(rule) == bool(transition_file):
        raise click.UsageError("give exactly one of --rule or --transition-file")
    if rule:
        recs = workbench.recommendations(state, run_id=run_id, dataset_id=dataset)
        matches = [r for r in recs if r.rule_id == rule and r.transition]
        if not matches:
            click.echo(f"error [NotFound]: no executable recommendation {rule!r} for state {state!r}", err=True)
            sys.exit(1)
        transition = matches[0].transition
    else:
        obj = json.loads(Path(transition_file).read_text(encoding="utf-8"))
        transition = TransitionFunction(
            transition_id=obj.get("transition_id", "manual"),
            kind=obj["kind"],
            payload=obj.get("payload") or {},
            provenance=obj.get("provenance", "manual"),
        )
    new_id = workbench.workspace.apply_transition(state, transition)
    click.echo(json.dumps({"state_id": new_id, "parent": state}))


@main.command("compare")
@click.option("--a", "a_id", required=True)
@click.option("--b", "b_id", required=True)
@click.option("--dataset", default="bars8", show_default=True)
@click.option("--split", default="test", show_default=True)
@workspace_option
def compare(workbench, a_id, b_id, dataset, split):
    """Point-wise comparison of two states."""
    click.echo(json.dumps(workbench.workspace.compare_states(a_id, b_id, dataset, split)))


@main.command("report")
@click.option("--title", default="Analysis report", show_default=True)
@click.option("--cards", default=None, help="Comma-separated card ids (default: all cards).")
@click.option("--format", "fmt", type=click.Choice(["json", "markdown", "svg_bundle"]),
              default="markdown", show_default=True)
@workspace_option
def report(workbench, title, cards, fmt):
    """Assemble all (or selected) provenance cards into a report and export it."""
    if cards:
        card_ids = [c.strip() for c in cards.split(",") if c.strip()]
    else:
        card_ids = [c.card_id for c in workbench.provenance.list_cards()]
    rep = workbench.provenance.assemble_report(title, [("Findings", card_ids, "")])
    written = workbench.provenance.export_report(rep, fmt=fmt)
    click.echo(json.dumps({"report_id": rep.report_id,
                           "files": [str(p) for p in written]}))


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8642", show_default=True)
@click.option("--static-dir", default=None, help="Directory of built UI assets to serve at /.")
@workspace_option
def serve_cmd(workbench, bind, static_dir):
    """Serve the HTTP API (and the UI, if built) for the browser front end."""
    from .service import serve

    serve(workbench.root, bind=bind, static_dir=static_dir)


if __name__ == "__main__":
    main()
