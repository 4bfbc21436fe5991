/** Chain layout of the model graph.
 *
 * The graph is a simple chain, so the layout is one row of labeled
 * boxes with arrows between them — deliberately simpler than a generic
 * dataflow layout. Hovering a node shows a short description; clicking
 * notifies the caller (used to open the documentation overlay or to
 * select a node for introspection).
 */

import { el } from "../dom.js";
import type { Graph, GraphNode } from "../types.js";

export interface GraphViewOptions {
  /** Nodes for which this predicate holds are visually emphasized
   * (e.g. the nodes the selected explainer can be applied to). */
  emphasize?: (node: GraphNode) => boolean;
  selected?: string | null;
  onNodeClick?: (node: GraphNode) => void;
}

function shapeLabel(shape: number[]): string {
  return shape.join("×");
}

export function renderGraph(graph: Graph, options: GraphViewOptions = {}): HTMLElement {
  const row = el("div", { class: "graph-chain" });
  graph.nodes.forEach((node, index) => {
    if (index > 0) row.append(el("span", { class: "graph-arrow" }, ["→"]));
    const classes = ["graph-node", `kind-${node.kind}`];
    if (options.emphasize?.(node)) classes.push("emphasized");
    if (options.selected === node.name) classes.push("selected");
    const box = el(
      "button",
      {
        class: classes.join(" "),
        type: "button",
        "data-name": node.name,
        "data-kind": node.kind,
        title: `${node.kind} — output ${shapeLabel(node.output_shape)}` +
          (node.trainable ? " (trainable)" : ""),
        onclick: () => options.onNodeClick?.(node),
      },
      [
        el("span", { class: "graph-node-kind" }, [node.kind]),
        el("span", { class: "graph-node-name" }, [node.name]),
        el("span", { class: "graph-node-shape" }, [shapeLabel(node.output_shape)]),
      ],
    );
    row.append(box);
  });
  return row;
}
