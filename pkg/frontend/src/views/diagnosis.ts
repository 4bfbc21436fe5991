/** Diagnosis dashboard.
 *
 * Left: the explainer toolbox, ordered from high to low abstraction
 * (whole-model attribution first, per-tensor scans beneath). Middle:
 * the model graph with the nodes the selected explainer applies to
 * emphasized, plus a sample picker. Right: two stacked toolcards — the
 * explanation result on top, the explainer description beneath — with a
 * button to save the result to the provenance bar.
 */

import type { ApiClient } from "../api.js";
import { clear, el, svgNode } from "../dom.js";
import { heatmapSvg } from "../heatmap.js";
import type { ViewStore } from "../store.js";
import type { ExplainerDescriptor, GraphNode } from "../types.js";
import { openDocOverlay } from "./docOverlay.js";
import { renderGraph } from "./graph.js";

/** Does the explainer apply to this node? Drives the visual emphasis. */
export function applicableTo(descriptor: ExplainerDescriptor, node: GraphNode): boolean {
  if (descriptor.applicability.includes("trainable")) return node.trainable;
  return true; // whole-model explainers touch every node
}

const ABSTRACTION_ORDER: Record<string, number> = { high: 0, low: 1 };

export function toolboxOrder(descriptors: ExplainerDescriptor[]): ExplainerDescriptor[] {
  return [...descriptors]
    .filter((d) => d.kind !== "doc")
    .sort(
      (a, b) =>
        (ABSTRACTION_ORDER[a.abstraction] ?? 2) - (ABSTRACTION_ORDER[b.abstraction] ?? 2) ||
        a.id.localeCompare(b.id),
    );
}

export function renderDiagnosis(api: ApiClient, store: ViewStore): HTMLElement {
  const root = el("section", { class: "dashboard diagnosis" });
  let descriptors: ExplainerDescriptor[] = [];

  const byId = (id: string | null) => descriptors.find((d) => d.id === id);

  const runExplainer = async (results: HTMLElement) => {
    const { stateId, explainerId, node, sample, runId } = store.selections;
    const descriptor = byId(explainerId);
    if (!stateId || !descriptor) return;
    clear(results);
    const resultCard = el("div", { class: "toolcard result-card" });
    const docCard = el("div", { class: "toolcard description-card" }, [
      el("h4", {}, [descriptor.id]),
      el("p", {}, [descriptor.doc]),
      el("p", { class: "taxonomy" }, [
        `level: ${descriptor.level} · abstraction: ${descriptor.abstraction} · ` +
          `needs: ${descriptor.dependencies.join(", ")}`,
      ]),
      el("button", {
        class: "doc-link",
        type: "button",
        onclick: () => void openDocOverlay(api, descriptor.id, root),
      }, ["more…"]),
    ]);
    results.append(resultCard, docCard);
    try {
      if (descriptor.kind === "attribution") {
        const map = await api.explain({ explainer: descriptor.id, state: stateId, sample });
        resultCard.append(
          el("h4", {}, [`${descriptor.id} on ${map.sample} (class ${map.target})`]),
          svgNode(heatmapSvg(map)),
          el("button", {
            class: "save-card",
            type: "button",
            onclick: async () => {
              await api.addCard({
                kind: "attribution",
                payload: map as unknown as Record<string, unknown>,
                source: { state_id: stateId, sample: map.sample },
              });
              await store.syncCards(); // card appears in the bar immediately
            },
          }, ["save to provenance"]),
        );
      } else {
        if (!runId || !node) {
          resultCard.append(el("p", { class: "empty" }, ["Pick a run and a trainable node on the graph."]));
          return;
        }
        const result = await api.scan(descriptor.id, runId, `${node}/weights`);
        resultCard.append(
          el("h4", {}, [`${descriptor.id} on ${result.node}`]),
          el("pre", { class: "scan-payload" }, [JSON.stringify(result.payload, null, 2)]),
          el("button", {
            class: "save-card",
            type: "button",
            onclick: async () => {
              await api.addCard({
                kind: "introspection",
                payload: result as unknown as Record<string, unknown>,
                source: { run_id: runId, node: result.node },
              });
              await store.syncCards();
            },
          }, ["save to provenance"]),
        );
      }
    } catch (error) {
      resultCard.append(el("p", { class: "error" }, [String(error)]));
    }
  };

  let renderToken = 0;

  const update = async () => {
    // Only the latest render commits; overlapping refreshes are dropped.
    const token = ++renderToken;
    const commit = (...children: Node[]) => {
      if (token !== renderToken) return;
      clear(root).append(...children);
    };
    if (descriptors.length === 0) descriptors = await api.listExplainers();
    const states = await api.listStates();
    if (states.length === 0) {
      commit(el("p", { class: "empty" }, ["No model states yet — train one first."]));
      return;
    }
    const stateId = store.selections.stateId ?? states[states.length - 1]!.state_id;
    if (store.selections.stateId !== stateId) store.selections.stateId = stateId;
    const runs = await api.listRuns();
    if (store.selections.runId === null && runs.length > 0) {
      store.selections.runId = runs[runs.length - 1]!;
    }
    const detail = await api.getState(stateId);
    const selectedDescriptor = byId(store.selections.explainerId);

    const toolbox = el("nav", { class: "toolbox" }, [el("h3", {}, ["Explainers"])]);
    for (const descriptor of toolboxOrder(descriptors)) {
      const classes = ["toolbox-item", `abstraction-${descriptor.abstraction}`];
      if (descriptor.id === store.selections.explainerId) classes.push("selected");
      toolbox.append(
        el("button", {
          class: classes.join(" "),
          type: "button",
          "data-explainer": descriptor.id,
          title: descriptor.doc,
          onclick: () => store.select({ explainerId: descriptor.id }),
        }, [descriptor.id]),
      );
    }

    const results = el("div", { class: "toolcards" });
    const samplePicker = el("input", {
      type: "number",
      min: "0",
      value: String(store.selections.sample),
      class: "sample-picker",
      onchange: (event) =>
        store.select({ sample: Number((event.target as HTMLInputElement).value) }),
    });
    const center = el("div", { class: "diagnosis-center" }, [
      renderGraph(detail.graph, {
        emphasize: selectedDescriptor
          ? (node) => applicableTo(selectedDescriptor, node)
          : undefined,
        selected: store.selections.node,
        onNodeClick: (node) => store.select({ node: node.name }),
      }),
      el("div", { class: "toolbar" }, [
        el("label", {}, ["Test sample: ", samplePicker]),
        el("button", {
          class: "apply-explainer",
          type: "button",
          onclick: () => void runExplainer(results),
        }, ["Apply explainer"]),
      ]),
      results,
    ]);
    commit(toolbox, center);
  };

  store.subscribe(() => {
    if (store.dashboard === "diagnosis") void update();
  });
  void update();
  return root;
}
