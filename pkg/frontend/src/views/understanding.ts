/** Understanding dashboard: the model graph in a simple chain layout,
 * with documentation overlays for every node kind. */

import type { ApiClient } from "../api.js";
import { clear, el } from "../dom.js";
import type { ViewStore } from "../store.js";
import { openDocOverlay } from "./docOverlay.js";
import { renderGraph } from "./graph.js";

export function renderUnderstanding(api: ApiClient, store: ViewStore): HTMLElement {
  const root = el("section", { class: "dashboard understanding" });
  let renderToken = 0;

  const update = async () => {
    // Only the latest render commits; overlapping refreshes are dropped.
    const token = ++renderToken;
    const commit = (...children: Node[]) => {
      if (token !== renderToken) return;
      clear(root).append(...children);
    };
    const states = await api.listStates();
    if (states.length === 0) {
      commit(el("p", { class: "empty" }, ["No model states yet — train one first."]));
      return;
    }
    const current = store.selections.stateId ?? states[states.length - 1]!.state_id;
    const picker = el("select", {
      class: "state-picker",
      onchange: (event) => store.select({ stateId: (event.target as HTMLSelectElement).value }),
    });
    for (const state of states) {
      const option = el("option", { value: state.state_id }, [
        state.parent ? `${state.state_id} (from ${state.parent})` : state.state_id,
      ]);
      if (state.state_id === current) option.setAttribute("selected", "selected");
      picker.append(option);
    }
    const detail = await api.getState(current);
    commit(
      el("div", { class: "toolbar" }, [el("label", {}, ["Model state: ", picker])]),
      renderGraph(detail.graph, {
        onNodeClick: (node) => void openDocOverlay(api, node.kind, root),
      }),
      el("p", { class: "hint" }, [
        `step ${detail.step}, input ${detail.graph.input_shape.join("×")}, ` +
          `${detail.graph.num_classes} classes — click a node for details and references`,
      ]),
    );
  };

  store.subscribe(() => {
    if (store.dashboard === "understanding") void update();
  });
  void update();
  return root;
}
