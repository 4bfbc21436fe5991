/** Application shell: four dashboard tabs above one persistent
 * provenance bar. The bar is a single DOM element shared by all tabs,
 * and every piece of content is reconstructed from the API, so a page
 * reload loses nothing. */

import type { ApiClient } from "./api.js";
import { el } from "./dom.js";
import { DASHBOARDS, ViewStore, type Dashboard } from "./store.js";
import { renderDiagnosis } from "./views/diagnosis.js";
import { renderProvenanceBar } from "./views/provenanceBar.js";
import { renderRefinement } from "./views/refinement.js";
import { renderReporting } from "./views/reporting.js";
import { renderUnderstanding } from "./views/understanding.js";

export interface App {
  root: HTMLElement;
  store: ViewStore;
  ready: Promise<void>;
}

export function createApp(api: ApiClient): App {
  const store = new ViewStore(api);

  const panels: Record<Dashboard, HTMLElement> = {
    understanding: renderUnderstanding(api, store),
    diagnosis: renderDiagnosis(api, store),
    refinement: renderRefinement(api, store),
    reporting: renderReporting(api, store),
  };

  const tabs = el("nav", { class: "tabs", role: "tablist" });
  const main = el("main", { class: "dashboard-mount" });
  const bar = renderProvenanceBar(store);

  const show = (dashboard: Dashboard) => {
    store.setDashboard(dashboard);
    main.replaceChildren(panels[dashboard]);
    for (const button of tabs.querySelectorAll(".tab")) {
      button.classList.toggle("active", button.getAttribute("data-dashboard") === dashboard);
    }
  };

  for (const dashboard of DASHBOARDS) {
    tabs.append(
      el("button", {
        class: "tab",
        type: "button",
        role: "tab",
        "data-dashboard": dashboard,
        onclick: () => show(dashboard),
      }, [dashboard]),
    );
  }

  const root = el("div", { class: "app" }, [
    el("header", { class: "app-header" }, [el("h1", {}, ["explainlab"]), tabs]),
    main,
    bar,
  ]);
  show("understanding");
  const ready = store.syncCards();
  return { root, store, ready };
}
