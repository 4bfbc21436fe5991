/** Persistent provenance bar: the digital blackboard pinned beneath
 * every dashboard. It mirrors the server's card store and is the same
 * DOM element across dashboard switches, so nothing on it is lost when
 * the user changes tabs. */

import { clear, el, svgNode } from "../dom.js";
import { heatmapSvg } from "../heatmap.js";
import type { ViewStore } from "../store.js";
import type { AttributionMap, ProvenanceCard } from "../types.js";

function cardThumb(card: ProvenanceCard): Node {
  if (card.kind === "attribution") {
    const payload = card.payload as unknown as AttributionMap;
    if (Array.isArray(payload.values) && Array.isArray(payload.shape)) {
      const thumb = el("div", { class: "card-thumb" });
      thumb.append(svgNode(heatmapSvg(payload)));
      return thumb;
    }
  }
  return el("span", { class: "card-kind-tag" }, [card.kind]);
}

export function renderProvenanceBar(store: ViewStore): HTMLElement {
  const bar = el("aside", { class: "provenance-bar", "aria-label": "provenance" });

  const update = () => {
    clear(bar);
    bar.append(el("h2", { class: "bar-title" }, [`Provenance (${store.cards.length})`]));
    const strip = el("div", { class: "bar-strip" });
    for (const card of store.cards) {
      strip.append(
        el("div", { class: "provenance-card", "data-card-id": card.card_id }, [
          el("div", { class: "card-header" }, [
            el("span", { class: "card-id" }, [card.card_id]),
            card.group_id ? el("span", { class: "card-group" }, [card.group_id]) : null,
          ]),
          cardThumb(card),
          card.annotation ? el("p", { class: "card-annotation" }, [card.annotation]) : null,
        ]),
      );
    }
    if (store.cards.length === 0) {
      strip.append(el("p", { class: "bar-empty" }, ["No cards yet — save findings from the diagnosis view."]));
    }
    bar.append(strip);
  };

  store.subscribe(update);
  update();
  return bar;
}
