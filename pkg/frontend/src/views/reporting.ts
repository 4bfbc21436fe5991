/** Reporting dashboard: order provenance cards into a report section,
 * edit annotations and the narrative, then export through the API.
 * Deleting a card that a report references is rejected by the server;
 * the error is surfaced instead of silently ignored. */

import { ApiError, type ApiClient } from "../api.js";
import { clear, el } from "../dom.js";
import type { ViewStore } from "../store.js";

export function renderReporting(api: ApiClient, store: ViewStore): HTMLElement {
  const root = el("section", { class: "dashboard reporting" });
  // Card order for the report being drafted; cards keep their relative
  // order from the bar until the user moves them.
  let order: string[] = [];
  // Draft text survives re-renders triggered by reordering or card syncs.
  let titleValue = "Diagnosis report";
  let narrativeValue = "";

  const update = () => {
    clear(root);
    const known = store.cards.map((c) => c.card_id);
    order = [...order.filter((id) => known.includes(id)), ...known.filter((id) => !order.includes(id))];

    const status = el("p", { class: "report-status" });
    const title = el("input", {
      type: "text",
      value: titleValue,
      class: "report-title",
      oninput: (event) => (titleValue = (event.target as HTMLInputElement).value),
    });
    const narrative = el("textarea", {
      class: "report-narrative",
      placeholder: "Section narrative…",
      oninput: (event) => (narrativeValue = (event.target as HTMLTextAreaElement).value),
    });
    narrative.value = narrativeValue;

    const list = el("ol", { class: "report-order" });
    order.forEach((cardId, index) => {
      const card = store.cards.find((c) => c.card_id === cardId)!;
      const move = (delta: number) => {
        const target = index + delta;
        if (target < 0 || target >= order.length) return;
        [order[index], order[target]] = [order[target]!, order[index]!];
        update();
      };
      const annotation = el("input", {
        type: "text",
        class: "annotation-input",
        value: card.annotation,
        placeholder: "annotation…",
        onchange: async (event) => {
          await api.patchCard(cardId, { annotation: (event.target as HTMLInputElement).value });
          await store.syncCards();
        },
      });
      list.append(
        el("li", { "data-card-id": cardId }, [
          el("span", { class: "card-label" }, [`${cardId} (${card.kind})`]),
          el("button", { type: "button", class: "move-up", onclick: () => move(-1) }, ["↑"]),
          el("button", { type: "button", class: "move-down", onclick: () => move(1) }, ["↓"]),
          annotation,
          el("button", {
            type: "button",
            class: "delete-card",
            onclick: async () => {
              try {
                await api.deleteCard(cardId);
                await store.syncCards();
              } catch (error) {
                status.textContent =
                  error instanceof ApiError && error.code === "DanglingReference"
                    ? `Cannot delete ${cardId}: a report still references it.`
                    : String(error);
              }
            },
          }, ["delete"]),
        ]),
      );
    });

    const exportButtons = el("div", { class: "export-buttons" });
    for (const format of ["markdown", "json", "svg_bundle"]) {
      exportButtons.append(
        el("button", {
          type: "button",
          class: `export-${format}`,
          onclick: async () => {
            try {
              const report = await api.createReport(title.value, [
                { heading: "Findings", card_ids: [...order], narrative: narrative.value },
              ]);
              const { files } = await api.exportReport(report.report_id, format);
              status.replaceChildren(
                `exported ${report.report_id} (${format}): `,
                ...files.map((file) => el("a", { href: `/workspace/${file}`, download: "" }, [file, " "])),
              );
            } catch (error) {
              status.textContent = String(error);
            }
          },
        }, [`export ${format}`]),
      );
    }

    root.append(
      el("h3", {}, ["Assemble report"]),
      el("label", {}, ["Title: ", title]),
      list,
      el("label", {}, ["Narrative: ", narrative]),
      exportButtons,
      status,
    );
  };

  store.subscribe(() => {
    if (store.dashboard === "reporting") update();
  });
  update();
  return root;
}
