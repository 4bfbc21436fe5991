/** Documentation overlay: fetches GET /api/doc/{key} and shows the card
 * (title, body, external references) on top of the current dashboard.
 * An unknown key renders a not-found notice instead of crashing. */

import { ApiError, type ApiClient } from "../api.js";
import { el } from "../dom.js";

export async function openDocOverlay(
  api: ApiClient,
  key: string,
  mount: HTMLElement,
): Promise<HTMLElement> {
  mount.querySelector(".doc-overlay")?.remove();
  const overlay = el("div", { class: "doc-overlay" });
  const panel = el("div", { class: "doc-panel" }, [
    el("button", { class: "doc-close", type: "button", onclick: () => overlay.remove() }, ["×"]),
  ]);
  overlay.append(panel);
  mount.append(overlay);
  try {
    const card = await api.doc(key);
    panel.append(
      el("h3", { class: "doc-title" }, [card.title]),
      el("p", { class: "doc-body" }, [card.body]),
      el(
        "ul",
        { class: "doc-references" },
        card.references.map((ref) => el("li", {}, [ref])),
      ),
    );
  } catch (error) {
    const message =
      error instanceof ApiError && error.status === 404
        ? `No documentation available for “${key}”.`
        : `Failed to load documentation for “${key}”.`;
    panel.append(el("p", { class: "doc-not-found" }, [message]));
  }
  return overlay;
}
