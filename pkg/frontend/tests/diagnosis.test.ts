import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { createApp } from "../src/app.js";
import type { ProvenanceCard } from "../src/types.js";
import { ATTRIBUTION, ATTRIBUTION_SERVER_SVG, CARDS, defaultRoutes, mockFetch } from "./fixtures.js";

async function settle(): Promise<void> {
  for (let i = 0; i < 8; i++) await new Promise((resolve) => setTimeout(resolve, 0));
}

function openDiagnosis(cards: ProvenanceCard[] = [...CARDS]) {
  const routes = {
    ...defaultRoutes(cards),
    "POST /api/explain": ATTRIBUTION,
    "POST /api/provenance/cards": (init?: RequestInit) => {
      const body = JSON.parse(init!.body as string);
      const card: ProvenanceCard = {
        card_id: `c${String(cards.length + 1).padStart(4, "0")}`,
        created_at: "2024-01-01T00:00:00Z",
        kind: body.kind,
        payload: body.payload,
        annotation: body.annotation ?? "",
        annotation_history: [],
        group_id: null,
        source: body.source ?? {},
      };
      cards.push(card);
      return { body: card };
    },
  };
  const { fetchFn, calls } = mockFetch(routes);
  const app = createApp(new ApiClient("", fetchFn));
  document.body.replaceChildren(app.root);
  return { app, calls, cards };
}

describe("diagnosis dashboard", () => {
  it("applies an attribution explainer and renders the stacked toolcards", async () => {
    const { app } = openDiagnosis();
    await app.ready;
    (app.root.querySelector('[data-dashboard="diagnosis"]') as HTMLElement).click();
    await settle();

    (app.root.querySelector('[data-explainer="saliency"]') as HTMLElement).click();
    await settle();
    (app.root.querySelector(".apply-explainer") as HTMLElement).click();
    await settle();

    const cards = [...app.root.querySelectorAll(".toolcards .toolcard")];
    expect(cards).toHaveLength(2);
    // result on top, explainer description beneath
    expect(cards[0]!.classList.contains("result-card")).toBe(true);
    expect(cards[1]!.classList.contains("description-card")).toBe(true);
    expect(cards[1]!.textContent).toContain("Signed gradient");

    // the heatmap cells use exactly the colors the server rendered
    const fills = [...cards[0]!.querySelectorAll("rect")].map((r) => r.getAttribute("fill"));
    const serverFills = [...ATTRIBUTION_SERVER_SVG.matchAll(/fill="(#[0-9a-f]{6})"/g)].map(
      (m) => m[1],
    );
    expect(fills).toEqual(serverFills);
  });

  it("saves the result to provenance and the bar updates immediately", async () => {
    const { app, calls } = openDiagnosis();
    await app.ready;
    (app.root.querySelector('[data-dashboard="diagnosis"]') as HTMLElement).click();
    await settle();
    (app.root.querySelector('[data-explainer="saliency"]') as HTMLElement).click();
    await settle();
    (app.root.querySelector(".apply-explainer") as HTMLElement).click();
    await settle();

    (app.root.querySelector(".save-card") as HTMLElement).click();
    await settle();

    const post = calls.find((c) => c.method === "POST" && c.url === "/api/provenance/cards");
    expect(post).toBeDefined();
    expect((post!.body as { kind: string }).kind).toBe("attribution");
    const barIds = [...app.root.querySelectorAll(".provenance-bar .provenance-card")].map((c) =>
      c.getAttribute("data-card-id"),
    );
    expect(barIds).toEqual(["c0001", "c0002", "c0003"]);
  });
});
