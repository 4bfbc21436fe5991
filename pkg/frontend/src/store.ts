/** Client-side view state.
 *
 * Selections (dashboard, state, run, node, sample, explainer) live here
 * so they survive dashboard switches; the provenance bar contents
 * mirror the server and are re-fetched rather than owned. Nothing in
 * this store is authoritative — a reload rebuilds it from the API.
 */

import type { ApiClient } from "./api.js";
import type { ProvenanceCard } from "./types.js";

export type Dashboard = "understanding" | "diagnosis" | "refinement" | "reporting";

export const DASHBOARDS: Dashboard[] = ["understanding", "diagnosis", "refinement", "reporting"];

export interface Selections {
  stateId: string | null;
  runId: string | null;
  node: string | null;
  sample: number;
  explainerId: string | null;
}

export class ViewStore {
  dashboard: Dashboard = "understanding";
  selections: Selections = { stateId: null, runId: null, node: null, sample: 0, explainerId: null };
  cards: ProvenanceCard[] = [];

  private listeners = new Set<() => void>();

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  setDashboard(dashboard: Dashboard): void {
    this.dashboard = dashboard;
    this.emit();
  }

  select(patch: Partial<Selections>): void {
    this.selections = { ...this.selections, ...patch };
    this.emit();
  }

  /** Re-fetch the provenance bar contents from the server. */
  async syncCards(): Promise<void> {
    this.cards = await this.api.listCards();
    this.emit();
  }
}
