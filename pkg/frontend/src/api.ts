/** Thin typed client for the workbench HTTP API.
 *
 * The UI holds no authoritative state: everything rendered comes from
 * these calls, so a page reload reconstructs the full view.
 */

import type {
  AttributionMap,
  DocCard,
  ExplainerDescriptor,
  Graph,
  IntrospectionResult,
  MetricsSnapshot,
  ProvenanceCard,
  Recommendation,
  Report,
  ReportSection,
  SeriesPoint,
  StateDetail,
  StateSummary,
  TrainJob,
  Transition,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ExplainRequest {
  explainer: string;
  state: string;
  dataset?: string;
  split?: string;
  sample?: number;
  target?: number;
  params?: Record<string, unknown>;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(this.base + path, init);
    const data = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, data.code ?? "Error", data.message ?? response.statusText);
    }
    return data as T;
  }

  // -- runs -----------------------------------------------------------------

  listRuns(): Promise<string[]> {
    return this.request<{ runs: string[] }>("GET", "/api/runs").then((r) => r.runs);
  }

  runGraph(runId: string): Promise<Graph & { run_id: string; logged_nodes: string[] }> {
    return this.request("GET", `/api/runs/${runId}/graph`);
  }

  runSeries(runId: string, node: string, stat = "mean"): Promise<SeriesPoint[]> {
    return this.request<{ series: SeriesPoint[] }>(
      "GET",
      `/api/runs/${runId}/series/${node}?stat=${stat}`,
    ).then((r) => r.series);
  }

  // -- registry / docs --------------------------------------------------------

  listExplainers(): Promise<ExplainerDescriptor[]> {
    return this.request<{ explainers: ExplainerDescriptor[] }>("GET", "/api/explainers").then(
      (r) => r.explainers,
    );
  }

  doc(key: string): Promise<DocCard> {
    return this.request("GET", `/api/doc/${encodeURIComponent(key)}`);
  }

  // -- states -----------------------------------------------------------------

  listStates(): Promise<StateSummary[]> {
    return this.request<{ states: StateSummary[] }>("GET", "/api/states").then((r) => r.states);
  }

  getState(stateId: string): Promise<StateDetail> {
    return this.request("GET", `/api/states/${stateId}`);
  }

  metrics(stateId: string, split = "test"): Promise<MetricsSnapshot> {
    return this.request("GET", `/api/states/${stateId}/metrics?split=${split}`);
  }

  recommendations(stateId: string, runId?: string): Promise<Recommendation[]> {
    const query = runId ? `?run=${encodeURIComponent(runId)}` : "";
    return this.request<{ recommendations: Recommendation[] }>(
      "GET",
      `/api/states/${stateId}/recommendations${query}`,
    ).then((r) => r.recommendations);
  }

  // -- explainers ----------------------------------------------------------------

  explain(body: ExplainRequest): Promise<AttributionMap> {
    return this.request("POST", "/api/explain", body);
  }

  scan(explainer: string, run: string, node: string): Promise<IntrospectionResult> {
    return this.request("POST", "/api/scan", { explainer, run, node });
  }

  // -- transitions / training ------------------------------------------------------

  applyTransition(stateId: string, transition: Transition): Promise<{ state_id: string }> {
    return this.request("POST", "/api/transitions/apply", { state: stateId, transition });
  }

  startTraining(stateId: string, runId?: string): Promise<{ job_id: string }> {
    return this.request("POST", "/api/train", { state: stateId, run_id: runId });
  }

  trainStatus(jobId: string): Promise<TrainJob> {
    return this.request("GET", `/api/train/${jobId}`);
  }

  // -- provenance / reporting -------------------------------------------------------

  listCards(): Promise<ProvenanceCard[]> {
    return this.request<{ cards: ProvenanceCard[] }>("GET", "/api/provenance/cards").then(
      (r) => r.cards,
    );
  }

  addCard(card: {
    kind: string;
    payload: Record<string, unknown>;
    source?: Record<string, unknown>;
    annotation?: string;
  }): Promise<ProvenanceCard> {
    return this.request("POST", "/api/provenance/cards", card);
  }

  patchCard(
    cardId: string,
    patch: { annotation?: string; group_id?: string },
  ): Promise<ProvenanceCard> {
    return this.request("PATCH", `/api/provenance/cards/${cardId}`, patch);
  }

  deleteCard(cardId: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/api/provenance/cards/${cardId}`);
  }

  createReport(title: string, sections: ReportSection[]): Promise<Report> {
    return this.request("POST", "/api/reports", { title, sections });
  }

  exportReport(reportId: string, format: string): Promise<{ files: string[] }> {
    return this.request("POST", `/api/reports/${reportId}/export?format=${format}`);
  }
}
