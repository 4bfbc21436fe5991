/** Test fixtures mirroring real server responses, plus a scripted fetch
 * for driving the UI without a running backend. The SVG strings were
 * captured from the server renderer so client output can be compared
 * byte-for-byte. */

import type {
  AttributionMap,
  DocCard,
  ExplainerDescriptor,
  Graph,
  ProvenanceCard,
  Recommendation,
  StateDetail,
  StateSummary,
} from "../src/types.js";

export const GRAPH: Graph = {
  nodes: [
    { name: "input", kind: "input", params: {}, trainable: false, output_shape: [8, 8, 1] },
    { name: "flatten", kind: "flatten", params: {}, trainable: false, output_shape: [64] },
    { name: "dense1", kind: "dense", params: { units: 16 }, trainable: true, output_shape: [16] },
    { name: "relu1", kind: "relu", params: {}, trainable: false, output_shape: [16] },
    { name: "dense2", kind: "dense", params: { units: 2 }, trainable: true, output_shape: [2] },
    { name: "softmax", kind: "softmax", params: {}, trainable: false, output_shape: [2] },
  ],
  input_shape: [8, 8, 1],
  num_classes: 2,
};

export const STATES: StateSummary[] = [
  { state_id: "s0001", parent: null, transition: null },
  { state_id: "s0002", parent: "s0001", transition: "train-run-a" },
];

export const STATE_DETAIL: StateDetail = {
  state_id: "s0002",
  step: 2,
  hyperparams: { seed: 7, epochs: 2, learning_rate: 0.1, batch_size: 16 },
  lineage: { parent: "s0001", transition: "train-run-a" },
  graph: GRAPH,
};

export const DOC_DENSE: DocCard = {
  key: "dense",
  title: "Fully connected layer",
  body: "Affine map from the flattened input to the configured number of units.",
  references: ["Goodfellow et al., Deep Learning, ch. 6"],
};

export const EXPLAINERS: ExplainerDescriptor[] = [
  {
    id: "saliency", level: "local", abstraction: "high",
    dependencies: ["data", "model", "domain"], applicability: "whole model",
    doc: "Signed gradient of the target score w.r.t. the input.", kind: "attribution",
  },
  {
    id: "lime", level: "local", abstraction: "high",
    dependencies: ["data"], applicability: "whole model",
    doc: "Local linear surrogate fitted on mask perturbations of one sample.", kind: "attribution",
  },
  {
    id: "dead_weight", level: "global", abstraction: "low",
    dependencies: ["model"], applicability: "trainable nodes",
    doc: "Weights stuck near zero across recent checkpoints.", kind: "introspection",
  },
  {
    id: "minmax", level: "not_applicable", abstraction: "low",
    dependencies: ["model"], applicability: "trainable nodes",
    doc: "Per-step min/max envelope of a tensor.", kind: "introspection",
  },
];

/** Captured from the server: saliency values reshaped to 2x3 and the
 * exact SVG its renderer produced for them. */
export const ATTRIBUTION: AttributionMap = {
  explainer_id: "saliency",
  state_id: "",
  sample: "bars8/test/0",
  target: 0,
  shape: [2, 3],
  values: [1.0, -2.0, 0.5, 0.0, 0.25, 3.0],
  prediction: [17.75, -3.15],
  meta: {},
};

export const ATTRIBUTION_SERVER_SVG = `<svg xmlns="http://www.w3.org/2000/svg" width="60" height="40" viewBox="0 0 60 40">
<rect x="0" y="0" width="20" height="20" fill="#ffaaaa" stroke="#dddddd" stroke-width="1"/>
<rect x="20" y="0" width="20" height="20" fill="#5555ff" stroke="#dddddd" stroke-width="1"/>
<rect x="40" y="0" width="20" height="20" fill="#ffd4d4" stroke="#dddddd" stroke-width="1"/>
<rect x="0" y="20" width="20" height="20" fill="#ffffff" stroke="#dddddd" stroke-width="1"/>
<rect x="20" y="20" width="20" height="20" fill="#ffeaea" stroke="#dddddd" stroke-width="1"/>
<rect x="40" y="20" width="20" height="20" fill="#ff0000" stroke="#dddddd" stroke-width="1"/>
</svg>`;

/** Captured from the server: a LIME map (3 segments over 6 inputs) and
 * its rendered SVG — segment scores expand to one cell per input. */
export const LIME_MAP: AttributionMap = {
  explainer_id: "lime",
  state_id: "",
  sample: "",
  target: 0,
  shape: [3],
  values: [-0.9991847383601793, 0.4995325136815337, 3.2466480730163814],
  prediction: [2.75, -0.15],
  meta: { segments: "grid2", n_samples: 64, seed: 0 },
  segments: [0, 0, 1, 1, 2, 2],
  segments_shape: [6],
};

export const LIME_SERVER_SVG = `<svg xmlns="http://www.w3.org/2000/svg" width="120" height="20" viewBox="0 0 120 20">
<rect x="0" y="0" width="20" height="20" fill="#b1b1ff" stroke="#dddddd" stroke-width="1"/>
<rect x="20" y="0" width="20" height="20" fill="#b1b1ff" stroke="#dddddd" stroke-width="1"/>
<rect x="40" y="0" width="20" height="20" fill="#ffd8d8" stroke="#dddddd" stroke-width="1"/>
<rect x="60" y="0" width="20" height="20" fill="#ffd8d8" stroke="#dddddd" stroke-width="1"/>
<rect x="80" y="0" width="20" height="20" fill="#ff0000" stroke="#dddddd" stroke-width="1"/>
<rect x="100" y="0" width="20" height="20" fill="#ff0000" stroke="#dddddd" stroke-width="1"/>
</svg>`;

export const CARDS: ProvenanceCard[] = [
  {
    card_id: "c0001", created_at: "2024-01-01T00:00:00Z", kind: "attribution",
    payload: ATTRIBUTION as unknown as Record<string, unknown>,
    annotation: "mass on the bar pixels", annotation_history: ["mass on the bar pixels"],
    group_id: "fig5", source: { state_id: "s0002", sample: "bars8/test/0" },
  },
  {
    card_id: "c0002", created_at: "2024-01-01T00:05:00Z", kind: "note",
    payload: { text: "try a conv block" }, annotation: "", annotation_history: [],
    group_id: null, source: {},
  },
];

export const RECOMMENDATIONS: Recommendation[] = [
  {
    rec_id: "rec-1", rule_id: "R1", title: "Add a convolution block",
    rationale: "The input is spatial but the model has no convolution.",
    references: ["doc:conv2d"],
    transition: {
      transition_id: "t-R1-conv-block", kind: "architecture_patch",
      payload: { after: "input", insert: [] },
    },
    severity: "strong",
  },
];

type Responder = (init?: RequestInit) => { status?: number; body: unknown };

/** Scripted fetch: exact-path table plus a call log for assertions. */
export function mockFetch(routes: Record<string, Responder | unknown>) {
  const calls: Array<{ url: string; method: string; body?: unknown }> = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const key = `${init?.method ?? "GET"} ${url.split("?")[0]}`;
    const route = routes[key];
    if (route === undefined) {
      return jsonResponse(404, { code: "NotFound", message: `no route for ${key}` });
    }
    if (typeof route === "function") {
      const { status = 200, body } = (route as Responder)(init);
      return jsonResponse(status, body);
    }
    return jsonResponse(200, route);
  };
  return { fetchFn, calls };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** The standard route table for a small trained workspace. */
export function defaultRoutes(cards: ProvenanceCard[] = CARDS): Record<string, unknown> {
  return {
    "GET /api/states": { states: STATES },
    "GET /api/states/s0002": STATE_DETAIL,
    "GET /api/states/s0002/recommendations": { recommendations: RECOMMENDATIONS },
    "GET /api/runs": { runs: ["run-a"] },
    "GET /api/explainers": { explainers: EXPLAINERS },
    "GET /api/doc/dense": DOC_DENSE,
    "GET /api/provenance/cards": () => ({ body: { cards } }),
  };
}
