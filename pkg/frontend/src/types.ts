/** Response shapes of the workbench HTTP API. */

export interface GraphNode {
  name: string;
  kind: string;
  params: Record<string, unknown>;
  trainable: boolean;
  output_shape: number[];
}

export interface Graph {
  nodes: GraphNode[];
  input_shape: number[];
  num_classes: number;
}

export interface StateSummary {
  state_id: string;
  parent: string | null;
  transition: string | null;
}

export interface StateDetail {
  state_id: string;
  step: number;
  hyperparams: Record<string, number>;
  lineage: { parent: string; transition: string } | null;
  graph: Graph;
}

export type ExplainerKind = "attribution" | "introspection" | "doc";

export interface ExplainerDescriptor {
  id: string;
  level: "local" | "global" | "not_applicable";
  abstraction: "low" | "high";
  dependencies: string[];
  applicability: string;
  doc: string;
  kind: ExplainerKind;
}

export interface AttributionMap {
  explainer_id: string;
  state_id: string;
  sample: string;
  target: number;
  shape: number[];
  values: number[];
  prediction: number[];
  meta: Record<string, unknown>;
  segments?: number[];
  segments_shape?: number[];
  svg?: string;
}

export interface IntrospectionResult {
  explainer_id: string;
  node: string;
  payload: Record<string, unknown>;
}

export interface DocCard {
  key: string;
  title: string;
  body: string;
  references: string[];
}

export interface ProvenanceCard {
  card_id: string;
  created_at: string;
  kind: string;
  payload: Record<string, unknown>;
  annotation: string;
  annotation_history: string[];
  group_id: string | null;
  source: Record<string, unknown>;
}

export interface Transition {
  transition_id: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface Recommendation {
  rec_id: string;
  rule_id: string;
  title: string;
  rationale: string;
  references: string[];
  transition: Transition | null;
  severity: "strong" | "suggested" | "info";
}

export interface TrainJob {
  status: "queued" | "running" | "done" | "failed";
  source_state?: string;
  state_id?: string;
  run_id?: string;
  message?: string;
}

export interface ReportSection {
  heading: string;
  card_ids: string[];
  narrative: string;
}

export interface Report {
  report_id: string;
  title: string;
  sections: ReportSection[];
}

export interface MetricsSnapshot {
  state_id: string;
  split: string;
  accuracy: number;
  macro_precision: number;
  macro_recall: number;
  mean_loss: number;
  confusion: number[][];
}

export interface SeriesPoint {
  step: number;
  value: number;
}
