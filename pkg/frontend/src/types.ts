/** Payload shapes served by the workspace service. The UI never computes
 * statistics itself: every number on screen traces back to one of these. */

export interface ScorePoint {
  label: string;
  x: number;
  y: number;
  group: string;
}

export interface ScoresPayload {
  kind: "scores";
  pcs: [number, number];
  explained: number[];
  points: ScorePoint[];
}

export interface LoadingPoint {
  feature: string;
  x: number;
  y: number;
}

export interface LoadingsPayload {
  kind: "loadings";
  pcs: [number, number];
  explained: number[];
  points: LoadingPoint[];
}

export interface BiplotPayload {
  kind: "biplot";
  pcs: [number, number];
  explained: number[];
  points: ScorePoint[];
  features: LoadingPoint[];
}

export interface MsnmPoint {
  label: string;
  d: number;
  q: number;
  group: string;
  flagged: boolean;
}

export interface MsnmPayload {
  kind: "msnm";
  alpha: number;
  ucl_d: number;
  ucl_q: number | null;
  points: MsnmPoint[];
}

export interface CurvesPayload {
  kind: "curves";
  a_values: number[];
  residual_variance: number[];
  ckf: number[];
  k_folds: number;
}

export interface OmedaBar {
  feature: string;
  bar: number;
  rank: number;
}

export interface OmedaPayload {
  kind: "omeda";
  selection: unknown;
  bars: OmedaBar[];
  dropped: string[];
}

export interface RegistryCase {
  id: string;
  bins: string[];
  features: string[];
  status: "detected" | "diagnosed" | "deparsed" | "extracted";
  iteration: number;
  created_at: string;
  report?: string;
  stats: Record<string, { d: number; q: number }>;
}

export interface RegistryPayload {
  iteration: number;
  cases: RegistryCase[];
}

export interface JobPayload {
  id: string;
  kind: "deparse" | "reparse";
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  result: string | null;
  error: string | null;
}

export interface ReportEntry {
  path: string;
  offset: number;
  timestamp: string;
  features: string[];
  match_count: number;
}

export interface ReportPayload {
  case: string;
  totals: { matched: number; window: number };
  actors: Record<string, number>;
  gaps: unknown[];
  entries: ReportEntry[];
}

export interface GraphNode {
  id: string;
  kind: "station" | "ap";
  label: string;
  weight: number;
}

export interface GraphEdge {
  source: string;
  target: string;
  weight: number;
}

export interface GraphPayload {
  kind: "graph";
  case: string;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface CaseDraft {
  id?: string;
  bins: string[];
  features: string[];
}
