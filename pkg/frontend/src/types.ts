// Typed mirrors of the HTTP API payloads. The UI renders these fields
// directly; it never derives new numbers from them (charting scales pixels,
// not data).

export interface JobInfo {
  status: string;
  kind: string | null;
  error: string | null;
}

export interface Progress {
  round: number;
  evaluated: number;
  batch_size: number;
  fraction: number;
}

export interface SelectionEntry {
  cas: string;
  role: string;
}

export interface Snapshot {
  campaign_id: string;
  stage: string;
  version: number;
  requirement: string;
  keywords: string[];
  articles_total: number;
  articles_selected: number;
  candidates_mined: number;
  candidates_highlighted: number;
  selection: SelectionEntry[];
  dimension: number | null;
  rounds_completed: number;
  rounds_total: number;
  batch_size: number;
  progress: Progress;
  best_so_far: number[];
  job: JobInfo;
}

export interface CandidateEntry {
  cas: string;
  name: string;
  role: string;
  purpose: string;
  relevance: number;
  sources: string[];
}

export interface CandidatesPayload {
  entries: CandidateEntry[];
  total_mined: number;
  threshold: number;
}

export interface Histogram {
  bin_edges: number[];
  counts: number[];
}

export interface RoundSummary {
  round: number;
  count: number;
  score_max: number;
  score_median: number;
  fraction_near_zero: number;
  histogram: Histogram;
  composition_totals: Record<string, number>;
}

export interface RecipeMetrics {
  amplitude: number;
  response_time_s: number;
  reversibility: number;
  sensitivity: number;
  score: number | null;
}

export interface TopRecipe {
  rank: number;
  round: number;
  recipe_id: string;
  score: number;
  metrics: RecipeMetrics;
  composition: Record<string, number>;
}

export interface Calibration {
  recipes: string[];
  training_grid: number[];
  eval_grid: number[];
  rmse_percent_rh: number;
}

export interface Report {
  campaign_id: string;
  rounds_completed: number;
  rounds: RoundSummary[];
  best_so_far: number[];
  top_recipes: TopRecipe[];
  calibration?: Calibration;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export const STAGES = ["analysis", "retrieval", "mining", "feedback", "execution", "done"] as const;
export type Stage = (typeof STAGES)[number];
