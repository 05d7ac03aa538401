/** Wire types for the sidekick service JSON API.
 *
 * Every shape here mirrors a payload the HTTP service actually sends or
 * accepts; the console performs no clinical computation of its own, so
 * these interfaces are the complete vocabulary of the UI.
 */

/** Five-step severity band for a quantitative value. */
export type Band =
  | "strong_low"
  | "abnormal_low"
  | "normal"
  | "abnormal_high"
  | "strong_high";

export interface ParameterSpecPayload {
  id: string;
  name: string;
  kind: "quantitative" | "qualitative";
  unit?: string;
  thresholds?: { a1: number; a2: number; a3: number; a4: number };
  categories?: string[];
  organ_system?: string;
  expected_correlations?: [string, "+" | "-"][];
}

export interface ParameterSchemaPayload {
  parameters: ParameterSpecPayload[];
}

// --- service envelope ------------------------------------------------------

export interface HealthResponse {
  schema_version: string;
  status: string;
  backend: string;
}

export interface ErrorResponse {
  schema_version: string;
  error: string;
  detail: string;
}

// --- datasets & models -----------------------------------------------------

export interface LabeledDatasetRequest {
  kind: "labeled";
  schema_def: ParameterSchemaPayload;
  rows: Record<string, number | string>[];
  labels: string[];
}

export interface RegistryFieldPayload {
  id: string;
  name: string;
  kind: string;
  unit?: string;
  categories?: string[];
}

export interface RegistryRecordPayload {
  record_id: string;
  fields: Record<string, number | string>;
  events: { kind: string; date: string; attributes?: Record<string, unknown> }[];
}

export interface RegistryDatasetRequest {
  kind: "registry";
  registry_schema: {
    registry_id: string;
    fields: RegistryFieldPayload[];
    event_kinds: string[];
  };
  records: RegistryRecordPayload[];
  layout?: string[];
  rules?: Record<string, unknown>[];
}

export type DatasetRequest = LabeledDatasetRequest | RegistryDatasetRequest;

export interface DatasetResponse {
  schema_version: string;
  dataset_id: string;
  kind: string;
  size: number;
}

export interface TrainResponse {
  schema_version: string;
  model_id: string;
  dataset_id: string;
  decision_set: string[];
  depth: number;
}

export interface ModelResponse {
  schema_version: string;
  model_id: string;
  model: Record<string, unknown>;
  decision_set: string[];
  parameter_schema: ParameterSchemaPayload;
}

// --- consult sessions ------------------------------------------------------

export interface ConsultOpenRequest {
  model_id: string;
  patient_id: string;
  observations: Record<string, number | string>;
  decision: string;
  session_id?: string;
}

export type ConsultOutput =
  | { kind: "silent" }
  | {
      kind: "question";
      parameter_id: string;
      prompt: string;
      mismatching_parameter_ids: string[];
    }
  | {
      kind: "final_note";
      session_id: string;
      alpha_holmes: string;
      alpha_engine: string;
      mismatching_parameter_ids: string[];
      text: string;
    };

export interface ConsultStepResponse {
  schema_version: string;
  session_id: string;
  state: string;
  questions_asked: number;
  output: ConsultOutput;
}

export interface TranscriptEventPayload {
  kind: string;
  [key: string]: unknown;
}

export interface ConsultViewResponse {
  schema_version: string;
  session_id: string;
  patient_id: string;
  state: string;
  questions_asked: number;
  pending_parameter: string | null;
  transcript: TranscriptEventPayload[];
}

export interface ConsultCloseResponse {
  schema_version: string;
  session_id: string;
  alpha_holmes: string;
  alpha_engine: string;
  question_count: number;
  disagreement: boolean;
}

// --- ward & patients ---------------------------------------------------------

export interface ObservationRequest {
  parameter_id: string;
  value: number | string;
  timestamp: number;
  flag?: string;
}

export interface ObservationResponse {
  schema_version: string;
  accepted: boolean;
  warnings: string[];
}

export interface PrognosisRequest {
  author: string;
  made_at: number;
  horizon: number;
  predicted: string;
  predicted_syndrome?: string;
  explanation?: string;
}

export interface PrognosisResponse {
  schema_version: string;
  patient_id: string;
  prognoses: number;
}

export interface UnusualPairPayload {
  parameter_id: string;
  other_id: string;
  expected_sign: "+" | "-";
  delta: number;
  other_delta: number;
}

export interface AttentionResponse {
  schema_version: string;
  patient_id: string;
  groups: Record<string, number[]>;
  ranks: Record<string, number>;
  display: { quantitative: string[]; qualitative: string[] };
  unusual_pairs: UnusualPairPayload[];
  values: Record<string, number | string | null>;
  normalized: Record<string, number | null>;
  bands: Record<string, Band | null>;
  severity_trend: number;
}

export interface LeaderboardRow {
  patient_id: string;
  composite: number;
  n1: number;
  n2: number;
  n3: number;
  severity: number;
}

export interface LeaderboardResponse {
  schema_version: string;
  board: LeaderboardRow[];
  skipped: string[];
}

// --- record summaries ------------------------------------------------------

export interface KeyFieldPayload {
  field_id: string;
  rendered: string;
  emphasis: "plain" | "highlight";
}

export interface ChronologyEntryPayload {
  kind: string;
  date: string;
  attributes: Record<string, unknown>;
  flags: string[];
}

export interface ExcludedEntryPayload {
  kind: string;
  date_text: string;
  flag: string;
}

export interface PossibleErrorPayload {
  rule_id: string;
  message: string;
  likelihood_note: string | null;
}

export interface SummaryResponse {
  schema_version: string;
  record_id: string;
  key_fields: KeyFieldPayload[];
  chronology: {
    entries: ChronologyEntryPayload[];
    excluded: ExcludedEntryPayload[];
  };
  possible_errors: PossibleErrorPayload[];
  rendered: string;
}
