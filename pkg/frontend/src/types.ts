/**
 * Wire types for the workbench API. Field names mirror the server's JSON
 * payloads exactly; keep them in sync with the backend serializers.
 */

export const DIMENSIONS = [
  "Accuracy",
  "Terminology",
  "Fluency",
  "Style",
  "Audience Appropriateness",
  "Locale Convention",
  "Design and Markup",
] as const;

export type DimensionLabel = (typeof DIMENSIONS)[number];

/** Canonical sort position of a dimension label; unknown labels sort last. */
export function dimensionRank(label: string | null): number {
  if (label === null) return DIMENSIONS.length;
  const idx = (DIMENSIONS as readonly string[]).indexOf(label);
  return idx === -1 ? DIMENSIONS.length + 1 : idx;
}

export interface LanguagePairView {
  source_lang: string;
  target_lang: string;
}

export interface JobView {
  job_id: string;
  domain_tag: string;
  audience_note: string;
  visibility: string;
}

export interface DecisionView {
  dimensions: string[];
  rationale: string;
  origin: "llm" | "fallback" | "override";
  instruction_echo: string;
}

export interface CandidateView {
  candidate_id: string;
  text: string;
  role: "agent" | "editor" | "translator";
  dimension: string | null;
  explanation: string;
  tm_refs: string[];
  parent_id: string | null;
  round: number;
  created_at: string;
}

export interface EventView {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  at: string;
}

export type SessionStatus = "drafting" | "routed" | "deliberating" | "confirmed";

export interface SessionView {
  session_id: string;
  source_text: string;
  language_pair: LanguagePairView;
  job: JobView;
  goal: string;
  draft: string;
  status: SessionStatus;
  decision: DecisionView | null;
  candidates: CandidateView[];
  current_text: string;
  created_at: string;
  events: EventView[];
}

export interface TmEntryView {
  entry_id: string;
  namespace: { kind: string; key: string };
  kind: string;
  language_pair: LanguagePairView;
  source_text: string;
  target_text: string;
  provenance: string;
  created_at: string;
  note: string;
}

export interface TmSearchResult {
  entry: TmEntryView;
  score: number;
}

export interface CreateSessionRequest {
  source: string;
  src_lang: string;
  tgt_lang: string;
  draft?: string;
  goal?: string;
  job?: { domain_tag?: string; audience_note?: string; visibility?: string };
}
