/** Wire types for the session service. The UI never derives ranks, scores,
 * or verdicts itself; everything below is displayed verbatim. */

export interface SessionEvent {
  sequence_no: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface StoryOut {
  id: string;
  epic: string;
  title: string;
  role: string;
  activity: string;
  goal: string;
  acceptance_criteria: string[];
  status: string;
  description: string;
}

export interface BacklogEntryOut {
  story_id: string;
  /** Pre-formatted by the backend; ties arrive as e.g. "1.5". */
  rank: string;
  score: string;
  justification: string;
}

export interface BacklogOut {
  technique: string;
  entries: BacklogEntryOut[];
}

export interface TranscriptLine {
  sequence_no: number;
  phase: string;
  speaker: string;
  content: string;
  technique?: string;
}

export interface QualityReportOut {
  story_id: string;
  invest: Record<string, { pass: boolean; reason: string }>;
  iso29148: Record<string, { pass: boolean; reason: string }>;
  overall_pass: boolean;
}

export interface MetricsOut {
  project: string;
  model_name: string;
  api_response_time: number;
  word_count: number;
  distinct_epics: number;
  distinct_stories: number;
  mean_similarity: number;
}

export interface FeedbackIn {
  practitioner_role: string;
  experience: string;
  satisfaction: string;
  comment: string;
  suggestion: string;
}
