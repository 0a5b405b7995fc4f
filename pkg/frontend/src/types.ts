/** Shapes of the annotation service JSON API (see docs/formats.md in
 * the repository root for the field-by-field contract). */

export interface ContextToken {
  form: string;
  /** null while the neighbouring token is still a masked disagreement */
  tag: string | null;
}

export interface QueueItem {
  position: string; // "<sentence_idx>:<token_idx>"
  left_context: ContextToken[];
  form: string;
  candidates: string[];
  proposals: string[];
  right_context: ContextToken[];
}

export interface SessionInfo {
  session_id: string;
  checkpoint: string;
  total: number;
  completed: number;
  remaining: number;
  window: number;
}

export interface BatchResponse {
  session_id: string;
  items: QueueItem[];
}

export interface ProgressInfo {
  completed: number;
  total: number;
  remaining: number;
  words_per_hour: number;
}

export interface AnnotationAck {
  ok: boolean;
  completed: number;
  remaining: number;
}

/** Reference throughput a trained annotator reaches with a good tool;
 * the progress header shows the live rate next to it. */
export const REFERENCE_WORDS_PER_HOUR = 2000;
