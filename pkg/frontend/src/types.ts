/** Wire types mirroring the session service JSON. */

export interface StrokePayload {
  /** Absolute starting coordinate in normalized canvas units. */
  start: [number, number];
  /** Rows of [dx, dy, pen] with pen 0=down, 1=lift, 2=end. */
  actions: number[][];
}

export interface PendingPreview {
  finished: boolean;
  stop_probs?: [number, number];
  stroke?: StrokePayload;
}

export interface SessionSummary {
  id: string;
  model_ref: string;
  seed: number;
  finished: boolean;
  committed: StrokePayload[];
  pending_preview: PendingPreview;
  event_count: number;
}

export interface CreateSessionResponse {
  id: string;
  pending_preview: PendingPreview;
}

export interface StepResponse {
  stroke?: StrokePayload;
  finished?: boolean;
  next_preview: PendingPreview;
}

export type EditOp = "replace" | "erase" | "insert" | "retract";

export interface EditRequest {
  op: EditOp;
  stroke?: number[][];
  embedding_id?: string;
  embedding?: number[];
}

export interface LibraryStrokes {
  category: string;
  strokes: StrokePayload[];
}

export type StrokeSource = "generated" | "inserted";

/** A stroke resolved into viewport pixels for canvas drawing. */
export interface CanvasStroke {
  points: { x: number; y: number }[];
  source: StrokeSource;
  stepIndex: number;
}
