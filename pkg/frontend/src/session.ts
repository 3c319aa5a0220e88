/** Client-side session store. The server is the single source of truth: every
 * mutation goes through the API and the local state is refreshed from the
 * response. At most one command is in flight at a time; auto-play is a
 * cancelable loop on top of step(). */

import { ApiError, StudioApi } from "./api.js";
import type {
  EditRequest,
  PendingPreview,
  SessionSummary,
  StrokePayload,
  StrokeSource,
} from "./types.js";

export type Mode = "manual-step" | "auto-play";

export interface UiSessionState {
  sessionId: string | null;
  committed: { stroke: StrokePayload; source: StrokeSource }[];
  pending: PendingPreview | null;
  finished: boolean;
  mode: Mode;
  busy: boolean;
  selectedLibraryStroke: StrokePayload | null;
  lastError: string | null;
}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    committed: [],
    pending: null,
    finished: false,
    mode: "manual-step",
    busy: false,
    selectedLibraryStroke: null,
    lastError: null,
  };
}

type Listener = (state: UiSessionState) => void;

export class SessionStore {
  state: UiSessionState = initialState();
  private listeners: Listener[] = [];
  private autoPlayTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private api: StudioApi) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private update(patch: Partial<UiSessionState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  private async exclusive<T>(work: () => Promise<T>): Promise<T | null> {
    if (this.state.busy) return null; // one in-flight command only
    this.update({ busy: true, lastError: null });
    try {
      return await work();
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
      this.update({ lastError: message });
      return null;
    } finally {
      this.update({ busy: false });
    }
  }

  private applySummary(summary: SessionSummary): void {
    const sources = this.state.committed.map((c) => c.source);
    this.update({
      committed: summary.committed.map((stroke, i) => ({
        stroke,
        source: sources[i] ?? "generated",
      })),
      pending: summary.pending_preview,
      finished: summary.finished,
    });
  }

  async create(body: { sketch?: StrokePayload[]; code?: number[]; seed?: number }): Promise<void> {
    await this.exclusive(async () => {
      const resp = await this.api.createSession(body);
      this.update({
        sessionId: resp.id,
        committed: [],
        pending: resp.pending_preview,
        finished: resp.pending_preview.finished === true,
      });
    });
  }

  canStep(): boolean {
    return this.state.sessionId !== null && !this.state.finished && !this.state.busy;
  }

  canRetract(): boolean {
    return this.state.sessionId !== null && this.state.committed.length > 0 && !this.state.busy;
  }

  async step(): Promise<boolean> {
    const result = await this.exclusive(async () => {
      const resp = await this.api.step(this.state.sessionId!);
      if (resp.stroke) {
        this.update({
          committed: [...this.state.committed, { stroke: resp.stroke, source: "generated" }],
          pending: resp.next_preview,
        });
        return true;
      }
      this.update({ finished: true, pending: null });
      return false;
    });
    return result === true;
  }

  async dispatchEdit(edit: EditRequest): Promise<void> {
    if (edit.op === "retract" && !this.canRetract()) return; // button disabled: no request
    await this.exclusive(async () => {
      const resp = await this.api.edit(this.state.sessionId!, edit);
      const inserted = edit.op === "insert";
      const summary = resp.state_summary;
      const sources = this.state.committed.map((c) => c.source);
      this.update({
        committed: summary.committed.map((stroke, i) => ({
          stroke,
          source: i === summary.committed.length - 1 && inserted ? "inserted" : (sources[i] ?? "generated"),
        })),
        pending: summary.pending_preview,
        finished: summary.finished,
      });
    });
  }

  async refresh(): Promise<void> {
    await this.exclusive(async () => {
      this.applySummary(await this.api.getSession(this.state.sessionId!));
    });
  }

  /** Step repeatedly until the drawing finishes or pause() is called. */
  startAutoPlay(intervalMs: number): void {
    if (this.state.mode === "auto-play") return;
    this.update({ mode: "auto-play" });
    const tick = async () => {
      if (this.state.mode !== "auto-play") return;
      if (!this.canStep()) {
        this.pause();
        return;
      }
      await this.step();
      if (this.state.finished || this.state.lastError !== null) {
        this.pause(); // completion or a failed request both stop playback
        return;
      }
      this.autoPlayTimer = setTimeout(tick, intervalMs);
    };
    this.autoPlayTimer = setTimeout(tick, 0);
  }

  pause(): void {
    if (this.autoPlayTimer !== null) {
      clearTimeout(this.autoPlayTimer);
      this.autoPlayTimer = null;
    }
    if (this.state.mode !== "manual-step") this.update({ mode: "manual-step" });
  }

  selectLibraryStroke(stroke: StrokePayload | null): void {
    this.update({ selectedLibraryStroke: stroke });
  }

  /** Drop the selected library stroke into the drawing as an insertion. */
  async insertSelected(): Promise<void> {
    const chosen = this.state.selectedLibraryStroke;
    if (!chosen || this.state.finished) return;
    await this.dispatchEdit({ op: "insert", stroke: chosen.actions });
  }
}
