import { describe, expect, it } from "vitest";

import { StudioApi } from "../src/api.js";
import { SessionStore } from "../src/session.js";
import type { SessionSummary, StrokePayload } from "../src/types.js";

const STROKE: StrokePayload = {
  start: [0, 0],
  actions: [
    [0, 0, 0],
    [1, 1, 1],
  ],
};

/** Server stand-in with the same contract as the real service: committed
 * strokes only change through step/insert/retract, never client-side. */
function fakeServer() {
  const committed: StrokePayload[] = [];
  let finished = false;
  let strokesLeft = 3;
  const calls: string[] = [];

  const summary = (): SessionSummary => ({
    id: "s1",
    model_ref: "fake",
    seed: 0,
    finished,
    committed: [...committed],
    pending_preview: finished ? { finished: true } : { finished: false, stroke: STROKE },
    event_count: calls.length,
  });

  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const path = String(url);
    const respond = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), { status });
    calls.push(`${init?.method ?? "GET"} ${path}`);
    if (path.endsWith("/v1/sessions") && init?.method === "POST") {
      return respond(200, { id: "s1", pending_preview: { finished: false, stroke: STROKE } });
    }
    if (path.endsWith("/step")) {
      if (finished) return respond(409, { detail: "finished" });
      if (strokesLeft === 0) {
        finished = true;
        return respond(200, { finished: true, next_preview: { finished: true } });
      }
      strokesLeft -= 1;
      committed.push(STROKE);
      return respond(200, { stroke: STROKE, next_preview: { finished: false, stroke: STROKE } });
    }
    if (path.endsWith("/edit")) {
      const body = JSON.parse(String(init?.body)) as { op: string; stroke?: number[][] };
      if (body.op === "erase") {
        if (finished) return respond(409, { detail: "finished" });
      } else if (body.op === "retract") {
        if (committed.length === 0) return respond(409, { detail: "nothing to retract" });
        committed.pop();
        finished = false;
      } else if (body.op === "insert") {
        committed.push({ start: [9, 9], actions: body.stroke! });
      }
      return respond(200, { state_summary: summary() });
    }
    if (path.includes("/v1/sessions/")) return respond(200, summary());
    return respond(404, { detail: "nope" });
  }) as typeof fetch;

  return { fetchFn, calls, committedRef: committed };
}

function makeStore() {
  const server = fakeServer();
  const store = new SessionStore(new StudioApi("http://x", server.fetchFn));
  return { store, server };
}

describe("SessionStore", () => {
  it("create initializes with a pending preview and no strokes", async () => {
    const { store } = makeStore();
    await store.create({ code: [0, 0] });
    expect(store.state.sessionId).toBe("s1");
    expect(store.state.committed).toHaveLength(0);
    expect(store.state.pending?.finished).toBe(false);
  });

  it("step appends exactly one committed stroke", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    await store.step();
    expect(store.state.committed).toHaveLength(1);
    await store.step();
    expect(store.state.committed).toHaveLength(2);
  });

  it("erase leaves committed strokes unchanged and clears nothing client-side", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    await store.step();
    const before = store.state.committed.map((c) => c.stroke);
    await store.dispatchEdit({ op: "erase" });
    expect(store.state.committed.map((c) => c.stroke)).toEqual(before);
  });

  it("never mutates stroke action values client-side", async () => {
    const { store, server } = makeStore();
    await store.create({ code: [0] });
    await store.step();
    const local = store.state.committed[0].stroke;
    expect(local).toEqual(server.committedRef[0]);
    await store.dispatchEdit({ op: "insert", stroke: [[0, 0, 0], [2, 2, 1]] });
    expect(store.state.committed.map((c) => c.stroke)).toEqual(server.committedRef);
  });

  it("marks inserted strokes with their source tag", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    await store.step();
    await store.dispatchEdit({ op: "insert", stroke: [[0, 0, 0], [2, 2, 1]] });
    const sources = store.state.committed.map((c) => c.source);
    expect(sources).toEqual(["generated", "inserted"]);
  });

  it("retract with empty canvas issues no request", async () => {
    const { store, server } = makeStore();
    await store.create({ code: [0] });
    const callsBefore = server.calls.length;
    await store.dispatchEdit({ op: "retract" });
    expect(server.calls.length).toBe(callsBefore);
  });

  it("finishing disables stepping", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    while (store.canStep()) {
      await store.step();
    }
    expect(store.state.finished).toBe(true);
    expect(store.canStep()).toBe(false);
  });

  it("auto-play steps to completion then pauses", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    store.startAutoPlay(1);
    await new Promise<void>((resolve) => {
      const check = () => {
        if (store.state.finished && store.state.mode === "manual-step") resolve();
        else setTimeout(check, 5);
      };
      check();
    });
    expect(store.state.committed).toHaveLength(3);
  });

  it("auto-play pauses on a failed request", async () => {
    let failNext = false;
    const server = fakeServer();
    const flaky = (async (url: RequestInfo | URL, init?: RequestInit) => {
      if (failNext && String(url).endsWith("/step")) {
        failNext = false;
        return new Response(JSON.stringify({ detail: "boom" }), { status: 500 });
      }
      return server.fetchFn(url, init);
    }) as typeof fetch;
    const store = new SessionStore(new StudioApi("http://x", flaky));
    await store.create({ code: [0] });
    failNext = true;
    store.startAutoPlay(1);
    await new Promise((r) => setTimeout(r, 50));
    expect(store.state.mode).toBe("manual-step");
    expect(store.state.lastError).toContain("500");
    expect(store.state.finished).toBe(false);
  });

  it("surfaces server errors as lastError without breaking state", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    while (store.canStep()) await store.step();
    await store.dispatchEdit({ op: "erase" });
    expect(store.state.lastError).toContain("409");
  });

  it("state after any acknowledged request equals a fresh GET", async () => {
    const { store } = makeStore();
    await store.create({ code: [0] });
    await store.step();
    await store.dispatchEdit({ op: "insert", stroke: [[0, 0, 0], [1, 1, 1]] });
    const local = store.state.committed.map((c) => c.stroke);
    await store.refresh();
    expect(store.state.committed.map((c) => c.stroke)).toEqual(local);
  });
});
