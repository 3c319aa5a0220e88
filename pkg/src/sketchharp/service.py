"""HTTP+JSON session service exposing live drawing sessions.

Sessions live in memory behind per-session locks; requests to one session are
serialized, distinct sessions run concurrently against the shared read-only
model. Idle sessions (and cached embeddings) are garbage-collected lazily.
All coordinates on the wire are normalized canvas units.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .corpus import AnchoredStroke, SketchRecord, Stroke
from .errors import (
    InvalidSketch,
    NothingToRetract,
    OverLimit,
    SessionFinished,
    SketchHarpError,
)
from .manipulation import DrawingSession
from .model import HarpModel

DEFAULT_GC_SECONDS = 30 * 60


class CreateSessionRequest(BaseModel):
    sketch: Optional[list[dict]] = None   # [{"start": [x, y], "actions": [[dx, dy, p], ...]}]
    code: Optional[list[float]] = None
    seed: Optional[int] = None


class EditRequest(BaseModel):
    op: str
    stroke: Optional[list[list[float]]] = None
    embedding_id: Optional[str] = None
    embedding: Optional[list[float]] = None


class EncodeRequest(BaseModel):
    actions: list[list[float]]


@dataclass
class SessionEntry:
    session: DrawingSession
    seed: int
    created_at: float
    last_access: float
    lock: threading.Lock = field(default_factory=threading.Lock)


def _stroke_payload(anchored: AnchoredStroke) -> dict:
    return {
        "start": [float(anchored.start[0]), float(anchored.start[1])],
        "actions": [[float(dx), float(dy), int(p)] for dx, dy, p in anchored.stroke.data],
    }


def _parse_actions(actions: list[list[float]], max_len: int) -> Stroke:
    try:
        stroke = Stroke.from_actions([(float(a[0]), float(a[1]), int(a[2])) for a in actions])
        stroke.validate(max_len)
        return stroke
    except OverLimit as exc:
        raise HTTPException(422, str(exc)) from exc
    except (IndexError, TypeError, ValueError, InvalidSketch) as exc:
        raise HTTPException(422, f"malformed stroke: {exc}") from exc


def _parse_sketch(payload: list[dict]) -> SketchRecord:
    try:
        strokes = [
            AnchoredStroke(
                Stroke.from_actions([(a[0], a[1], int(a[2])) for a in item["actions"]]),
                (float(item["start"][0]), float(item["start"][1])),
            )
            for item in payload
        ]
        return SketchRecord(strokes=strokes)
    except (KeyError, IndexError, TypeError, ValueError, InvalidSketch) as exc:
        raise HTTPException(422, f"malformed sketch: {exc}") from exc


def create_app(
    model: HarpModel,
    corpus: Optional[list[SketchRecord]] = None,
    model_ref: str = "in-memory",
    gc_idle_seconds: float = DEFAULT_GC_SECONDS,
) -> FastAPI:
    app = FastAPI(title="sketchharp studio", version="1")
    sessions: dict[str, SessionEntry] = {}
    embeddings: dict[str, tuple[np.ndarray, float]] = {}
    registry_lock = threading.Lock()
    seed_counter = np.random.SeedSequence(int(time.time_ns()) % 2**32)
    by_category: dict[str, list[AnchoredStroke]] = {}
    for rec in corpus or []:
        by_category.setdefault(rec.category, []).extend(rec.strokes)
    library_rng = np.random.default_rng(0)

    def gc(now: float) -> None:
        with registry_lock:
            for sid in [s for s, e in sessions.items() if now - e.last_access > gc_idle_seconds]:
                del sessions[sid]
            for eid in [e for e, (_, t) in embeddings.items() if now - t > gc_idle_seconds]:
                del embeddings[eid]

    def entry(session_id: str) -> SessionEntry:
        gc(time.monotonic())
        with registry_lock:
            e = sessions.get(session_id)
        if e is None:
            raise HTTPException(404, "unknown session")
        e.last_access = time.monotonic()
        return e

    def summary(e: SessionEntry, session_id: str) -> dict:
        s = e.session
        return {
            "id": session_id,
            "model_ref": model_ref,
            "seed": e.seed,
            "created_at": e.created_at,
            "finished": s.finished,
            "committed": [_stroke_payload(a) for a in s.committed],
            "pending_preview": s.preview(),
            "event_count": len(s.event_log),
        }

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "model_ref": model_ref}

    @app.post("/v1/sessions")
    def create_session(req: CreateSessionRequest):
        if (req.sketch is None) == (req.code is None):
            raise HTTPException(422, "provide exactly one of sketch or code")
        if req.sketch is not None:
            rec = _parse_sketch(req.sketch)
            try:
                source = rec
                seed = req.seed if req.seed is not None else int(seed_counter.spawn(1)[0].generate_state(1)[0])
                session = DrawingSession(model, source, seed=seed)
            except (InvalidSketch, OverLimit, SketchHarpError) as exc:
                raise HTTPException(422, str(exc)) from exc
        else:
            if len(req.code) != model.cfg.embed_dim:
                raise HTTPException(422, f"code must have {model.cfg.embed_dim} entries")
            seed = req.seed if req.seed is not None else int(seed_counter.spawn(1)[0].generate_state(1)[0])
            session = DrawingSession(model, np.asarray(req.code, dtype=np.float64), seed=seed)
        session_id = uuid.uuid4().hex
        now = time.monotonic()
        with registry_lock:
            sessions[session_id] = SessionEntry(
                session=session, seed=seed, created_at=now, last_access=now
            )
        return {"id": session_id, "pending_preview": session.preview()}

    @app.post("/v1/sessions/{session_id}/step")
    def step_session(session_id: str):
        e = entry(session_id)
        with e.lock:
            if e.session.finished:
                raise HTTPException(409, "session finished")
            out = e.session.step()
            if out is None:
                return {"finished": True, "next_preview": e.session.preview()}
            return {"stroke": _stroke_payload(out), "next_preview": e.session.preview()}

    @app.post("/v1/sessions/{session_id}/edit")
    def edit_session(session_id: str, req: EditRequest):
        e = entry(session_id)
        with e.lock:
            s = e.session
            try:
                if req.op == "erase":
                    s.erase_pending()
                elif req.op == "retract":
                    s.retract_last()
                elif req.op == "insert":
                    if req.stroke is None:
                        raise HTTPException(422, "insert needs a stroke")
                    s.insert_stroke(_parse_actions(req.stroke, model.cfg.max_stroke_len))
                elif req.op == "replace":
                    if req.embedding_id is not None:
                        with registry_lock:
                            cached = embeddings.get(req.embedding_id)
                        if cached is None:
                            raise HTTPException(404, "unknown embedding id")
                        s.replace_pending(cached[0])
                    elif req.embedding is not None:
                        if len(req.embedding) != model.cfg.embed_dim:
                            raise HTTPException(422, "bad embedding length")
                        s.replace_pending(np.asarray(req.embedding, dtype=np.float64))
                    elif req.stroke is not None:
                        with torch.no_grad():
                            s.replace_pending(model.encode_stroke(_parse_actions(req.stroke, model.cfg.max_stroke_len)))
                    else:
                        raise HTTPException(422, "replace needs an embedding or stroke")
                else:
                    raise HTTPException(422, f"unknown op {req.op!r}")
            except (SessionFinished, NothingToRetract) as exc:
                raise HTTPException(409, str(exc)) from exc
            except OverLimit as exc:
                raise HTTPException(422, str(exc)) from exc
            return {"state_summary": summary(e, session_id)}

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        e = entry(session_id)
        with e.lock:
            return summary(e, session_id)

    @app.get("/v1/sessions/{session_id}/events")
    def get_events(session_id: str):
        """The session's command log, replayable via the CLI with the same seed."""
        e = entry(session_id)
        with e.lock:
            return {"seed": e.seed, "events": list(e.session.event_log)}

    @app.post("/v1/strokes/encode")
    def encode_stroke(req: EncodeRequest):
        stroke = _parse_actions(req.actions, model.cfg.max_stroke_len)
        with torch.no_grad():
            vec = model.encode_stroke(stroke).to(torch.float64).numpy()
        embedding_id = uuid.uuid4().hex
        with registry_lock:
            embeddings[embedding_id] = (vec, time.monotonic())
        return {"embedding_id": embedding_id, "dim": len(vec)}

    @app.get("/v1/embeddings/{embedding_id}")
    def get_embedding(embedding_id: str):
        gc(time.monotonic())
        with registry_lock:
            cached = embeddings.get(embedding_id)
        if cached is None:
            raise HTTPException(404, "unknown embedding id")
        return {"embedding_id": embedding_id, "embedding": [float(v) for v in cached[0]]}

    @app.get("/v1/library/strokes")
    def library_strokes(category: str, count: int = 5):
        strokes = by_category.get(category)
        if not strokes:
            raise HTTPException(404, f"unknown category {category!r}")
        picks = library_rng.choice(len(strokes), size=min(count, len(strokes)), replace=False)
        return {"category": category, "strokes": [_stroke_payload(strokes[i]) for i in picks]}

    @app.get("/v1/library/categories")
    def library_categories():
        return {"categories": sorted(by_category.keys())}

    @app.get("/v1/sessions/{session_id}/stream")
    async def stream_session(session_id: str, interval_ms: int = 0):
        """Server-push auto-play: steps the session to completion, one event
        per committed stroke."""
        e = entry(session_id)

        async def events():
            while True:
                with e.lock:
                    if e.session.finished:
                        yield f"data: {json.dumps({'finished': True})}\n\n"
                        return
                    out = e.session.step()
                payload = (
                    {"finished": True} if out is None else {"stroke": _stroke_payload(out)}
                )
                yield f"data: {json.dumps(payload)}\n\n"
                if out is None:
                    return
                if interval_ms:
                    await asyncio.sleep(interval_ms / 1000.0)

        return StreamingResponse(events(), media_type="text/event-stream")

    return app
