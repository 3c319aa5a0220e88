"""Resumable drawing sessions with stroke-level edits during generation.

A session walks the generation loop one stroke at a time. Between strokes the
next stroke embedding and stop marker sit in ``pending``, exposed for editing:
``replace_pending`` swaps the embedding, ``erase_pending`` discards the stroke
without drawing it, ``insert_stroke`` injects an external stroke at the
breakpoint, and ``retract_last`` rolls the whole session (including its
randomness) back to just before the last committed stroke.

Every command appends to an event log; replaying the log on a fresh session
with the same seed reproduces the final sketch bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Optional, Union

import numpy as np
import torch

from .corpus import AnchoredStroke, SketchRecord, Stroke
from .distributions import (
    SampleStream,
    StopMarker,
    sample_position,
    sample_stop,
)
from .errors import (
    InvalidSketch,
    NothingToRetract,
    OverLimit,
    SessionFinished,
    ShapeError,
)
from .generator import (
    GeneratorState,
    decode_stroke_actions,
    initial_state,
    predict_next_stroke,
    predict_position,
)
from .model import HarpModel


@dataclass(frozen=True)
class PendingStroke:
    """The not-yet-committed prediction: embedding plus stop marker."""

    e_hat: torch.Tensor  # (1, E)
    marker: StopMarker


@dataclass(frozen=True)
class Snapshot:
    """Session state captured before a committing command, sufficient to make
    retraction exact: generator state, the pending prediction and the decoder
    state it was computed from, the rng state, and the commit count."""

    state: GeneratorState
    pre_pending_sok: Optional[tuple]
    pending: Optional[PendingStroke]
    rng_state: dict
    committed_len: int


class DrawingSession:
    """One live generation of a sketch, steerable between strokes."""

    def __init__(
        self,
        model: HarpModel,
        source: Union[SketchRecord, torch.Tensor, np.ndarray],
        seed: int = 0,
        redecode_inserted: bool = False,
        erase_keeps_context: bool = False,
    ):
        self.model = model
        self.redecode_inserted = redecode_inserted
        self.erase_keeps_context = erase_keeps_context
        if isinstance(source, SketchRecord):
            source.validate(model.cfg.max_strokes, model.cfg.max_stroke_len)
            with torch.no_grad():
                self.code = model.encode_record(source)
        else:
            code = torch.as_tensor(source, dtype=model.dtype).reshape(-1)
            if code.shape != (model.cfg.embed_dim,):
                raise InvalidSketch(f"code must have {model.cfg.embed_dim} entries")
            self.code = code
        self.stream = SampleStream(seed)
        self.seed = seed
        self.state = initial_state(model)
        self.committed: list[AnchoredStroke] = []
        self.snapshots: list[Snapshot] = []
        self.event_log: list[dict] = []
        self.finished = False
        self.pending: Optional[PendingStroke] = None
        self._pre_pending_sok: Optional[tuple] = None
        self._compute_pending()

    # -- internals --

    def _compute_pending(self) -> None:
        self._pre_pending_sok = self.state.sok
        with torch.no_grad():
            e_hat, marker, self.state = predict_next_stroke(self.model, self.code, self.state)
        self.pending = PendingStroke(e_hat, marker)

    def _require_active(self) -> None:
        if self.finished:
            raise SessionFinished("session already finished")

    def _snapshot(self) -> Snapshot:
        return Snapshot(
            state=self.state,
            pre_pending_sok=self._pre_pending_sok,
            pending=self.pending,
            rng_state=self.stream.state(),
            committed_len=len(self.committed),
        )

    def _finish(self) -> None:
        self.finished = True
        self.pending = None

    def _advance_counter_or_pend(self) -> None:
        if self.state.k >= self.model.cfg.max_strokes:
            self._finish()
        else:
            self._compute_pending()

    def _anchor_and_update(self, e_hat: torch.Tensor) -> tuple[float, float]:
        """Run the position stage for ``e_hat`` and make it the new context."""
        with torch.no_grad():
            dist, state = predict_position(self.model, self.code, e_hat, self.state)
            xy = sample_position(dist, self.stream)
            p_hat = self.model.encode_position(xy).unsqueeze(0)
        self.state = dc_replace(state, last_e=e_hat, last_p=p_hat, k=state.k + 1)
        return xy

    # -- commands --

    def step(self) -> Optional[AnchoredStroke]:
        """Commit the pending stroke (or finish). Returns the committed stroke,
        or None when the sampled stop marker ends the drawing."""
        self._require_active()
        self.event_log.append({"kind": "step"})
        snap = self._snapshot()
        if sample_stop(self.pending.marker, self.stream):
            self._finish()
            return None
        self.snapshots.append(snap)
        e_hat = self.pending.e_hat
        xy = self._anchor_and_update(e_hat)
        with torch.no_grad():
            _, stroke = decode_stroke_actions(
                self.model, self.code, e_hat, "sample", stream=self.stream
            )
        anchored = AnchoredStroke(stroke, xy)
        self.committed.append(anchored)
        self._advance_counter_or_pend()
        return anchored

    def replace_pending(self, embedding) -> None:
        """Swap the pending stroke embedding; the stop marker is untouched."""
        self._require_active()
        e = torch.as_tensor(
            embedding.detach() if isinstance(embedding, torch.Tensor) else embedding,
            dtype=self.model.dtype,
        ).reshape(-1)
        if e.shape != (self.model.cfg.embed_dim,):
            raise ShapeError(f"embedding must have {self.model.cfg.embed_dim} entries")
        self.event_log.append({"kind": "replace", "embedding": e.tolist()})
        self.pending = PendingStroke(e.unsqueeze(0), self.pending.marker)

    def erase_pending(self) -> None:
        """Discard the pending stroke without drawing it. Only the stop draw is
        consumed; the drawing context keeps its pre-erasion values and the next
        prediction continues from the advanced decoder state. With
        erase_keeps_context the erased embedding still becomes the previous-
        stroke context (its position embedding stays untouched either way)."""
        self._require_active()
        self.event_log.append({"kind": "erase"})
        pending = self.pending
        if sample_stop(pending.marker, self.stream):
            self._finish()
            return
        if self.erase_keeps_context:
            self.state = dc_replace(self.state, last_e=pending.e_hat, k=self.state.k + 1)
        else:
            self.state = dc_replace(self.state, k=self.state.k + 1)
        self._advance_counter_or_pend()

    def insert_stroke(self, stroke: Stroke) -> AnchoredStroke:
        """Inject an external stroke at the breakpoint: encode it, anchor it
        through the position decoder, commit its actions (verbatim by default,
        re-decoded when the session was built with redecode_inserted), then
        resume prediction conditioned on the injected stroke. The discarded
        pending prediction leaves no trace in the decoder state."""
        self._require_active()
        if len(stroke) > self.model.cfg.max_stroke_len:
            raise OverLimit(f"stroke has {len(stroke)} actions")
        self.event_log.append(
            {"kind": "insert", "actions": [[dx, dy, int(p)] for dx, dy, p in stroke.data]}
        )
        self.snapshots.append(self._snapshot())
        with torch.no_grad():
            eps = self.model.encode_stroke(stroke).unsqueeze(0)
        xy = self._anchor_and_update(eps)
        if self.redecode_inserted:
            with torch.no_grad():
                _, committed_stroke = decode_stroke_actions(
                    self.model, self.code, eps, "sample", stream=self.stream
                )
        else:
            committed_stroke = Stroke(stroke.data.copy())
        anchored = AnchoredStroke(committed_stroke, xy)
        self.committed.append(anchored)
        # rewind the stroke decoder past the discarded pending prediction
        self.state = dc_replace(self.state, sok=self._pre_pending_sok)
        self._advance_counter_or_pend()
        return anchored

    def retract_last(self) -> None:
        """Remove the last committed stroke and restore the exact pre-commit
        session state, randomness included."""
        if not self.committed:
            raise NothingToRetract("no committed strokes")
        self.event_log.append({"kind": "retract"})
        snap = self.snapshots.pop()
        self.state = snap.state
        self._pre_pending_sok = snap.pre_pending_sok
        self.pending = snap.pending
        self.stream.restore(snap.rng_state)
        del self.committed[snap.committed_len :]
        self.finished = False

    def run_to_completion(self) -> SketchRecord:
        while not self.finished:
            self.step()
        return self.render()

    def render(self) -> SketchRecord:
        """Committed strokes so far as a record (empty records allowed)."""
        return SketchRecord(strokes=list(self.committed), category="", scale=1.0)

    def preview(self) -> dict:
        """Peek at the pending stroke without touching session state: stop
        probabilities plus a greedy decode anchored at the position mean. The
        decode is deterministic and the session stream is never consumed."""
        if self.finished or self.pending is None:
            return {"finished": True}
        with torch.no_grad():
            dist, _ = predict_position(self.model, self.code, self.pending.e_hat, self.state)
            _, stroke = decode_stroke_actions(
                self.model, self.code, self.pending.e_hat, "sample", greedy=True
            )
        return {
            "finished": False,
            "stop_probs": [float(v) for v in self.pending.marker.probs],
            "stroke": {
                "start": [dist.mu_x, dist.mu_y],
                "actions": [[float(dx), float(dy), int(p)] for dx, dy, p in stroke.data],
            },
        }


def begin_session(
    model: HarpModel,
    source: Union[SketchRecord, torch.Tensor, np.ndarray],
    seed: int = 0,
    redecode_inserted: bool = False,
    erase_keeps_context: bool = False,
) -> DrawingSession:
    return DrawingSession(
        model, source, seed=seed, redecode_inserted=redecode_inserted,
        erase_keeps_context=erase_keeps_context,
    )


def apply_event(session: DrawingSession, event: dict) -> None:
    kind = event.get("kind")
    if kind == "step":
        session.step()
    elif kind == "erase":
        session.erase_pending()
    elif kind == "replace":
        session.replace_pending(np.asarray(event["embedding"], dtype=np.float64))
    elif kind == "insert":
        session.insert_stroke(Stroke.from_actions([(a[0], a[1], int(a[2])) for a in event["actions"]]))
    elif kind == "retract":
        session.retract_last()
    elif kind == "finish":
        while not session.finished:
            session.step()
    else:
        raise InvalidSketch(f"unknown event kind {kind!r}")


def replay_events(
    model: HarpModel,
    source: Union[SketchRecord, torch.Tensor, np.ndarray],
    seed: int,
    events: list[dict],
    redecode_inserted: bool = False,
    erase_keeps_context: bool = False,
) -> DrawingSession:
    """Rebuild a session from its event log; bit-exact given the same seed."""
    session = begin_session(
        model, source, seed=seed, redecode_inserted=redecode_inserted,
        erase_keeps_context=erase_keeps_context,
    )
    for event in events:
        apply_event(session, event)
    return session
