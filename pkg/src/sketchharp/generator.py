"""The three-stage hierarchical sampling loop: predict a stroke embedding,
anchor it on the canvas, translate it into drawing actions.

Randomness is consumed in a fixed order per stroke: one uniform for the stop
marker, two normals for the starting coordinate, then per action one uniform
(mixture component), two normals (offset), one uniform (pen state). Traces are
therefore replayable from the stream seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import torch

from .corpus import PEN_DOWN, AnchoredStroke, SketchRecord, Stroke
from .distributions import (
    ActionDistribution,
    PositionDistribution,
    SampleStream,
    StopMarker,
    sample_action,
    sample_position,
    sample_stop,
)
from .encoders import start_token
from .errors import ShapeError
from .model import HarpModel

# Step-zero input for the sequence decoder: pen down at zero offset.
START_ACTION = (0.0, 0.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class GeneratorState:
    """Value-typed recurrent state of the stroke and position decoders plus
    the last committed embedding and position embedding. Never mutated; every
    step returns a fresh instance."""

    sok: Optional[tuple[torch.Tensor, torch.Tensor]]
    pos: Optional[tuple[torch.Tensor, torch.Tensor]]
    last_e: torch.Tensor   # (1, E) previously drawn stroke embedding
    last_p: torch.Tensor   # (1, E) its position embedding
    k: int                 # strokes drawn so far


def initial_state(model: HarpModel) -> GeneratorState:
    """Start markers: both the embedding and position slots hold -1 vectors."""
    tok = start_token(model.cfg.embed_dim, model.dtype).unsqueeze(0)
    return GeneratorState(sok=None, pos=None, last_e=tok, last_p=tok.clone(), k=0)


def predict_next_stroke(
    model: HarpModel, y: torch.Tensor, state: GeneratorState
) -> tuple[torch.Tensor, StopMarker, GeneratorState]:
    """One stroke-decoder step from state.last_e + state.last_p. Returns the
    predicted embedding (1, E), the stop marker, and the advanced state."""
    prev = state.last_e + state.last_p
    e_hat, stop_logits, sok_state = model.p_sok.step(y.reshape(1, -1), prev, state.sok)
    probs = torch.softmax(stop_logits[0], dim=-1)
    marker = StopMarker(probs.detach().to(torch.float64).numpy())
    return e_hat, marker, replace(state, sok=sok_state)


def predict_position(
    model: HarpModel, y: torch.Tensor, e_k: torch.Tensor, state: GeneratorState
) -> tuple[PositionDistribution, GeneratorState]:
    """One position-decoder step conditioned on the previous stroke context and
    the embedding being anchored."""
    prev = state.last_e + state.last_p
    (mu_x, mu_y, sx, sy, rho), pos_state = model.p_pos.step(
        y.reshape(1, -1), prev, e_k.reshape(1, -1), state.pos
    )
    dist = PositionDistribution(
        *(float(v[0].detach()) for v in (mu_x, mu_y, sx, sy, rho))
    )
    return dist, replace(state, pos=pos_state)


def _action_distribution(params) -> ActionDistribution:
    weights, mu_x, mu_y, sx, sy, rho, pen_logits = params
    to = lambda v: v[0].detach().to(torch.float64).numpy()
    return ActionDistribution(
        weights=to(weights), mu_x=to(mu_x), mu_y=to(mu_y),
        sigma_x=to(sx), sigma_y=to(sy), rho=to(rho),
        pen_probs=torch.softmax(pen_logits[0], dim=-1).detach().to(torch.float64).numpy(),
    )


def _action_tensor(dx: float, dy: float, pen: int, dtype) -> torch.Tensor:
    row = torch.zeros(1, 5, dtype=dtype)
    row[0, 0] = dx
    row[0, 1] = dy
    row[0, 2 + pen] = 1.0
    return row


def decode_stroke_actions(
    model: HarpModel,
    y: torch.Tensor,
    e_k: torch.Tensor,
    mode: str = "sample",
    teacher_actions: Optional[Stroke] = None,
    stream: Optional[SampleStream] = None,
    greedy: bool = False,
) -> tuple[list[ActionDistribution], Optional[Stroke]]:
    """Translate one stroke embedding into action distributions and, when
    sampling, into a concrete stroke. The recurrence is reset per call, so
    strokes of one sketch can be decoded independently.

    mode="teacher": teacher-force over ``teacher_actions``; returns one
    distribution per real action and no stroke.
    mode="sample": draw actions until the pen state leaves pen-down or the
    stroke-length limit is hit. ``greedy`` takes mixture-argmax means and
    argmax pen states instead of consuming the stream.
    """
    y = y.reshape(1, -1)
    e_k = e_k.reshape(1, -1)
    state = model.p_seq.initial_state(y, e_k)
    dists: list[ActionDistribution] = []
    if mode == "teacher":
        if teacher_actions is None:
            raise ShapeError("teacher mode needs ground-truth actions")
        prev = _action_tensor(*START_ACTION[:2], 0, model.dtype)
        for dx, dy, pen in teacher_actions.data:
            params, state = model.p_seq.step(y, e_k, prev, state)
            dists.append(_action_distribution(params))
            prev = _action_tensor(float(dx), float(dy), int(pen), model.dtype)
        return dists, None
    if mode != "sample":
        raise ShapeError(f"unknown mode {mode!r}")
    if stream is None and not greedy:
        raise ShapeError("sample mode needs a sample stream")
    actions: list[tuple[float, float, int]] = []
    prev = _action_tensor(*START_ACTION[:2], 0, model.dtype)
    for _ in range(model.cfg.max_stroke_len):
        params, state = model.p_seq.step(y, e_k, prev, state)
        dist = _action_distribution(params)
        dists.append(dist)
        if greedy:
            m = int(np.argmax(dist.weights))
            dx, dy = float(dist.mu_x[m]), float(dist.mu_y[m])
            pen = int(np.argmax(dist.pen_probs))
        else:
            dx, dy, pen = sample_action(dist, stream)
        actions.append((dx, dy, pen))
        if pen != PEN_DOWN:
            break
        prev = _action_tensor(dx, dy, pen, model.dtype)
    return dists, Stroke.from_actions(actions)


def generate_sketch(
    model: HarpModel, y: torch.Tensor, stream: SampleStream, category: str = ""
) -> SketchRecord:
    """Sample a full sketch from a code. Strokes are drawn until the stop
    marker fires or the stroke-count limit is reached; an immediate stop yields
    an empty record."""
    with torch.no_grad():
        state = initial_state(model)
        strokes: list[AnchoredStroke] = []
        while state.k < model.cfg.max_strokes:
            e_hat, marker, state = predict_next_stroke(model, y, state)
            if sample_stop(marker, stream):
                break
            dist, state = predict_position(model, y, e_hat, state)
            xy = sample_position(dist, stream)
            p_hat = model.encode_position(xy).unsqueeze(0)
            state = replace(state, last_e=e_hat, last_p=p_hat)
            _, stroke = decode_stroke_actions(model, y, e_hat, "sample", stream=stream)
            strokes.append(AnchoredStroke(stroke, xy))
            state = replace(state, k=state.k + 1)
    return SketchRecord(strokes=strokes, category=category, scale=1.0)
