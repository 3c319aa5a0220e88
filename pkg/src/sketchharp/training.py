"""Teacher-forced forward pass and the optimization loop."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig
from .corpus import SketchRecord, rasterize
from .encoders import start_token, stroke_features
from .errors import ShapeError, TrainingDiverged
from .generator import START_ACTION
from .losses import (
    LossBreakdown,
    image_loss_tensors,
    mixture_nll,
    pen_cross_entropy,
    position_loss_tensors,
    sok_loss_tensors,
    stop_loss_tensors,
    total_loss,
)
from .model import HarpModel


@dataclass
class Batch:
    """Padded tensors for one mini-batch of sketches."""

    action_targets: torch.Tensor   # (B, K, L, 5) feature rows to predict
    action_inputs: torch.Tensor    # (B, K, L, 5) previous action per step
    action_mask: torch.Tensor      # (B, K, L)
    stroke_lengths: torch.Tensor   # (B, K)
    starts: torch.Tensor           # (B, K, 2)
    stroke_mask: torch.Tensor      # (B, K)
    num_strokes: torch.Tensor      # (B,)
    stop_targets: torch.Tensor     # (B, K+1, 2)
    stop_mask: torch.Tensor        # (B, K+1)
    images: Optional[torch.Tensor] # (B, S, S)

    @property
    def size(self) -> int:
        return self.action_targets.shape[0]


def collate(
    records: list[SketchRecord],
    cfg: ModelConfig,
    dtype: torch.dtype = torch.float32,
    with_images: bool = True,
    images: Optional[list[np.ndarray]] = None,
) -> Batch:
    if not records:
        raise ShapeError("empty batch")
    b = len(records)
    kmax = max(r.num_strokes for r in records)
    lmax = max(len(s.stroke) for r in records for s in r.strokes)
    if kmax > cfg.max_strokes or lmax > cfg.max_stroke_len:
        raise ShapeError("record exceeds configured limits")

    targets = torch.zeros(b, kmax, lmax, 5, dtype=dtype)
    inputs = torch.zeros(b, kmax, lmax, 5, dtype=dtype)
    action_mask = torch.zeros(b, kmax, lmax, dtype=dtype)
    stroke_lengths = torch.zeros(b, kmax, dtype=torch.long)
    starts = torch.zeros(b, kmax, 2, dtype=dtype)
    stroke_mask = torch.zeros(b, kmax, dtype=dtype)
    stop_targets = torch.zeros(b, kmax + 1, 2, dtype=dtype)
    stop_mask = torch.zeros(b, kmax + 1, dtype=dtype)
    start_row = torch.tensor(START_ACTION, dtype=dtype)

    for i, rec in enumerate(records):
        k = rec.num_strokes
        stop_targets[i, :k, 0] = 1.0
        stop_targets[i, k, 1] = 1.0
        stop_mask[i, : k + 1] = 1.0
        stroke_mask[i, :k] = 1.0
        for j, anchored in enumerate(rec.strokes):
            feats = stroke_features(anchored.stroke, dtype)
            n = feats.shape[0]
            targets[i, j, :n] = feats
            inputs[i, j, 0] = start_row
            inputs[i, j, 1:n] = feats[: n - 1]
            action_mask[i, j, :n] = 1.0
            stroke_lengths[i, j] = n
            starts[i, j, 0] = anchored.start[0]
            starts[i, j, 1] = anchored.start[1]

    imgs = None
    if with_images:
        arr = images if images is not None else [rasterize(r, cfg.image_size) for r in records]
        imgs = torch.as_tensor(np.stack(arr), dtype=dtype)
    return Batch(
        action_targets=targets, action_inputs=inputs, action_mask=action_mask,
        stroke_lengths=stroke_lengths, starts=starts, stroke_mask=stroke_mask,
        num_strokes=torch.tensor([r.num_strokes for r in records]),
        stop_targets=stop_targets, stop_mask=stop_mask, images=imgs,
    )


def encode_batch(model: HarpModel, batch: Batch):
    """Run the encoder stack over a padded batch. Returns (e, p, enriched, y)
    with stroke tensors shaped (B, K, E)."""
    cfg = model.cfg
    b, kmax = batch.stroke_mask.shape
    flat_idx = batch.stroke_mask.reshape(-1).bool()
    flat_feats = batch.action_targets.reshape(b * kmax, -1, 5)[flat_idx]
    flat_lengths = batch.stroke_lengths.reshape(-1)[flat_idx]
    e_flat = model.q_sok(flat_feats, flat_lengths)
    e = torch.zeros(b * kmax, cfg.embed_dim, dtype=model.dtype)
    e[flat_idx] = e_flat
    e = e.reshape(b, kmax, cfg.embed_dim)

    p = model.q_pos(batch.starts) * batch.stroke_mask.unsqueeze(-1)

    if cfg.use_relationship:
        padded = torch.zeros(b, cfg.max_strokes, cfg.embed_dim, dtype=model.dtype)
        padded[:, :kmax] = e + p
        mask = torch.zeros(b, cfg.max_strokes, dtype=model.dtype)
        mask[:, :kmax] = batch.stroke_mask
        r = model.q_rel(padded, mask)[:, :kmax]
    else:
        r = torch.zeros_like(e)
    enriched = (e + r) * batch.stroke_mask.unsqueeze(-1)

    y = model.q_skc(enriched + p, batch.num_strokes)
    return e, p, enriched, y


def forward_terms(
    model: HarpModel,
    batch: Batch,
    train_cfg: TrainConfig,
    sok_target: Optional[torch.Tensor] = None,
) -> dict[str, torch.Tensor]:
    """Teacher-forced pass producing each differentiable loss term by name.

    ``sok_target`` substitutes a frozen tensor for the embedding-regularizer
    target; finite-difference oracles need this because the stop gradient makes
    the analytic gradient treat the target as a constant.
    """
    cfg = model.cfg
    b, kmax = batch.stroke_mask.shape
    e, p, enriched, y = encode_batch(model, batch)

    # stroke decoder: inputs are ground-truth enriched sums, shifted by one
    tok = start_token(cfg.embed_dim, model.dtype)
    prev_sok = torch.zeros(b, kmax + 1, cfg.embed_dim, dtype=model.dtype)
    prev_sok[:, 0] = tok + tok
    prev_sok[:, 1:] = enriched + p
    e_hat_all, stop_logits = model.p_sok(y, prev_sok)
    e_hat = e_hat_all[:, :kmax]

    l_stp = stop_loss_tensors(stop_logits, batch.stop_targets, batch.stop_mask)
    l_sok = sok_loss_tensors(e_hat, enriched if sok_target is None else sok_target, batch.stroke_mask)

    # position decoder: previous step uses the predicted embedding with the
    # ground-truth position embedding; the anchored embedding is predicted
    prev_pos = torch.zeros(b, kmax, cfg.embed_dim, dtype=model.dtype)
    prev_pos[:, 0] = tok + tok
    if kmax > 1:
        prev_pos[:, 1:] = e_hat[:, : kmax - 1] + p[:, : kmax - 1]
    mu_x, mu_y, sx, sy, rho = model.p_pos(y, prev_pos, e_hat)
    l_pos = position_loss_tensors(
        batch.starts[..., 0], batch.starts[..., 1], mu_x, mu_y, sx, sy, rho, batch.stroke_mask
    )

    # sequence decoder: one independent recurrence per real stroke
    flat_idx = batch.stroke_mask.reshape(-1).bool()
    y_rep = y.unsqueeze(1).expand(-1, kmax, -1).reshape(b * kmax, -1)[flat_idx]
    e_rep = e_hat.reshape(b * kmax, -1)[flat_idx]
    inp = batch.action_inputs.reshape(b * kmax, -1, 5)[flat_idx]
    tgt = batch.action_targets.reshape(b * kmax, -1, 5)[flat_idx]
    amask = batch.action_mask.reshape(b * kmax, -1)[flat_idx]
    weights, gmu_x, gmu_y, gsx, gsy, grho, pen_logits = model.p_seq(y_rep, e_rep, inp)
    l_seq = (
        mixture_nll(tgt[..., 0], tgt[..., 1], weights, gmu_x, gmu_y, gsx, gsy, grho, amask)
        + pen_cross_entropy(pen_logits, tgt[..., 2:], amask)
    ) / b

    if train_cfg.use_img_loss and batch.images is not None:
        decoded = model.p_img(y)
        l_img = image_loss_tensors(decoded, batch.images)
    else:
        l_img = torch.zeros((), dtype=model.dtype)
    if not train_cfg.use_sok_loss:
        l_sok = torch.zeros((), dtype=model.dtype)

    return {"seq": l_seq, "pos": l_pos, "stp": l_stp, "sok": l_sok, "img": l_img}


def teacher_forced_forward(
    model: HarpModel, batch: Batch, train_cfg: TrainConfig
) -> tuple[torch.Tensor, LossBreakdown]:
    """Full training objective on one batch. Returns the differentiable total
    and the detached breakdown."""
    terms = forward_terms(model, batch, train_cfg)
    total = total_loss(
        terms["seq"], terms["pos"], terms["stp"], terms["sok"], terms["img"], train_cfg.weights
    )
    parts = LossBreakdown(
        **{k: float(v.detach()) for k, v in terms.items()}, total=float(total.detach())
    )
    return total, parts


@dataclass
class TrainResult:
    checkpoint_path: Path
    steps: int
    first_loss: LossBreakdown
    last_loss: LossBreakdown
    log_path: Path


def _lr_at(cfg: TrainConfig, step: int) -> float:
    return cfg.lr_min + (cfg.lr - cfg.lr_min) * (cfg.lr_decay**step)


def train(
    records: list[SketchRecord],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    out_dir,
    resume_from=None,
    dtype: torch.dtype = torch.float32,
) -> TrainResult:
    """Optimize the model on the corpus. Deterministic given the seed; emits a
    per-step loss CSV and periodic resumable checkpoints under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "loss_log.csv"

    if resume_from is not None:
        bundle = load_checkpoint(resume_from)
        model = bundle.model
        model_cfg = bundle.model_cfg  # caller's train_cfg wins (e.g. extended steps)
        start_step = bundle.step
        sampler = np.random.Generator(np.random.PCG64())
        sampler.bit_generator.state = bundle.sampler_state
        torch.set_rng_state(bundle.torch_rng)
        optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)
        bundle.restore_optimizer(optimizer)
        log_mode = "a"
    else:
        torch.manual_seed(train_cfg.seed)
        model = HarpModel(model_cfg, dtype=dtype)
        optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)
        sampler = np.random.Generator(np.random.PCG64(train_cfg.seed + 1))
        start_step = 0
        log_mode = "w"

    images = [rasterize(r, model_cfg.image_size) for r in records] if train_cfg.use_img_loss else None
    n = len(records)
    first = last = None
    last_good: Optional[Path] = None

    def save(step: int) -> Path:
        path = out_dir / f"checkpoint_{step:06d}.harpz"
        save_checkpoint(
            path, model, optimizer, step=step, model_cfg=model_cfg, train_cfg=train_cfg,
            sampler_state=sampler.bit_generator.state, torch_rng=torch.get_rng_state(),
        )
        return path

    with open(log_path, log_mode, newline="") as fh:
        writer = csv.writer(fh)
        if log_mode == "w":
            writer.writerow(["step", "seq", "pos", "stp", "sok", "img", "total"])
        for step in range(start_step, train_cfg.steps):
            idx = sampler.choice(n, size=min(train_cfg.batch_size, n), replace=n < train_cfg.batch_size)
            batch_records = [records[i] for i in idx]
            batch_images = [images[i] for i in idx] if images is not None else None
            batch = collate(batch_records, model_cfg, model.dtype, train_cfg.use_img_loss, batch_images)

            for group in optimizer.param_groups:
                group["lr"] = _lr_at(train_cfg, step)
            optimizer.zero_grad()
            try:
                total, parts = teacher_forced_forward(model, batch, train_cfg)
            except TrainingDiverged:
                if last_good is None:
                    last_good = save(step)
                raise
            total.backward()
            if train_cfg.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), train_cfg.grad_clip)
            optimizer.step()

            if first is None:
                first = parts
            last = parts
            if step % train_cfg.log_every == 0 or step == train_cfg.steps - 1:
                writer.writerow([step, parts.seq, parts.pos, parts.stp, parts.sok, parts.img, parts.total])
            if (step + 1) % train_cfg.checkpoint_every == 0:
                last_good = save(step + 1)

    final = save(train_cfg.steps)
    return TrainResult(
        checkpoint_path=final, steps=train_cfg.steps, first_loss=first, last_loss=last,
        log_path=log_path,
    )
