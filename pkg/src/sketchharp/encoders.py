"""Encoders mapping anchored strokes to embeddings and a sketch code.

Four networks: a bidirectional recurrent stroke encoder, an affine position
encoder, a gated-MLP relationship encoder over the stroke sequence, and a
recurrent sketch encoder that folds enriched embeddings into one code.
"""

from __future__ import annotations

import torch
from torch import nn

from .config import ModelConfig
from .corpus import Stroke
from .errors import OverLimit, ShapeError

ACTION_FEATURES = 5  # dx, dy, one-hot pen state


def start_token(dim: int, dtype=torch.float32) -> torch.Tensor:
    """Constant -1 vector used as the step-zero marker for embeddings and
    position embeddings alike."""
    return -torch.ones(dim, dtype=dtype)


def stroke_features(stroke: Stroke, dtype=torch.float32) -> torch.Tensor:
    """Per-action feature rows (dx, dy, pen one-hot), shape (N, 5)."""
    data = stroke.data
    out = torch.zeros(len(stroke), ACTION_FEATURES, dtype=dtype)
    out[:, 0] = torch.as_tensor(data[:, 0], dtype=dtype)
    out[:, 1] = torch.as_tensor(data[:, 1], dtype=dtype)
    out[torch.arange(len(stroke)), 2 + torch.as_tensor(data[:, 2], dtype=torch.long)] = 1.0
    return out


class StrokeEncoder(nn.Module):
    """Bidirectional LSTM over action features; final hidden states of both
    directions concatenated and projected to the embedding width."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.max_len = cfg.max_stroke_len
        self.lstm = nn.LSTM(ACTION_FEATURES, cfg.enc_hidden, batch_first=True, bidirectional=True)
        self.proj = nn.Linear(2 * cfg.enc_hidden, cfg.embed_dim)

    def forward(self, actions: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """actions (B, L, 5) padded, lengths (B,) -> embeddings (B, E)."""
        if actions.shape[1] > self.max_len:
            raise OverLimit(f"stroke length {actions.shape[1]} over limit {self.max_len}")
        packed = nn.utils.rnn.pack_padded_sequence(
            actions, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        _, (h, _) = self.lstm(packed)
        return self.proj(torch.cat([h[0], h[1]], dim=-1))


class PositionEncoder(nn.Module):
    """Affine map from a 2D canvas coordinate to a position embedding."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.fc = nn.Linear(2, cfg.embed_dim)

    def forward(self, xy: torch.Tensor) -> torch.Tensor:
        return self.fc(xy)


class SpatialGatingUnit(nn.Module):
    """Gating half of a gated-MLP block: one half of the channels modulates the
    other after a learned linear mix across the (masked) sequence axis."""

    def __init__(self, seq_len: int, d_ffn: int):
        super().__init__()
        self.norm = nn.LayerNorm(d_ffn // 2)
        self.spatial = nn.Linear(seq_len, seq_len)
        nn.init.normal_(self.spatial.weight, std=1e-3)
        nn.init.ones_(self.spatial.bias)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        u, v = x.chunk(2, dim=-1)
        v = self.norm(v) * mask  # padded positions contribute nothing to the mix
        v = self.spatial(v.transpose(1, 2)).transpose(1, 2)
        return u * v


class GatedMLPBlock(nn.Module):
    def __init__(self, seq_len: int, d_model: int, d_ffn: int):
        super().__init__()
        self.norm = nn.LayerNorm(d_model)
        self.fc_in = nn.Linear(d_model, d_ffn)
        self.sgu = SpatialGatingUnit(seq_len, d_ffn)
        self.fc_out = nn.Linear(d_ffn // 2, d_model)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        y = torch.nn.functional.gelu(self.fc_in(self.norm(x)))
        y = self.fc_out(self.sgu(y, mask))
        return x + y * mask  # padded positions stay inert in the residual stream


class RelationshipEncoder(nn.Module):
    """Stack of gated-MLP blocks over the per-sketch stroke sequence. The
    sequence axis is fixed to the stroke limit; shorter sketches are padded and
    masked so padding never leaks into the spatial gating."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.seq_len = cfg.max_strokes
        self.blocks = nn.ModuleList(
            GatedMLPBlock(cfg.max_strokes, cfg.embed_dim, cfg.rel_ffn)
            for _ in range(cfg.rel_blocks)
        )

    def forward(self, ep: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """ep (B, N, E) padded sums e_k + p_k, mask (B, N) -> r (B, N, E)."""
        if ep.shape[1] != self.seq_len:
            raise ShapeError(f"expected sequence axis {self.seq_len}, got {ep.shape[1]}")
        m = mask.unsqueeze(-1).to(ep.dtype)
        x = ep * m
        for block in self.blocks:
            x = block(x, m)
        return x * m


class SketchEncoder(nn.Module):
    """Recurrent pass over enriched embeddings plus position embeddings in
    drawing order; the final hidden state is projected to the sketch code."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.lstm = nn.LSTM(cfg.embed_dim, cfg.enc_hidden, batch_first=True)
        self.proj = nn.Linear(cfg.enc_hidden, cfg.embed_dim)

    def forward(self, seq: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """seq (B, K, E) padded, lengths (B,) -> codes (B, E)."""
        if seq.shape[1] == 0:
            raise ShapeError("cannot encode an empty stroke sequence")
        packed = nn.utils.rnn.pack_padded_sequence(
            seq, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        _, (h, _) = self.lstm(packed)
        return self.proj(h[0])
