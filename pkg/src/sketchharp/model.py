"""The full model bundle and the stroke/sketch encoding operations."""

from __future__ import annotations

import torch
from torch import nn

from .config import ModelConfig
from .corpus import SketchRecord, Stroke
from .decoders import ImageDecoder, PositionDecoder, SequenceDecoder, StrokeDecoder
from .encoders import (
    PositionEncoder,
    RelationshipEncoder,
    SketchEncoder,
    StrokeEncoder,
    stroke_features,
)
from .errors import ShapeError


class HarpModel(nn.Module):
    """Encoders and decoders under the checkpoint key prefixes q_sok, q_pos,
    q_rel, q_skc, p_sok, p_pos, p_seq, p_img."""

    def __init__(self, cfg: ModelConfig, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.cfg = cfg
        self.q_sok = StrokeEncoder(cfg)
        self.q_pos = PositionEncoder(cfg)
        self.q_rel = RelationshipEncoder(cfg)
        self.q_skc = SketchEncoder(cfg)
        self.p_sok = StrokeDecoder(cfg)
        self.p_pos = PositionDecoder(cfg)
        self.p_seq = SequenceDecoder(cfg)
        self.p_img = ImageDecoder(cfg)
        self.to(dtype)
        self._dtype = dtype

    @property
    def dtype(self) -> torch.dtype:
        return self._dtype

    def parameter_blocks(self) -> dict[str, nn.Module]:
        return {
            "q_sok": self.q_sok, "q_pos": self.q_pos, "q_rel": self.q_rel,
            "q_skc": self.q_skc, "p_sok": self.p_sok, "p_pos": self.p_pos,
            "p_seq": self.p_seq, "p_img": self.p_img,
        }

    # -- encoding operations on corpus objects (single sketch / stroke) --

    def encode_stroke(self, stroke: Stroke) -> torch.Tensor:
        """Stroke -> embedding (E,)."""
        feats = stroke_features(stroke, self._dtype).unsqueeze(0)
        lengths = torch.tensor([len(stroke)])
        return self.q_sok(feats, lengths)[0]

    def encode_strokes(self, strokes: list[Stroke]) -> torch.Tensor:
        """Batch of strokes -> embeddings (K, E)."""
        lengths = torch.tensor([len(s) for s in strokes])
        feats = torch.zeros(len(strokes), int(lengths.max()), 5, dtype=self._dtype)
        for i, s in enumerate(strokes):
            feats[i, : len(s)] = stroke_features(s, self._dtype)
        return self.q_sok(feats, lengths)

    def encode_position(self, xy) -> torch.Tensor:
        """Canvas coordinate -> position embedding (E,)."""
        t = torch.as_tensor(xy, dtype=self._dtype)
        return self.q_pos(t.reshape(1, 2))[0]

    def enrich(self, e: torch.Tensor, p: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Stroke embeddings e (K, E) and position embeddings p (K, E) ->
        (enriched embeddings, relationship embeddings), both (K, E)."""
        if e.shape != p.shape:
            raise ShapeError(f"embedding shapes differ: {e.shape} vs {p.shape}")
        k = e.shape[0]
        if k < 1:
            raise ShapeError("need at least one stroke")
        if k > self.cfg.max_strokes:
            raise ShapeError(f"{k} strokes over the sequence limit {self.cfg.max_strokes}")
        if not self.cfg.use_relationship:
            r = torch.zeros_like(e)
            return e + r, r
        padded = torch.zeros(1, self.cfg.max_strokes, e.shape[1], dtype=self._dtype)
        padded[0, :k] = e + p
        mask = torch.zeros(1, self.cfg.max_strokes, dtype=self._dtype)
        mask[0, :k] = 1.0
        r = self.q_rel(padded, mask)[0, :k]
        return e + r, r

    def encode_sketch(self, enriched: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
        """Enriched embeddings plus position embeddings -> sketch code (E,)."""
        if enriched.shape != p.shape:
            raise ShapeError(f"embedding shapes differ: {enriched.shape} vs {p.shape}")
        if enriched.shape[0] < 1:
            raise ShapeError("need at least one stroke")
        seq = (enriched + p).unsqueeze(0)
        return self.q_skc(seq, torch.tensor([seq.shape[1]]))[0]

    def encode_record(self, rec: SketchRecord) -> torch.Tensor:
        """Full encoding pipeline for one sketch -> code (E,)."""
        e = self.encode_strokes([s.stroke for s in rec.strokes])
        starts = torch.tensor([list(s.start) for s in rec.strokes], dtype=self._dtype)
        p = self.q_pos(starts)
        enriched, _ = self.enrich(e, p)
        return self.encode_sketch(enriched, p)
