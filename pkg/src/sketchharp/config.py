"""Model and training hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass
class ModelConfig:
    """Network dimensions. Defaults follow the full-scale setup; tests shrink
    the hidden sizes but keep the layer structure."""

    embed_dim: int = 128
    enc_hidden: int = 512       # encoder LSTM hidden size (per direction for strokes)
    dec_hidden: int = 1024      # decoder LSTM hidden sizes
    rel_blocks: int = 2         # gated-MLP depth of the relationship encoder
    rel_ffn: int = 512
    mixture_components: int = 20
    max_strokes: int = 25
    max_stroke_len: int = 32
    image_size: int = 128
    img_channels: tuple[int, ...] = (128, 128, 128, 128, 1)
    sigma_floor: float = 1e-6
    use_relationship: bool = True   # ablation: skip relationship embeddings

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "img_channels" in kwargs:
            kwargs["img_channels"] = tuple(kwargs["img_channels"])
        return cls(**kwargs)


@dataclass
class TrainConfig:
    batch_size: int = 128
    steps: int = 10000
    lr: float = 1e-3
    lr_decay: float = 0.9999    # per-step multiplicative decay toward lr_min
    lr_min: float = 1e-5
    grad_clip: float = 1.0
    seed: int = 0
    checkpoint_every: int = 1000
    log_every: int = 20
    # loss weights: seq, pos, stp get 1; stroke-embedding regularizer 5; image 0.5
    w_seq: float = 1.0
    w_pos: float = 1.0
    w_stp: float = 1.0
    w_sok: float = 5.0
    w_img: float = 0.5
    use_img_loss: bool = True   # ablation: drop the image regularizer
    use_sok_loss: bool = True   # ablation: drop the embedding regularizer

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    @property
    def weights(self) -> tuple[float, float, float, float, float]:
        return (
            self.w_seq,
            self.w_pos,
            self.w_stp,
            self.w_sok if self.use_sok_loss else 0.0,
            self.w_img if self.use_img_loss else 0.0,
        )
