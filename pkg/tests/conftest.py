import numpy as np
import pytest
import torch

from sketchharp.config import ModelConfig, TrainConfig
from sketchharp.corpus import parse_stroke5
from sketchharp.model import HarpModel


TINY = ModelConfig(
    embed_dim=8,
    enc_hidden=8,
    dec_hidden=12,
    rel_blocks=2,
    rel_ffn=16,
    mixture_components=3,
    max_strokes=6,
    max_stroke_len=10,
    img_channels=(4, 4, 4, 4, 1),
)


def small_raw(rng, strokes=3, max_pts=6):
    """Random well-formed stroke-5 sequence small enough for the tiny config."""
    rows = []
    for s in range(strokes):
        n = int(rng.integers(2, max_pts))
        for i in range(n):
            lift = 1 if i == n - 1 else 0
            rows.append((int(rng.integers(-8, 9)), int(rng.integers(-8, 9)), 1 - lift, lift, 0))
    dx, dy, *_ = rows[-1]
    rows[-1] = (dx, dy, 0, 0, 1)
    return rows


def make_tiny_records(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        parse_stroke5(small_raw(rng, strokes=int(rng.integers(1, 5))), category=f"c{i % 2}")
        for i in range(n)
    ]


@pytest.fixture
def tiny_cfg():
    return TINY


@pytest.fixture
def tiny_model(tiny_cfg):
    torch.manual_seed(0)
    return HarpModel(tiny_cfg, dtype=torch.float64)


@pytest.fixture
def tiny_records():
    return make_tiny_records(8, seed=1)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(batch_size=4, steps=3, seed=0, checkpoint_every=2, log_every=1)
