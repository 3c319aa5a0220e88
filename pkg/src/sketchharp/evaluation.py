"""Desk-scale quantitative checks: Chamfer reconstruction distance, category
preservation under a small raster classifier (Rec), and code-space retrieval
of the source sketch (Ret@k)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .corpus import SketchRecord, rasterize
from .errors import EmptySketch, ShapeError, UnknownLabel
from .model import HarpModel


@dataclass
class MetricsReport:
    chamfer_mean: float
    rec: float
    ret_at: dict[int, float]
    n: int
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "chamfer_mean": self.chamfer_mean,
                "rec": self.rec,
                "ret_at": {str(k): v for k, v in self.ret_at.items()},
                "n": self.n,
                "metadata": self.metadata,
            },
            indent=1,
        )


def chamfer_distance(a: SketchRecord, b: SketchRecord) -> float:
    """Symmetric mean nearest-point distance between the absolute point sets,
    in the records' (normalized) units."""
    if a.is_empty or b.is_empty:
        raise EmptySketch("chamfer needs non-empty sketches")
    pa = a.all_points()
    pb = b.all_points()
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1)
    d = np.sqrt(d2)
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


class RasterClassifier(nn.Module):
    """Four conv blocks over the 128x128 raster, then a linear head."""

    def __init__(self, classes: list[str]):
        super().__init__()
        if not classes:
            raise ShapeError("need at least one class")
        self.classes = list(classes)
        chans = (1, 8, 16, 32, 64)
        blocks = []
        for cin, cout in zip(chans[:-1], chans[1:]):
            blocks += [nn.Conv2d(cin, cout, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2)]
        self.features = nn.Sequential(*blocks)
        self.head = nn.Linear(64, len(self.classes))

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = self.features(images.unsqueeze(1))
        return self.head(x.mean(dim=(2, 3)))

    def predict(self, records: list[SketchRecord]) -> list[str]:
        self.eval()
        rasters = np.stack([rasterize(r) for r in records])
        with torch.no_grad():
            logits = self(torch.as_tensor(rasters, dtype=torch.float32))
        return [self.classes[int(i)] for i in logits.argmax(dim=-1)]


def train_classifier(
    records: list[SketchRecord],
    classes: list[str],
    epochs: int = 10,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
) -> RasterClassifier:
    torch.manual_seed(seed)
    clf = RasterClassifier(classes)
    index = {c: i for i, c in enumerate(classes)}
    for rec in records:
        if rec.category not in index:
            raise UnknownLabel(f"category {rec.category!r} not in class list")
    images = torch.as_tensor(
        np.stack([rasterize(r) for r in records]), dtype=torch.float32
    )
    labels = torch.tensor([index[r.category] for r in records])
    opt = torch.optim.Adam(clf.parameters(), lr=lr)
    ce = nn.CrossEntropyLoss()
    rng = np.random.default_rng(seed)
    clf.train()
    for _ in range(epochs):
        order = rng.permutation(len(records))
        for lo in range(0, len(records), batch_size):
            idx = order[lo : lo + batch_size]
            opt.zero_grad()
            loss = ce(clf(images[idx]), labels[idx])
            loss.backward()
            opt.step()
    return clf


def compute_rec(
    generated: list[SketchRecord], labels: list[str], clf: RasterClassifier
) -> float:
    """Fraction of generated sketches classified as their source label."""
    if not generated:
        raise ShapeError("no generated sketches")
    if len(generated) != len(labels):
        raise ShapeError("one label per sketch required")
    for label in labels:
        if label not in clf.classes:
            raise UnknownLabel(f"label {label!r} not in class list")
    predictions = clf.predict(generated)
    return float(np.mean([p == t for p, t in zip(predictions, labels)]))


def encode_codes(model: HarpModel, records: list[SketchRecord]) -> np.ndarray:
    with torch.no_grad():
        return np.stack(
            [model.encode_record(r).to(torch.float64).numpy() for r in records]
        )


def compute_ret(
    inputs: list[SketchRecord],
    generated: list[SketchRecord],
    model: HarpModel,
    ks: tuple[int, ...] = (1, 10, 50),
) -> dict[int, float]:
    """For each generated sketch, rank all input codes by Euclidean distance to
    its code; Ret@k is the fraction whose own source ranks in the top k. Ties
    break toward the smaller source index."""
    if len(inputs) != len(generated):
        raise ShapeError("inputs and generated must align by index")
    input_codes = encode_codes(model, inputs)
    gen_codes = encode_codes(model, generated)
    n = len(inputs)
    ranks = np.empty(n, dtype=int)
    for i in range(n):
        d = np.linalg.norm(input_codes - gen_codes[i], axis=1)
        order = np.lexsort((np.arange(n), d))  # distance, then index ascending
        ranks[i] = int(np.where(order == i)[0][0])
    return {k: float(np.mean(ranks < k)) for k in ks}


def evaluate(
    model: HarpModel,
    inputs: list[SketchRecord],
    generated: list[SketchRecord],
    clf: RasterClassifier,
    ks: tuple[int, ...] = (1, 10, 50),
) -> MetricsReport:
    chamfer = [chamfer_distance(a, b) for a, b in zip(inputs, generated)]
    return MetricsReport(
        chamfer_mean=float(np.mean(chamfer)),
        rec=compute_rec(generated, [r.category for r in inputs], clf),
        ret_at=compute_ret(inputs, generated, model, ks),
        n=len(inputs),
        metadata={"ret_distance": "euclidean", "ties": "source index ascending"},
    )
