"""The five training loss terms and their weighted total.

Sums run over real (unpadded) strokes and steps within a sketch; every term is
then averaged over the batch. Mixture likelihoods go through log-sum-exp and
the stop cross entropy clamps probabilities at 1e-12, so all terms stay finite
for finite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .distributions import ActionDistribution, PositionDistribution, StopMarker, bivariate_normal_logpdf
from .errors import ShapeError, TrainingDiverged

PROB_EPS = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    seq: float
    pos: float
    stp: float
    sok: float
    img: float
    total: float

    def as_dict(self) -> dict:
        return {
            "seq": self.seq, "pos": self.pos, "stp": self.stp,
            "sok": self.sok, "img": self.img, "total": self.total,
        }


def mixture_nll(
    dx, dy, weights, mu_x, mu_y, sigma_x, sigma_y, rho, mask
) -> torch.Tensor:
    """Offset negative log-likelihood under the Gaussian mixture, summed over
    masked steps. Tensors carry a trailing component axis on the parameters."""
    comp = bivariate_normal_logpdf(
        dx.unsqueeze(-1), dy.unsqueeze(-1), mu_x, mu_y, sigma_x, sigma_y, rho
    )
    log_mix = torch.logsumexp(torch.log(weights.clamp(min=PROB_EPS)) + comp, dim=-1)
    return -(log_mix * mask).sum()


def pen_cross_entropy(pen_logits, pen_onehot, mask) -> torch.Tensor:
    """Pen-state cross entropy, summed over masked steps."""
    logp = torch.log_softmax(pen_logits, dim=-1)
    return -((pen_onehot * logp).sum(-1) * mask).sum()


def sequence_loss_tensors(
    dx, dy, pen_onehot, weights, mu_x, mu_y, sigma_x, sigma_y, rho, pen_logits, mask
) -> torch.Tensor:
    """Per-batch sequence reconstruction loss: offset mixture NLL plus pen
    cross entropy, summed over steps, averaged over the leading batch axis."""
    batch = dx.shape[0]
    nll = mixture_nll(dx, dy, weights, mu_x, mu_y, sigma_x, sigma_y, rho, mask)
    ce = pen_cross_entropy(pen_logits, pen_onehot, mask)
    return (nll + ce) / batch


def position_loss_tensors(x, y, mu_x, mu_y, sigma_x, sigma_y, rho, mask) -> torch.Tensor:
    """Starting-position NLL under the bivariate Gaussian, summed over strokes,
    averaged over the batch."""
    lp = bivariate_normal_logpdf(x, y, mu_x, mu_y, sigma_x, sigma_y, rho)
    return -(lp * mask).sum() / x.shape[0]


def stop_loss_tensors(stop_logits, targets, mask) -> torch.Tensor:
    """Stop-marker cross entropy over the K+1 decision steps."""
    probs = torch.softmax(stop_logits, dim=-1).clamp(min=PROB_EPS)
    ce = -(targets * torch.log(probs)).sum(-1)
    return (ce * mask).sum() / stop_logits.shape[0]


def sok_loss_tensors(e_hat, e_target, mask) -> torch.Tensor:
    """Squared L2 pull of predicted stroke embeddings toward the (stop-gradient)
    encoder targets, summed over strokes, averaged over the batch."""
    diff = e_hat - e_target.detach()
    return ((diff**2).sum(-1) * mask).sum() / e_hat.shape[0]


def image_loss_tensors(decoded, target) -> torch.Tensor:
    """Squared pixel error, summed per image, averaged over the batch."""
    return ((decoded - target) ** 2).sum() / decoded.shape[0]


def total_loss(
    seq, pos, stp, sok, img, weights=(1.0, 1.0, 1.0, 5.0, 0.5)
) -> torch.Tensor:
    parts = (seq, pos, stp, sok, img)
    for name, part in zip(("seq", "pos", "stp", "sok", "img"), parts):
        value = part if isinstance(part, torch.Tensor) else torch.tensor(float(part))
        if not torch.isfinite(value).all():
            raise TrainingDiverged(f"loss term {name} is not finite")
    w_seq, w_pos, w_stp, w_sok, w_img = weights
    return w_seq * seq + w_pos * pos + w_stp * stp + w_sok * sok + w_img * img


def breakdown(seq, pos, stp, sok, img, weights=(1.0, 1.0, 1.0, 5.0, 0.5)) -> LossBreakdown:
    tot = total_loss(seq, pos, stp, sok, img, weights)
    f = lambda v: float(v.detach()) if isinstance(v, torch.Tensor) else float(v)
    return LossBreakdown(seq=f(seq), pos=f(pos), stp=f(stp), sok=f(sok), img=f(img), total=f(tot))


# -- list-level operation wrappers over the same kernels --


def _stack(values, dtype=torch.float64):
    return torch.as_tensor(np.asarray(values), dtype=dtype)


def loss_seq(dists: list[list[ActionDistribution]], truth: list) -> float:
    """NLL of ground-truth actions under per-step action distributions.
    ``truth`` holds one Stroke (or (N, 3) array) per stroke."""
    total = 0.0
    steps = 0
    for stroke_dists, stroke_truth in zip(dists, truth, strict=True):
        data = stroke_truth.data if hasattr(stroke_truth, "data") else np.asarray(stroke_truth)
        if len(stroke_dists) != len(data):
            raise ShapeError("one distribution per action required")
        for d, (dx, dy, pen) in zip(stroke_dists, data):
            nll = mixture_nll(
                _stack(dx), _stack(dy), _stack(d.weights), _stack(d.mu_x), _stack(d.mu_y),
                _stack(d.sigma_x), _stack(d.sigma_y), _stack(d.rho), _stack(1.0),
            )
            onehot = torch.zeros(3, dtype=torch.float64)
            onehot[int(pen)] = 1.0
            ce = -(onehot * torch.log(_stack(d.pen_probs).clamp(min=PROB_EPS))).sum()
            total += float(nll + ce)
            steps += 1
    if steps == 0:
        raise ShapeError("no actions")
    return total


def loss_pos(dists: list[PositionDistribution], truth: list) -> float:
    if len(dists) != len(truth):
        raise ShapeError("one distribution per stroke required")
    total = 0.0
    for d, (x, y) in zip(dists, truth):
        lp = bivariate_normal_logpdf(
            _stack(x), _stack(y), _stack(d.mu_x), _stack(d.mu_y),
            _stack(d.sigma_x), _stack(d.sigma_y), _stack(d.rho),
        )
        total -= float(lp)
    return total


def loss_stp(predicted: list[StopMarker], targets: list) -> float:
    if len(predicted) != len(targets):
        raise ShapeError("marker/target length mismatch")
    total = 0.0
    for marker, target in zip(predicted, targets):
        probs = np.clip(marker.probs, PROB_EPS, None)
        total -= float(np.dot(np.asarray(target, dtype=float), np.log(probs)))
    return total


def loss_sok(e_hat: torch.Tensor, e_target: torch.Tensor) -> torch.Tensor:
    """Differentiable single-sketch variant: sum_k ||e_hat_k - sg(e_target_k)||^2."""
    if e_hat.shape != e_target.shape:
        raise ShapeError("embedding shape mismatch")
    return ((e_hat - e_target.detach()) ** 2).sum()


def loss_img(decoded: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if decoded.shape != target.shape:
        raise ShapeError("image shape mismatch")
    return ((decoded - target) ** 2).sum()
