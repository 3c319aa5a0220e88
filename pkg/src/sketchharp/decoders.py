"""Decoders of the hierarchical generator: stroke-embedding prediction,
position anchoring, action translation, and the image-reconstruction head."""

from __future__ import annotations

import torch
from torch import nn

from .config import ModelConfig

RHO_CAP = 1.0 - 1e-6


def _positive_sigma(raw: torch.Tensor, floor: float) -> torch.Tensor:
    return torch.exp(raw).clamp(min=floor)


def _bounded_rho(raw: torch.Tensor) -> torch.Tensor:
    return torch.tanh(raw).clamp(-RHO_CAP, RHO_CAP)


class StrokeDecoder(nn.Module):
    """Recurrent predictor of the next stroke embedding and the stop marker.
    Step input is the sketch code concatenated with the previous stroke's
    embedding-plus-position sum."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        e = cfg.embed_dim
        self.lstm = nn.LSTM(2 * e, cfg.dec_hidden, batch_first=True)
        self.head = nn.Linear(cfg.dec_hidden, e + 2)
        self.embed_dim = e

    def forward(self, y: torch.Tensor, prev_seq: torch.Tensor):
        """Teacher-forced pass. y (B, E), prev_seq (B, T, E) of previous
        embedding+position sums. Returns (e_hat (B, T, E), stop_logits (B, T, 2))."""
        inputs = torch.cat([y.unsqueeze(1).expand(-1, prev_seq.shape[1], -1), prev_seq], dim=-1)
        out, _ = self.lstm(inputs)
        raw = self.head(out)
        return raw[..., : self.embed_dim], raw[..., self.embed_dim :]

    def step(self, y: torch.Tensor, prev: torch.Tensor, state):
        """One sampling step. y (B, E), prev (B, E), state optional (h, c).
        Returns (e_hat (B, E), stop_logits (B, 2), new_state)."""
        x = torch.cat([y, prev], dim=-1).unsqueeze(1)
        out, new_state = self.lstm(x, state)
        raw = self.head(out[:, 0])
        return raw[..., : self.embed_dim], raw[..., self.embed_dim :], new_state


class PositionDecoder(nn.Module):
    """Recurrent predictor of the bivariate Gaussian over a stroke's starting
    coordinate. Step input: sketch code, previous embedding+position sum, and
    the embedding being anchored."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.lstm = nn.LSTM(3 * cfg.embed_dim, cfg.dec_hidden, batch_first=True)
        self.head = nn.Linear(cfg.dec_hidden, 5)
        self.sigma_floor = cfg.sigma_floor

    def activate(self, raw: torch.Tensor):
        """raw (..., 5) -> (mu_x, mu_y, sigma_x, sigma_y, rho)."""
        mu_x, mu_y = raw[..., 0], raw[..., 1]
        sigma_x = _positive_sigma(raw[..., 2], self.sigma_floor)
        sigma_y = _positive_sigma(raw[..., 3], self.sigma_floor)
        rho = _bounded_rho(raw[..., 4])
        return mu_x, mu_y, sigma_x, sigma_y, rho

    def forward(self, y: torch.Tensor, prev_seq: torch.Tensor, e_seq: torch.Tensor):
        """Teacher-forced pass over T strokes; returns activated params, each (B, T)."""
        inputs = torch.cat(
            [y.unsqueeze(1).expand(-1, prev_seq.shape[1], -1), prev_seq, e_seq], dim=-1
        )
        out, _ = self.lstm(inputs)
        return self.activate(self.head(out))

    def step(self, y: torch.Tensor, prev: torch.Tensor, e_k: torch.Tensor, state):
        x = torch.cat([y, prev, e_k], dim=-1).unsqueeze(1)
        out, new_state = self.lstm(x, state)
        return self.activate(self.head(out[:, 0])), new_state


class SequenceDecoder(nn.Module):
    """Recurrent translator of one stroke embedding into drawing actions.
    Initial hidden and cell states come from a tanh projection of the sketch
    code and the stroke embedding; each step consumes the previous action
    concatenated with that same conditioning. Per-stroke recurrence only: the
    state is reset for every stroke, so strokes decode independently."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        e, h, m = cfg.embed_dim, cfg.dec_hidden, cfg.mixture_components
        self.hidden = h
        self.mixtures = m
        self.init_proj = nn.Linear(2 * e, 2 * h)
        self.lstm = nn.LSTM(5 + 2 * e, h, batch_first=True)
        self.head = nn.Linear(h, 6 * m + 3)
        self.sigma_floor = cfg.sigma_floor

    def initial_state(self, y: torch.Tensor, e_k: torch.Tensor):
        hc = torch.tanh(self.init_proj(torch.cat([y, e_k], dim=-1)))
        h, c = hc.chunk(2, dim=-1)
        return h.unsqueeze(0).contiguous(), c.unsqueeze(0).contiguous()

    def activate(self, raw: torch.Tensor):
        """raw (..., 6M+3) -> (weights, mu_x, mu_y, sigma_x, sigma_y, rho,
        pen_logits); mixture tensors have a trailing component axis."""
        m = self.mixtures
        weights = torch.softmax(raw[..., :m], dim=-1)
        mu_x = raw[..., m : 2 * m]
        mu_y = raw[..., 2 * m : 3 * m]
        sigma_x = _positive_sigma(raw[..., 3 * m : 4 * m], self.sigma_floor)
        sigma_y = _positive_sigma(raw[..., 4 * m : 5 * m], self.sigma_floor)
        rho = _bounded_rho(raw[..., 5 * m : 6 * m])
        pen_logits = raw[..., 6 * m :]
        return weights, mu_x, mu_y, sigma_x, sigma_y, rho, pen_logits

    def forward(self, y: torch.Tensor, e_k: torch.Tensor, action_inputs: torch.Tensor):
        """Teacher-forced pass. y, e_k (B, E); action_inputs (B, L, 5) where row
        i is the previous action (start token at i = 0). Returns activated
        output tuple with shapes (B, L, ...)."""
        cond = torch.cat([y, e_k], dim=-1).unsqueeze(1).expand(-1, action_inputs.shape[1], -1)
        inputs = torch.cat([action_inputs, cond], dim=-1)
        out, _ = self.lstm(inputs, self.initial_state(y, e_k))
        return self.activate(self.head(out))

    def step(self, y: torch.Tensor, e_k: torch.Tensor, prev_action: torch.Tensor, state):
        x = torch.cat([prev_action, y, e_k], dim=-1).unsqueeze(1)
        out, new_state = self.lstm(x, state)
        return self.activate(self.head(out[:, 0])), new_state


class ImageDecoder(nn.Module):
    """Deconvolutional reconstruction of the rasterized sketch from its code:
    an affine layer reshaped to a 4x4 feature map, then five stride-2
    transposed convolutions (batch-norm and ReLU between, Tanh at the end)
    doubling the spatial size up to the raster resolution."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        ch = cfg.img_channels
        self.base = ch[0]
        self.fc = nn.Linear(cfg.embed_dim, ch[0] * 4 * 4)
        layers: list[nn.Module] = []
        in_ch = ch[0]
        for i, out_ch in enumerate(ch):
            layers.append(nn.ConvTranspose2d(in_ch, out_ch, kernel_size=4, stride=2, padding=1))
            if i < len(ch) - 1:
                layers.append(nn.BatchNorm2d(out_ch))
                layers.append(nn.ReLU())
            in_ch = out_ch
        layers.append(nn.Tanh())
        self.deconv = nn.Sequential(*layers)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        """y (B, E) -> reconstructed raster (B, size, size) in (-1, 1)."""
        x = self.fc(y).reshape(-1, self.base, 4, 4)
        return self.deconv(x)[:, 0]
