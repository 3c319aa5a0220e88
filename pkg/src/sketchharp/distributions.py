"""Bivariate-Gaussian and mixture distribution kernels plus the sampling stream.

The log-density here is the single kernel shared by the training losses and
the analytic tests. Sampling goes through SampleStream, a counting wrapper
around a PCG64 generator, so that generation traces are replayable from a
seed and the number of scalars drawn by any operation can be audited.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import ShapeError


def bivariate_normal_logpdf(x, y, mu_x, mu_y, sigma_x, sigma_y, rho):
    """log N(x, y | mu, sigma, rho) for torch tensors, broadcasting freely."""
    zx = (x - mu_x) / sigma_x
    zy = (y - mu_y) / sigma_y
    one_minus_r2 = 1.0 - rho**2
    z = zx**2 + zy**2 - 2.0 * rho * zx * zy
    return (
        -z / (2.0 * one_minus_r2)
        - torch.log(sigma_x)
        - torch.log(sigma_y)
        - 0.5 * torch.log(one_minus_r2)
        - math.log(2.0 * math.pi)
    )


def gmm_logpdf(x, y, weights, mu_x, mu_y, sigma_x, sigma_y, rho):
    """Mixture log-density: log sum_m w_m N_m(x, y). Component axis is last."""
    comp = bivariate_normal_logpdf(
        x.unsqueeze(-1), y.unsqueeze(-1), mu_x, mu_y, sigma_x, sigma_y, rho
    )
    return torch.logsumexp(torch.log(weights) + comp, dim=-1)


@dataclass(frozen=True)
class PositionDistribution:
    """Single bivariate Gaussian over a stroke's starting coordinate."""

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    rho: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ShapeError("sigmas must be positive")
        if not abs(self.rho) < 1:
            raise ShapeError("|rho| must be < 1")


@dataclass(frozen=True)
class ActionDistribution:
    """Gaussian mixture over the pen offset plus a 3-way pen-state categorical."""

    weights: np.ndarray       # (M,)
    mu_x: np.ndarray          # (M,)
    mu_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    rho: np.ndarray
    pen_probs: np.ndarray     # (3,)

    def __post_init__(self):
        m = len(self.weights)
        for name in ("mu_x", "mu_y", "sigma_x", "sigma_y", "rho"):
            if len(getattr(self, name)) != m:
                raise ShapeError(f"{name} must have {m} components")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-5 or np.any(self.weights < 0):
            raise ShapeError("mixture weights must lie on the simplex")
        if abs(float(np.sum(self.pen_probs)) - 1.0) > 1e-5 or np.any(self.pen_probs < 0):
            raise ShapeError("pen probabilities must lie on the simplex")
        if np.any(self.sigma_x <= 0) or np.any(self.sigma_y <= 0):
            raise ShapeError("sigmas must be positive")
        if np.any(np.abs(self.rho) >= 1):
            raise ShapeError("|rho| must be < 1")


@dataclass(frozen=True)
class StopMarker:
    """Two-way categorical: continue drawing vs stop before the next stroke."""

    probs: np.ndarray  # (2,): [continue, stop]

    def __post_init__(self):
        if self.probs.shape != (2,) or abs(float(self.probs.sum()) - 1.0) > 1e-5:
            raise ShapeError("stop marker must be a 2-way distribution")


class SampleStream:
    """PCG64-backed randomness with a scalar draw counter and snapshot support."""

    def __init__(self, seed: int | None = None, _state: dict | None = None):
        self._bits = np.random.PCG64(seed)
        if _state is not None:
            self._bits.state = _state
        self._gen = np.random.Generator(self._bits)
        self.draws = 0

    def uniform(self) -> float:
        self.draws += 1
        return float(self._gen.random())

    def normals(self, n: int) -> np.ndarray:
        self.draws += n
        return self._gen.standard_normal(n)

    def state(self) -> dict:
        return {"pcg": copy.deepcopy(self._bits.state), "draws": self.draws}

    def restore(self, state: dict) -> None:
        self._bits.state = copy.deepcopy(state["pcg"])
        self.draws = state["draws"]

    def fork(self) -> "SampleStream":
        """Independent stream derived from the current state; does not consume
        or disturb this stream."""
        child = SampleStream()
        child._bits.state = self._bits.jumped().state
        return child


def sample_categorical(probs: np.ndarray, stream: SampleStream) -> int:
    """One index from a categorical distribution; consumes one uniform."""
    u = stream.uniform()
    edges = np.cumsum(probs)
    return int(min(np.searchsorted(edges, u, side="right"), len(probs) - 1))


def sample_bivariate(
    mu_x: float, mu_y: float, sigma_x: float, sigma_y: float, rho: float, stream: SampleStream
) -> tuple[float, float]:
    """Exact bivariate-Gaussian draw via the Cholesky factor of the covariance;
    consumes two standard normals."""
    z = stream.normals(2)
    x = mu_x + sigma_x * z[0]
    y = mu_y + sigma_y * (rho * z[0] + math.sqrt(1.0 - rho**2) * z[1])
    return float(x), float(y)


def sample_position(d: PositionDistribution, stream: SampleStream) -> tuple[float, float]:
    return sample_bivariate(d.mu_x, d.mu_y, d.sigma_x, d.sigma_y, d.rho, stream)


def sample_action(d: ActionDistribution, stream: SampleStream) -> tuple[float, float, int]:
    """Draw (dx, dy, pen): mixture component, then its Gaussian, then pen state.
    Consumes 1 + 2 + 1 scalars in that order."""
    m = sample_categorical(d.weights, stream)
    dx, dy = sample_bivariate(
        float(d.mu_x[m]), float(d.mu_y[m]), float(d.sigma_x[m]), float(d.sigma_y[m]), float(d.rho[m]), stream
    )
    pen = sample_categorical(d.pen_probs, stream)
    return dx, dy, pen


def sample_stop(marker: StopMarker, stream: SampleStream) -> bool:
    """True when the drawing should stop before the pending stroke; one draw."""
    return sample_categorical(marker.probs, stream) == 1


__all__ = [
    "ActionDistribution",
    "PositionDistribution",
    "SampleStream",
    "StopMarker",
    "bivariate_normal_logpdf",
    "gmm_logpdf",
    "sample_action",
    "sample_bivariate",
    "sample_categorical",
    "sample_position",
    "sample_stop",
]
