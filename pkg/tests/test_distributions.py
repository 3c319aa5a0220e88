import math

import numpy as np
import pytest
import torch

from sketchharp.distributions import (
    ActionDistribution,
    PositionDistribution,
    SampleStream,
    StopMarker,
    bivariate_normal_logpdf,
    gmm_logpdf,
    sample_action,
    sample_categorical,
    sample_position,
    sample_stop,
)
from sketchharp.errors import ShapeError

LN_2PI = math.log(2.0 * math.pi)


def t(x):
    return torch.tensor(x, dtype=torch.float64)


def hand_mixture(m=3, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.random(m)
    w /= w.sum()
    return ActionDistribution(
        weights=w,
        mu_x=rng.normal(size=m),
        mu_y=rng.normal(size=m),
        sigma_x=rng.uniform(0.5, 2.0, m),
        sigma_y=rng.uniform(0.5, 2.0, m),
        rho=rng.uniform(-0.8, 0.8, m),
        pen_probs=np.array([0.7, 0.2, 0.1]),
    )


class TestBivariateDensity:
    def test_nll_at_mean_unit_sigma(self):
        lp = bivariate_normal_logpdf(t(0.0), t(0.0), t(0.0), t(0.0), t(1.0), t(1.0), t(0.0))
        assert float(-lp) == pytest.approx(LN_2PI, abs=1e-9)

    def test_nll_at_mean_rho_half(self):
        lp = bivariate_normal_logpdf(t(0.0), t(0.0), t(0.0), t(0.0), t(1.0), t(1.0), t(0.5))
        assert float(-lp) == pytest.approx(LN_2PI + 0.5 * math.log(0.75), abs=1e-9)

    def test_doubling_sigma_adds_ln2(self):
        base = -bivariate_normal_logpdf(t(0.0), t(0.0), t(0.0), t(0.0), t(1.0), t(1.0), t(0.0))
        wide = -bivariate_normal_logpdf(t(0.0), t(0.0), t(0.0), t(0.0), t(2.0), t(1.0), t(0.0))
        assert float(wide - base) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_translation_invariance(self):
        a = bivariate_normal_logpdf(t(1.3), t(-0.2), t(0.4), t(0.9), t(1.1), t(0.7), t(0.3))
        c = 5.75
        b = bivariate_normal_logpdf(t(1.3 + c), t(-0.2 + c), t(0.4 + c), t(0.9 + c), t(1.1), t(0.7), t(0.3))
        assert float(a - b) == pytest.approx(0.0, abs=1e-9)

    def test_matches_scipy(self):
        from scipy.stats import multivariate_normal

        mu = [0.3, -1.2]
        sx, sy, rho = 1.4, 0.6, -0.35
        cov = [[sx**2, rho * sx * sy], [rho * sx * sy, sy**2]]
        ref = multivariate_normal(mu, cov).logpdf([0.9, 0.1])
        got = bivariate_normal_logpdf(t(0.9), t(0.1), t(mu[0]), t(mu[1]), t(sx), t(sy), t(rho))
        assert float(got) == pytest.approx(ref, abs=1e-12)


class TestMixtureDensity:
    def test_matches_brute_force_sum(self):
        d = hand_mixture()
        x, y = 0.37, -0.81
        brute = 0.0
        for m in range(3):
            zx = (x - d.mu_x[m]) / d.sigma_x[m]
            zy = (y - d.mu_y[m]) / d.sigma_y[m]
            omr = 1 - d.rho[m] ** 2
            z = zx**2 + zy**2 - 2 * d.rho[m] * zx * zy
            brute += d.weights[m] * math.exp(-z / (2 * omr)) / (
                2 * math.pi * d.sigma_x[m] * d.sigma_y[m] * math.sqrt(omr)
            )
        got = gmm_logpdf(
            t(x), t(y), t(d.weights), t(d.mu_x), t(d.mu_y), t(d.sigma_x), t(d.sigma_y), t(d.rho)
        )
        assert float(got) == pytest.approx(math.log(brute), abs=1e-9)

    def test_density_integrates_to_one(self):
        d = hand_mixture()
        grid = np.linspace(-12.0, 12.0, 601)
        step = grid[1] - grid[0]
        gx, gy = np.meshgrid(grid, grid)
        lp = gmm_logpdf(
            t(gx.ravel()), t(gy.ravel()), t(d.weights), t(d.mu_x), t(d.mu_y),
            t(d.sigma_x), t(d.sigma_y), t(d.rho),
        )
        mass = float(torch.exp(lp).sum()) * step * step
        assert mass == pytest.approx(1.0, abs=1e-3)


class TestValidation:
    def test_position_rejects_bad_sigma(self):
        with pytest.raises(ShapeError):
            PositionDistribution(0.0, 0.0, -1.0, 1.0, 0.0)

    def test_position_rejects_bad_rho(self):
        with pytest.raises(ShapeError):
            PositionDistribution(0.0, 0.0, 1.0, 1.0, 1.0)

    def test_action_rejects_off_simplex(self):
        d = hand_mixture()
        with pytest.raises(ShapeError):
            ActionDistribution(
                weights=d.weights * 2.0, mu_x=d.mu_x, mu_y=d.mu_y,
                sigma_x=d.sigma_x, sigma_y=d.sigma_y, rho=d.rho, pen_probs=d.pen_probs,
            )

    def test_stop_marker_simplex(self):
        with pytest.raises(ShapeError):
            StopMarker(np.array([0.7, 0.7]))


class TestSamplers:
    def test_degenerate_gaussian_returns_mean(self):
        d = PositionDistribution(2.5, -1.5, 1e-12, 1e-12, 0.0)
        x, y = sample_position(d, SampleStream(0))
        assert x == pytest.approx(2.5, abs=1e-9)
        assert y == pytest.approx(-1.5, abs=1e-9)

    def test_zero_rho_correlation(self):
        d = PositionDistribution(0.0, 0.0, 1.0, 1.0, 0.0)
        stream = SampleStream(42)
        pts = np.array([sample_position(d, stream) for _ in range(100_000)])
        r = np.corrcoef(pts[:, 0], pts[:, 1])[0, 1]
        assert abs(r) < 0.01

    def test_empirical_mean_within_three_sigma(self):
        n = 100_000
        d = PositionDistribution(1.25, -0.75, 2.0, 0.5, 0.6)
        stream = SampleStream(7)
        pts = np.array([sample_position(d, stream) for _ in range(n)])
        bound = 3.0 / math.sqrt(n)
        assert abs(pts[:, 0].mean() - 1.25) < bound * 2.0
        assert abs(pts[:, 1].mean() + 0.75) < bound * 0.5

    def test_empirical_correlation_matches_rho(self):
        d = PositionDistribution(0.0, 0.0, 1.0, 1.0, 0.45)
        stream = SampleStream(3)
        pts = np.array([sample_position(d, stream) for _ in range(100_000)])
        r = np.corrcoef(pts[:, 0], pts[:, 1])[0, 1]
        assert r == pytest.approx(0.45, abs=0.01)

    def test_one_hot_mixture_uses_single_component(self):
        d = ActionDistribution(
            weights=np.array([0.0, 1.0, 0.0]),
            mu_x=np.array([-100.0, 5.0, 100.0]),
            mu_y=np.array([-100.0, 5.0, 100.0]),
            sigma_x=np.full(3, 1e-6),
            sigma_y=np.full(3, 1e-6),
            rho=np.zeros(3),
            pen_probs=np.array([1.0, 0.0, 0.0]),
        )
        stream = SampleStream(0)
        for _ in range(200):
            dx, dy, pen = sample_action(d, stream)
            assert abs(dx - 5.0) < 1e-3 and abs(dy - 5.0) < 1e-3
            assert pen == 0

    def test_component_frequencies_match_weights(self):
        w = np.array([0.2, 0.5, 0.3])
        stream = SampleStream(11)
        counts = np.zeros(3)
        n = 100_000
        for _ in range(n):
            counts[sample_categorical(w, stream)] += 1
        assert np.all(np.abs(counts / n - w) < 0.01)

    def test_stop_sampling_and_draw_count(self):
        stream = SampleStream(0)
        marker = StopMarker(np.array([0.0, 1.0]))
        assert sample_stop(marker, stream)
        assert stream.draws == 1
        marker = StopMarker(np.array([1.0, 0.0]))
        assert not sample_stop(marker, stream)
        assert stream.draws == 2

    def test_action_draw_count_is_four(self):
        d = hand_mixture()
        stream = SampleStream(5)
        sample_action(d, stream)
        assert stream.draws == 4


class TestSampleStream:
    def test_replayable_from_state(self):
        stream = SampleStream(123)
        stream.normals(7)
        snap = stream.state()
        a = [stream.uniform() for _ in range(5)]
        stream.restore(snap)
        b = [stream.uniform() for _ in range(5)]
        assert a == b

    def test_fork_does_not_disturb_parent(self):
        stream = SampleStream(9)
        stream.uniform()
        snap = stream.state()
        fork = stream.fork()
        fork.normals(100)
        assert stream.state() == snap
        after = stream.uniform()
        stream.restore(snap)
        assert stream.uniform() == after

    def test_same_seed_same_trace(self):
        a, b = SampleStream(77), SampleStream(77)
        assert [a.uniform() for _ in range(10)] == [b.uniform() for _ in range(10)]
        assert np.array_equal(a.normals(10), b.normals(10))
