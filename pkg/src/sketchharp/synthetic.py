"""Procedural QuickDraw-format sketches for tests and desk-scale experiments.

Sketches are emitted as raw stroke-5 sequences with integer offsets in the
value range of QuickDraw simplified drawings (coordinates within ~255 units),
starting at the canvas origin. Each category composes a few jittered stroke
primitives so that every sample is unique but the category is easy to tell.
"""

from __future__ import annotations

import numpy as np

from .corpus import PEN_DOWN, PEN_END, PEN_LIFT, SketchRecord, parse_stroke5

CATEGORIES = ("face", "house", "bug", "tree")


def _circle(cx, cy, r, n=12, phase=0.0):
    t = phase + np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    pts = np.stack([cx + r * np.cos(t), cy + r * np.sin(t)], axis=1)
    return np.concatenate([pts, pts[:1]], axis=0)


def _polyline(*pts):
    return np.asarray(pts, dtype=np.float64)


def _jitter(pts, rng, amount):
    return pts + rng.uniform(-amount, amount, size=pts.shape)


def _ellipse(cx, cy, rx, ry, n=12, phase=0.0):
    t = phase + np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    pts = np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)
    return np.concatenate([pts, pts[:1]], axis=0)


def _face(rng) -> list[np.ndarray]:
    rx = rng.uniform(45, 105)
    ry = rx * rng.uniform(0.75, 1.3)
    head = _ellipse(0, 0, rx, ry, n=14, phase=rng.uniform(0, 6.28))
    eye_dx = rx * rng.uniform(0.25, 0.5)
    eye_y = -ry * rng.uniform(0.15, 0.45)
    left = _circle(-eye_dx, eye_y, rx * rng.uniform(0.06, 0.18), n=6)
    right = _circle(eye_dx, eye_y * rng.uniform(0.8, 1.2), rx * rng.uniform(0.06, 0.18), n=6)
    mw = rx * rng.uniform(0.3, 0.75)
    my = ry * rng.uniform(0.2, 0.55)
    curve = mw * rng.uniform(0.15, 0.5) * rng.choice([-1.0, 1.0])
    mouth = _polyline((-mw, my), (-mw / 2, my + curve), (mw / 2, my + curve), (mw, my))
    strokes = [head, left, right, mouth]
    if rng.random() < 0.5:
        nose = _polyline((0, eye_y + ry * 0.15), (rx * rng.uniform(-0.15, 0.15), my - ry * 0.15))
        strokes.insert(3, nose)
    return [_jitter(s, rng, 3.0) for s in strokes]


def _house(rng) -> list[np.ndarray]:
    w = rng.uniform(70, 150)
    h = rng.uniform(50, 110)
    roof = rng.uniform(25, 70)
    peak = w * rng.uniform(-0.2, 0.2)
    body = _polyline((-w / 2, 0), (w / 2, 0), (w / 2, -h), (-w / 2, -h), (-w / 2, 0))
    top = _polyline((-w / 2, -h), (peak, -h - roof), (w / 2, -h))
    dw = w * rng.uniform(0.1, 0.22)
    dx = w * rng.uniform(-0.25, 0.25)
    dh = h * rng.uniform(0.4, 0.65)
    door = _polyline((dx - dw, 0), (dx - dw, -dh), (dx + dw, -dh), (dx + dw, 0))
    strokes = [body, top, door]
    if rng.random() < 0.6:
        wx = w * rng.choice([-1.0, 1.0]) * rng.uniform(0.22, 0.38)
        wy = -h * rng.uniform(0.55, 0.85)
        ww = w * rng.uniform(0.1, 0.18)
        win = _polyline((wx, wy), (wx + ww, wy), (wx + ww, wy + ww), (wx, wy + ww), (wx, wy))
        strokes.append(win)
    if rng.random() < 0.35:
        cx = w * rng.uniform(0.15, 0.3)
        chimney = _polyline((cx, -h - roof * 0.5), (cx, -h - roof * 1.2), (cx + w * 0.08, -h - roof * 1.2), (cx + w * 0.08, -h - roof * 0.3))
        strokes.append(chimney)
    return [_jitter(s, rng, 3.0) for s in strokes]


def _bug(rng) -> list[np.ndarray]:
    rx = rng.uniform(50, 80)
    ry = rx * rng.uniform(0.5, 0.75)
    t = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    body = np.stack([rx * np.cos(t), ry * np.sin(t)], axis=1)
    body = np.concatenate([body, body[:1]], axis=0)
    mid = _polyline((0, -ry), (0, ry))
    strokes = [body, mid]
    for side in (-1, 1):
        x0 = side * rx * 0.5
        leg = _polyline((x0, ry), (x0 + side * 15, ry + rng.uniform(15, 30)))
        strokes.append(leg)
    return [_jitter(s, rng, 2.0) for s in strokes]


def _tree(rng) -> list[np.ndarray]:
    h = rng.uniform(70, 110)
    trunk_w = rng.uniform(8, 16)
    trunk = _polyline((-trunk_w, 0), (-trunk_w, -h * 0.4), (trunk_w, -h * 0.4), (trunk_w, 0))
    crown = _circle(0, -h * 0.4 - h * 0.35, h * rng.uniform(0.3, 0.45), n=12, phase=rng.uniform(0, 6.28))
    strokes = [trunk, crown]
    if rng.random() < 0.5:
        ground = _polyline((-h * 0.5, 0), (h * 0.5, 0))
        strokes.append(ground)
    return [_jitter(s, rng, 2.0) for s in strokes]


_MAKERS = {"face": _face, "house": _house, "bug": _bug, "tree": _tree}


def make_raw_sketch(category: str, rng: np.random.Generator) -> np.ndarray:
    """Build one raw stroke-5 sequence of the given category."""
    strokes = _MAKERS[category](rng)
    pts = np.round(np.concatenate(strokes, axis=0))
    pts -= pts[0]
    pens = np.concatenate(
        [[PEN_DOWN] * (len(s) - 1) + [PEN_LIFT] for s in strokes]
    )
    pens[-1] = PEN_END
    offsets = np.diff(pts, axis=0)
    flags = np.zeros((len(offsets), 3))
    flags[np.arange(len(offsets)), pens[1:].astype(int)] = 1.0
    return np.concatenate([offsets, flags], axis=1)


def make_corpus(
    n: int,
    categories: tuple[str, ...] = CATEGORIES,
    seed: int = 0,
) -> list[SketchRecord]:
    """Generate ``n`` parsed sketches cycling through the categories."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        cat = categories[i % len(categories)]
        records.append(parse_stroke5(make_raw_sketch(cat, rng), category=cat))
    return records


def make_raw_corpus(
    n: int,
    categories: tuple[str, ...] = CATEGORIES,
    seed: int = 0,
) -> list[tuple[np.ndarray, str]]:
    """Generate ``n`` raw stroke-5 sequences with their category labels."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        cat = categories[i % len(categories)]
        out.append((make_raw_sketch(cat, rng), cat))
    return out
