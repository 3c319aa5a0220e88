"""QuickDraw-style stroke-5 handling: parsing into anchored strokes, normalization,
rasterization, and newline-delimited JSON persistence.

Conventions
-----------
A raw stroke-5 sequence is a list of actions ``(dx, dy, l0, l1, l2)``. The pen
starts at the canvas origin, which is itself the first drawn point of the first
stroke. Action ``i`` moves the pen by ``(dx, dy)`` to a new point; its one-hot
pen state applies at that point. A point with ``l1 = 1`` (lift) or ``l2 = 1``
(end) is the last point of its stroke; the next point, if any, begins a new
stroke and its offset is the un-drawn pen travel between strokes.

Parsed form: each stroke stores its actions with the first offset rewritten to
``(0, 0)`` and the absolute starting coordinate kept separately, so stroke
shape and stroke placement can be consumed independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError, DegenerateCorpus, InvalidSketch, OverLimit

PEN_DOWN = 0
PEN_LIFT = 1
PEN_END = 2

# Corpus limits: strokes per sketch and actions per stroke.
N_MAX_NUM = 25
N_MAX_LEN = 32

IMAGE_SIZE = 128
IMAGE_MARGIN = 4


@dataclass(frozen=True)
class DrawingAction:
    """A single pen movement: offset from the previous point plus pen state."""

    dx: float
    dy: float
    pen: int  # PEN_DOWN | PEN_LIFT | PEN_END

    def onehot(self) -> np.ndarray:
        v = np.zeros(3)
        v[self.pen] = 1.0
        return v


class Stroke:
    """An ordered run of drawing actions, stored as a float64 array of rows
    ``(dx, dy, pen)`` with pen codes 0/1/2."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray | Sequence):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidSketch(f"stroke data must be (N, 3), got {arr.shape}")
        self.data = arr

    def __len__(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Stroke) and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"Stroke(n={len(self)})"

    @property
    def actions(self) -> list[DrawingAction]:
        return [DrawingAction(dx, dy, int(p)) for dx, dy, p in self.data]

    @classmethod
    def from_actions(cls, actions: Iterable[tuple[float, float, int]]) -> "Stroke":
        return cls(np.array([[dx, dy, float(p)] for dx, dy, p in actions]))

    def validate(self, max_len: int = N_MAX_LEN) -> None:
        """Enforce the corpus conventions; generated strokes are exempt."""
        n = len(self)
        if n < 1:
            raise InvalidSketch("stroke has no actions")
        if n > max_len:
            raise OverLimit(f"stroke has {n} actions, limit {max_len}")
        if not np.all(np.isfinite(self.data[:, :2])):
            raise InvalidSketch("stroke offsets must be finite")
        if self.data[0, 0] != 0.0 or self.data[0, 1] != 0.0:
            raise InvalidSketch("first stroke action must have a (0, 0) offset")
        pens = self.data[:, 2]
        if np.any(pens[:-1] != PEN_DOWN):
            raise InvalidSketch("only the last action of a stroke may lift the pen")
        if pens[-1] not in (PEN_LIFT, PEN_END):
            raise InvalidSketch("last action of a stroke must lift or end")


@dataclass(frozen=True)
class AnchoredStroke:
    """A stroke plus the absolute canvas coordinate of its first point."""

    stroke: Stroke
    start: tuple[float, float]

    def points(self) -> np.ndarray:
        """Absolute point positions, shape (N, 2): start + running offset sum."""
        offsets = np.cumsum(self.stroke.data[:, :2], axis=0)
        return np.asarray(self.start, dtype=np.float64) + offsets


@dataclass
class SketchRecord:
    """An ordered list of anchored strokes with a category label and the
    normalization divisor already applied to its coordinates."""

    strokes: list[AnchoredStroke] = field(default_factory=list)
    category: str = ""
    scale: float = 1.0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SketchRecord)
            and self.category == other.category
            and self.scale == other.scale
            and len(self.strokes) == len(other.strokes)
            and all(
                a.stroke == b.stroke and a.start == b.start
                for a, b in zip(self.strokes, other.strokes)
            )
        )

    @property
    def num_strokes(self) -> int:
        return len(self.strokes)

    @property
    def is_empty(self) -> bool:
        return not self.strokes

    def all_points(self) -> np.ndarray:
        if self.is_empty:
            return np.zeros((0, 2))
        return np.concatenate([s.points() for s in self.strokes], axis=0)

    def validate(self, max_num: int = N_MAX_NUM, max_len: int = N_MAX_LEN) -> None:
        if self.is_empty:
            raise InvalidSketch("record has no strokes")
        if self.num_strokes > max_num:
            raise OverLimit(f"{self.num_strokes} strokes, limit {max_num}")
        for anchored in self.strokes:
            anchored.stroke.validate(max_len)
            if not all(np.isfinite(anchored.start)):
                raise InvalidSketch("stroke start must be finite")
        pens = np.concatenate([s.stroke.data[:, 2] for s in self.strokes])
        ends = np.flatnonzero(pens == PEN_END)
        if len(ends) != 1 or ends[0] != len(pens) - 1:
            raise InvalidSketch("exactly the final action of the final stroke must end the drawing")


def _check_raw(raw: np.ndarray) -> None:
    if raw.size == 0:
        raise InvalidSketch("empty action sequence")
    if raw.ndim != 2 or raw.shape[1] != 5:
        raise InvalidSketch(f"stroke-5 input must be (N, 5), got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise InvalidSketch("offsets and pen flags must be finite")
    flags = raw[:, 2:]
    if not (np.all((flags == 0) | (flags == 1)) and np.all(flags.sum(axis=1) == 1)):
        raise InvalidSketch("pen flags must be one-hot")
    if flags[-1, 0] == 1:
        raise InvalidSketch("final action must lift or end the pen")
    if np.any(flags[:-1, 2] == 1):
        raise InvalidSketch("end-of-drawing flag before the final action")


def parse_stroke5(
    raw: Sequence | np.ndarray,
    max_num: int = N_MAX_NUM,
    max_len: int = N_MAX_LEN,
    category: str = "",
) -> SketchRecord:
    """Split a raw stroke-5 sequence into anchored strokes.

    Raises InvalidSketch on malformed input and OverLimit when the sketch
    exceeds ``max_num`` strokes or any stroke exceeds ``max_len`` actions.
    The terminal pen state is normalized to end-of-drawing.
    """
    raw = np.asarray(raw, dtype=np.float64)
    _check_raw(raw)

    # Point i sits at the running sum of offsets; the origin is point 0.
    points = np.concatenate([np.zeros((1, 2)), np.cumsum(raw[:, :2], axis=0)], axis=0)
    pens = np.concatenate([[PEN_DOWN], np.argmax(raw[:, 2:], axis=1)])
    pens[-1] = PEN_END

    boundaries = np.flatnonzero(pens != PEN_DOWN)
    strokes: list[AnchoredStroke] = []
    begin = 0
    for end in boundaries:
        seg_pts = points[begin : end + 1]
        seg_pens = pens[begin : end + 1]
        if len(seg_pts) > max_len:
            raise OverLimit(f"stroke of {len(seg_pts)} actions exceeds limit {max_len}")
        offsets = np.diff(seg_pts, axis=0, prepend=seg_pts[:1])
        data = np.concatenate([offsets, seg_pens[:, None].astype(np.float64)], axis=1)
        strokes.append(AnchoredStroke(Stroke(data), (seg_pts[0, 0], seg_pts[0, 1])))
        begin = end + 1
    if len(strokes) > max_num:
        raise OverLimit(f"{len(strokes)} strokes exceeds limit {max_num}")
    return SketchRecord(strokes=strokes, category=category, scale=1.0)


def reassemble(rec: SketchRecord) -> np.ndarray:
    """Inverse of parse_stroke5: emit the stroke-5 sequence whose absolute point
    trajectory and pen states match the record.

    Exact for records whose first stroke starts at the origin (every
    parse_stroke5 output); other records come back translated so that their
    first point is the origin, since stroke-5 carries no absolute anchor.
    """
    if rec.is_empty:
        raise InvalidSketch("cannot reassemble an empty record")
    pts = np.concatenate([s.points() for s in rec.strokes], axis=0)
    pens = np.concatenate([s.stroke.data[:, 2] for s in rec.strokes])
    if len(pts) == 1:
        return np.array([[0.0, 0.0, 0.0, 0.0, 1.0]])
    offsets = np.diff(pts, axis=0)
    flags = np.zeros((len(offsets), 3))
    flags[np.arange(len(offsets)), pens[1:].astype(int)] = 1.0
    return np.concatenate([offsets, flags], axis=1)


def normalize_corpus(records: list[SketchRecord]) -> tuple[list[SketchRecord], float]:
    """Scale every offset and start coordinate by the population standard
    deviation of all (dx, dy) components across the corpus."""
    if not records:
        raise InvalidSketch("empty corpus")
    components = np.concatenate(
        [s.stroke.data[:, :2].ravel() for rec in records for s in rec.strokes]
    )
    sigma = float(np.std(components))
    if sigma == 0.0:
        raise DegenerateCorpus("offset variance is zero")
    out = []
    for rec in records:
        strokes = [
            AnchoredStroke(
                Stroke(np.concatenate([s.stroke.data[:, :2] / sigma, s.stroke.data[:, 2:]], axis=1)),
                (s.start[0] / sigma, s.start[1] / sigma),
            )
            for s in rec.strokes
        ]
        out.append(SketchRecord(strokes=strokes, category=rec.category, scale=rec.scale * sigma))
    return out, sigma


def _viewport(points: np.ndarray, size: int = IMAGE_SIZE, margin: int = IMAGE_MARGIN):
    """Affine map fitting the point cloud's bounding box into the image with a
    fixed margin, preserving aspect ratio and centering. Returns (scale, offset)."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    extent = float(span.max())
    inner = size - 2 * margin
    scale = inner / extent if extent > 0 else 1.0
    offset = margin + (inner - span * scale) / 2.0 - lo * scale
    return scale, offset


def _bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    while True:
        out.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return out
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize(rec: SketchRecord, size: int = IMAGE_SIZE, margin: int = IMAGE_MARGIN) -> np.ndarray:
    """Draw the record as 1-pixel polylines on a ``size`` x ``size`` grid with
    values +1 on strokes and -1 on background. Row index is y, growing down."""
    image = np.full((size, size), -1.0)
    if rec.is_empty:
        return image
    scale, offset = _viewport(rec.all_points(), size, margin)
    for anchored in rec.strokes:
        pts = anchored.points() * scale + offset
        pix = np.floor(pts + 0.5).astype(int)
        pix = np.clip(pix, 0, size - 1)
        if len(pix) == 1:
            image[pix[0, 1], pix[0, 0]] = 1.0
            continue
        for (x0, y0), (x1, y1) in zip(pix[:-1], pix[1:]):
            for x, y in _bresenham(x0, y0, x1, y1):
                image[y, x] = 1.0
    return image


def _record_to_obj(rec: SketchRecord) -> dict:
    return {
        "category": rec.category,
        "scale": rec.scale,
        "strokes": [
            {
                "start": [s.start[0], s.start[1]],
                "actions": [[dx, dy, int(p)] for dx, dy, p in s.stroke.data],
            }
            for s in rec.strokes
        ],
    }


def _record_from_obj(obj: dict) -> SketchRecord:
    strokes = [
        AnchoredStroke(
            Stroke.from_actions([(a[0], a[1], int(a[2])) for a in s["actions"]]),
            (float(s["start"][0]), float(s["start"][1])),
        )
        for s in obj["strokes"]
    ]
    return SketchRecord(strokes=strokes, category=obj["category"], scale=float(obj["scale"]))


def save_corpus(records: list[SketchRecord], path) -> None:
    """Write newline-delimited JSON, one record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_obj(rec)) + "\n")


def load_corpus(path) -> list[SketchRecord]:
    """Read a corpus written by save_corpus. Raises CorpusFormatError carrying
    the byte offset of the first unreadable record."""
    records = []
    offset = 0
    with open(path, "rb") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped:
                try:
                    records.append(_record_from_obj(json.loads(stripped.decode("utf-8"))))
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise CorpusFormatError(f"bad record: {exc}", offset) from exc
            offset += len(line)
    return records


def stroke3_to_stroke5(seq: np.ndarray) -> np.ndarray:
    """Convert a QuickDraw (dx, dy, lift) array to stroke-5 rows, marking the
    final action as end-of-drawing."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != 3:
        raise InvalidSketch(f"stroke-3 input must be (N, 3), got {seq.shape}")
    n = len(seq)
    out = np.zeros((n, 5))
    out[:, :2] = seq[:, :2]
    lift = seq[:, 2].astype(int)
    out[np.arange(n), 2 + lift] = 1.0
    out[-1, 2:] = [0.0, 0.0, 1.0]
    return out


def convert_quickdraw_npz(
    path,
    split: str = "train",
    limit: int | None = None,
    category: str | None = None,
    max_num: int = N_MAX_NUM,
    max_len: int = N_MAX_LEN,
) -> tuple[list[SketchRecord], int]:
    """Parse a packed QuickDraw .npz archive into records, dropping sketches
    over the stroke-count/length limits. Returns (records, dropped_count)."""
    archive = np.load(path, allow_pickle=True, encoding="latin1")
    if split not in archive:
        raise CorpusFormatError(f"split '{split}' not in archive (has {list(archive)})", 0)
    name = category if category is not None else str(path)
    records = []
    dropped = 0
    for seq in archive[split][:limit]:
        seq = np.asarray(seq)
        raw = stroke3_to_stroke5(seq) if seq.shape[1] == 3 else seq
        try:
            records.append(parse_stroke5(raw, max_num, max_len, category=name))
        except OverLimit:
            dropped += 1
    return records, dropped
