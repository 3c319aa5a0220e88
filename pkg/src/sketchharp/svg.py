"""SVG export of sketch records, sharing the raster viewport so that vector
and raster renderings line up pixel for pixel."""

from __future__ import annotations

import re

import numpy as np

from .corpus import IMAGE_MARGIN, IMAGE_SIZE, SketchRecord, _viewport


def record_to_svg(rec: SketchRecord, size: int = IMAGE_SIZE, margin: int = IMAGE_MARGIN) -> str:
    """One polyline per stroke, in the same viewport rasterize uses."""
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if not rec.is_empty:
        scale, offset = _viewport(rec.all_points(), size, margin)
        for anchored in rec.strokes:
            pts = anchored.points() * scale + offset
            coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
            lines.append(
                f'<polyline points="{coords}" fill="none" stroke="black" stroke-width="1"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines)


def svg_polylines(svg: str) -> list[np.ndarray]:
    """Parse the point lists back out of an exported SVG (test oracle hook)."""
    out = []
    for match in re.finditer(r'<polyline points="([^"]*)"', svg):
        pairs = [p.split(",") for p in match.group(1).split()]
        out.append(np.array([[float(x), float(y)] for x, y in pairs]))
    return out
