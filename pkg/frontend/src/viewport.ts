/** Affine transform between normalized canvas units (server side) and
 * viewport pixels. Uniform scale, y preserved downward, centered. */

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function boundsOfPoints(points: { x: number; y: number }[]): Bounds | null {
  if (points.length === 0) return null;
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    minY = Math.min(minY, p.y);
    maxX = Math.max(maxX, p.x);
    maxY = Math.max(maxY, p.y);
  }
  return { minX, minY, maxX, maxY };
}

/** Fit the bounds into width x height pixels with a margin, preserving aspect
 * ratio. Degenerate bounds land centered at unit scale. */
export function fitViewport(
  bounds: Bounds | null,
  width: number,
  height: number,
  margin = 16,
): Viewport {
  if (bounds === null) {
    return { scale: 1, offsetX: width / 2, offsetY: height / 2 };
  }
  const spanX = bounds.maxX - bounds.minX;
  const spanY = bounds.maxY - bounds.minY;
  const extent = Math.max(spanX, spanY);
  const inner = Math.min(width, height) - 2 * margin;
  const scale = extent > 0 ? inner / extent : 1;
  const offsetX = (width - spanX * scale) / 2 - bounds.minX * scale;
  const offsetY = (height - spanY * scale) / 2 - bounds.minY * scale;
  return { scale, offsetX, offsetY };
}

export function toPixels(v: Viewport, x: number, y: number): { x: number; y: number } {
  return { x: x * v.scale + v.offsetX, y: y * v.scale + v.offsetY };
}

export function toUnits(v: Viewport, px: number, py: number): { x: number; y: number } {
  return { x: (px - v.offsetX) / v.scale, y: (py - v.offsetY) / v.scale };
}

/** Absolute polyline, in server units, of a stroke payload. */
export function strokePoints(stroke: {
  start: [number, number];
  actions: number[][];
}): { x: number; y: number }[] {
  const pts: { x: number; y: number }[] = [];
  let x = stroke.start[0];
  let y = stroke.start[1];
  for (const [dx, dy] of stroke.actions) {
    x += dx;
    y += dy;
    pts.push({ x, y });
  }
  return pts;
}
