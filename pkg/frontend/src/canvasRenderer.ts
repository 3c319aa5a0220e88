/** Canvas drawing: committed strokes solid (last one highlighted), pending
 * preview dashed, inserted strokes tinted. */

import type { UiSessionState } from "./session.js";
import { boundsOfPoints, fitViewport, strokePoints, toPixels, type Viewport } from "./viewport.js";

const COLORS = {
  generated: "#1a1a1a",
  inserted: "#0a6cbd",
  highlight: "#c92a2a",
  pending: "#888888",
  badge: "#555555",
};

export function computeViewport(state: UiSessionState, width: number, height: number): Viewport {
  const all = state.committed.flatMap((c) => strokePoints(c.stroke));
  if (state.pending?.stroke) all.push(...strokePoints(state.pending.stroke));
  return fitViewport(boundsOfPoints(all), width, height);
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  viewport: Viewport,
  points: { x: number; y: number }[],
  style: { color: string; width: number; dashed?: boolean },
): void {
  if (points.length === 0) return;
  ctx.save();
  ctx.strokeStyle = style.color;
  ctx.lineWidth = style.width;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  ctx.setLineDash(style.dashed ? [6, 5] : []);
  ctx.beginPath();
  const first = toPixels(viewport, points[0].x, points[0].y);
  ctx.moveTo(first.x, first.y);
  for (const p of points.slice(1)) {
    const px = toPixels(viewport, p.x, p.y);
    ctx.lineTo(px.x, px.y);
  }
  if (points.length === 1) ctx.lineTo(first.x + 0.5, first.y + 0.5);
  ctx.stroke();
  ctx.restore();
}

export function renderCanvas(
  ctx: CanvasRenderingContext2D,
  state: UiSessionState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);

  const viewport = computeViewport(state, width, height);
  state.committed.forEach((entry, i) => {
    const isLast = i === state.committed.length - 1;
    drawPolyline(ctx, viewport, strokePoints(entry.stroke), {
      color: isLast ? COLORS.highlight : COLORS[entry.source],
      width: isLast ? 2.5 : 2,
    });
  });
  if (state.pending && !state.pending.finished && state.pending.stroke) {
    drawPolyline(ctx, viewport, strokePoints(state.pending.stroke), {
      color: COLORS.pending,
      width: 1.5,
      dashed: true,
    });
  }

  ctx.fillStyle = COLORS.badge;
  ctx.font = "12px system-ui, sans-serif";
  const badge = state.sessionId
    ? `session ${state.sessionId.slice(0, 8)} | ${state.committed.length} strokes${state.finished ? " | finished" : ""}`
    : "no session";
  ctx.fillText(badge, 8, height - 8);
}
