import { describe, expect, it } from "vitest";

import {
  boundsOfPoints,
  fitViewport,
  strokePoints,
  toPixels,
  toUnits,
} from "../src/viewport.js";

describe("viewport transform", () => {
  const points = [
    { x: -3.2, y: 1.7 },
    { x: 0.4, y: -2.9 },
    { x: 5.05, y: 0.0 },
  ];
  const viewport = fitViewport(boundsOfPoints(points), 720, 560);

  it("round-trips units -> pixels -> units within 1e-6", () => {
    for (const p of points) {
      const px = toPixels(viewport, p.x, p.y);
      const back = toUnits(viewport, px.x, px.y);
      expect(Math.abs(back.x - p.x)).toBeLessThan(1e-6);
      expect(Math.abs(back.y - p.y)).toBeLessThan(1e-6);
    }
  });

  it("round-trips pixels -> units -> pixels within 1e-6", () => {
    for (const px of [{ x: 0, y: 0 }, { x: 719, y: 559 }, { x: 360.25, y: 123.75 }]) {
      const units = toUnits(viewport, px.x, px.y);
      const again = toPixels(viewport, units.x, units.y);
      expect(Math.abs(again.x - px.x)).toBeLessThan(1e-6);
      expect(Math.abs(again.y - px.y)).toBeLessThan(1e-6);
    }
  });

  it("keeps all content inside the margin", () => {
    for (const p of points) {
      const px = toPixels(viewport, p.x, p.y);
      expect(px.x).toBeGreaterThanOrEqual(16 - 1e-9);
      expect(px.y).toBeGreaterThanOrEqual(16 - 1e-9);
      expect(px.x).toBeLessThanOrEqual(720 - 16 + 1e-9);
      expect(px.y).toBeLessThanOrEqual(560 - 16 + 1e-9);
    }
  });

  it("preserves aspect ratio (uniform scale)", () => {
    const a = toPixels(viewport, 0, 0);
    const bx = toPixels(viewport, 1, 0);
    const by = toPixels(viewport, 0, 1);
    expect(Math.abs(bx.x - a.x)).toBeCloseTo(Math.abs(by.y - a.y), 9);
  });

  it("handles empty and degenerate bounds", () => {
    expect(boundsOfPoints([])).toBeNull();
    const vp = fitViewport(boundsOfPoints([{ x: 2, y: 2 }]), 100, 100);
    const px = toPixels(vp, 2, 2);
    expect(px.x).toBeCloseTo(50, 6);
    expect(px.y).toBeCloseTo(50, 6);
  });
});

describe("strokePoints", () => {
  it("accumulates offsets from the start, first offset included", () => {
    const pts = strokePoints({
      start: [3, 4],
      actions: [
        [0, 0, 0],
        [1, 1, 0],
        [2, 0, 1],
      ],
    });
    expect(pts).toEqual([
      { x: 3, y: 4 },
      { x: 4, y: 5 },
      { x: 6, y: 5 },
    ]);
  });
});
