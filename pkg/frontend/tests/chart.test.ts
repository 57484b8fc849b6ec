import { describe, expect, it } from "vitest";

import {
  brushToDomain,
  depthAlpha,
  extent,
  invertValue,
  isoToIndex,
  overlapSegments,
  scaleValue,
  variableColor,
} from "../src/chart.js";

const overview = { domain: { min: 0, max: 100 }, range: { min: 0, max: 500 } };

describe("scales", () => {
  it("maps and inverts linearly", () => {
    expect(scaleValue(overview, 0)).toBe(0);
    expect(scaleValue(overview, 100)).toBe(500);
    expect(scaleValue(overview, 50)).toBe(250);
    expect(invertValue(overview, 250)).toBeCloseTo(50, 10);
  });

  it("degenerate domain maps to range midpoint", () => {
    const s = { domain: { min: 5, max: 5 }, range: { min: 0, max: 10 } };
    expect(scaleValue(s, 5)).toBe(5);
  });

  it("extent handles empty input", () => {
    expect(extent([])).toEqual({ min: 0, max: 1 });
    expect(extent([3, -1, 7])).toEqual({ min: -1, max: 7 });
  });
});

describe("brushing", () => {
  it("detail domain equals the brushed window exactly", () => {
    const d = brushToDomain(100, 300, overview, { min: 0, max: 100 });
    expect(d.min).toBeCloseTo(20, 10);
    expect(d.max).toBeCloseTo(60, 10);
  });

  it("is order-independent and clamped to the data", () => {
    const d = brushToDomain(600, -50, overview, { min: 0, max: 100 });
    expect(d).toEqual({ min: 0, max: 100 });
  });
});

describe("overlap shading", () => {
  it("disjoint intervals all get depth 1", () => {
    const segs = overlapSegments([
      { start: 0, end: 10 },
      { start: 20, end: 30 },
    ]);
    expect(segs).toEqual([
      { start: 0, end: 10, depth: 1 },
      { start: 20, end: 30, depth: 1 },
    ]);
  });

  it("overlapping area is deeper (darker)", () => {
    const segs = overlapSegments([
      { start: 0, end: 20 },
      { start: 10, end: 30 },
    ]);
    expect(segs).toEqual([
      { start: 0, end: 10, depth: 1 },
      { start: 10, end: 20, depth: 2 },
      { start: 20, end: 30, depth: 1 },
    ]);
    expect(depthAlpha(2)).toBeGreaterThan(depthAlpha(1));
  });

  it("triple overlap stacks and alpha saturates below opacity 1", () => {
    const segs = overlapSegments([
      { start: 0, end: 30 },
      { start: 10, end: 30 },
      { start: 20, end: 30 },
    ]);
    expect(segs.map((s) => s.depth)).toEqual([1, 2, 3]);
    expect(depthAlpha(100)).toBeLessThanOrEqual(0.75);
  });
});

describe("date axis", () => {
  const ts = ["2020-01-01", "2020-01-02", "2020-01-03", "2020-01-05"];

  it("exact timestamps map to their index", () => {
    expect(isoToIndex(ts, "2020-01-01")).toBe(0);
    expect(isoToIndex(ts, "2020-01-03")).toBe(2);
  });

  it("between timestamps interpolates", () => {
    expect(isoToIndex(ts, "2020-01-04")).toBeCloseTo(2.5, 10);
  });

  it("outside the axis clamps", () => {
    expect(isoToIndex(ts, "2019-01-01")).toBe(0);
    expect(isoToIndex(ts, "2021-01-01")).toBe(3);
  });
});

describe("colors", () => {
  it("are deterministic and cycle", () => {
    expect(variableColor(0)).toBe(variableColor(6));
    expect(variableColor(0)).not.toBe(variableColor(1));
  });
});
