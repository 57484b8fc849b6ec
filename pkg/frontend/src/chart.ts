/** Pure geometry for the Main View: scales, brushing, and overlap shading.
 * No DOM access, so everything here is unit-testable in node. */

export interface Domain {
  min: number;
  max: number;
}

export interface Scale {
  domain: Domain;
  range: Domain;
}

export function scaleValue(s: Scale, x: number): number {
  const { domain, range } = s;
  if (domain.max === domain.min) return (range.min + range.max) / 2;
  return range.min + ((x - domain.min) / (domain.max - domain.min)) * (range.max - range.min);
}

export function invertValue(s: Scale, px: number): number {
  const { domain, range } = s;
  if (range.max === range.min) return domain.min;
  return domain.min + ((px - range.min) / (range.max - range.min)) * (domain.max - domain.min);
}

export function extent(values: number[]): Domain {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!isFinite(min)) return { min: 0, max: 1 };
  return { min, max };
}

/** Brush selection in overview pixels -> detail domain, ordered and clamped
 * to the full data domain. The detail window equals the brushed window
 * exactly. */
export function brushToDomain(pxA: number, pxB: number, overview: Scale, full: Domain): Domain {
  const a = invertValue(overview, Math.min(pxA, pxB));
  const b = invertValue(overview, Math.max(pxA, pxB));
  return {
    min: Math.max(full.min, Math.min(a, b)),
    max: Math.min(full.max, Math.max(a, b)),
  };
}

export interface Interval {
  start: number; // inclusive index/time coordinate
  end: number;
}

export interface ShadedSegment extends Interval {
  depth: number; // how many highlight intervals cover this segment (>= 1)
}

/** Decompose possibly-overlapping highlight intervals into disjoint segments
 * with a coverage depth; deeper segments are drawn darker. */
export function overlapSegments(intervals: Interval[]): ShadedSegment[] {
  const edges = new Set<number>();
  for (const iv of intervals) {
    edges.add(iv.start);
    edges.add(iv.end);
  }
  const cuts = [...edges].sort((x, y) => x - y);
  const out: ShadedSegment[] = [];
  for (let i = 0; i + 1 < cuts.length; i++) {
    const s = cuts[i];
    const e = cuts[i + 1];
    const depth = intervals.filter((iv) => iv.start <= s && e <= iv.end).length;
    if (depth > 0) out.push({ start: s, end: e, depth });
  }
  return out;
}

/** Background alpha for a coverage depth: visibly darker per extra overlap,
 * capped so text stays readable. */
export function depthAlpha(depth: number): number {
  return Math.min(0.15 + 0.2 * (depth - 1), 0.75);
}

/** Map ISO dates to fractional indices within a timestamp axis; intervals
 * outside the axis clamp to its ends. */
export function isoToIndex(timestamps: string[], iso: string): number {
  if (timestamps.length === 0) return 0;
  const t = Date.parse(iso);
  const first = Date.parse(timestamps[0]);
  const last = Date.parse(timestamps[timestamps.length - 1]);
  if (t <= first) return 0;
  if (t >= last) return timestamps.length - 1;
  // binary search for the first timestamp >= t, then interpolate
  let lo = 0;
  let hi = timestamps.length - 1;
  while (lo + 1 < hi) {
    const mid = (lo + hi) >> 1;
    if (Date.parse(timestamps[mid]) <= t) lo = mid;
    else hi = mid;
  }
  const a = Date.parse(timestamps[lo]);
  const b = Date.parse(timestamps[hi]);
  return b === a ? lo : lo + (t - a) / (b - a);
}

/** Deterministic categorical colors for the selected variables. */
const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];

export function variableColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}
