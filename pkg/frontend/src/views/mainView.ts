/** Main View: detail line chart over a brushable overview area chart.
 * Highlight intervals are drawn as shaded bands; overlapping intervals get a
 * darker background via the coverage depth. */

import type { SeriesResponse } from "../api.js";
import {
  Domain,
  Scale,
  brushToDomain,
  depthAlpha,
  extent,
  isoToIndex,
  overlapSegments,
  scaleValue,
  variableColor,
} from "../chart.js";
import type { Highlight } from "../state.js";

const DETAIL_H = 260;
const OVERVIEW_H = 70;
const PAD = { left: 48, right: 12, top: 10, bottom: 22 };

export interface MainViewState {
  data: SeriesResponse;
  variables: string[];
  highlights: readonly Highlight[];
  detailDomain: Domain | null; // null = full range
}

export interface MainViewCallbacks {
  onBrush(domain: Domain | null): void;
}

function lineTo(ctx: CanvasRenderingContext2D, xs: Scale, ys: Scale, values: number[], from: number, to: number): void {
  ctx.beginPath();
  let started = false;
  for (let i = Math.max(0, Math.floor(from)); i <= Math.min(values.length - 1, Math.ceil(to)); i++) {
    const px = scaleValue(xs, i);
    const py = scaleValue(ys, values[i]);
    if (!started) {
      ctx.moveTo(px, py);
      started = true;
    } else ctx.lineTo(px, py);
  }
  ctx.stroke();
}

function drawBands(
  ctx: CanvasRenderingContext2D,
  xs: Scale,
  highlights: readonly Highlight[],
  timestamps: string[],
  top: number,
  height: number,
): void {
  const intervals = highlights.map((h) => ({
    start: isoToIndex(timestamps, h.start),
    end: isoToIndex(timestamps, h.end),
  }));
  for (const seg of overlapSegments(intervals)) {
    ctx.fillStyle = `rgba(37, 99, 235, ${depthAlpha(seg.depth)})`;
    const x0 = scaleValue(xs, seg.start);
    const x1 = scaleValue(xs, seg.end);
    ctx.fillRect(x0, top, Math.max(x1 - x0, 1), height);
  }
}

export function renderMainView(root: HTMLElement, state: MainViewState, cb: MainViewCallbacks): void {
  root.innerHTML = "";
  const width = Math.max(root.clientWidth || 720, 480);
  const { data, variables } = state;
  const n = data.timestamps.length;
  if (n === 0 || variables.length === 0) {
    const p = document.createElement("p");
    p.className = "muted";
    p.textContent = "select a table and at least one variable";
    root.append(p);
    return;
  }
  const full: Domain = { min: 0, max: n - 1 };
  const detail = state.detailDomain ?? full;
  const allValues = variables.flatMap((v) => data.series[v] ?? []);
  const yDomain = extent(allValues);

  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = DETAIL_H + OVERVIEW_H + 16;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;

  const xsDetail: Scale = { domain: detail, range: { min: PAD.left, max: width - PAD.right } };
  const ysDetail: Scale = {
    domain: yDomain,
    range: { min: DETAIL_H - PAD.bottom, max: PAD.top },
  };
  drawBands(ctx, xsDetail, state.highlights, data.timestamps, PAD.top, DETAIL_H - PAD.top - PAD.bottom);
  variables.forEach((v, i) => {
    ctx.strokeStyle = variableColor(i);
    ctx.lineWidth = 1.5;
    lineTo(ctx, xsDetail, ysDetail, data.series[v] ?? [], detail.min, detail.max);
  });

  // axis labels at the detail window edges
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(data.timestamps[Math.round(detail.min)] ?? "", PAD.left, DETAIL_H - 6);
  const endLabel = data.timestamps[Math.round(detail.max)] ?? "";
  ctx.fillText(endLabel, width - PAD.right - ctx.measureText(endLabel).width, DETAIL_H - 6);

  // overview area chart of the first variable with the brush window
  const ovTop = DETAIL_H + 16;
  const xsOv: Scale = { domain: full, range: { min: PAD.left, max: width - PAD.right } };
  const ysOv: Scale = { domain: yDomain, range: { min: ovTop + OVERVIEW_H, max: ovTop } };
  const first = data.series[variables[0]] ?? [];
  ctx.beginPath();
  ctx.moveTo(scaleValue(xsOv, 0), ovTop + OVERVIEW_H);
  for (let i = 0; i < first.length; i++) ctx.lineTo(scaleValue(xsOv, i), scaleValue(ysOv, first[i]));
  ctx.lineTo(scaleValue(xsOv, n - 1), ovTop + OVERVIEW_H);
  ctx.closePath();
  ctx.fillStyle = "rgba(37, 99, 235, 0.25)";
  ctx.fill();
  drawBands(ctx, xsOv, state.highlights, data.timestamps, ovTop, OVERVIEW_H);
  ctx.strokeStyle = "#1f2937";
  ctx.strokeRect(
    scaleValue(xsOv, detail.min),
    ovTop,
    Math.max(scaleValue(xsOv, detail.max) - scaleValue(xsOv, detail.min), 1),
    OVERVIEW_H,
  );

  // brushing on the overview strip
  let anchor: number | null = null;
  canvas.addEventListener("mousedown", (e) => {
    const rect = canvas.getBoundingClientRect();
    const y = e.clientY - rect.top;
    if (y >= ovTop && y <= ovTop + OVERVIEW_H) anchor = e.clientX - rect.left;
  });
  canvas.addEventListener("mouseup", (e) => {
    if (anchor === null) return;
    const rect = canvas.getBoundingClientRect();
    const x = e.clientX - rect.left;
    if (Math.abs(x - anchor) < 3) cb.onBrush(null); // click resets to full range
    else cb.onBrush(brushToDomain(anchor, x, xsOv, full));
    anchor = null;
  });

  root.append(canvas);
}
