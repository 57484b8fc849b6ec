/** Sketch model: strokes captured in canvas coordinates and exported as a
 * 448x448 PNG. Geometry is pure; only exportPng touches the DOM canvas. */

export const EXPORT_SIZE = 448;
export const STROKE_WIDTH = 5;

export interface Point {
  x: number;
  y: number;
}

export type Stroke = Point[];

/** A sketch is blank when it has no stroke with spatial extent (a stray tap
 * leaves a single point, which draws nothing useful). */
export function isBlank(strokes: Stroke[]): boolean {
  return !strokes.some(
    (s) => s.length >= 2 && s.some((p) => p.x !== s[0].x || p.y !== s[0].y),
  );
}

export function addPoint(strokes: Stroke[], point: Point): Stroke[] {
  if (strokes.length === 0) return [[point]];
  const head = strokes.slice(0, -1);
  const last = strokes[strokes.length - 1];
  return [...head, [...last, point]];
}

export function beginStroke(strokes: Stroke[], point: Point): Stroke[] {
  return [...strokes, [point]];
}

/** Scale strokes from a source canvas size onto the export raster. */
export function scaleStrokes(strokes: Stroke[], srcW: number, srcH: number, dst = EXPORT_SIZE): Stroke[] {
  const sx = dst / srcW;
  const sy = dst / srcH;
  return strokes.map((s) => s.map((p) => ({ x: p.x * sx, y: p.y * sy })));
}

/** Rasterize onto a canvas context: white background, black round strokes. */
export function drawStrokes(
  ctx: CanvasRenderingContext2D,
  strokes: Stroke[],
  width: number,
  height: number,
  strokeWidth = STROKE_WIDTH,
): void {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#000000";
  ctx.lineWidth = strokeWidth;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const stroke of strokes) {
    if (stroke.length < 2) continue;
    ctx.beginPath();
    ctx.moveTo(stroke[0].x, stroke[0].y);
    for (let i = 1; i < stroke.length; i++) ctx.lineTo(stroke[i].x, stroke[i].y);
    ctx.stroke();
  }
}

/** Export the strokes as a base64 PNG at exactly EXPORT_SIZE x EXPORT_SIZE.
 * The exported raster is what goes to the API; the backend normalizes. */
export function exportPngBase64(strokes: Stroke[], srcW: number, srcH: number): string {
  const canvas = document.createElement("canvas");
  canvas.width = EXPORT_SIZE;
  canvas.height = EXPORT_SIZE;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  drawStrokes(ctx, scaleStrokes(strokes, srcW, srcH), EXPORT_SIZE, EXPORT_SIZE);
  const dataUrl = canvas.toDataURL("image/png");
  return dataUrl.slice(dataUrl.indexOf(",") + 1);
}
