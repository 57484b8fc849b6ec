"""Fixed-size, axis-free chart rasterization and sketch normalization.

Everything here is integer rasterization over numpy arrays: no
anti-aliasing, no font machinery, so identical inputs produce
byte-identical images on every platform.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import EmptySketchError, RenderError

DEFAULT_SIZE = 224
MARGIN = 4  # pixels of white border around the plot area
PAD_FRAC = 0.05  # vertical padding inside the plot area
LINE_WIDTH = 2

CHART_TYPES = ("line", "bar", "area")

_INK = np.array([20, 20, 20], dtype=np.uint8)
_BG = np.array([255, 255, 255], dtype=np.uint8)


@dataclass
class ChartImage:
    """RGB raster of one facet (or a normalized sketch)."""

    pixels: np.ndarray  # (H, W, 3) uint8
    chart_type: str  # line | bar | area | sketch

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def ink_mask(self) -> np.ndarray:
        return np.any(self.pixels < 250, axis=2)

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    @staticmethod
    def from_png(data: bytes, chart_type: str = "sketch") -> "ChartImage":
        img = Image.open(io.BytesIO(data)).convert("RGB")
        return ChartImage(pixels=np.asarray(img, dtype=np.uint8), chart_type=chart_type)


def _plot_geometry(size: int):
    x0 = MARGIN
    x1 = size - 1 - MARGIN
    y0 = MARGIN
    y1 = size - 1 - MARGIN
    height = y1 - y0 + 1
    pad = int(round(PAD_FRAC * height))
    return x0, x1, y0, y1, pad


def _normalize(values: np.ndarray) -> np.ndarray:
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.full(values.shape, 0.5)
    return (values - lo) / (hi - lo)


def _y_of(v: float, y1: int, pad: int, usable: int) -> int:
    # v in [0, 1]; image y grows downward
    return y1 - pad - int(round(v * usable))


def render_chart(facet, chart_type: str, size: int = DEFAULT_SIZE) -> ChartImage:
    """Rasterize a facet into a fixed-size chart without axes or labels.

    The y range is the facet's [min, max] with 5% padding (a constant
    facet maps to mid-height); x positions are spread uniformly across
    the plot area inside a 4 px margin. Bars are anchored at the facet
    minimum. Pure function: byte-identical output for identical inputs.
    """
    if chart_type not in CHART_TYPES:
        raise RenderError(f"unknown chart type {chart_type!r}")
    values = np.asarray(facet.values if hasattr(facet, "values") else facet, dtype=np.float64)
    n = values.size
    if chart_type in ("line", "area") and n < 2:
        raise RenderError(f"{chart_type} chart needs at least 2 points, got {n}")
    if n < 1:
        raise RenderError("empty facet")

    x0, x1, y0, y1, pad = _plot_geometry(size)
    width = x1 - x0 + 1
    usable = (y1 - y0 + 1) - 2 * pad - 1
    norm = _normalize(values)

    img = np.tile(_BG, (size, size, 1))

    if chart_type == "bar":
        pitch = max(width // n, 2)
        bw = pitch - 1
        base = _y_of(0.0, y1, pad, usable)
        for i in range(n):
            bx = x0 + i * pitch
            top = _y_of(float(norm[i]), y1, pad, usable)
            top = min(top, base - 1)  # minimum-value bars keep a 2 px sliver
            img[top : base + 1, bx : bx + bw] = _INK
        return ChartImage(pixels=img, chart_type="bar")

    # column-wise piecewise-linear trace for line/area
    xs = np.array([x0 + int(round(i * (width - 1) / (n - 1))) for i in range(n)])
    col_y = np.empty(width, dtype=np.int64)
    seg = 0
    for cx in range(x0, x1 + 1):
        while seg < n - 2 and cx > xs[seg + 1]:
            seg += 1
        xa, xb = xs[seg], xs[seg + 1]
        t = 0.0 if xb == xa else (cx - xa) / (xb - xa)
        v = float(norm[seg]) + t * (float(norm[seg + 1]) - float(norm[seg]))
        col_y[cx - x0] = _y_of(v, y1, pad, usable)

    base = _y_of(0.0, y1, pad, usable)
    for ci in range(width):
        y = col_y[ci]
        prev = col_y[ci - 1] if ci > 0 else y
        top = min(y, prev)
        bot = max(y, prev)
        img[top : bot + LINE_WIDTH, x0 + ci] = _INK
        if chart_type == "area":
            img[y : base + 1, x0 + ci] = _INK
    return ChartImage(pixels=img, chart_type=chart_type)


def normalize_sketch(raw: ChartImage | np.ndarray, size: int = DEFAULT_SIZE) -> ChartImage:
    """Normalize free-form strokes into the fixed chart raster.

    Crops to the stroke bounding box, scales (preserving aspect ratio)
    to fit a (size-8)^2 box, centers on a white canvas, and re-strokes
    at 2 px with binarized ink.
    """
    pixels = raw.pixels if isinstance(raw, ChartImage) else np.asarray(raw)
    if pixels.ndim == 3:
        mask = np.any(pixels < 250, axis=2)
    else:
        mask = pixels < 250
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptySketchError("sketch contains no ink")

    mask = mask[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    # 2 px re-stroke before scaling so thin strokes survive downsampling
    thick = mask.copy()
    thick[1:, :] |= mask[:-1, :]
    thick[:, 1:] |= mask[:, :-1]
    thick[1:, 1:] |= mask[:-1, :-1]
    h, w = thick.shape

    box = size - 8
    s = box / max(h, w)
    th = max(1, int(round(h * s)))
    tw = max(1, int(round(w * s)))
    # nearest-neighbor index mapping keeps scaling deterministic
    ri = np.minimum((np.arange(th) * h) // th, h - 1)
    ci = np.minimum((np.arange(tw) * w) // tw, w - 1)
    scaled = thick[np.ix_(ri, ci)]
    if s > 1:
        pass  # upscaling preserves connectivity by construction
    else:
        # max-pool style coverage: a target cell is ink if any source cell maps into it
        cover = np.zeros((th, tw), dtype=bool)
        src_r = np.minimum((np.arange(h) * th) // h, th - 1)
        src_c = np.minimum((np.arange(w) * tw) // w, tw - 1)
        rr, cc = np.nonzero(thick)
        cover[src_r[rr], src_c[cc]] = True
        scaled = cover

    canvas = np.zeros((size, size), dtype=bool)
    oy = (size - th) // 2
    ox = (size - tw) // 2
    canvas[oy : oy + th, ox : ox + tw] = scaled

    img = np.tile(_BG, (size, size, 1))
    img[canvas] = _INK
    return ChartImage(pixels=img, chart_type="sketch")
