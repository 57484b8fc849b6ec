"""Shape-descriptor embeddings: one 512-d unit-norm space for charts, sketches, text.

Charts and sketches go through the exact same path (ink trace ->
descriptor -> fixed orthonormal projection), so chart/sketch alignment
holds by construction. Trend text is embedded by rendering the category's
prototype shape as a line chart and reusing the image path.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySketchError
from .render import ChartImage, MARGIN, render_chart

EMBED_DIM = 512
TRACE_LEN = 64
DESCRIPTOR_LEN = TRACE_LEN + (TRACE_LEN - 1) + 8  # trace + diffs + stats
PROJECTION_SEED = 42  # fixed; changing it invalidates every persisted store


def extract_trace(img: ChartImage) -> np.ndarray:
    """Per-column ink-centroid height resampled to 64 normalized points.

    Ink-free columns are filled by linear interpolation; a constant trace
    maps to all 0.5. Works for line, bar, area, and sketch rasters alike:
    min-max normalization absorbs the centroid shift that filled shapes
    introduce.
    """
    mask = img.ink_mask()
    h, w = mask.shape
    x0, x1 = MARGIN, w - 1 - MARGIN
    cols = np.arange(x0, x1 + 1)
    heights = np.full(cols.size, np.nan)
    rows_idx = np.arange(h, dtype=np.float64)
    for i, c in enumerate(cols):
        col = mask[:, c]
        n_ink = col.sum()
        if n_ink:
            heights[i] = (h - 1) - float(rows_idx[col].mean())
    ok = ~np.isnan(heights)
    if not ok.any():
        # sketch may spill into the margin band; fall back to the full raster
        heights = np.full(w, np.nan)
        for c in range(w):
            col = mask[:, c]
            if col.sum():
                heights[c] = (h - 1) - float(rows_idx[col].mean())
        cols = np.arange(w)
        ok = ~np.isnan(heights)
        if not ok.any():
            raise EmptySketchError("image contains no ink")
    heights = np.interp(np.arange(cols.size), np.nonzero(ok)[0], heights[ok])

    pos = np.linspace(0, cols.size - 1, TRACE_LEN)
    trace = np.interp(pos, np.arange(cols.size), heights)
    lo, hi = trace.min(), trace.max()
    if hi - lo < 1e-9:
        return np.full(TRACE_LEN, 0.5)
    return (trace - lo) / (hi - lo)


def shape_descriptor(trace: np.ndarray) -> np.ndarray:
    """135-d descriptor: 64-point trace, 63 first differences, 8 scalars."""
    trace = np.asarray(trace, dtype=np.float64)
    diffs = np.diff(trace)
    signs = np.sign(np.where(np.abs(diffs) < 1e-3, 0.0, diffs))
    nz = signs[signs != 0]
    sign_changes = int(np.sum(nz[1:] * nz[:-1] < 0)) if nz.size > 1 else 0
    stats = np.array(
        [
            trace.mean(),
            trace.std(),
            float(np.argmax(trace)) / TRACE_LEN,
            float(np.argmin(trace)) / TRACE_LEN,
            sign_changes / (TRACE_LEN - 1),
            trace[0],
            trace[-1],
            trace.max() - trace.min(),
        ]
    )
    return np.concatenate([trace, diffs, stats])


# Fixed whitening applied before projection: the trace block is mean-centered
# (otherwise the common 0.5 offset dominates every inner product) and the
# first-difference block is amplified so local slope separates shapes like
# ramps from steps. Calibrated once against the vocabulary prototypes.
_DIFF_WEIGHT = 16.0


def _whiten(descriptor: np.ndarray) -> np.ndarray:
    d = np.asarray(descriptor, dtype=np.float64).copy()
    trace = d[:TRACE_LEN]
    d[:TRACE_LEN] = trace - trace.mean()
    d[TRACE_LEN : TRACE_LEN + TRACE_LEN - 1] *= _DIFF_WEIGHT
    return d


def _projection_matrix() -> np.ndarray:
    """Fixed 512x135 matrix with orthonormal columns, seeded once.

    Orthonormal columns make the projection inner-product preserving:
    similarity between embeddings equals similarity between (normalized)
    descriptors. Generated from a seeded Gaussian via QR with a sign fix
    so the bytes never depend on LAPACK's sign convention.
    """
    rng = np.random.default_rng(PROJECTION_SEED)
    g = rng.standard_normal((EMBED_DIM, DESCRIPTOR_LEN))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    return q


_PROJECTION = _projection_matrix()


def embed_descriptor(descriptor: np.ndarray) -> np.ndarray:
    v = _PROJECTION @ _whiten(descriptor)
    return v / np.linalg.norm(v)


def embed_image(img: ChartImage) -> np.ndarray:
    """Unit-norm 512-d embedding of a chart or normalized sketch."""
    return embed_descriptor(shape_descriptor(extract_trace(img)))


def embed_series(values, size: int = 224) -> np.ndarray:
    """Embedding of a raw value sequence via a rendered line chart."""
    return embed_image(render_chart(np.asarray(values, dtype=np.float64), "line", size=size))


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit-norm embeddings; in [-1, 1]."""
    return float(np.dot(a, b))
