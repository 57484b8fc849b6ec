"""Series downsampling for plotting transports."""

from __future__ import annotations

import numpy as np


def lttb(x: np.ndarray, y: np.ndarray, n_out: int) -> np.ndarray:
    """Largest-triangle-three-buckets downsampling.

    Returns the selected indices (always including the first and last
    point), sorted ascending. If the series already fits, all indices are
    returned.
    """
    n = len(x)
    if n_out >= n or n_out < 3:
        return np.arange(n) if n_out >= n else np.linspace(0, n - 1, max(n_out, 2)).astype(int)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    idx = [0]
    # bucket boundaries over the interior points
    bounds = np.linspace(1, n - 1, n_out - 1).astype(int)
    a = 0
    for b in range(n_out - 2):
        lo, hi = bounds[b], bounds[b + 1]
        nlo, nhi = bounds[b + 1], bounds[b + 2] if b + 2 < len(bounds) else n
        if nhi <= nlo:
            nhi = nlo + 1
        avg_x = x[nlo:nhi].mean()
        avg_y = y[nlo:nhi].mean()
        seg = slice(lo, max(hi, lo + 1))
        area = np.abs(
            (x[a] - avg_x) * (y[seg] - y[a]) - (x[a] - x[seg]) * (avg_y - y[a])
        )
        a = lo + int(np.argmax(area))
        idx.append(a)
    idx.append(n - 1)
    return np.asarray(sorted(set(idx)), dtype=int)
