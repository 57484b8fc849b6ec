"""Synthetic table generators: seeded random walks and planted trend patterns."""

from __future__ import annotations

import csv
import io
from datetime import date, timedelta

import numpy as np

# Shapes are ~0 at the window edges so a planted window joins the baseline
# continuously; otherwise the jump at the edges dominates the local shape.
def _bumps(t, *centers, width=0.09):
    out = np.zeros_like(t)
    for c in centers:
        out += np.exp(-0.5 * ((t - c) / width) ** 2)
    return out


PLANT_SHAPES = {
    "two-peak": lambda t: _bumps(t, 0.28, 0.72),
    "two-valley": lambda t: -_bumps(t, 0.28, 0.72),
    "valley": lambda t: -_bumps(t, 0.5, width=0.14),
    "peak": lambda t: _bumps(t, 0.5, width=0.14),
}


def _dates(rows: int, start=date(2020, 1, 1)):
    return [start + timedelta(days=i) for i in range(rows)]


def _to_csv(dates, variables: dict) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(variables)
    w.writerow(["Date"] + names)
    for i, d in enumerate(dates):
        w.writerow([d.isoformat()] + [f"{variables[n][i]:.6f}" for n in names])
    return buf.getvalue().encode("utf-8")


def random_walk_csv(rows: int, n_vars: int = 1, seed: int = 42, start=date(2020, 1, 1)) -> bytes:
    """Deterministic random-walk table; byte-identical for identical arguments."""
    if rows < 2:
        raise ValueError("rows must be >= 2")
    rng = np.random.default_rng(seed)
    dates = _dates(rows, start)
    variables = {}
    for v in range(n_vars):
        walk = 100.0 + np.cumsum(rng.normal(0.0, 1.0, rows))
        variables[f"var{v + 1}" if n_vars > 1 else "value"] = walk
    return _to_csv(dates, variables)


def planted_patterns_csv(
    rows: int = 620,
    seed: int = 42,
    variable: str = "Apple",
    n_primary: int = 10,
    n_secondary: int = 2,
    primary_shape: str = "two-peak",
    secondary_shape: str = "valley",
    window_len: int = 31,
    start=date(2020, 1, 1),
):
    """A quiet baseline series with labeled shape windows planted into it.

    Returns (csv_bytes, manifest_dict); the manifest lists every planted
    window with its category and date bounds, and is the oracle for
    end-to-end retrieval tests. The first primary window lands in March
    so month-scoped trend questions have a known answer.
    """
    total = n_primary + n_secondary
    if rows < total * (window_len + 4):
        rows = total * (window_len + 4) + 20
    rng = np.random.default_rng(seed)
    dates = _dates(rows, start)
    base = 100.0 + 0.2 * rng.standard_normal(rows)

    # evenly spaced non-overlapping slots; slot 1 is pinned to March of the
    # start year so month-scoped questions have a known planted answer
    march_start = (date(start.year, 3, 1) - start).days
    pitch = max((rows - march_start - window_len - 5) // max(total - 1, 1), window_len + 5)
    first = march_start - pitch
    slots = []
    for i in range(total):
        s = first + i * pitch
        s = min(max(s, 0), rows - window_len)
        slots.append((s, s + window_len - 1))

    t = np.linspace(0.0, 1.0, window_len)
    windows = []
    for i, (s, e) in enumerate(slots):
        shape_name = primary_shape if i < n_primary else secondary_shape
        base[s : e + 1] += 25.0 * PLANT_SHAPES[shape_name](t)
        windows.append(
            {
                "category": shape_name,
                "start_idx": int(s),
                "end_idx": int(e),
                "start": dates[s].isoformat(),
                "end": dates[e].isoformat(),
            }
        )

    manifest = {
        "seed": seed,
        "rows": rows,
        "variable": variable,
        "windows": windows,
    }
    return _to_csv(dates, {variable: base}), manifest
