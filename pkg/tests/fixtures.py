"""Deterministic facet fixtures shared by render tests and goldens."""

import numpy as np

from vistr.table import Facet


def fixture_facets():
    """12 deterministic facets covering the shape variety the renderer sees."""
    rng = np.random.default_rng(7)
    t32 = np.linspace(0.0, 1.0, 32)
    series = {
        "constant": np.full(16, 3.0),
        "ramp-up": np.arange(10.0),
        "ramp-down": 9.0 - np.arange(10.0),
        "two-points": np.array([1.0, 2.0]),
        "vee": np.abs(np.linspace(-1, 1, 21)),
        "sine": np.sin(2 * np.pi * t32),
        "two-bump": np.exp(-0.5 * ((t32 - 0.28) / 0.09) ** 2)
        + np.exp(-0.5 * ((t32 - 0.72) / 0.09) ** 2),
        "step": np.concatenate([np.zeros(12), np.ones(12) * 4.0]),
        "spiky": np.where(np.arange(25) == 12, 10.0, 1.0),
        "walk": np.cumsum(rng.standard_normal(64)),
        "negative": -np.linspace(5.0, 8.0, 15),
        "tiny-range": 100.0 + 0.001 * np.sin(np.arange(20.0)),
    }
    facets = []
    for name, vals in series.items():
        facets.append(
            (
                name,
                Facet(
                    variable=name,
                    start_idx=0,
                    end_idx=len(vals) - 1,
                    values=tuple(float(v) for v in vals),
                    time_range=(0, len(vals) - 1),
                ),
            )
        )
    return facets
