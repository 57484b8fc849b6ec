"""End-to-end ingestion: smooth, segment, facet, render, embed, prune, index.

Also the on-disk database layout shared by the CLI and the HTTP service:

    <root>/tables/<table_id>/table.csv      original CSV bytes
    <root>/tables/<table_id>/store/         VectorIndex directory (+ images/)
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from .errors import StoreError
from .refstore import PruneConfig, VectorIndex, VisualizationReference, prune
from .render import render_chart
from .table import (
    FacetConfig,
    PhtConfig,
    SmoothingConfig,
    TimeSeriesTable,
    gaussian_smooth,
    generate_facets,
    parse_table,
    pht_changepoints,
)
from .embedding import embed_image
from .hnsw import HnswParams

CHART_TYPES = ("line", "bar", "area")


@dataclass
class IngestConfig:
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    pht: PhtConfig | None = None  # None: scale-free defaults per variable
    facet: FacetConfig = field(default_factory=FacetConfig)
    prune_threshold: float = 1.0
    chart_types: tuple = CHART_TYPES
    index_mode: str = "exact"
    hnsw: HnswParams | None = None
    keep_images: bool = True

    def __post_init__(self):
        bad = [c for c in self.chart_types if c not in CHART_TYPES]
        if bad:
            raise ValueError(f"unknown chart types {bad}")


@dataclass
class IngestResult:
    table_id: str
    rows: int
    variables: list
    refs_generated: int
    refs_retained: int
    prune_threshold: float

    def as_dict(self):
        return {
            "table_id": self.table_id,
            "rows": self.rows,
            "variables": list(self.variables),
            "refs_generated": self.refs_generated,
            "refs_retained": self.refs_retained,
            "prune_threshold": self.prune_threshold,
        }


def _iso(ts) -> str:
    return ts.strftime("%Y-%m-%d")


def build_references(table: TimeSeriesTable, cfg: IngestConfig | None = None):
    """Render and embed every facet of every variable.

    Returns (references, images) where images maps ref_id -> PNG bytes.
    """
    cfg = cfg or IngestConfig()
    refs, images = [], {}
    for var in table.variable_names():
        smoothed = gaussian_smooth(table.variables[var], cfg.smoothing)
        pht = cfg.pht or PhtConfig.defaults_for(smoothed)
        cps = pht_changepoints(smoothed, pht)
        facets = generate_facets(smoothed, cps, timestamps=table.timestamps, variable=var, cfg=cfg.facet)
        for facet in facets:
            for chart_type in cfg.chart_types:
                if len(facet) < 2 and chart_type in ("line", "area"):
                    continue
                img = render_chart(facet, chart_type)
                ref_id = f"{table.table_id}:{var}:{facet.start_idx}-{facet.end_idx}:{chart_type}"
                refs.append(
                    VisualizationReference(
                        ref_id=ref_id,
                        table_id=table.table_id,
                        variable=var,
                        start_idx=facet.start_idx,
                        end_idx=facet.end_idx,
                        start_ts=_iso(facet.time_range[0]),
                        end_ts=_iso(facet.time_range[1]),
                        chart_type=chart_type,
                        embedding=embed_image(img),
                    )
                )
                if cfg.keep_images:
                    images[ref_id] = img.to_png()
    return refs, images


def ingest_table(table: TimeSeriesTable, cfg: IngestConfig | None = None):
    """Full pipeline on an in-memory table.

    Returns (index, result, images) where images covers retained refs only.
    """
    cfg = cfg or IngestConfig()
    refs, images = build_references(table, cfg)
    retained, _ = prune(refs, PruneConfig(threshold=cfg.prune_threshold))
    index = VectorIndex(mode=cfg.index_mode, hnsw=cfg.hnsw, threshold=cfg.prune_threshold)
    index.insert(retained)
    result = IngestResult(
        table_id=table.table_id,
        rows=table.n_rows,
        variables=table.variable_names(),
        refs_generated=len(refs),
        refs_retained=len(retained),
        prune_threshold=cfg.prune_threshold,
    )
    kept_images = {r.ref_id: images[r.ref_id] for r in retained if r.ref_id in images}
    return index, result, kept_images


def default_table_id(csv_bytes: bytes) -> str:
    return hashlib.sha256(csv_bytes).hexdigest()[:12]


class Database:
    """Directory of ingested tables, each with its persisted vector store."""

    def __init__(self, root: str):
        self.root = str(root)

    def _tables_dir(self):
        return os.path.join(self.root, "tables")

    def table_dir(self, table_id: str) -> str:
        return os.path.join(self._tables_dir(), table_id)

    def store_dir(self, table_id: str) -> str:
        return os.path.join(self.table_dir(table_id), "store")

    def list_tables(self) -> list:
        base = self._tables_dir()
        if not os.path.isdir(base):
            return []
        return sorted(t for t in os.listdir(base) if os.path.isdir(os.path.join(base, t)))

    def has_table(self, table_id: str) -> bool:
        return os.path.isfile(os.path.join(self.table_dir(table_id), "table.csv"))

    def ingest_csv(self, csv_bytes: bytes, table_id: str | None = None, cfg: IngestConfig | None = None):
        table_id = table_id or default_table_id(csv_bytes)
        table = parse_table(csv_bytes, table_id=table_id)
        index, result, images = ingest_table(table, cfg)
        tdir = self.table_dir(table_id)
        os.makedirs(tdir, exist_ok=True)
        with open(os.path.join(tdir, "table.csv"), "wb") as fh:
            fh.write(csv_bytes)
        index.save(self.store_dir(table_id), images=images)
        return result

    def load_table(self, table_id: str) -> TimeSeriesTable:
        path = os.path.join(self.table_dir(table_id), "table.csv")
        if not os.path.isfile(path):
            raise StoreError(f"unknown table {table_id!r}")
        with open(path, "rb") as fh:
            return parse_table(fh.read(), table_id=table_id)

    def load_store(self, table_id: str) -> VectorIndex:
        sdir = self.store_dir(table_id)
        if not os.path.isdir(sdir):
            raise StoreError(f"unknown table {table_id!r}")
        return VectorIndex.load(sdir)

    def ref_image_path(self, ref_id: str) -> str | None:
        """Locate a persisted reference PNG; ref ids embed their table id."""
        table_id = ref_id.split(":", 1)[0]
        path = os.path.join(self.store_dir(table_id), "images", f"{ref_id}.png")
        return path if os.path.isfile(path) else None
