"""Reference pruning and the persistent vector index (exact + HNSW modes)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyResult, FormatError, StoreError
from .hnsw import HnswIndex, HnswParams

STORE_VERSION = 1
DIM = 512


@dataclass
class VisualizationReference:
    """One stored chart: facet metadata + embedding (+ optional raster)."""

    ref_id: str
    table_id: str
    variable: str
    start_idx: int
    end_idx: int
    start_ts: str  # ISO date(time)
    end_ts: str
    chart_type: str
    embedding: np.ndarray
    trend_category: str | None = None

    def meta(self) -> dict:
        return {
            "ref_id": self.ref_id,
            "table_id": self.table_id,
            "variable": self.variable,
            "start_idx": self.start_idx,
            "end_idx": self.end_idx,
            "start_ts": self.start_ts,
            "end_ts": self.end_ts,
            "chart_type": self.chart_type,
            "trend_category": self.trend_category,
        }

    @property
    def span(self) -> int:
        return self.end_idx - self.start_idx


@dataclass(frozen=True)
class PruneConfig:
    threshold: float = 1.0  # Euclidean distance on unit-norm embeddings

    def __post_init__(self):
        if not 0.0 < self.threshold < 2.0:
            raise ValueError("threshold must be in (0, 2)")


def prune(refs: list, cfg: PruneConfig = PruneConfig()):
    """Greedy epsilon-net pruning, independently per (variable, chart_type).

    Candidates are visited longest-span first (ties: earlier start, then
    ref_id); one is retained iff it is at least ``threshold`` away from
    every reference already retained in its group. Guarantees: retained
    references are pairwise >= threshold apart, and every pruned one is
    within threshold of a retained reference with span >= its own.
    """
    tables = {r.table_id for r in refs}
    if len(tables) > 1:
        raise StoreError(f"prune expects a single table, got {sorted(tables)}")

    groups = {}
    for r in refs:
        groups.setdefault((r.variable, r.chart_type), []).append(r)

    retained, pruned = [], []
    for key in sorted(groups):
        cand = sorted(groups[key], key=lambda r: (-r.span, r.start_ts, r.ref_id))
        kept_vecs = []
        for r in cand:
            if kept_vecs:
                d = np.linalg.norm(np.asarray(kept_vecs) - r.embedding, axis=1)
                if np.any(d < cfg.threshold):
                    pruned.append(r)
                    continue
            kept_vecs.append(r.embedding)
            retained.append(r)
    return retained, pruned


class VectorIndex:
    """Dense float32 vector store with exact or approximate retrieval."""

    def __init__(self, dim: int = DIM, mode: str = "exact", hnsw: HnswParams | None = None, threshold: float = 1.0):
        if mode not in ("exact", "approximate"):
            raise ValueError(f"unknown mode {mode!r}")
        self.dim = dim
        self.mode = mode
        self.threshold = threshold
        self.vectors = np.empty((0, dim), dtype=np.float32)
        self.refs = []  # position-aligned with vectors
        self.by_id = {}
        self.graph = HnswIndex(hnsw or HnswParams()) if mode == "approximate" else None

    def __len__(self):
        return len(self.refs)

    def insert(self, refs: list):
        for r in refs:
            if r.ref_id in self.by_id:
                raise StoreError(f"duplicate ref_id {r.ref_id!r}")
        block = np.array([r.embedding for r in refs], dtype=np.float32).reshape(len(refs), self.dim)
        start = len(self.refs)
        self.vectors = np.vstack([self.vectors, block])
        for i, r in enumerate(refs):
            self.by_id[r.ref_id] = start + i
            self.refs.append(r)
            if self.graph is not None:
                self.graph.insert(self.vectors, start + i)

    def get(self, ref_id: str) -> VisualizationReference:
        try:
            return self.refs[self.by_id[ref_id]]
        except KeyError:
            raise StoreError(f"unknown ref_id {ref_id!r}")

    def _filter_positions(self, flt: dict | None):
        if not flt:
            return None
        pos = []
        for i, r in enumerate(self.refs):
            if "variable" in flt and r.variable != flt["variable"]:
                continue
            if "chart_type" in flt and r.chart_type != flt["chart_type"]:
                continue
            if "start_ts" in flt and r.end_ts < flt["start_ts"]:
                continue
            if "end_ts" in flt and r.start_ts > flt["end_ts"]:
                continue
            pos.append(i)
        return pos

    def query(self, query: np.ndarray, k: int = 3, flt: dict | None = None, ef_search: int | None = None):
        """Top-k (ref_id, similarity) by dot product, descending; ties by ref_id.

        Filters (variable / chart type / time window overlap) are applied
        before ranking. Exact mode is a brute-force scan; approximate mode
        walks the small-world graph (and falls back to brute force inside
        a filtered candidate set, which is already small).
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.refs:
            raise EmptyResult("index is empty")
        q = np.asarray(query, dtype=np.float32)
        pos = self._filter_positions(flt)
        if pos is not None and not pos:
            raise EmptyResult("no references match the filter")

        if self.mode == "approximate" and pos is None:
            ids = self.graph.search(self.vectors, q, k, ef_search=ef_search)
            sims = self.vectors[ids] @ q
            ranked = sorted(zip(ids, sims), key=lambda t: (-float(t[1]), self.refs[t[0]].ref_id))
            return [(self.refs[i].ref_id, float(s)) for i, s in ranked[:k]]

        cand = np.arange(len(self.refs)) if pos is None else np.asarray(pos)
        sims = self.vectors[cand] @ q
        kk = min(k, cand.size)
        # pre-select everything at or above the k-th similarity, then settle
        # exact ties by ref_id
        thr = np.partition(sims, cand.size - kk)[cand.size - kk]
        part = np.nonzero(sims >= thr)[0]
        order = sorted(part, key=lambda i: (-float(sims[i]), self.refs[int(cand[i])].ref_id))
        top = order[:kk]
        return [(self.refs[int(cand[i])].ref_id, float(sims[i])) for i in top]

    # -- persistence -------------------------------------------------------

    def save(self, path, images: dict | None = None):
        """Write manifest.json + vectors.bin + meta.jsonl (+ images/)."""
        os.makedirs(path, exist_ok=True)
        manifest = {
            "version": STORE_VERSION,
            "dim": self.dim,
            "threshold": self.threshold,
            "count": len(self.refs),
            "mode": self.mode,
        }
        if self.graph is not None:
            self.graph.save_npz(os.path.join(path, "graph.npz"))
        with open(os.path.join(path, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1)
        with open(os.path.join(path, "vectors.bin"), "wb") as fh:
            fh.write(self.vectors.astype("<f4").tobytes(order="C"))
        with open(os.path.join(path, "meta.jsonl"), "w", encoding="utf-8") as fh:
            for r in self.refs:
                fh.write(json.dumps(r.meta()) + "\n")
        if images:
            img_dir = os.path.join(path, "images")
            os.makedirs(img_dir, exist_ok=True)
            for ref_id, png in images.items():
                with open(os.path.join(img_dir, f"{ref_id}.png"), "wb") as fh:
                    fh.write(png)

    @staticmethod
    def load(path) -> "VectorIndex":
        try:
            with open(os.path.join(path, "manifest.json"), "r", encoding="utf-8") as fh:
                manifest = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise FormatError(f"missing or corrupt manifest: {e}")
        if manifest.get("version") != STORE_VERSION:
            raise FormatError(f"unsupported store version {manifest.get('version')}")
        dim = int(manifest["dim"])
        count = int(manifest["count"])
        idx = VectorIndex(dim=dim, mode=manifest["mode"], threshold=manifest.get("threshold", 1.0))
        with open(os.path.join(path, "vectors.bin"), "rb") as fh:
            raw = fh.read()
        if len(raw) != count * dim * 4:
            raise FormatError(f"vectors.bin has {len(raw)} bytes, expected {count * dim * 4}")
        idx.vectors = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy()
        with open(os.path.join(path, "meta.jsonl"), "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if len(lines) != count:
            raise FormatError(f"meta.jsonl has {len(lines)} records, expected {count}")
        for i, m in enumerate(lines):
            r = VisualizationReference(embedding=idx.vectors[i].astype(np.float64), **m)
            idx.refs.append(r)
            idx.by_id[r.ref_id] = i
        if idx.mode == "approximate":
            graph_path = os.path.join(path, "graph.npz")
            if not os.path.exists(graph_path):
                raise FormatError("approximate store is missing graph.npz")
            idx.graph = HnswIndex.load_npz(graph_path)
        return idx

    def image_path(self, root, ref_id):
        return os.path.join(root, "images", f"{ref_id}.png")
