import os

import numpy as np
import pytest

from vistr.errors import EmptyResult, FormatError, StoreError
from vistr.hnsw import HnswIndex, HnswParams
from vistr.refstore import PruneConfig, VectorIndex, VisualizationReference, prune


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _ref(ref_id, emb, variable="v", chart_type="line", start=0, end=10,
         start_ts="2020-01-01", end_ts="2020-01-11", table_id="t"):
    return VisualizationReference(
        ref_id=ref_id, table_id=table_id, variable=variable, start_idx=start, end_idx=end,
        start_ts=start_ts, end_ts=end_ts, chart_type=chart_type, embedding=np.asarray(emb, dtype=np.float64),
    )


def _random_refs(n, seed=0, **kw):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, 512))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    return [_ref(f"r{i:05d}", m[i], start=i, end=i + 1, **kw) for i in range(n)], m


class TestPrune:
    def test_identical_embeddings_shorter_pruned(self):
        e = _unit(np.ones(512))
        long = _ref("a", e, end=30, end_ts="2020-01-31")
        short = _ref("b", e, end=10, end_ts="2020-01-11")
        retained, pruned = prune([short, long])
        assert retained == [long]
        assert pruned == [short]

    def test_far_apart_both_retained(self):
        rng = np.random.default_rng(1)
        a = _unit(rng.standard_normal(512))
        b = _unit(rng.standard_normal(512))
        b = _unit(b - (a @ b) * a)  # orthogonal: distance sqrt(2) ~ 1.41
        retained, pruned = prune([_ref("a", a), _ref("b", b)])
        assert len(retained) == 2 and not pruned

    def test_mixed_tables_rejected(self):
        e = _unit(np.ones(512))
        with pytest.raises(StoreError):
            prune([_ref("a", e, table_id="t1"), _ref("b", e, table_id="t2")])

    def test_groups_do_not_compete(self):
        e = _unit(np.ones(512))
        a = _ref("a", e, chart_type="line")
        b = _ref("b", e, chart_type="bar")
        retained, pruned = prune([a, b])
        assert len(retained) == 2

    def test_epsilon_net_and_separation_invariants(self):
        refs, _ = _random_refs(400, seed=2)
        # make spans vary so the span guarantee is non-trivial
        for i, r in enumerate(refs):
            r.end_idx = r.start_idx + 1 + (i % 17)
        cfg = PruneConfig(threshold=1.0)
        retained, pruned = prune(refs, cfg)
        kept = np.array([r.embedding for r in retained])
        for i in range(len(retained)):
            d = np.linalg.norm(kept - kept[i], axis=1)
            d[i] = np.inf
            assert d.min() >= cfg.threshold
        for r in pruned:
            d = np.linalg.norm(kept - r.embedding, axis=1)
            near = np.nonzero(d < cfg.threshold)[0]
            assert any(retained[int(j)].span >= r.span for j in near)

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            PruneConfig(threshold=2.5)


class TestVectorIndex:
    def test_insert_count_and_duplicate(self):
        refs, _ = _random_refs(3)
        idx = VectorIndex()
        idx.insert(refs)
        assert len(idx) == 3
        with pytest.raises(StoreError):
            idx.insert([refs[0]])

    def test_self_retrieval(self):
        refs, m = _random_refs(500, seed=3)
        idx = VectorIndex()
        idx.insert(refs)
        for i in (0, 17, 499):
            top = idx.query(m[i], k=1)
            assert top[0][0] == refs[i].ref_id
            assert top[0][1] == pytest.approx(1.0, abs=1e-4)

    def test_exact_equals_brute_force(self):
        refs, m = _random_refs(2000, seed=4)
        idx = VectorIndex()
        idx.insert(refs)
        rng = np.random.default_rng(5)
        for _ in range(20):
            q = _unit(rng.standard_normal(512)).astype(np.float32)
            got = [r for r, _ in idx.query(q, k=5)]
            sims = m.astype(np.float32) @ q
            want = [refs[i].ref_id for i in np.argsort(-sims)[:5]]
            assert got == want

    def test_k_larger_than_store(self):
        refs, _ = _random_refs(4, seed=6)
        idx = VectorIndex()
        idx.insert(refs)
        assert len(idx.query(refs[0].embedding, k=10)) == 4

    def test_tie_broken_by_ref_id(self):
        e = _unit(np.ones(512))
        idx = VectorIndex()
        idx.insert([_ref("b", e), _ref("a", e, chart_type="bar")])
        assert [r for r, _ in idx.query(e, k=2)] == ["a", "b"]

    def test_filters_pre_ranking(self):
        refs, _ = _random_refs(50, seed=7)
        for i, r in enumerate(refs):
            r.variable = "x" if i % 2 else "y"
        idx = VectorIndex()
        idx.insert(refs)
        got = idx.query(refs[0].embedding, k=10, flt={"variable": "x"})
        assert all(idx.get(r).variable == "x" for r, _ in got)

    def test_empty_cases(self):
        idx = VectorIndex()
        with pytest.raises(EmptyResult):
            idx.query(np.ones(512), k=1)
        refs, _ = _random_refs(5, seed=8)
        idx.insert(refs)
        with pytest.raises(EmptyResult):
            idx.query(refs[0].embedding, k=1, flt={"variable": "nope"})


class TestPersistence:
    def test_round_trip_rankings(self, tmp_path):
        refs, _ = _random_refs(300, seed=9)
        idx = VectorIndex()
        idx.insert(refs)
        idx.save(str(tmp_path / "store"))
        back = VectorIndex.load(str(tmp_path / "store"))
        rng = np.random.default_rng(10)
        for _ in range(50):
            q = _unit(rng.standard_normal(512))
            assert idx.query(q, k=3) == back.query(q, k=3)

    def test_truncated_vectors(self, tmp_path):
        refs, _ = _random_refs(10, seed=11)
        idx = VectorIndex()
        idx.insert(refs)
        p = str(tmp_path / "store")
        idx.save(p)
        with open(os.path.join(p, "vectors.bin"), "r+b") as fh:
            fh.truncate(100)
        with pytest.raises(FormatError):
            VectorIndex.load(p)

    def test_version_mismatch(self, tmp_path):
        import json

        idx = VectorIndex()
        p = str(tmp_path / "store")
        idx.save(p)
        mf = os.path.join(p, "manifest.json")
        doc = json.load(open(mf))
        doc["version"] = 99
        json.dump(doc, open(mf, "w"))
        with pytest.raises(FormatError):
            VectorIndex.load(p)

    def test_empty_round_trip(self, tmp_path):
        idx = VectorIndex()
        p = str(tmp_path / "store")
        idx.save(p)
        assert len(VectorIndex.load(p)) == 0

    def test_images_persisted(self, tmp_path):
        refs, _ = _random_refs(2, seed=12)
        idx = VectorIndex()
        idx.insert(refs)
        p = str(tmp_path / "store")
        idx.save(p, images={refs[0].ref_id: b"\x89PNGfake"})
        with open(idx.image_path(p, refs[0].ref_id), "rb") as fh:
            assert fh.read() == b"\x89PNGfake"


class TestHnsw:
    def test_recall_small(self):
        rng = np.random.default_rng(13)
        n = 3000
        m = rng.standard_normal((n, 512)).astype(np.float32)
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        idx = HnswIndex(HnswParams(M=16, ef_construction=100, ef_search=200))
        for i in range(n):
            idx.insert(m, i)
        hits = 0
        queries = 50
        for s in range(queries):
            q = rng.standard_normal(512).astype(np.float32)
            q /= np.linalg.norm(q)
            got = idx.search(m, q, 1)
            want = int(np.argmax(m @ q))
            hits += got[0] == want
        assert hits / queries >= 0.9

    def test_save_load_same_results(self, tmp_path):
        rng = np.random.default_rng(14)
        m = rng.standard_normal((200, 64)).astype(np.float32)
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        idx = HnswIndex(HnswParams(M=8, ef_construction=50, ef_search=50))
        for i in range(200):
            idx.insert(m, i)
        p = str(tmp_path / "g.npz")
        idx.save_npz(p)
        back = HnswIndex.load_npz(p)
        for s in range(10):
            q = m[s * 7]
            assert idx.search(m, q, 3) == back.search(m, q, 3)

    def test_approximate_index_round_trip(self, tmp_path):
        refs, _ = _random_refs(300, seed=15)
        idx = VectorIndex(mode="approximate", hnsw=HnswParams(M=8, ef_construction=60, ef_search=120))
        idx.insert(refs)
        p = str(tmp_path / "store")
        idx.save(p)
        back = VectorIndex.load(p)
        rng = np.random.default_rng(16)
        for _ in range(10):
            q = _unit(rng.standard_normal(512))
            assert idx.query(q, k=3) == back.query(q, k=3)
