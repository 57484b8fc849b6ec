import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vistr.embedding import (
    DESCRIPTOR_LEN,
    embed_descriptor,
    embed_image,
    embed_series,
    extract_trace,
    shape_descriptor,
    similarity,
)
from vistr.errors import AmbiguousTrendError, UnknownTrendError
from vistr.render import render_chart
from vistr.table import Facet
from vistr.vocab import N_CATEGORIES, load_default_vocabulary


def _facet(values):
    return Facet(
        variable="v",
        start_idx=0,
        end_idx=len(values) - 1,
        values=tuple(float(v) for v in values),
        time_range=(0, len(values) - 1),
    )


class TestExtractTrace:
    def test_constant_facet_half(self):
        tr = extract_trace(render_chart(_facet([3, 3, 3, 3]), "line"))
        assert np.allclose(tr, 0.5)

    def test_ramp_close_to_linspace(self):
        tr = extract_trace(render_chart(_facet(np.arange(10.0)), "line"))
        # plot height is 216 px minus 5% padding; allow the 2-px stroke error
        assert np.max(np.abs(tr - np.linspace(0, 1, 64))) <= 2 / 194

    def test_vee_minimum_in_middle_third(self):
        tr = extract_trace(render_chart(_facet(np.abs(np.linspace(-1, 1, 31))), "line"))
        assert 64 // 3 <= int(np.argmin(tr)) <= 2 * 64 // 3


class TestEmbedImage:
    def test_unit_norm(self):
        e = embed_image(render_chart(_facet([1, 5, 2, 4]), "line"))
        assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-6)
        assert e.shape == (512,)

    def test_line_vs_area_nearly_identical(self):
        f = _facet(np.sin(np.arange(24.0)))
        a = embed_image(render_chart(f, "line"))
        b = embed_image(render_chart(f, "area"))
        assert float(a @ b) >= 0.99

    def test_affine_invariance(self):
        v = np.array([1.0, 4.0, 2.0, 6.0, 3.0])
        a = embed_image(render_chart(_facet(v), "line"))
        b = embed_image(render_chart(_facet(2 * v + 7), "line"))
        assert np.array_equal(a, b)

    def test_deterministic(self):
        f = _facet(np.cos(np.arange(30.0)))
        a = embed_image(render_chart(f, "bar"))
        b = embed_image(render_chart(f, "bar"))
        assert np.array_equal(a, b)


class TestSimilarity:
    def test_self_one(self):
        e = embed_series(np.arange(16.0))
        assert similarity(e, e) == pytest.approx(1.0, abs=1e-6)

    def test_negation(self):
        e = embed_series(np.arange(16.0))
        assert similarity(e, -e) == pytest.approx(-1.0, abs=1e-6)

    def test_orthogonal_constructed(self):
        a = embed_series(np.arange(16.0))
        b = embed_series(np.arange(16.0)[::-1].copy())
        b_orth = b - (a @ b) * a
        b_orth /= np.linalg.norm(b_orth)
        assert similarity(a, b_orth) == pytest.approx(0.0, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_distance_dot_consistency(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(512)
        b = rng.standard_normal(512)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        d2 = float(np.sum((a - b) ** 2))
        assert d2 == pytest.approx(2.0 - 2.0 * float(a @ b), abs=1e-6)


class TestDescriptor:
    def test_length(self):
        tr = np.linspace(0, 1, 64)
        assert shape_descriptor(tr).shape == (DESCRIPTOR_LEN,)

    def test_projection_preserves_unit_norm(self):
        rng = np.random.default_rng(0)
        d = rng.standard_normal(DESCRIPTOR_LEN)
        e = embed_descriptor(d)
        assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-6)


class TestVocabulary:
    def setup_method(self):
        self.vocab = load_default_vocabulary()

    def test_exactly_23_categories(self):
        assert len(self.vocab.categories) == N_CATEGORIES == 23

    def test_prototypes_normalized(self):
        for c in self.vocab.categories:
            p = np.asarray(c.prototype)
            assert len(p) == 64
            if p.max() > p.min():
                assert p.min() == pytest.approx(0.0, abs=1e-9)
                assert p.max() == pytest.approx(1.0, abs=1e-9)
            else:
                # constant shapes follow the constant-trace convention
                assert np.allclose(p, 0.5)

    def test_prototype_discriminability_margin(self):
        embs = self.vocab.prototype_embeddings()
        names = list(embs)
        for a in names:
            sims = sorted((float(embs[a] @ embs[b]) for b in names if b != a), reverse=True)
            assert 1.0 - sims[0] >= 0.05, f"{a}: runner-up {sims[0]:.3f}"

    def test_synonyms_same_category(self):
        assert self.vocab.match_phrase("rising") == self.vocab.match_phrase("upward")
        assert self.vocab.match_phrase("rising") == "increasing"

    def test_two_peaks_matches_rendered_bumps(self):
        cat = self.vocab.match_phrase("two peaks")
        assert cat == "two-peak"
        t = np.linspace(0, 1, 64)
        bumps = np.exp(-0.5 * ((t - 0.28) / 0.09) ** 2) + np.exp(-0.5 * ((t - 0.72) / 0.09) ** 2)
        e = embed_series(bumps)
        proto = self.vocab.prototype_embeddings()[cat]
        assert float(e @ proto) >= 0.8

    def test_unknown_phrase(self):
        with pytest.raises(UnknownTrendError):
            self.vocab.match_phrase("xyzzy")

    def test_maximal_span_disambiguation(self):
        # "two peaks" must not be read as the single-peak category
        assert self.vocab.match_phrase("there are two peaks") == "two-peak"

    def test_json_round_trip(self):
        from vistr.vocab import TrendVocabulary

        v2 = TrendVocabulary.from_json(self.vocab.to_json())
        assert v2.names() == self.vocab.names()
        for a, b in zip(v2.categories, self.vocab.categories):
            assert np.allclose(a.prototype, b.prototype)
