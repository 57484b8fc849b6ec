import math

import numpy as np
import pytest

from vistr.align_data import make_rotated_task, split_batches
from vistr.alignment import (
    AlignConfig,
    AlignmentBatch,
    ProjectionHead,
    evaluate_retrieval,
    pair_entropy_matrix,
    total_loss,
    train_projection,
    triplet_loss,
    weighted_f1,
)
from vistr.errors import FormatError, LabelError


def _random_unit(n, d=512, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


class TestPairEntropy:
    def test_closed_form_identity_logits(self):
        a = np.eye(2)
        h = pair_entropy_matrix(a, a, tau=1.0)
        on = -math.log(math.e / (math.e + 1))
        off = -math.log(1 / (math.e + 1))
        assert h[0, 0] == pytest.approx(on, abs=1e-12)
        assert h[0, 1] == pytest.approx(off, abs=1e-12)

    def test_rows_softmax_normalized(self):
        a = _random_unit(6, seed=1)
        b = _random_unit(6, seed=2)
        h = pair_entropy_matrix(a, b, tau=0.1)
        assert np.allclose(np.exp(-h).sum(axis=1), 1.0, atol=1e-9)

    def test_large_tau_uniform(self):
        a = _random_unit(5, seed=3)
        h = pair_entropy_matrix(a, a, tau=1e9)
        assert np.allclose(h, math.log(5), atol=1e-6)


class TestTripletLoss:
    def test_margin_satisfied_zero(self):
        h = np.full((4, 4), 2.0)
        np.fill_diagonal(h, 0.1)
        assert triplet_loss(h, alpha=0.2) == 0.0

    def test_hand_example_1_7(self):
        h = np.array([[1.0, 0.5], [0.4, 1.2]])
        assert triplet_loss(h, alpha=0.2) == pytest.approx(1.7, abs=1e-12)

    def test_shift_invariance_dyadic_bit_exact(self):
        # dyadic entries and a dyadic shift add exactly in IEEE-754
        h = np.array([[1.0, 0.5, 2.25], [0.75, 1.5, 0.25], [2.0, 1.25, 0.5]])
        for c in (0.5, 3.5, 128.25):
            assert triplet_loss(h + c, 0.2) == triplet_loss(h, 0.2)

    def test_shift_invariance_general_close(self):
        h = np.abs(_random_unit(5, d=5, seed=4)) + 0.1
        assert triplet_loss(h + 3.7, 0.2) == pytest.approx(triplet_loss(h, 0.2), abs=1e-12)

    def test_monotone_in_alpha(self):
        h = np.abs(_random_unit(6, d=6, seed=5)) + 0.1
        assert triplet_loss(h, 0.0) <= triplet_loss(h, 0.3)

    def test_inactive_hinge_zero_grad(self):
        h = np.full((3, 3), 5.0)
        np.fill_diagonal(h, 0.0)
        _, g = triplet_loss(h, alpha=0.2, return_grad=True)
        assert np.all(g == 0.0)


class TestTotalLoss:
    def test_perfect_alignment_zero(self):
        embs = np.eye(8, 512)
        batch = AlignmentBatch(embs, embs, embs)
        cfg = AlignConfig(margin_alpha=0.2, temperature_tau=0.05)
        assert total_loss(batch, ProjectionHead(), cfg) == 0.0

    def test_nonnegative(self):
        batch = AlignmentBatch(_random_unit(8, seed=6), _random_unit(8, seed=7), _random_unit(8, seed=8))
        assert total_loss(batch, ProjectionHead(), AlignConfig()) >= 0.0

    @pytest.mark.parametrize("seed", range(20))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        d = 16
        batch = AlignmentBatch(
            _random_unit(8, d, seed=seed), _random_unit(8, d, seed=seed + 100), _random_unit(8, d, seed=seed + 200)
        )
        head = ProjectionHead(dim=d)
        cfg = AlignConfig(margin_alpha=0.2, temperature_tau=0.5)
        loss, grad = total_loss(batch, head, cfg, return_grad=True)
        h = 1e-5
        idxs = [(rng.integers(d), rng.integers(d)) for _ in range(6)]
        for i, j in idxs:
            w = head.weights.copy()
            wp, wm = w.copy(), w.copy()
            wp[i, j] += h
            wm[i, j] -= h
            lp = total_loss(batch, ProjectionHead(weights=wp), cfg)
            lm = total_loss(batch, ProjectionHead(weights=wm), cfg)
            fd = (lp - lm) / (2 * h)
            denom = max(abs(fd), abs(grad[i, j]), 1e-8)
            assert abs(fd - grad[i, j]) / denom <= 1e-4


class TestTrain:
    def test_zero_lr_identity(self):
        batch = AlignmentBatch(_random_unit(8, seed=9), _random_unit(8, seed=10), _random_unit(8, seed=11))
        head, _ = train_projection([batch], AlignConfig(learning_rate=0.0, epochs=2))
        assert np.array_equal(head.weights, np.eye(512))

    def test_aligned_data_loss_zero_head_unchanged(self):
        embs = np.eye(8, 512)
        batch = AlignmentBatch(embs, embs, embs)
        head, trace = train_projection([batch], AlignConfig(epochs=3, temperature_tau=0.05))
        assert trace[0] == 0.0
        assert np.array_equal(head.weights, np.eye(512))

    def test_rotated_task_recoverable(self):
        charts, texts, sketches, labels = make_rotated_task(seed=42)
        train, test = split_batches(charts, texts, sketches, labels)
        head, trace = train_projection(train, AlignConfig(margin_alpha=2.0, learning_rate=0.5))
        m = evaluate_retrieval(test, head)
        assert m.acc >= 0.85
        assert m.wf >= 0.85
        nonmono = sum(1 for a, b in zip(trace, trace[1:]) if b > a + 1e-9)
        assert nonmono <= 2


class TestMetrics:
    def test_single_category_restricted(self):
        embs = _random_unit(10, seed=12)
        batch = AlignmentBatch(embs, embs, embs, labels=["peak"] * 10)
        m = evaluate_retrieval(batch, ProjectionHead())
        assert m.acc == 1.0
        assert m.wf == 1.0  # restricted to present categories

    def test_single_category_over_all_23(self):
        embs = _random_unit(10, seed=13)
        batch = AlignmentBatch(embs, embs, embs, labels=["peak"] * 10)
        cats = [f"c{i}" for i in range(22)] + ["peak"]
        m = evaluate_retrieval(batch, ProjectionHead(), categories=cats, restrict_to_present=False)
        assert m.wf == pytest.approx(1 / 23, abs=1e-12)

    def test_two_categories_half(self):
        assert weighted_f1([("a", 1.0, 1.0, 1.0), ("b", 0.0, 0.0, 0.0)]) == 0.5

    def test_unlabeled_raises(self):
        embs = _random_unit(4, seed=14)
        batch = AlignmentBatch(embs, embs, embs, labels=None)
        with pytest.raises(LabelError):
            evaluate_retrieval(batch, ProjectionHead())


class TestHeadPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(15)
        w = rng.standard_normal((512, 512))
        p = str(tmp_path / "head.bin")
        ProjectionHead(weights=w).save(p)
        back = ProjectionHead.load(p)
        assert np.array_equal(back.weights, w)

    def test_truncated_raises(self, tmp_path):
        p = str(tmp_path / "head.bin")
        ProjectionHead().save(p)
        with open(p, "r+b") as fh:
            fh.truncate(100)
        with pytest.raises(FormatError):
            ProjectionHead.load(p)

    def test_missing_sidecar_raises(self, tmp_path):
        p = str(tmp_path / "head.bin")
        with open(p, "wb") as fh:
            fh.write(b"\0" * 8)
        with pytest.raises(FormatError):
            ProjectionHead.load(p)
