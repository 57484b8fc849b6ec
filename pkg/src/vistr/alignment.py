"""Cross-modal alignment: pair-entropy matrix, bidirectional hinge triplet
loss with hardest-negative mining, a trainable linear projection head, and
retrieval metrics (top-1 accuracy, macro-averaged F1)."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, FormatError, LabelError

HEAD_VERSION = 1


@dataclass(frozen=True)
class AlignConfig:
    margin_alpha: float = 0.2
    temperature_tau: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    lr_halve_every: int = 10  # step decay period, in epochs

    def __post_init__(self):
        if min(self.margin_alpha, self.temperature_tau, self.epochs, self.batch_size) <= 0:
            raise ValueError("margin, tau, epochs, batch_size must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (need at least one negative)")


@dataclass
class AlignmentBatch:
    """Row i across the three matrices is one matched (chart, text, sketch) triple."""

    chart_embs: np.ndarray
    text_embs: np.ndarray
    sketch_embs: np.ndarray
    labels: list | None = None  # optional category names, one per row

    def __post_init__(self):
        for name in ("chart_embs", "text_embs", "sketch_embs"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, m)
        n = self.chart_embs.shape[0]
        if self.text_embs.shape[0] != n or self.sketch_embs.shape[0] != n:
            raise ValueError("modalities must have equal row counts")
        for name in ("chart_embs", "text_embs", "sketch_embs"):
            norms = np.linalg.norm(getattr(self, name), axis=1)
            if not np.allclose(norms, 1.0, atol=1e-6):
                raise ValueError(f"{name} rows must be unit-norm")

    def __len__(self):
        return self.chart_embs.shape[0]


class ProjectionHead:
    """512x512 linear map applied to text/sketch embeddings, outputs re-normalized.

    Charts are the supervised modality and are never projected.
    """

    def __init__(self, weights: np.ndarray | None = None, dim: int = 512):
        self.weights = np.eye(dim) if weights is None else np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (dim, dim) and weights is not None:
            dim = self.weights.shape[0]
        if self.weights.shape[0] != self.weights.shape[1]:
            raise ValueError("projection head must be square")

    @property
    def dim(self):
        return self.weights.shape[0]

    def project(self, embs: np.ndarray) -> np.ndarray:
        out = embs @ self.weights.T
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        return out / norms

    def save(self, path):
        """Little-endian float64 row-major binary with a JSON sidecar."""
        raw = self.weights.astype("<f8").tobytes(order="C")
        with open(path, "wb") as fh:
            fh.write(raw)
        sidecar = {"version": HEAD_VERSION, "d": self.dim, "dtype": "<f8", "order": "row-major"}
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh)

    @staticmethod
    def load(path) -> "ProjectionHead":
        try:
            with open(str(path) + ".json", "r", encoding="utf-8") as fh:
                sidecar = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise FormatError(f"missing or corrupt head sidecar: {e}")
        if sidecar.get("version") != HEAD_VERSION:
            raise FormatError(f"unsupported head version {sidecar.get('version')}")
        d = int(sidecar["d"])
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) != d * d * 8:
            raise FormatError(f"head file has {len(raw)} bytes, expected {d * d * 8}")
        w = np.frombuffer(raw, dtype="<f8").reshape(d, d)
        return ProjectionHead(weights=w.copy())


def pair_entropy_matrix(a_embs: np.ndarray, b_embs: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise softmax cross-entropy over dot-product logits.

    H[i, j] = -log softmax_j(a_i . b_j / tau). Smaller means more similar
    within a row; exp(-H) sums to 1 over each row.
    """
    s = (a_embs @ b_embs.T) / tau
    s = s - s.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(s).sum(axis=1, keepdims=True))
    return -(s - log_z)


def _softmax_from_entropy(h_row_logits):
    return np.exp(-h_row_logits)


def triplet_loss(h: np.ndarray, alpha: float, return_grad: bool = False):
    """Bidirectional hinge loss over hardest negatives of the entropy matrix.

    For each anchor i the hardest (most confusable, smallest-entropy)
    row negative j* and column negative i* are mined; the positive must
    beat both by margin alpha. Ties in the argmin go to the lowest index.
    """
    n = h.shape[0]
    if n < 2 or h.shape[1] != n:
        raise ValueError("H must be square with N >= 2")
    diag = np.diag(h)

    masked_rows = h + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    j_star = np.argmin(masked_rows, axis=1)  # hardest negative in row i
    i_star = np.argmin(masked_rows, axis=0)  # hardest negative in column i

    # associate as alpha + (pos - neg): the pos/neg difference cancels any
    # constant shift of H exactly, keeping the loss shift-invariant
    row_term = alpha + (diag - h[np.arange(n), j_star])
    col_term = alpha + (diag - h[i_star, np.arange(n)])
    loss = (np.maximum(row_term, 0.0) + np.maximum(col_term, 0.0)).mean()
    if not return_grad:
        return loss

    grad = np.zeros_like(h)
    for i in range(n):
        if row_term[i] > 0:
            grad[i, i] += 1.0 / n
            grad[i, j_star[i]] -= 1.0 / n
        if col_term[i] > 0:
            grad[i, i] += 1.0 / n
            grad[i_star[i], i] -= 1.0 / n
    return loss, grad


def _pair_loss_and_grad_w(charts, raw, head, cfg):
    """Loss of one (chart, projected-modality) pairing and dL/dW.

    Chain: W -> u = W x -> b = u/|u| -> S = charts b^T -> H -> hinge loss.
    """
    u = raw @ head.weights.T
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    b = u / norms
    tau = cfg.temperature_tau
    s = (charts @ b.T) / tau
    shift = s.max(axis=1, keepdims=True)
    e = np.exp(s - shift)
    p = e / e.sum(axis=1, keepdims=True)
    h = -np.log(p)

    loss, g_h = triplet_loss(h, cfg.margin_alpha, return_grad=True)

    # dH[i,j]/dS[i,k] = p[i,k] - delta_jk   (softmax Jacobian, row-wise)
    row_sums = g_h.sum(axis=1, keepdims=True)
    g_s = (row_sums * p - g_h) / tau
    g_b = g_s.T @ charts  # dL/db_j
    # through the re-normalization: db/du = (I - b b^T)/|u|
    g_u = (g_b - (np.sum(g_b * b, axis=1, keepdims=True)) * b) / norms
    g_w = g_u.T @ raw
    return loss, g_w


def total_loss(batch: AlignmentBatch, head: ProjectionHead, cfg: AlignConfig, return_grad: bool = False):
    """Sum of the chart-text and chart-sketch pairing losses (charts fixed)."""
    lt, gt = _pair_loss_and_grad_w(batch.chart_embs, batch.text_embs, head, cfg)
    ls, gs = _pair_loss_and_grad_w(batch.chart_embs, batch.sketch_embs, head, cfg)
    loss = lt + ls
    if return_grad:
        return loss, gt + gs
    return loss


def train_projection(batches: list, cfg: AlignConfig = AlignConfig()):
    """Plain gradient descent on the projection head with step-decayed rate.

    The learning rate halves every ``lr_halve_every`` epochs. Deterministic:
    batches are visited in the given order each epoch.

    Returns (head, per-epoch mean loss list).
    """
    if not batches:
        raise ValueError("need at least one batch")
    head = ProjectionHead(dim=batches[0].chart_embs.shape[1])
    trace = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate * (0.5 ** (epoch // cfg.lr_halve_every))
        losses = []
        for batch in batches:
            loss, grad = total_loss(batch, head, cfg, return_grad=True)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            head.weights -= lr * grad
            losses.append(loss)
        trace.append(float(np.mean(losses)))
    return head, trace


@dataclass
class Metrics:
    acc: float
    wf: float
    per_category: list  # (name, precision, recall, f1)

    def as_dict(self):
        return {
            "acc": self.acc,
            "wf": self.wf,
            "per_category": [
                {"category": n, "precision": p, "recall": r, "f1": f} for n, p, r, f in self.per_category
            ],
        }


def weighted_f1(per_category) -> float:
    """Uniform mean of per-category F1 (the macro form of the WF metric)."""
    if not per_category:
        return 0.0
    return float(np.mean([f for _, _, _, f in per_category]))


def evaluate_retrieval(
    test: AlignmentBatch,
    head: ProjectionHead,
    categories: list | None = None,
    restrict_to_present: bool = True,
) -> Metrics:
    """Retrieve the nearest chart for every text and sketch row.

    Acc is the fraction of queries whose retrieved chart is their own row.
    Per-category precision/recall compare the retrieved chart's label to
    the query's label; WF is the uniform mean of F1 over the category set
    (categories absent from the test set are excluded by default, or
    contribute zero when restrict_to_present is False).
    """
    if test.labels is None or any(lbl is None for lbl in test.labels):
        raise LabelError("every evaluation row needs a category label")
    charts = test.chart_embs
    labels = list(test.labels)
    n = len(test)

    hits = 0
    pred_true = []  # (predicted label, true label)
    for modality in (test.text_embs, test.sketch_embs):
        proj = head.project(modality)
        sims = proj @ charts.T
        nearest = np.argmax(sims, axis=1)
        hits += int(np.sum(nearest == np.arange(n)))
        for qi, ci in enumerate(nearest):
            pred_true.append((labels[int(ci)], labels[qi]))
    acc = hits / (2 * n)

    present = sorted(set(labels))
    cat_set = present if (restrict_to_present or categories is None) else list(categories)
    per_category = []
    for cat in cat_set:
        tp = sum(1 for p, t in pred_true if p == cat and t == cat)
        fp = sum(1 for p, t in pred_true if p == cat and t != cat)
        fn = sum(1 for p, t in pred_true if p != cat and t == cat)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_category.append((cat, prec, rec, f1))
    return Metrics(acc=acc, wf=weighted_f1(per_category), per_category=per_category)
