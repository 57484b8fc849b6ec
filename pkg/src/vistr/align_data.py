"""Synthetic triplet data for alignment training and evaluation.

The rotated-embedding task: chart embeddings are noisy category prototypes;
text and sketch embeddings are the same vectors passed through one fixed
random rotation. A linear projection head can recover the rotation exactly,
so the task is solvable by construction and serves as the alignment
acceptance benchmark.
"""

from __future__ import annotations

import os

import numpy as np

from .alignment import AlignmentBatch
from .embedding import embed_series
from .vocab import TrendVocabulary, load_default_vocabulary

DATA_FILE = "triplets.npz"
DATA_VERSION = 1


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def make_rotated_task(
    seed: int = 42,
    per_category: int = 30,
    noise: float = 0.05,
    vocab: TrendVocabulary | None = None,
):
    """Returns (charts, texts, sketches, labels) row-aligned arrays.

    Rows are shuffled so category blocks do not align with batch boundaries.
    """
    vocab = vocab or load_default_vocabulary()
    rng = np.random.default_rng(seed)
    protos = {c.name: embed_series(c.prototype) for c in vocab.categories}
    d = 512
    # one fixed rotation shared by the text and sketch modalities
    rot, _ = np.linalg.qr(rng.standard_normal((d, d)))

    charts, labels = [], []
    for name in vocab.names():
        p = protos[name]
        for _ in range(per_category):
            v = p + noise * rng.standard_normal(d)
            charts.append(v / np.linalg.norm(v))
            labels.append(name)
    charts = np.asarray(charts)
    texts = _normalize_rows((charts + 0.2 * noise * rng.standard_normal(charts.shape)) @ rot.T)
    sketches = _normalize_rows((charts + 0.2 * noise * rng.standard_normal(charts.shape)) @ rot.T)

    order = rng.permutation(len(labels))
    return charts[order], texts[order], sketches[order], [labels[i] for i in order]


def split_batches(charts, texts, sketches, labels, batch_size: int = 32, train_frac: float = 0.8):
    """80/20 split into (train batches, test batch). Remainder rows that do
    not fill a training batch are dropped."""
    n = len(labels)
    n_train = int(n * train_frac)
    train = []
    for s in range(0, n_train - batch_size + 1, batch_size):
        e = s + batch_size
        train.append(
            AlignmentBatch(charts[s:e], texts[s:e], sketches[s:e], labels=labels[s:e])
        )
    test = AlignmentBatch(
        charts[n_train:], texts[n_train:], sketches[n_train:], labels=labels[n_train:]
    )
    return train, test


def save_task(path: str, charts, texts, sketches, labels):
    os.makedirs(path, exist_ok=True)
    np.savez_compressed(
        os.path.join(path, DATA_FILE),
        version=np.asarray([DATA_VERSION]),
        charts=charts,
        texts=texts,
        sketches=sketches,
        labels=np.asarray(labels),
    )


def load_task(path: str):
    from .errors import FormatError

    file = os.path.join(path, DATA_FILE)
    if not os.path.isfile(file):
        raise FormatError(f"no {DATA_FILE} under {path!r}")
    with np.load(file, allow_pickle=False) as doc:
        if int(doc["version"][0]) != DATA_VERSION:
            raise FormatError(f"unsupported triplet data version {doc['version'][0]}")
        return (
            doc["charts"],
            doc["texts"],
            doc["sketches"],
            [str(x) for x in doc["labels"]],
        )
