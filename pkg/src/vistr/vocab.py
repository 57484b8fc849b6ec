"""Trend-word vocabulary: 23 categories, synonym lexicon, prototype shapes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .embedding import TRACE_LEN, embed_series
from .errors import AmbiguousTrendError, UnknownTrendError

VOCAB_VERSION = 1
N_CATEGORIES = 23


def _stem(token: str) -> str:
    token = token.lower().strip(".,!?;:'\"()")
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        token = token[:-1]
    return token


@dataclass
class TrendCategory:
    name: str
    synonyms: list
    prototype: np.ndarray  # 64 points, min-max normalized into [0, 1]


@dataclass
class TrendVocabulary:
    categories: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.categories) != N_CATEGORIES:
            raise ValueError(f"vocabulary must have exactly {N_CATEGORIES} categories")
        self._syn_map = {}
        for cat in self.categories:
            proto = np.asarray(cat.prototype, dtype=np.float64)
            if proto.shape != (TRACE_LEN,):
                raise ValueError(f"{cat.name}: prototype must have {TRACE_LEN} points")
            if proto.min() < 0 or proto.max() > 1:
                raise ValueError(f"{cat.name}: prototype not normalized to [0, 1]")
            cat.prototype = proto
            for syn in [cat.name] + list(cat.synonyms):
                key = tuple(_stem(t) for t in syn.replace("-", " ").split())
                prev = self._syn_map.get(key)
                if prev is not None and prev != cat.name:
                    raise ValueError(f"synonym {syn!r} maps to both {prev} and {cat.name}")
                self._syn_map[key] = cat.name
        self._embeddings = None

    def names(self):
        return [c.name for c in self.categories]

    def category(self, name: str) -> TrendCategory:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)

    def match_phrase(self, phrase: str) -> str:
        """Map a phrase to its trend category via the synonym lexicon.

        Matching is case-insensitive and lightly stemmed; when a matched
        span is contained in a longer match (``peaks`` inside ``two
        peaks``) only the longer one counts.
        """
        tokens = [_stem(t) for t in phrase.replace("-", " ").split()]
        spans = []  # (start, end, category)
        for i in range(len(tokens)):
            for j in range(i + 1, min(len(tokens), i + 4) + 1):
                cat = self._syn_map.get(tuple(tokens[i:j]))
                if cat:
                    spans.append((i, j, cat))
        maximal = [
            (s, e, c)
            for (s, e, c) in spans
            if not any((s2 <= s and e <= e2 and (s2, e2) != (s, e)) for (s2, e2, _) in spans)
        ]
        cats = sorted({c for _, _, c in maximal})
        if not cats:
            import difflib

            lexicon = sorted({" ".join(k) for k in self._syn_map})
            near = difflib.get_close_matches(" ".join(tokens), lexicon, n=3, cutoff=0.3)
            raise UnknownTrendError(phrase, near)
        if len(cats) > 1:
            raise AmbiguousTrendError(phrase, cats)
        return cats[0]

    def prototype_embeddings(self) -> dict:
        """name -> embedding of the prototype rendered as a line chart (cached)."""
        if self._embeddings is None:
            self._embeddings = {c.name: embed_series(c.prototype) for c in self.categories}
        return self._embeddings

    def to_json(self) -> str:
        doc = {
            "version": VOCAB_VERSION,
            "categories": [
                {"name": c.name, "synonyms": list(c.synonyms), "prototype": [float(v) for v in c.prototype]}
                for c in self.categories
            ],
        }
        return json.dumps(doc, indent=1)

    @staticmethod
    def from_json(text: str) -> "TrendVocabulary":
        doc = json.loads(text)
        if doc.get("version") != VOCAB_VERSION:
            raise ValueError(f"unsupported vocabulary version {doc.get('version')}")
        cats = [
            TrendCategory(name=c["name"], synonyms=list(c["synonyms"]), prototype=np.asarray(c["prototype"]))
            for c in doc["categories"]
        ]
        return TrendVocabulary(categories=cats)


def _bump(t, center, width):
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def _norm01(v):
    v = np.asarray(v, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi - lo < 1e-12:
        return np.full_like(v, 0.5)
    return (v - lo) / (hi - lo)


def build_default_vocabulary() -> TrendVocabulary:
    """The shipped 23-category vocabulary with synthesized prototype shapes."""
    t = np.linspace(0.0, 1.0, TRACE_LEN)
    shapes = {
        "increasing": t,
        "decreasing": 1 - t,
        "flat": np.full_like(t, 0.5),
        "peak": _bump(t, 0.5, 0.14),
        "two-peak": _bump(t, 0.28, 0.09) + _bump(t, 0.72, 0.09),
        "valley": 1 - _bump(t, 0.5, 0.14),
        "two-valley": 1 - (_bump(t, 0.28, 0.09) + _bump(t, 0.72, 0.09)),
        "sharp-rise": t**5,
        "sharp-drop": (1 - t) ** 5,
        "zigzag": np.abs(((t * 4) % 1.0) - 0.5),
        "v-shape": np.abs(2 * t - 1),
        "inverted-v": 1 - np.abs(2 * t - 1),
        "u-shape": (2 * t - 1) ** 2,
        "inverted-u": 1 - (2 * t - 1) ** 2,
        "step-up": np.where(t < 0.5, 0.0, 1.0),
        "step-down": np.where(t < 0.5, 1.0, 0.0),
        "rise-then-plateau": np.minimum(t / 0.4, 1.0),
        "plateau-then-rise": np.maximum((t - 0.6) / 0.4, 0.0),
        "fall-then-plateau": 1 - np.minimum(t / 0.4, 1.0),
        "plateau-then-fall": 1 - np.maximum((t - 0.6) / 0.4, 0.0),
        "spike": _bump(t, 0.5, 0.035),
        "dip": 1 - _bump(t, 0.5, 0.035),
        "gradual-recovery": np.where(t < 0.18, 1 - t / 0.18, 0.85 * (t - 0.18) / 0.82),
    }
    synonyms = {
        "increasing": ["increase", "increasing", "upward", "rising", "rise", "uptrend", "growing", "growth", "ascending"],
        "decreasing": ["decrease", "decreasing", "downward", "falling", "fall", "downtrend", "declining", "decline", "descending"],
        "flat": ["flat", "stable", "steady", "constant", "unchanged", "sideways"],
        "peak": ["peak", "a peak", "single peak", "one peak", "summit", "crest"],
        "two-peak": ["two peaks", "two-peak", "double peak", "double top", "twin peaks", "m shape", "m-shaped"],
        "valley": ["valley", "a valley", "single valley", "trough", "bottom"],
        "two-valley": ["two valleys", "two-valley", "double bottom", "double-bottom", "twin valleys", "w shape", "w-shaped"],
        "sharp-rise": ["sharp rise", "sharp increase", "surge", "soaring", "soar", "skyrocket", "steep rise"],
        "sharp-drop": ["sharp drop", "sharp decrease", "plunge", "plummet", "crash", "steep drop", "steep fall"],
        "zigzag": ["zigzag", "fluctuating", "fluctuation", "fluctuations", "oscillating", "oscillation", "volatile", "choppy"],
        "v-shape": ["v shape", "v-shaped", "v pattern", "v recovery"],
        "inverted-v": ["inverted v", "inverse v", "tent", "triangle top"],
        "u-shape": ["u shape", "u-shaped", "u pattern", "rounded bottom"],
        "inverted-u": ["inverted u", "inverse u", "rounded top", "dome"],
        "step-up": ["step up", "upward step", "level shift up", "jump up", "jump"],
        "step-down": ["step down", "downward step", "level shift down", "drop off"],
        "rise-then-plateau": ["rise then plateau", "rise and plateau", "increase then flatten", "rise then flatten"],
        "plateau-then-rise": ["plateau then rise", "flat then rise", "flat then increase", "late rise"],
        "fall-then-plateau": ["fall then plateau", "fall and plateau", "decrease then flatten", "fall then flatten"],
        "plateau-then-fall": ["plateau then fall", "flat then fall", "flat then decrease", "late fall"],
        "spike": ["spike", "a spike", "sudden spike", "blip up"],
        "dip": ["dip", "a dip", "sudden dip", "blip down"],
        "gradual-recovery": ["gradual recovery", "recovery", "recovering", "rebound", "bounce back"],
    }
    cats = [TrendCategory(name=n, synonyms=synonyms[n], prototype=_norm01(s)) for n, s in shapes.items()]
    return TrendVocabulary(categories=cats)


def load_default_vocabulary() -> TrendVocabulary:
    """Load the vocabulary JSON shipped with the package."""
    text = resources.files("vistr").joinpath("data/vocabulary.json").read_text("utf-8")
    return TrendVocabulary.from_json(text)


def load_vocabulary(path=None) -> TrendVocabulary:
    if path is None:
        return load_default_vocabulary()
    with open(path, "r", encoding="utf-8") as fh:
        return TrendVocabulary.from_json(fh.read())
