"""Decompose-execute-fill query answering over a reference store.

A deterministic template grammar turns utterances (optionally with an
attached sketch/chart image) into QueryPlans; plans run against the vector
index; trend words are recognized from the retrieved references and filled
back into templated textual answers.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .embedding import embed_image, embed_series, similarity
from .errors import (
    EmptyResult,
    NoMatchError,
    PeriodError,
    UnsupportedQueryError,
    VariableError,
)
from .render import render_chart
from .table import Facet, TimeSeriesTable, gaussian_smooth
from .vocab import TrendVocabulary

INTENTS = ("Describe", "TrendOf", "LocatePattern", "SimilarToImage", "Correlation")

SUPPORTED_FORMS = (
    'describe the data',
    'what is the <noun> trend of <variable> [during <period>]',
    '<trend-word> ... in <variable> / give me more details about <trend-word>',
    'are there patterns similar to my sketch/chart (with an attached image)',
    'do <var1> and <var2> have similar change patterns [during <period>]',
)

SIMILARITY_VERDICT_THRESHOLD = 0.8  # dot product above which two windows count as similar
# A retained reference answers TrendOf only if it genuinely covers the asked
# window: it must contain most of the window's days and not dwarf it.
TREND_MIN_CONTAINMENT = 0.9
TREND_MIN_IOU = 0.7

_MONTHS = {m.lower(): i for i, m in enumerate(calendar.month_name) if m}
_MONTHS.update({m.lower(): i for i, m in enumerate(calendar.month_abbr) if m})


@dataclass
class QueryPlan:
    intent: str
    variables: list = field(default_factory=list)
    window: tuple | None = None  # (start datetime, end datetime), clamped to the table
    query_embedding: np.ndarray | None = None
    k: int = 3
    fill_template: str = ""
    trend_word: str | None = None
    noun: str | None = None  # echoed qualifier, e.g. "price" in "price trend"
    period_text: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "intent": self.intent,
            "variables": list(self.variables),
            "window": [self.window[0].isoformat(), self.window[1].isoformat()] if self.window else None,
            "k": self.k,
            "fill_template": self.fill_template,
            "trend_word": self.trend_word,
            "noun": self.noun,
            "period_text": self.period_text,
            "has_query_embedding": self.query_embedding is not None,
        }


@dataclass
class Match:
    ref_id: str
    variable: str
    start_ts: str
    end_ts: str
    similarity: float
    trend_category: str | None

    def as_dict(self):
        return {
            "ref_id": self.ref_id,
            "variable": self.variable,
            "start": self.start_ts,
            "end": self.end_ts,
            "similarity": self.similarity,
            "trend": self.trend_category,
        }


@dataclass
class RetrievalResult:
    matches: list  # of Match, similarity-descending
    verdict: str | None = None  # Correlation: "similar" | "different"
    per_variable_trends: dict | None = None  # Describe: variable -> (category, confidence)


def _match_variable(token: str, schema: list) -> str | None:
    token_l = token.strip().lower()
    for name in schema:
        if name.lower() == token_l:
            return name
    return None


def _find_variables(text: str, schema: list) -> list:
    """Schema variables mentioned in the utterance, in order of appearance."""
    found = []
    low = text.lower()
    for name in sorted(schema, key=len, reverse=True):
        m = re.search(r"\b" + re.escape(name.lower()) + r"\b", low)
        if m:
            found.append((m.start(), name))
    return [n for _, n in sorted(found)]


def parse_period(text: str, table_years=()) -> tuple:
    """Parse a period phrase into (start, end) datetimes.

    Supported: ISO dates ("2020-03-01 to 2020-03-31"), "March", "March
    2020", "March to October 2017". A bare month resolves to the table's
    (first) year.
    """
    text = text.strip().strip("?.!,")
    low = text.lower()

    m = re.fullmatch(r"(\d{4}-\d{2}-\d{2})\s*(?:to|-|until|through)\s*(\d{4}-\d{2}-\d{2})", low)
    if m:
        try:
            a = datetime.strptime(m.group(1), "%Y-%m-%d")
            b = datetime.strptime(m.group(2), "%Y-%m-%d")
        except ValueError as e:
            raise PeriodError(str(e))
        return a, b.replace(hour=23, minute=59, second=59)
    m = re.fullmatch(r"(\d{4})", low)
    if m:
        y = int(m.group(1))
        return datetime(y, 1, 1), datetime(y, 12, 31, 23, 59, 59)
    m = re.fullmatch(r"([a-z]+)\s*(?:to|-|until|through)\s*([a-z]+)\s+(\d{4})", low)
    if m and m.group(1) in _MONTHS and m.group(2) in _MONTHS:
        y = int(m.group(3))
        m1, m2 = _MONTHS[m.group(1)], _MONTHS[m.group(2)]
        last = calendar.monthrange(y, m2)[1]
        return datetime(y, m1, 1), datetime(y, m2, last, 23, 59, 59)
    m = re.fullmatch(r"([a-z]+)\s+(\d{4})", low)
    if m and m.group(1) in _MONTHS:
        y, mo = int(m.group(2)), _MONTHS[m.group(1)]
        last = calendar.monthrange(y, mo)[1]
        return datetime(y, mo, 1), datetime(y, mo, last, 23, 59, 59)
    m = re.fullmatch(r"([a-z]+)", low)
    if m and m.group(1) in _MONTHS:
        if not table_years:
            raise PeriodError(f"bare month {text!r} needs a table to resolve the year")
        y, mo = table_years[0], _MONTHS[m.group(1)]
        last = calendar.monthrange(y, mo)[1]
        return datetime(y, mo, 1), datetime(y, mo, last, 23, 59, 59)
    raise PeriodError(f"cannot parse period {text!r}")


def _clamp_window(window, table: TimeSeriesTable):
    lo, hi = table.timestamps[0], table.timestamps[-1]
    a = max(window[0], lo)
    b = min(window[1], hi)
    if a > b:
        raise PeriodError("period does not overlap the table's time range")
    return a, b


_RE_DESCRIBE = re.compile(r"\bdescribe\b.*\b(data|table)\b|\bsummar(y|ize)\b", re.I)
_RE_TREND_OF = re.compile(
    r"what\s+(?:is|was)\s+the\s+(?:(?P<noun>\w+)\s+)?trend\s+of\s+(?P<var>[\w .\-]+?)"
    r"(?:\s+(?:during|in|over|from)\s+(?P<period>[\w \-]+?))?\s*[?.!]?$",
    re.I,
)
_RE_CORRELATION = re.compile(
    r"do\s+(?P<rest>.+?)\s+have\s+similar\s+change\s+patterns?"
    r"(?:\s+(?:during|in|over|from)\s+(?P<period>[\w \-]+?))?\s*[?.!]?$",
    re.I,
)
_RE_SIMILAR = re.compile(r"\bsimilar\b|\blike\s+(this|my)\b|\bmatch", re.I)
_RE_DETAILS = re.compile(r"(?:more\s+details?|tell\s+me\s+more)\s+about\s+(?P<trend>[\w \-]+?)\s*[?.!]?$", re.I)
_RE_WHY = re.compile(r"^\s*why\b", re.I)


def decompose(
    text: str | None,
    table: TimeSeriesTable,
    vocab: TrendVocabulary,
    attachment=None,
    k: int = 3,
    context: dict | None = None,
) -> QueryPlan:
    """Parse an utterance (plus optional attached image) into a QueryPlan.

    Deterministic template grammar; anything outside it (notably causal
    "why" questions) raises UnsupportedQueryError listing supported forms.
    """
    text = (text or "").strip()
    if not text and attachment is None:
        raise UnsupportedQueryError("", SUPPORTED_FORMS)
    schema = table.variable_names()
    years = [table.timestamps[0].year]

    if _RE_WHY.match(text):
        raise UnsupportedQueryError(text, SUPPORTED_FORMS)

    if attachment is not None and (not text or _RE_SIMILAR.search(text)):
        window = None
        period_text = None
        variables = _find_variables(text, schema)
        return QueryPlan(
            intent="SimilarToImage",
            variables=variables,
            window=window,
            query_embedding=embed_image(attachment),
            k=k,
            fill_template="similar_intervals",
            period_text=period_text,
        )

    m = _RE_CORRELATION.search(text)
    if m:
        variables = _find_variables(m.group("rest"), schema)
        if len(variables) != 2:
            raise VariableError(
                f"correlation needs exactly 2 known variables, found {variables or 'none'} in {text!r}"
            )
        window = None
        period_text = m.group("period")
        if period_text:
            window = _clamp_window(parse_period(period_text, years), table)
        return QueryPlan(
            intent="Correlation",
            variables=variables,
            window=window,
            k=k,
            fill_template="correlation",
            period_text=period_text,
        )

    m = _RE_TREND_OF.search(text)
    if m:
        var = _match_variable(m.group("var"), schema)
        if var is None:
            # the captured span may include a trailing period phrase
            tokens = m.group("var").split()
            for cut in range(len(tokens), 0, -1):
                var = _match_variable(" ".join(tokens[:cut]), schema)
                if var:
                    break
        if var is None:
            raise VariableError(f"unknown variable in {text!r}")
        window = None
        period_text = m.group("period")
        if period_text:
            window = _clamp_window(parse_period(period_text, years), table)
        return QueryPlan(
            intent="TrendOf",
            variables=[var],
            window=window,
            k=1,
            fill_template="trend_of",
            noun=m.group("noun"),
            period_text=period_text,
        )

    if _RE_DESCRIBE.search(text):
        return QueryPlan(intent="Describe", variables=schema, k=k, fill_template="describe")

    m = _RE_DETAILS.search(text)
    trend_phrase = m.group("trend") if m else text
    try:
        category = vocab.match_phrase(trend_phrase)
    except Exception:
        category = None
    if category is not None:
        variables = _find_variables(text, schema)
        window = None
        period_text = None
        pm = re.search(r"(?:during|in|over)\s+(?P<period>[A-Za-z]+(?:\s+\d{4})?)\s*[?.!]?$", text)
        if pm and _match_variable(pm.group("period"), schema) is None:
            try:
                window = _clamp_window(parse_period(pm.group("period"), years), table)
                period_text = pm.group("period")
            except PeriodError:
                pass
        proto = vocab.category(category).prototype
        return QueryPlan(
            intent="LocatePattern",
            variables=variables,
            window=window,
            query_embedding=embed_series(proto),
            k=k,
            fill_template="similar_intervals",
            trend_word=category,
            period_text=period_text,
        )

    raise UnsupportedQueryError(text, SUPPORTED_FORMS)


def recognize_trend(embedding: np.ndarray, vocab: TrendVocabulary) -> tuple:
    """Nearest vocabulary prototype by dot product; confidence is that dot."""
    best_name, best_sim = None, -2.0
    for cat in vocab.categories:
        sim = similarity(embedding, vocab.prototype_embeddings()[cat.name])
        if sim > best_sim:
            best_name, best_sim = cat.name, sim
    return best_name, float(best_sim)


def _window_facet(table: TimeSeriesTable, variable: str, window) -> Facet:
    if variable not in table.variables:
        raise VariableError(f"unknown variable {variable!r}")
    smoothed = gaussian_smooth(table.variables[variable])
    if window is None:
        s, e = 0, table.n_rows - 1
    else:
        idx = [i for i, ts in enumerate(table.timestamps) if window[0] <= ts <= window[1]]
        if len(idx) < 2:
            raise PeriodError("window covers fewer than 2 rows")
        s, e = idx[0], idx[-1]
    return Facet(
        variable=variable,
        start_idx=s,
        end_idx=e,
        values=tuple(float(v) for v in smoothed[s : e + 1]),
        time_range=(table.timestamps[s], table.timestamps[e]),
    )


def _iso(ts) -> str:
    return ts.strftime("%Y-%m-%d")


def _ref_category(ref, store, vocab):
    if ref.trend_category is None:
        ref.trend_category = recognize_trend(ref.embedding, vocab)[0]
    return ref.trend_category


def _overlap_score(ref, window) -> tuple:
    """(IoU, containment) of the reference's span against the window.

    Containment is the fraction of the window's days the reference covers.
    """
    a, b = ref.start_ts, ref.end_ts
    w0, w1 = _iso(window[0]), _iso(window[1])
    if min(b, w1) < max(a, w0):
        return 0.0, 0.0
    lo = max(a, w0)
    hi = min(b, w1)

    def _days(x, y):
        return (datetime.fromisoformat(y) - datetime.fromisoformat(x)).days + 1

    inter = _days(lo, hi)
    return inter / _days(min(a, w0), max(b, w1)), inter / _days(w0, w1)


def execute(plan: QueryPlan, store, table: TimeSeriesTable, vocab: TrendVocabulary) -> RetrievalResult:
    """Run a QueryPlan against the store (and table, for on-the-fly facets)."""
    if plan.intent == "TrendOf":
        var = plan.variables[0]
        window = plan.window or (table.timestamps[0], table.timestamps[-1])
        cands = [r for r in store.refs if r.variable == var]
        if not cands:
            raise VariableError(f"no references stored for variable {var!r}")
        # classification prototypes are line renders, so prefer line refs
        lines = [r for r in cands if r.chart_type == "line"]
        if lines:
            cands = lines
        scored = [(r, *_overlap_score(r, window)) for r in cands]
        best, iou, containment = max(scored, key=lambda t: (t[1], t[0].span, t[0].ref_id))
        if iou < TREND_MIN_IOU or containment < TREND_MIN_CONTAINMENT:
            # no retained reference covers the window; build an ephemeral one
            facet = _window_facet(table, var, window)
            emb = embed_image(render_chart(facet, "line"))
            category, conf = recognize_trend(emb, vocab)
            match = Match(
                ref_id="",
                variable=var,
                start_ts=_iso(facet.time_range[0]),
                end_ts=_iso(facet.time_range[1]),
                similarity=conf,
                trend_category=category,
            )
            return RetrievalResult(matches=[match])
        category = _ref_category(best, store, vocab)
        conf = recognize_trend(best.embedding, vocab)[1]
        return RetrievalResult(
            matches=[Match(best.ref_id, var, best.start_ts, best.end_ts, conf, category)]
        )

    if plan.intent in ("LocatePattern", "SimilarToImage"):
        # sketches and trend prototypes are stroke-like, so match against the
        # line renderings; bar/area duplicates of a span would crowd the top-k
        flt = {"chart_type": "line"}
        if plan.variables:
            flt["variable"] = plan.variables[0]
        if plan.window:
            flt["start_ts"] = _iso(plan.window[0])
            flt["end_ts"] = _iso(plan.window[1])
        try:
            ranked = store.query(plan.query_embedding, k=plan.k, flt=flt or None)
        except EmptyResult as e:
            raise NoMatchError(str(e))
        matches = []
        for ref_id, sim in ranked:
            r = store.get(ref_id)
            matches.append(
                Match(r.ref_id, r.variable, r.start_ts, r.end_ts, sim, _ref_category(r, store, vocab))
            )
        return RetrievalResult(matches=matches)

    if plan.intent == "Correlation":
        v1, v2 = plan.variables
        f1 = _window_facet(table, v1, plan.window)
        f2 = _window_facet(table, v2, plan.window)
        e1 = embed_image(render_chart(f1, "line"))
        e2 = embed_image(render_chart(f2, "line"))
        dot = similarity(e1, e2)
        verdict = "similar" if dot >= SIMILARITY_VERDICT_THRESHOLD else "different"
        matches = [
            Match("", v, _iso(f.time_range[0]), _iso(f.time_range[1]), dot, None)
            for v, f in ((v1, f1), (v2, f2))
        ]
        return RetrievalResult(matches=matches, verdict=verdict)

    if plan.intent == "Describe":
        trends = {}
        matches = []
        for var in plan.variables:
            facet = _window_facet(table, var, None)
            emb = embed_image(render_chart(facet, "line"))
            category, conf = recognize_trend(emb, vocab)
            trends[var] = (category, conf)
            matches.append(
                Match("", var, _iso(facet.time_range[0]), _iso(facet.time_range[1]), conf, category)
            )
        return RetrievalResult(matches=matches, per_variable_trends=trends)

    raise UnsupportedQueryError(plan.intent, SUPPORTED_FORMS)


def fill(plan: QueryPlan, result: RetrievalResult, vocab: TrendVocabulary, table=None) -> str:
    """Instantiate the answer template for a plan/result pair."""
    if plan.intent == "TrendOf":
        m = result.matches[0]
        noun = f" {plan.noun}" if plan.noun else ""
        period = plan.period_text or f"{m.start_ts} to {m.end_ts}"
        return f"There is a {m.trend_category}{noun} trend in {m.variable} during {period.strip()}."

    if plan.intent in ("LocatePattern", "SimilarToImage"):
        spans = [f"from {m.start_ts} to {m.end_ts}" for m in result.matches]
        n = len(spans)
        number = {1: "one", 2: "two", 3: "three"}.get(n, str(n))
        plural = "interval" if n == 1 else "intervals"
        listing = spans[0] if n == 1 else ", ".join(spans[:-1]) + ", and " + spans[-1]
        head = f"The {number} {plural} with similar patterns are {listing}."
        if n == 1:
            head = f"The interval with a similar pattern is {listing}."
        category = result.matches[0].trend_category
        if category:
            head += f" This pattern is recognized as a {category} pattern."
        return head

    if plan.intent == "Correlation":
        v1, v2 = plan.variables
        period = plan.period_text or (
            f"{result.matches[0].start_ts} to {result.matches[0].end_ts}" if result.matches else "the full range"
        )
        return (
            f"During the period of {period.strip()}, the {v1} and {v2} have "
            f"{result.verdict} change patterns."
        )

    if plan.intent == "Describe":
        parts = [f"{var} shows a {cat} pattern" for var, (cat, _) in result.per_variable_trends.items()]
        span = ""
        if table is not None:
            span = f" from {_iso(table.timestamps[0])} to {_iso(table.timestamps[-1])}"
        return f"The table covers {len(result.per_variable_trends)} variable(s){span}: " + "; ".join(parts) + "."

    raise UnsupportedQueryError(plan.intent, SUPPORTED_FORMS)


def pattern_groups(store, variable: str, vocab: TrendVocabulary) -> list:
    """Trend-category groups for a variable, most populated first.

    Every retained reference is classified; groups are ordered by count
    descending (ties alphabetical) and carry their top-3 references by
    recognition confidence.
    """
    refs = [r for r in store.refs if r.variable == variable]
    if not refs:
        raise VariableError(f"no references stored for variable {variable!r}")
    groups = {}
    for r in refs:
        cat, conf = recognize_trend(r.embedding, vocab)
        r.trend_category = cat
        groups.setdefault(cat, []).append((conf, r))
    out = []
    for cat in sorted(groups, key=lambda c: (-len(groups[c]), c)):
        members = sorted(groups[cat], key=lambda t: (-t[0], t[1].ref_id))
        out.append(
            {
                "category": cat,
                "count": len(members),
                "top_refs": [
                    {"ref_id": r.ref_id, "start": r.start_ts, "end": r.end_ts, "confidence": float(c)}
                    for c, r in members[:3]
                ],
            }
        )
    return out
