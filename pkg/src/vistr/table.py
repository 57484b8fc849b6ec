"""Time-series table ingestion, smoothing, change-point detection, facet enumeration."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from .errors import ParseError, SchemaError

_TS_FORMATS = (
    "%Y-%m-%d",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y/%m/%d",
    "%d-%b-%y",
)


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    for fmt in _TS_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise ValueError(f"unrecognized timestamp: {text!r}")


@dataclass
class TimeSeriesTable:
    """Timestamped numeric columns; the raw reasoning substrate."""

    table_id: str
    timestamps: list  # datetime, strictly increasing
    variables: dict  # name -> np.ndarray of float64, one value per timestamp

    def __post_init__(self):
        n = len(self.timestamps)
        if n < 2:
            raise SchemaError("table needs at least 2 rows")
        if not self.variables:
            raise SchemaError("table needs at least 1 variable")
        for i in range(1, n):
            if not self.timestamps[i] > self.timestamps[i - 1]:
                raise SchemaError(f"timestamps not strictly increasing at row {i + 1}")
        for name, vals in self.variables.items():
            arr = np.asarray(vals, dtype=np.float64)
            if arr.shape != (n,):
                raise SchemaError(f"variable {name!r} has {arr.size} values, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"variable {name!r} contains non-finite values")
            self.variables[name] = arr

    @property
    def n_rows(self) -> int:
        return len(self.timestamps)

    def variable_names(self):
        return list(self.variables)


@dataclass(frozen=True)
class SmoothingConfig:
    """Gaussian kernel parameters, in samples."""

    sigma: float = 2.0
    radius: int | None = None  # defaults to ceil(3*sigma)

    def effective_radius(self) -> int:
        r = self.radius if self.radius is not None else math.ceil(3 * self.sigma)
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if r < 1:
            raise ValueError("radius must be >= 1")
        return r


@dataclass(frozen=True)
class PhtConfig:
    """Page-Hinckley parameters, in the units of the series."""

    delta: float
    lambda_: float
    two_sided: bool = True

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.lambda_ <= self.delta:
            raise ValueError("lambda must be > delta")

    @staticmethod
    def defaults_for(series) -> "PhtConfig":
        # Scale-free defaults: tied to the sample std of the (smoothed) series.
        s = float(np.std(np.asarray(series, dtype=np.float64)))
        if s == 0.0:
            s = 1.0
        return PhtConfig(delta=0.01 * s, lambda_=5.0 * s, two_sided=True)


@dataclass
class FacetConfig:
    min_facet_len: int = 5
    max_facets: int = 30_000


@dataclass(frozen=True)
class Facet:
    """A contiguous slice of one smoothed variable."""

    variable: str
    start_idx: int
    end_idx: int  # inclusive
    values: tuple  # smoothed slice, length end_idx - start_idx + 1
    time_range: tuple  # (start timestamp, end timestamp)

    def __len__(self):
        return self.end_idx - self.start_idx + 1

    @property
    def span(self):
        return self.time_range[1] - self.time_range[0]


def parse_table(csv_bytes: bytes, table_id: str = "table", schema_hint: dict | None = None) -> TimeSeriesTable:
    """Parse a UTF-8 CSV with a header row into a TimeSeriesTable.

    The first column (or ``schema_hint['timestamp']``) holds timestamps;
    every other column must be numeric. Rows are sorted by timestamp;
    duplicate timestamps are rejected.
    """
    text = csv_bytes.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise SchemaError("empty CSV")
    header = [h.strip() for h in rows[0]]
    ts_col = 0
    if schema_hint and "timestamp" in schema_hint:
        want = schema_hint["timestamp"]
        if want not in header:
            raise SchemaError(f"hinted timestamp column {want!r} not in header")
        ts_col = header.index(want)
    var_cols = [i for i in range(len(header)) if i != ts_col]
    if not var_cols:
        raise SchemaError("no variable columns")
    if len(rows) - 1 < 2:
        raise SchemaError("table needs at least 2 data rows")

    parsed = []
    for ri, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(ri, 1, f"row {ri} has {len(row)} cells, expected {len(header)}")
        try:
            ts = _parse_timestamp(row[ts_col])
        except ValueError:
            raise ParseError(ri, ts_col + 1, f"bad timestamp {row[ts_col]!r} at row {ri}")
        vals = []
        for ci in var_cols:
            cell = row[ci].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(ri, ci + 1, f"non-numeric cell {cell!r} at row {ri}, column {ci + 1}")
            if not math.isfinite(v):
                raise ParseError(ri, ci + 1, f"non-finite value at row {ri}, column {ci + 1}")
            vals.append(v)
        parsed.append((ts, vals))

    parsed.sort(key=lambda p: p[0])
    for i in range(1, len(parsed)):
        if parsed[i][0] == parsed[i - 1][0]:
            raise SchemaError(f"duplicate timestamp {parsed[i][0]}")
    timestamps = [p[0] for p in parsed]
    data = np.array([p[1] for p in parsed], dtype=np.float64)
    variables = {header[ci]: data[:, j] for j, ci in enumerate(var_cols)}
    return TimeSeriesTable(table_id=table_id, timestamps=timestamps, variables=variables)


def serialize_table(table: TimeSeriesTable) -> bytes:
    """Inverse of parse_table on valid tables (round-trips via repr of floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = table.variable_names()
    writer.writerow(["timestamp"] + names)
    for i, ts in enumerate(table.timestamps):
        stamp = ts.strftime("%Y-%m-%d") if (ts.hour, ts.minute, ts.second) == (0, 0, 0) else ts.strftime("%Y-%m-%dT%H:%M:%S")
        writer.writerow([stamp] + [repr(float(table.variables[n][i])) for n in names])
    return buf.getvalue().encode("utf-8")


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offs / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(series, cfg: SmoothingConfig = SmoothingConfig()) -> np.ndarray:
    """Gaussian smoothing with truncate-and-renormalize edge handling.

    Output length equals input length; a constant series comes back
    bit-identical because the kernel is renormalized at every position.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("series must be a non-empty 1-D sequence")
    r = cfg.effective_radius()
    if np.all(x == x[0]):
        return x.copy()
    k = gaussian_kernel(cfg.sigma, r)
    n = x.size
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        lo = max(0, i - r)
        hi = min(n, i + r + 1)
        w = k[lo - i + r : hi - i + r]
        out[i] = float(np.dot(w, x[lo:hi]) / w.sum())
    return out


def pht_changepoints(series, cfg: PhtConfig | None = None) -> list:
    """Page-Hinckley change points.

    Runs the classic cumulative statistic m_t = sum(x_i - mean_i - delta)
    with running minimum M_t; alarms when m_t - M_t > lambda. When
    two_sided, a mirrored statistic catches downward shifts. All state
    resets after each alarm and detection resumes at the next sample.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise ValueError("series must have length >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("series must be finite")
    if cfg is None:
        cfg = PhtConfig.defaults_for(x)

    alarms = []
    count = 0
    mean = 0.0
    m_up = 0.0
    min_up = 0.0
    m_dn = 0.0
    min_dn = 0.0
    for t in range(x.size):
        v = float(x[t])
        count += 1
        mean += (v - mean) / count
        m_up += v - mean - cfg.delta
        min_up = min(min_up, m_up)
        fired = (m_up - min_up) > cfg.lambda_
        if cfg.two_sided and not fired:
            m_dn += -v + mean - cfg.delta
            min_dn = min(min_dn, m_dn)
            fired = (m_dn - min_dn) > cfg.lambda_
        elif cfg.two_sided:
            m_dn += -v + mean - cfg.delta
            min_dn = min(min_dn, m_dn)
        if fired:
            alarms.append(t)
            count = 0
            mean = 0.0
            m_up = min_up = 0.0
            m_dn = min_dn = 0.0
    return alarms


def generate_facets(
    smoothed,
    changepoints,
    timestamps=None,
    variable: str = "series",
    cfg: FacetConfig | None = None,
) -> list:
    """Enumerate all contiguous unions of base segments as Facets.

    Base segments are the maximal runs between consecutive change points;
    a change point at index c ends the current segment at c-1. With k base
    segments there are k(k+1)/2 candidates; candidates shorter than
    min_facet_len are dropped. If the survivors exceed max_facets, all
    single segments plus the whole series are kept, then longest spans
    first (ties to earlier start).
    """
    cfg = cfg or FacetConfig()
    x = np.asarray(smoothed, dtype=np.float64)
    n = x.size
    if timestamps is None:
        timestamps = list(range(n))
    bounds = [0]
    for c in sorted(set(int(c) for c in changepoints)):
        if 0 < c < n:
            bounds.append(c)
    bounds.append(n)
    seg_starts = bounds[:-1]
    seg_ends = [b - 1 for b in bounds[1:]]
    k = len(seg_starts)

    candidates = []
    for i in range(k):
        for j in range(i, k):
            s, e = seg_starts[i], seg_ends[j]
            if e - s + 1 >= cfg.min_facet_len:
                candidates.append((s, e, i == 0 and j == k - 1, j == i))

    if len(candidates) > cfg.max_facets:
        keep = [c for c in candidates if c[2] or c[3]]
        rest = [c for c in candidates if not (c[2] or c[3])]
        rest.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
        candidates = keep + rest[: max(0, cfg.max_facets - len(keep))]
        candidates.sort(key=lambda c: (c[0], c[1]))

    facets = []
    for s, e, _, _ in candidates:
        facets.append(
            Facet(
                variable=variable,
                start_idx=s,
                end_idx=e,
                values=tuple(float(v) for v in x[s : e + 1]),
                time_range=(timestamps[s], timestamps[e]),
            )
        )
    return facets
