"""Event ingestion, hourly binning, calendar covariates and the count ACF."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .net import NetworkPattern, snap_points

__all__ = [
    "EventSet",
    "RejectionReport",
    "HourlyCovariates",
    "load_events",
    "events_from_arrays",
    "hourly_counts",
    "hourly_covariates",
    "acf",
    "acf_positive",
]

HOUR = pd.Timedelta(hours=1)


@dataclass
class EventSet:
    """Network-snapped events binned into hourly periods ``1..T``.

    Period ``t`` covers ``[origin + (t-1)h, origin + t*h)``.
    """

    pattern: NetworkPattern
    period: np.ndarray
    T: int
    origin: pd.Timestamp

    def __post_init__(self):
        self.period = np.asarray(self.period, dtype=np.int64).reshape(-1)
        self.origin = pd.Timestamp(self.origin)
        if len(self.period) != len(self.pattern):
            raise ValueError("period and pattern lengths differ")
        if len(self.period) and (self.period.min() < 1 or self.period.max() > self.T):
            raise ValueError("period index outside 1..T")

    def __len__(self):
        return len(self.period)

    @property
    def net(self):
        return self.pattern.net

    @property
    def xy(self):
        return self.pattern.xy

    def period_start(self, t):
        return self.origin + (np.asarray(t) - 1) * HOUR

    def period_of(self, when):
        """Period index containing a timestamp (may lie outside ``1..T``)."""
        return int((pd.Timestamp(when) - self.origin) // HOUR) + 1

    def select(self, mask):
        return EventSet(self.pattern.take(mask), self.period[mask], self.T, self.origin)

    def before(self, period):
        """Events with period index ``< period``, with ``T`` truncated to ``period - 1``."""
        keep = self.period < period
        return EventSet(self.pattern.take(keep), self.period[keep], period - 1, self.origin)

    def in_periods(self, periods):
        keep = np.isin(self.period, np.asarray(periods))
        return self.pattern.take(keep)


@dataclass
class RejectionReport:
    total: int
    accepted: int
    rows: pd.DataFrame  # columns: row, reason

    @property
    def rejected(self):
        return len(self.rows)

    def counts(self):
        return self.rows["reason"].value_counts().to_dict()

    def to_csv(self, path):
        self.rows.to_csv(path, index=False)


def _parse_timestamps(values):
    ts = pd.to_datetime(pd.Series(values, dtype=object), format="ISO8601", errors="coerce")
    if getattr(ts.dt, "tz", None) is not None:
        ts = ts.dt.tz_localize(None)
    return ts


def events_from_arrays(net, timestamps, xy, window, max_snap=50.0):
    """Snap and bin in-memory events. See :func:`load_events`."""
    start, end = pd.Timestamp(window[0]), pd.Timestamp(window[1])
    if not end > start:
        raise ValueError("empty window")
    span = (end - start) / HOUR
    if span != int(span):
        raise ValueError("window must span a whole number of hours")
    T = int(span)
    ts = pd.DatetimeIndex(timestamps)
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    n = len(ts)

    reason = np.full(n, "", dtype=object)
    inside = np.asarray((ts >= start) & (ts < end))
    reason[~inside] = "outside_window"
    seg = np.full(n, -1, dtype=np.int64)
    tpos = np.zeros(n)
    if inside.any():
        s, t, _ = snap_points(net, xy[inside], max_snap)
        seg[inside], tpos[inside] = s, t
    far = inside & (seg < 0)
    reason[far] = "too_far"
    ok = inside & (seg >= 0)

    period = ((ts[ok] - start) // HOUR).to_numpy().astype(np.int64) + 1
    ev = EventSet(NetworkPattern(net, seg[ok], tpos[ok]), period, T, start)
    bad = np.flatnonzero(~ok)
    rows = pd.DataFrame({"row": bad + 1, "reason": reason[bad]})
    return ev, RejectionReport(n, int(ok.sum()), rows)


def load_events(path, net, max_snap=50.0, window=None):
    """Read ``timestamp,x,y`` records, snap them and bin them hourly.

    Parameters
    ----------
    path : path-like
        CSV with header ``timestamp,x,y``; timestamps as ``YYYY-MM-DD HH:MM``
        or ISO-8601, interpreted as local wall-clock time.
    net : LinearNetwork
    max_snap : float
        Events farther than this from every segment are rejected.
    window : (start, end)
        Half-open study window; must span whole hours. Defaults to the
        hours covering all records.

    Returns
    -------
    EventSet, RejectionReport
        Rejected rows are reported with 1-based data row numbers.
    """
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"timestamp", "x", "y"} - set(df.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    ts = _parse_timestamps(df["timestamp"])
    if ts.isna().any():
        i = int(np.flatnonzero(ts.isna().to_numpy())[0])
        raise ValueError(f"{path}: row {i + 1}: unparseable timestamp {df['timestamp'].iloc[i]!r}")
    x = pd.to_numeric(df["x"], errors="coerce")
    y = pd.to_numeric(df["y"], errors="coerce")
    bad = ~(np.isfinite(x) & np.isfinite(y))
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise ValueError(f"{path}: row {i + 1}: malformed coordinates")
    if window is None:
        window = (ts.min().floor("h"), ts.max().floor("h") + HOUR)
    return events_from_arrays(net, ts, np.column_stack([x, y]), window, max_snap)


def hourly_counts(ev):
    """Event counts ``y_1..y_T`` (zero-filled)."""
    return np.bincount(ev.period, minlength=ev.T + 1)[1:].astype(float)


@dataclass
class HourlyCovariates:
    """Calendar covariates for a run of hourly periods.

    ``dow`` follows Python's convention, Monday = 0 ... Sunday = 6.
    """

    year: np.ndarray
    dow: np.ndarray
    hour: np.ndarray
    week: np.ndarray

    def __len__(self):
        return len(self.hour)

    def take(self, idx):
        return HourlyCovariates(self.year[idx], self.dow[idx], self.hour[idx], self.week[idx])


def hourly_covariates(origin, periods, base_year=None, week_mode="iso"):
    """Covariates for period indices (``int`` T means periods ``1..T``).

    ``week_mode`` is ``"iso"`` (ISO-8601 week number, 1..53) or ``"doy"``
    (``dayofyear // 7 + 1``, also 1..53).
    """
    origin = pd.Timestamp(origin)
    if np.isscalar(periods):
        periods = np.arange(1, int(periods) + 1)
    periods = np.asarray(periods, dtype=np.int64)
    when = pd.DatetimeIndex(origin + (periods - 1) * HOUR)
    base = origin.year if base_year is None else int(base_year)
    if week_mode == "iso":
        week = when.isocalendar().week.to_numpy().astype(np.int64)
    elif week_mode == "doy":
        week = ((when.dayofyear.to_numpy() - 1) // 7 + 1).astype(np.int64)
    else:
        raise ValueError(f"unknown week_mode {week_mode!r}")
    return HourlyCovariates(
        year=(when.year.to_numpy() - base).astype(np.int64),
        dow=when.dayofweek.to_numpy().astype(np.int64),
        hour=when.hour.to_numpy().astype(np.int64),
        week=week,
    )


def acf(y, max_lag):
    """Sample autocorrelation at lags ``1..max_lag`` (biased, denominator N)."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if not 0 < max_lag < n:
        raise ValueError("max_lag must satisfy 0 < max_lag < len(y)")
    d = y - y.mean()
    c0 = d @ d
    if c0 <= 0:
        raise ValueError("zero variance")
    # zero-padded FFT autocovariance, exact up to rounding
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, nfft)
    r = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    return r[1:] / c0


def acf_positive(y, max_lag=672):
    """Positive part of the sample ACF at lags ``1..max_lag``."""
    return np.maximum(acf(y, max_lag), 0.0)
