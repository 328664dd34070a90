"""Lagged Kolmogorov-Smirnov statistics and the anomaly indices built on them.

The pipeline is

    per-hour distance samples -> KS heatmap (hour x lag)
        -> per-hour index (mean or kurtosis of the row's valid entries)
        -> null calibration (percentile over quiet windows) -> flags

All per-cell work is independent, so the heatmap may be filled by a thread
pool; each cell is computed by the same code path regardless of scheduling,
which keeps results bit-identical across thread counts.
"""
import csv
import io
import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .density import SampleStore
from .errors import (ConfigError, DegenerateSampleError, EmptySampleError,
                     UndefinedIndexError, WindowTooShortError)
from .geo import DistanceSample

log = logging.getLogger(__name__)

KINDS = ("mean", "kurtosis")
MIN_KURTOSIS_LAGS = 4
RECOMMENDED_NULL_SAMPLES = 100


def empirical_percentile(values, fraction: float) -> float:
    """Percentile by linear interpolation between order statistics.

    For sorted values ``x[0..n-1]`` the position is ``fraction * (n - 1)``;
    the result interpolates linearly between the two neighbouring order
    statistics (Hyndman & Fan type 7, numpy's default).
    """
    x = np.asarray(values, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if x.size == 0:
        raise EmptySampleError("percentile of an empty sample")
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"percentile fraction must lie in [0, 1], got {fraction}")
    return float(np.quantile(x, fraction, method="linear"))


# -- KS statistic ----------------------------------------------------------

def _as_values(sample) -> np.ndarray:
    if isinstance(sample, DistanceSample):
        sample = sample.distances
    return np.asarray(sample, dtype=float).ravel()


def _ks_sorted(a: np.ndarray, b: np.ndarray) -> float:
    # ECDFs only jump at sample points, so the sup is attained on a U b.
    x = np.concatenate((a, b))
    cdf_a = np.searchsorted(a, x, side="right") / a.size
    cdf_b = np.searchsorted(b, x, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a(x) - F_b(x)|``."""
    a = _as_values(a)
    b = _as_values(b)
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("KS statistic needs two non-empty samples")
    return _ks_sorted(np.sort(a), np.sort(b))


# -- lag sets and the heatmap ---------------------------------------------

@dataclass
class KsLagSet:
    time_index: int
    lags: np.ndarray
    ks_values: np.ndarray
    valid_mask: np.ndarray

    @property
    def valid_values(self) -> np.ndarray:
        return self.ks_values[self.valid_mask]


def _store(samples) -> SampleStore:
    return samples if isinstance(samples, SampleStore) else SampleStore(samples)


def _heatmap_rows(store: SampleStore, rows, max_lag: int) -> np.ndarray:
    out = np.full((len(rows), max_lag), np.nan)
    for r, t in enumerate(rows):
        current = store[t]
        if current is None:
            continue
        for k in range(1, min(max_lag, t) + 1):
            other = store[t - k]
            if other is not None:
                out[r, k - 1] = _ks_sorted(current, other)
    return out


def lagged_ks_set(samples, t: int, lag: int) -> KsLagSet:
    """KS statistics of hour ``t`` against each of the ``lag`` preceding hours.

    Entry ``k - 1`` compares hour ``t`` with hour ``t - k``.  Lags reaching
    before the first hour, or touching an hour with fewer than two vessels,
    are masked out.  An invalid hour ``t`` yields an all-masked set.
    """
    if lag < 1:
        raise ConfigError(f"lag must be >= 1, got {lag}")
    store = _store(samples)
    if not 0 <= t < len(store):
        raise IndexError(f"hour {t} outside store of length {len(store)}")
    row = _heatmap_rows(store, [t], lag)[0]
    return KsLagSet(t, np.arange(1, lag + 1), row, ~np.isnan(row))


def ks_heatmap(samples, max_lag: int, threads: int | None = None) -> np.ndarray:
    """Hour x lag matrix of lagged KS statistics, NaN where undefined.

    ``threads`` is a hint; the output does not depend on it.
    """
    if max_lag < 1:
        raise ConfigError(f"max_lag must be >= 1, got {max_lag}")
    store = _store(samples)
    n = len(store)
    threads = max(1, int(threads or 1))
    if threads == 1 or n < 2 * threads:
        return _heatmap_rows(store, range(n), max_lag)
    bounds = np.linspace(0, n, threads + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda rows: _heatmap_rows(store, rows, max_lag), chunks))
    return np.vstack(parts)


# -- indices ----------------------------------------------------------------

def _valid(values) -> np.ndarray:
    if isinstance(values, KsLagSet):
        return values.valid_values
    x = np.asarray(values, dtype=float).ravel()
    return x[~np.isnan(x)]


def mean_index(lag_set) -> float:
    """Arithmetic mean of the valid lagged KS values."""
    x = _valid(lag_set)
    if x.size == 0:
        raise UndefinedIndexError("no valid lags")
    return float(np.sum(x) / x.size)


def kurtosis_index(lag_set) -> float:
    """Pearson (non-excess) kurtosis ``m4 / m2**2`` with population moments.

    Raises
    ------
    UndefinedIndexError
        Fewer than four valid lags.
    DegenerateSampleError
        All valid values equal, so the kurtosis is undefined.
    """
    x = _valid(lag_set)
    if x.size < MIN_KURTOSIS_LAGS:
        raise UndefinedIndexError(f"{x.size} valid lags, need {MIN_KURTOSIS_LAGS}")
    if np.ptp(x) == 0:
        raise DegenerateSampleError("constant lag set")
    d = x - np.sum(x) / x.size
    d2 = d * d
    m2 = np.sum(d2) / x.size
    m4 = np.sum(d2 * d2) / x.size
    if m2 == 0:
        raise DegenerateSampleError("zero variance lag set")
    return float(m4 / (m2 * m2))


_INDEX_FUNCS = {"mean": mean_index, "kurtosis": kurtosis_index}


@dataclass
class AnomalySeries:
    """Per-hour anomaly index.

    ``values`` is NaN where the index is undefined and ``status`` says why:
    ``ok``, ``invalid-hour`` (fewer than two vessels), ``insufficient-lags``
    or ``degenerate`` (zero-variance lag set).  ``flags`` is all False until
    :func:`flag_anomalies` has been applied.
    """

    kind: str
    lag: int
    values: np.ndarray
    status: list
    threshold: float | None = None
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.flags is None:
            self.flags = np.zeros(self.values.shape, dtype=bool)
        self.flags = np.asarray(self.flags, dtype=bool)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def flagged_hours(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["hour", "value", "flag", "threshold"])
        thr = "" if self.threshold is None else repr(float(self.threshold))
        for t, (v, f) in enumerate(zip(self.values, self.flags)):
            writer.writerow([t, "" if np.isnan(v) else repr(float(v)), int(f), thr])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "mean", lag: int = 0) -> "AnomalySeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        values = np.array([float(r["value"]) if r["value"] else np.nan for r in rows])
        flags = np.array([r["flag"] == "1" for r in rows], dtype=bool)
        thr = rows[0]["threshold"] if rows else ""
        status = ["ok" if not np.isnan(v) else "undefined" for v in values]
        return cls(kind, lag, values, status, float(thr) if thr else None, flags)

    def to_dict(self) -> dict:
        return {
            "schema": "fleet-anomaly/series",
            "version": 1,
            "kind": self.kind,
            "lag_hours": self.lag,
            "threshold": self.threshold,
            "values": [None if np.isnan(v) else float(v) for v in self.values],
            "status": list(self.status),
            "flags": [bool(f) for f in self.flags],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def series_from_heatmap(heatmap: np.ndarray, kind: str, lag: int | None = None,
                        valid_hours=None) -> AnomalySeries:
    """Reduce each heatmap row to one index value."""
    if kind not in _INDEX_FUNCS:
        raise ConfigError(f"unknown index kind {kind!r}; expected one of {KINDS}")
    func = _INDEX_FUNCS[kind]
    lag = heatmap.shape[1] if lag is None else lag
    n = heatmap.shape[0]
    values = np.full(n, np.nan)
    status = []
    for t in range(n):
        if valid_hours is not None and not valid_hours[t]:
            status.append("invalid-hour")
            continue
        try:
            values[t] = func(heatmap[t, :lag])
        except DegenerateSampleError:
            status.append("degenerate")
        except UndefinedIndexError:
            status.append("insufficient-lags")
        else:
            status.append("ok")
    return AnomalySeries(kind, lag, values, status)


def anomaly_series(samples, lag: int, kind: str = "mean",
                   threads: int | None = None) -> AnomalySeries:
    """Unflagged anomaly index for every hour.

    Early hours use whatever lags exist (fewer than ``lag``); hour 0 never
    has one and is always undefined.

    Raises
    ------
    WindowTooShortError
        The store has no more hours than ``lag``.
    """
    store = _store(samples)
    if len(store) <= lag:
        raise WindowTooShortError(f"{len(store)} hours is not longer than lag {lag}")
    heat = ks_heatmap(store, lag, threads)
    return series_from_heatmap(heat, kind, lag, store.valid)


# -- significance -------------------------------------------------------------

@dataclass
class NullCalibration:
    null_windows: list
    percentile: float
    threshold: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "schema": "fleet-anomaly/calibration",
            "version": 1,
            "null_windows": [list(w) for w in self.null_windows],
            "percentile": self.percentile,
            "threshold": self.threshold,
            "sample_count": self.sample_count,
        }


def _check_windows(windows, n_hours=None, name="window"):
    out = []
    for w in windows:
        start, end = int(w[0]), int(w[1])
        if start >= end:
            raise ConfigError(f"{name} {list(w)} is empty (windows are [start, end) hours)")
        if start < 0 or (n_hours is not None and start >= n_hours):
            raise ConfigError(f"{name} {list(w)} lies outside the series of {n_hours} hours")
        out.append((start, end))
    return out


def calibrate_null(series: AnomalySeries, null_windows, percentile: float = 0.99,
                   event_windows=()) -> NullCalibration:
    """Threshold = ``percentile`` of the index values inside the null windows.

    Windows are half-open ``[start, end)`` hour-index ranges.  A null window
    overlapping any event window is a configuration error.
    """
    if not 0.0 < percentile < 1.0:
        raise ConfigError(f"percentile must lie in (0, 1), got {percentile}")
    nulls = _check_windows(null_windows, len(series.values), "null window")
    if not nulls:
        raise ConfigError("no null windows given")
    events = _check_windows(event_windows, None, "event window")
    for ns, ne in nulls:
        for es, ee in events:
            if ns < ee and es < ne:
                raise ConfigError(
                    f"null window [{ns}, {ne}) overlaps event window [{es}, {ee})")
    mask = np.zeros(len(series.values), dtype=bool)
    for s, e in nulls:
        mask[s:e] = True
    sample = series.values[mask]
    sample = sample[~np.isnan(sample)]
    if sample.size == 0:
        raise EmptySampleError("null windows contain no defined index values")
    if sample.size < RECOMMENDED_NULL_SAMPLES:
        warnings.warn(f"null calibration from only {sample.size} values "
                      f"(< {RECOMMENDED_NULL_SAMPLES} recommended)", stacklevel=2)
    threshold = empirical_percentile(sample, percentile)
    log.debug("null threshold %.6g from %d values", threshold, sample.size)
    return NullCalibration(nulls, percentile, threshold, int(sample.size))


def flag_anomalies(series: AnomalySeries, calibration) -> AnomalySeries:
    """Flag hours whose index strictly exceeds the calibrated threshold.

    ``calibration`` may be a :class:`NullCalibration` or a bare threshold.
    """
    threshold = float(getattr(calibration, "threshold", calibration))
    with np.errstate(invalid="ignore"):
        flags = np.where(np.isnan(series.values), False, series.values > threshold)
    return replace(series, threshold=threshold, flags=flags)
