"""The six component-agnostic metrics, binned over a time window.

Definitions, per bin B = [a, b):

  ReqInRate       arrivals: Request In tasks at the component with start in B,
                  divided by |B| (events/second)
  ReqCompleteRate completions: Request In tasks with end in B, / |B|
  AvgReqLatency   mean (end-start) of Request In tasks with end in B; NaN
                  when no request completes in B (a gap, not zero)
  ConcurrentTasks time-averaged count of all tasks in flight at the component
  BufferPressure  time-averaged count of in-flight Request In tasks
  PendingReqOut   time-averaged count of in-flight Request Out tasks

The time-averaged count of a set of [start, end) intervals over [a, b) is
sum(|[start,end) n [a,b)|) / (b-a); zero-duration intervals contribute 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import BadRangeError
from .store import KIND_REQ_IN, KIND_REQ_OUT


class MetricKind(Enum):
    REQ_IN_RATE = "ReqInRate"
    REQ_COMPLETE_RATE = "ReqCompleteRate"
    AVG_REQ_LATENCY = "AvgReqLatency"
    CONCURRENT_TASKS = "ConcurrentTasks"
    BUFFER_PRESSURE = "BufferPressure"
    PENDING_REQ_OUT = "PendingReqOut"

    @classmethod
    def parse(cls, name: str) -> "MetricKind":
        for m in cls:
            if m.value == name:
                return m
        raise BadRangeError(f"unknown metric {name!r}; one of {[m.value for m in cls]}")


OCCUPANCY_METRICS = (
    MetricKind.CONCURRENT_TASKS,
    MetricKind.BUFFER_PRESSURE,
    MetricKind.PENDING_REQ_OUT,
)


@dataclass(frozen=True)
class MetricSeries:
    component: str
    metric: MetricKind
    t0: float
    t1: float
    bins: int
    values: list  # floats, NaN where undefined

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "metric": self.metric.value,
            "t0": self.t0,
            "t1": self.t1,
            "bins": self.bins,
            # JSON has no NaN; gaps go out as null
            "values": [None if v != v else v for v in self.values],
        }


def time_average_count(intervals: Iterable[tuple], a: float, b: float) -> float:
    """Time-averaged number of [start, end) intervals alive over [a, b)."""
    if not a < b:
        raise BadRangeError(f"bad bin [{a!r}, {b!r})")
    total = 0.0
    for start, end in intervals:
        total += max(0.0, min(end, b) - max(start, a))
    return total / (b - a)


def compute_series(
    store,
    component: str,
    metric: MetricKind,
    t0: float,
    t1: float,
    bins: int,
) -> MetricSeries:
    """One metric for one component, binned over [t0, t1).

    An unknown component yields an all-zero (or all-NaN, for latency)
    series rather than an error, so overview pages render uniformly.
    """
    if not t0 < t1:
        raise BadRangeError(f"t0 {t0!r} must precede t1 {t1!r}")
    if bins < 1:
        raise BadRangeError(f"bins must be >= 1, got {bins}")
    if not isinstance(metric, MetricKind):
        metric = MetricKind.parse(metric)

    cols = store.location_columns(component)
    if cols is None:
        empty = np.full(bins, np.nan) if metric is MetricKind.AVG_REQ_LATENCY else np.zeros(bins)
        return MetricSeries(component, metric, t0, t1, bins, empty.tolist())
    starts, ends, kinds = cols
    width = (t1 - t0) / bins

    if metric is MetricKind.REQ_IN_RATE:
        values = _bin_counts(starts[kinds == KIND_REQ_IN], t0, t1, bins) / width
    elif metric is MetricKind.REQ_COMPLETE_RATE:
        values = _bin_counts(ends[kinds == KIND_REQ_IN], t0, t1, bins) / width
    elif metric is MetricKind.AVG_REQ_LATENCY:
        sel = kinds == KIND_REQ_IN
        s, e = starts[sel], ends[sel]
        idx, mask = _bin_of(e, t0, t1, bins)
        counts = np.bincount(idx[mask], minlength=bins).astype(np.float64)
        sums = np.bincount(idx[mask], weights=(e - s)[mask], minlength=bins)
        with np.errstate(invalid="ignore"):
            values = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    else:
        if metric is MetricKind.CONCURRENT_TASKS:
            s, e = starts, ends
        elif metric is MetricKind.BUFFER_PRESSURE:
            sel = kinds == KIND_REQ_IN
            s, e = starts[sel], ends[sel]
        else:
            sel = kinds == KIND_REQ_OUT
            s, e = starts[sel], ends[sel]
        values = _occupancy(s, e, t0, t1, bins)

    return MetricSeries(component, metric, t0, t1, bins, values.tolist())


def compute_all(store, component: str, t0: float, t1: float, bins: int) -> dict:
    return {m: compute_series(store, component, m, t0, t1, bins) for m in MetricKind}


def _bin_of(times: np.ndarray, t0: float, t1: float, bins: int):
    width = (t1 - t0) / bins
    mask = (times >= t0) & (times < t1)
    idx = np.zeros(times.shape, dtype=np.int64)
    idx[mask] = np.minimum(((times[mask] - t0) / width).astype(np.int64), bins - 1)
    return idx, mask


def _bin_counts(times: np.ndarray, t0: float, t1: float, bins: int) -> np.ndarray:
    idx, mask = _bin_of(times, t0, t1, bins)
    return np.bincount(idx[mask], minlength=bins).astype(np.float64)


def _occupancy(s: np.ndarray, e: np.ndarray, t0: float, t1: float, bins: int) -> np.ndarray:
    """Exact interval arithmetic per bin, vectorized over tasks."""
    width = (t1 - t0) / bins
    out = np.zeros(bins, dtype=np.float64)
    if s.size == 0:
        return out
    # only intervals that can touch the window
    live = (s < t1) & (e > t0)
    s, e = s[live], e[live]
    if s.size == 0:
        return out
    for k in range(bins):
        a = t0 + k * width
        b = t1 if k == bins - 1 else t0 + (k + 1) * width
        overlap = np.minimum(e, b) - np.maximum(s, a)
        np.clip(overlap, 0.0, None, out=overlap)
        out[k] = overlap.sum() / (b - a)
    return out


# --- anticipated values -------------------------------------------------------

@dataclass(frozen=True)
class Expectation:
    pattern: str
    value: float


class ExpectationTable:
    """User-supplied anticipated metric values, matched by regex.

    Hints are free text such as "GPU1.CU01.SIMD2" or
    "GPU1.L1_00 BufferPressure"; the first entry whose pattern matches
    (unanchored) wins.
    """

    def __init__(self, entries: Iterable[Expectation] = ()):
        self.entries = list(entries)
        self._compiled = [(re.compile(e.pattern), e.value) for e in self.entries]

    def peak_reference(self, component_kind_hint: str) -> Optional[float]:
        for rx, value in self._compiled:
            if rx.search(component_kind_hint):
                return value
        return None

    @classmethod
    def from_toml(cls, path) -> "ExpectationTable":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        entries = [
            Expectation(pattern=str(row["pattern"]), value=float(row["value"]))
            for row in data.get("expectation", [])
        ]
        return cls(entries)


def peak_reference(table: Optional[ExpectationTable], component_kind_hint: str) -> Optional[float]:
    if table is None:
        return None
    return table.peak_reference(component_kind_hint)
