"""Persistent, indexed storage for a trace corpus.

A store is a file pair: ``<name>.dtrace`` (the daisen-jsonl v1 record log)
and ``<name>.dtidx`` (a small, versioned sidecar with the corpus summary,
regenerated whenever it is missing or stale). All query structures live in
memory, built from the log at open: columnar arrays per field, a per
-location bucket index over [start, end) intervals, an id map, and a
parent -> children map.

Publishing is atomic (write to a temp file, then rename), so readers never
observe a partially ingested corpus. Records are immutable after ingest.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import (
    BadRangeError,
    BadRegexError,
    CycleError,
    StoreIOError,
    UnknownIdError,
    ValidationError,
)
from .layout import ColorKeyMap, color_key_from_pairs
from .model import (
    FORMAT_VERSION,
    Task,
    TaskKind,
    classify_kind,
    format_record,
    read_jsonl,
    validate_trace,
)

SIDE_CAR_FORMAT = "dtidx/1"
BUCKET_COUNT_TARGET = 4096
MIN_BUCKET_WIDTH = 1e-9

_KIND_CODE = {TaskKind.OTHER: 0, TaskKind.REQUEST_IN: 1, TaskKind.REQUEST_OUT: 2}
KIND_OTHER, KIND_REQ_IN, KIND_REQ_OUT = 0, 1, 2

_NAT_SPLIT = re.compile(r"(\d+)")


def natural_key(name: str):
    """Numeric-aware ordering key: CU2 sorts before CU10."""
    key = []
    for i, part in enumerate(_NAT_SPLIT.split(name)):
        if i % 2:
            key.append((0, int(part), ""))
        elif part:
            key.append((1, 0, part))
    key.append((2, 0, name))
    return tuple(key)


@dataclass(frozen=True)
class TraceMeta:
    task_count: int
    time_min: float
    time_max: float
    component_count: int
    format_version: str = FORMAT_VERSION

    def to_json(self) -> dict:
        return {
            "task_count": self.task_count,
            "time_min": self.time_min,
            "time_max": self.time_max,
            "component_count": self.component_count,
            "format_version": self.format_version,
        }


@dataclass(frozen=True)
class ComponentInfo:
    name: str
    task_count: int
    first_start: float
    last_end: float

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "task_count": self.task_count,
            "first_start": self.first_start,
            "last_end": self.last_end,
        }


def sidecar_path(log_path: str) -> str:
    base, ext = os.path.splitext(str(log_path))
    return base + ".dtidx" if ext == ".dtrace" else str(log_path) + ".dtidx"


class TraceStore:
    """Immutable, queryable trace corpus. Create via ingest() or open()."""

    def __init__(self, tasks: list, path: Optional[str] = None):
        self.path = str(path) if path is not None else None
        self.validation_report = None
        self._build(tasks)
        self._color_key_cache: dict = {}

    # --- construction -------------------------------------------------------

    @classmethod
    def ingest(
        cls,
        records: Iterable[Task],
        mode: str = "strict",
        path: Optional[str] = None,
    ) -> "TraceStore":
        """Validate, index and (optionally) persist a record stream.

        Strict mode aborts with E_VALIDATION if the trace has any errors;
        lenient mode keeps going so partially corrupt traces stay
        explorable.
        """
        if mode not in ("strict", "lenient"):
            raise ValueError(f"unknown ingest mode {mode!r}")
        tasks = list(records)
        report = validate_trace(tasks, strict=(mode == "strict"))
        if mode == "strict" and not report.ok:
            raise ValidationError(report)
        store = cls(tasks, path=path)
        store.validation_report = report
        if path is not None:
            store._persist(tasks)
        return store

    @classmethod
    def open(cls, path: str) -> "TraceStore":
        """Open an existing store; rebuilds the sidecar if missing/stale."""
        if not os.path.exists(path):
            raise StoreIOError(f"no such store: {path}")
        try:
            tasks = list(read_jsonl(path))
        except (OSError, ValueError) as exc:
            raise StoreIOError(f"cannot read {path}: {exc}") from None
        store = cls(tasks, path=path)
        if not store._sidecar_fresh():
            store._write_sidecar()
        return store

    def _persist(self, tasks: list) -> None:
        tmp = self.path + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                for t in tasks:
                    fh.write(format_record(t))
                    fh.write("\n")
            os.replace(tmp, self.path)
        except OSError as exc:
            raise StoreIOError(f"cannot write {self.path}: {exc}") from None
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        self._write_sidecar()

    def _sidecar_payload(self) -> dict:
        return {
            "format": SIDE_CAR_FORMAT,
            "log_bytes": os.path.getsize(self.path) if self.path else 0,
            "meta": self.meta.to_json(),
            "bucket_width": self._bucket_width,
            "components": [c.to_json() for c in self.components],
        }

    def _write_sidecar(self) -> None:
        if self.path is None:
            return
        sc = sidecar_path(self.path)
        tmp = sc + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(self._sidecar_payload(), fh, indent=1)
            os.replace(tmp, sc)
        except OSError as exc:
            raise StoreIOError(f"cannot write {sc}: {exc}") from None

    def _sidecar_fresh(self) -> bool:
        if self.path is None:
            return True
        sc = sidecar_path(self.path)
        if not os.path.exists(sc):
            return False
        try:
            with open(sc, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, ValueError):
            return False
        return (
            payload.get("format") == SIDE_CAR_FORMAT
            and payload.get("log_bytes") == os.path.getsize(self.path)
            and payload.get("meta", {}).get("task_count") == len(self._ids)
        )

    # --- index build ----------------------------------------------------------

    def _build(self, tasks: list) -> None:
        n = len(tasks)
        self._ids = [t.id for t in tasks]
        self._cats = [t.category for t in tasks]
        self._acts = [t.action for t in tasks]
        self._locs = [t.location for t in tasks]
        self._details = [t.details for t in tasks]
        self._starts = np.fromiter((t.start for t in tasks), dtype=np.float64, count=n)
        self._open = np.fromiter((t.end is None for t in tasks), dtype=bool, count=n)
        self._ends = np.fromiter(
            (t.start if t.end is None else t.end for t in tasks), dtype=np.float64, count=n
        )
        self._kinds = np.fromiter(
            (_KIND_CODE[classify_kind(c)] for c in self._cats), dtype=np.uint8, count=n
        )

        self._id_index: dict = {}
        for i, tid in enumerate(self._ids):
            self._id_index.setdefault(tid, i)
        # reuse id string objects for parents so duplicates share storage
        self._parents = []
        for t in tasks:
            p = t.parent_id
            if p is not None:
                j = self._id_index.get(p)
                if j is not None:
                    p = self._ids[j]
            self._parents.append(p)

        order_by_id = sorted(range(n), key=self._ids.__getitem__)
        self._id_rank = np.empty(n, dtype=np.int64)
        self._id_rank[order_by_id] = np.arange(n, dtype=np.int64)

        # children map, CSR over rows sorted by (parent_row, start, id)
        parent_rows = np.fromiter(
            (-1 if p is None else self._id_index.get(p, -1) for p in self._parents),
            dtype=np.int64,
            count=n,
        )
        corder = np.lexsort((self._id_rank, self._starts, parent_rows))
        self._child_order = corder
        self._child_parent_sorted = parent_rows[corder]

        # per-location rows sorted by (start, id)
        self._loc_rows: dict = {}
        loc_names = sorted(set(self._locs))
        loc_code_of = {name: i for i, name in enumerate(loc_names)}
        loc_codes = np.fromiter((loc_code_of[l] for l in self._locs), dtype=np.int64, count=n)
        lorder = np.lexsort((self._id_rank, self._starts, loc_codes))
        bounds = np.searchsorted(loc_codes[lorder], np.arange(len(loc_names) + 1))
        for i, name in enumerate(loc_names):
            self._loc_rows[name] = lorder[bounds[i] : bounds[i + 1]]

        # corpus extent and interval buckets
        if n:
            tmin = float(self._starts.min())
            tmax = float(max(self._ends.max(), self._starts.max()))
        else:
            tmin = tmax = 0.0
        self._tmin, self._tmax = tmin, tmax
        self._bucket_width = max((tmax - tmin) / BUCKET_COUNT_TARGET, MIN_BUCKET_WIDTH)
        self._n_buckets = max(1, int(math.ceil((tmax - tmin) / self._bucket_width)) + 2)
        self._bucket_edges = tmin + np.arange(self._n_buckets + 1, dtype=np.float64) * self._bucket_width
        self._buckets: dict = {}
        for name, rows in self._loc_rows.items():
            self._buckets[name] = self._build_buckets(rows)

        self.components = self._build_components(loc_names)
        self.meta = TraceMeta(
            task_count=n,
            time_min=tmin,
            time_max=tmax,
            component_count=len(loc_names),
        )

    def _build_buckets(self, rows: np.ndarray):
        edges = self._bucket_edges
        s = self._starts[rows]
        e = self._ends[rows]
        first = np.searchsorted(edges, s, side="right") - 1
        last = np.searchsorted(edges, e, side="left") - 1
        np.maximum(last, first, out=last)  # zero-duration: bucket of start only
        counts = (last - first + 1).astype(np.int64)
        total = int(counts.sum())
        expanded_rows = np.repeat(rows, counts)
        offsets_within = np.arange(total, dtype=np.int64) - np.repeat(
            np.cumsum(counts) - counts, counts
        )
        expanded_buckets = np.repeat(first, counts) + offsets_within
        order = np.argsort(expanded_buckets, kind="stable")
        per_bucket = np.bincount(expanded_buckets, minlength=self._n_buckets)
        offsets = np.concatenate(([0], np.cumsum(per_bucket)))
        return offsets, expanded_rows[order]

    def _build_components(self, loc_names: list) -> list:
        comps = []
        for name in sorted(loc_names, key=natural_key):
            rows = self._loc_rows[name]
            comps.append(
                ComponentInfo(
                    name=name,
                    task_count=int(rows.size),
                    first_start=float(self._starts[rows].min()),
                    last_end=float(self._ends[rows].max()),
                )
            )
        return comps

    # --- record materialization ----------------------------------------------

    def task(self, row: int) -> Task:
        return Task(
            id=self._ids[row],
            parent_id=self._parents[row],
            category=self._cats[row],
            action=self._acts[row],
            location=self._locs[row],
            start=float(self._starts[row]),
            end=None if self._open[row] else float(self._ends[row]),
            details=self._details[row],
        )

    def __len__(self) -> int:
        return len(self._ids)

    def all_tasks(self) -> list:
        return [self.task(i) for i in range(len(self._ids))]

    # --- queries ---------------------------------------------------------------

    def query_window(self, location: str, t0: float, t1: float) -> list:
        """Tasks at ``location`` whose [start, end) overlaps [t0, t1), in
        (start, id) order. Zero-duration tasks at t count when t0 <= t < t1."""
        if t0 > t1:
            raise BadRangeError(f"t0 {t0!r} > t1 {t1!r}")
        rows = self._candidate_rows(location, t0, t1)
        if rows is None or rows.size == 0:
            return []
        s = self._starts[rows]
        e = self._ends[rows]
        mask = (s < t1) & ((e > t0) | ((e == s) & (s >= t0)))
        rows = rows[mask]
        order = np.lexsort((self._id_rank[rows], self._starts[rows]))
        return [self.task(int(r)) for r in rows[order]]

    def _candidate_rows(self, location: str, t0: float, t1: float):
        bucket = self._buckets.get(location)
        if bucket is None or t1 <= t0:
            return None
        offsets, rows = bucket
        edges = self._bucket_edges
        k0 = int(np.searchsorted(edges, t0, side="right")) - 1
        k1 = int(np.searchsorted(edges, t1, side="left")) - 1
        k0 = max(k0, 0)
        k1 = min(k1, self._n_buckets - 1)
        if k1 < k0:
            return np.empty(0, dtype=np.int64)
        return np.unique(rows[offsets[k0] : offsets[k1 + 1]])

    def get_task(self, task_id: str) -> Task:
        row = self._id_index.get(task_id)
        if row is None:
            raise UnknownIdError(f"no task {task_id!r}")
        return self.task(row)

    def children(self, task_id: str) -> list:
        row = self._id_index.get(task_id)
        if row is None:
            return []
        lo = int(np.searchsorted(self._child_parent_sorted, row, side="left"))
        hi = int(np.searchsorted(self._child_parent_sorted, row, side="right"))
        return [self.task(int(r)) for r in self._child_order[lo:hi]]

    def parent_chain(self, task_id: str) -> list:
        """Path from the task to its root, the task itself first."""
        row = self._id_index.get(task_id)
        if row is None:
            raise UnknownIdError(f"no task {task_id!r}")
        chain = []
        seen = set()
        while row is not None:
            if row in seen:
                raise CycleError(f"parent chain of {task_id!r} cycles")
            seen.add(row)
            chain.append(self.task(row))
            parent = self._parents[row]
            row = self._id_index.get(parent) if parent is not None else None
        return chain

    def list_components(self, pattern: str = "", page: int = 0, page_size: Optional[int] = None):
        """Components whose name matches the regex (unanchored search), in
        natural order, sliced to the requested page. Returns (total, items)."""
        try:
            rx = re.compile(pattern)
        except re.error as exc:
            raise BadRegexError(f"bad filter regex {pattern!r}: {exc}") from None
        matched = [c for c in self.components if rx.search(c.name)]
        total = len(matched)
        if page_size is not None:
            if page_size < 1 or page < 0:
                raise BadRangeError("page must be >= 0 and page_size >= 1")
            matched = matched[page * page_size : (page + 1) * page_size]
        return total, matched

    # --- bulk access for the metrics/layout engines ----------------------------

    def location_columns(self, location: str):
        """(starts, ends, kinds) arrays for one location, (start, id) order."""
        rows = self._loc_rows.get(location)
        if rows is None:
            return None
        return self._starts[rows], self._ends[rows], self._kinds[rows]

    def location_rows(self, location: str):
        return self._loc_rows.get(location)

    def color_key_map(self, max_colors: int = 16) -> ColorKeyMap:
        """Legend keys for the whole trace, fixed at load so zooming never
        recolors bars already on screen."""
        cached = self._color_key_cache.get(max_colors)
        if cached is None:
            pairs = set(zip(self._cats, self._acts))
            cached = color_key_from_pairs(pairs, max_colors=max_colors)
            self._color_key_cache[max_colors] = cached
        return cached
