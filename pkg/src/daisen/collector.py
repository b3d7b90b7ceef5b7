"""Instrumentation API for simulators: seven calls, buffered writing.

A session exposes two task calls (begin_task / end_task), four request
calls (initiate_request / receive_request / complete_request /
receive_response) and flush. Completed records are queued and drained by a
single background writer in batches; the queue is bounded and blocks when
full, so no record is ever dropped silently. Only completed tasks become
records; open tasks die with the session.

Sinks: a daisen-jsonl file path (append-only), a live store target created
with store_sink(), or any object with write_batch()/flush(). With no sink
configured, the DAISEN_TRACE_PATH environment variable names the default
file sink.
"""

from __future__ import annotations

import os
import queue
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import (
    ChildOpenError,
    ConfigError,
    SameLocationError,
    SessionClosedError,
    StoreIOError,
    TimeOrderError,
    UnknownIdError,
)
from .model import Task, TaskKind, classify_kind, format_record

ENV_TRACE_PATH = "DAISEN_TRACE_PATH"
DEFAULT_BATCH = 4096
DEFAULT_QUEUE_CAPACITY = 65536

_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"


class TokenSource:
    """Deterministic unique id tokens: 6+ chars of [A-Za-z0-9].

    A seeded affine walk over the 62^length token space; distinct counters
    map to distinct tokens, so uniqueness holds without remembering every
    issued id.
    """

    _MULT = 1103515245  # odd, not divisible by 31 -> coprime with 62^k

    def __init__(self, seed: Optional[int] = None, length: int = 6):
        if length < 6:
            raise ValueError("ids must be at least 6 characters")
        self._space = len(_ALPHABET) ** length
        self._length = length
        if seed is None:
            seed = random.SystemRandom().randrange(self._space)
        self._offset = (seed * 2654435761 + 0x9E3779B9) % self._space
        self._counter = 0

    def __call__(self) -> str:
        if self._counter >= self._space:
            raise RuntimeError("token space exhausted")
        value = (self._offset + self._counter * self._MULT) % self._space
        self._counter += 1
        chars = []
        for _ in range(self._length):
            value, digit = divmod(value, 62)
            chars.append(_ALPHABET[digit])
        return "".join(reversed(chars))


@dataclass
class WriteStats:
    records_written: int
    dropped: int = 0


@dataclass
class _OpenTask:
    id: str
    parent_id: Optional[str]
    category: str
    action: str
    location: str
    start: float
    details: dict = field(default_factory=dict)


class FileSink:
    def __init__(self, path):
        self.path = str(path)
        try:
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StoreIOError(f"cannot open sink {self.path}: {exc}") from None

    def write_batch(self, records: Iterable[Task]) -> None:
        try:
            for rec in records:
                self._fh.write(format_record(rec))
                self._fh.write("\n")
        except OSError as exc:
            raise StoreIOError(f"cannot write {self.path}: {exc}") from None

    def flush(self) -> None:
        if self._fh.closed:
            return
        try:
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StoreIOError(f"cannot flush {self.path}: {exc}") from None

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


class ListSink:
    """In-memory sink for tests and replay."""

    def __init__(self):
        self.records: list = []

    def write_batch(self, records):
        self.records.extend(records)

    def flush(self):
        pass

    def close(self):
        pass


class StoreSink:
    """Stages records to a temp log, commits an indexed store on close."""

    def __init__(self, path, mode: str = "strict"):
        self.path = str(path)
        self.mode = mode
        self._staging = self.path + ".staging"
        self._file = FileSink(self._staging)
        self.store = None

    def write_batch(self, records):
        self._file.write_batch(records)

    def flush(self):
        self._file.flush()

    def close(self):
        from .model import read_jsonl
        from .store import TraceStore

        self._file.close()
        try:
            self.store = TraceStore.ingest(
                read_jsonl(self._staging), mode=self.mode, path=self.path
            )
        finally:
            if os.path.exists(self._staging):
                os.unlink(self._staging)


def store_sink(path, mode: str = "strict") -> StoreSink:
    return StoreSink(path, mode)


class CollectorSession:
    """One recording session. Safe to call from multiple threads."""

    def __init__(
        self,
        sink=None,
        *,
        seed: Optional[int] = None,
        id_source: Optional[Callable[[], str]] = None,
        strict: bool = True,
        batch_size: int = DEFAULT_BATCH,
        queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
    ):
        if sink is None:
            path = os.environ.get(ENV_TRACE_PATH)
            if not path:
                raise ConfigError(
                    f"no sink configured and {ENV_TRACE_PATH} is not set"
                )
            sink = path
        if isinstance(sink, (str, os.PathLike)):
            sink = FileSink(sink)
        self.sink = sink
        self.strict = strict
        self._id_source = id_source if id_source is not None else TokenSource(seed)
        self._lock = threading.Lock()
        self._open: dict = {}
        self._issued: set = set()
        # per open Request Out: still-open child Request Ins / latest child end
        self._open_children: dict = {}
        self._child_max_end: dict = {}
        self._closed = False

        self._queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self._batch_size = batch_size
        self._enqueued = 0
        self._written = 0
        self._flush_mark = 0
        self._writer_error: Optional[BaseException] = None
        self._written_cond = threading.Condition()
        self._writer = threading.Thread(target=self._drain, name="daisen-writer", daemon=True)
        self._writer.start()

    # --- background writer ---------------------------------------------------

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            batch = [item]
            while len(batch) < self._batch_size:
                try:
                    nxt = self._queue.get_nowait()
                except queue.Empty:
                    break
                if nxt is None:
                    self._write(batch)
                    return
                batch.append(nxt)
            self._write(batch)

    def _write(self, batch: list) -> None:
        try:
            self.sink.write_batch(batch)
        except BaseException as exc:  # surfaced on the next flush/close
            self._writer_error = exc
        with self._written_cond:
            self._written += len(batch)
            self._written_cond.notify_all()

    def _enqueue(self, record: Task) -> None:
        self._queue.put(record)  # blocks when full; records are never dropped
        with self._written_cond:
            self._enqueued += 1

    # --- the seven collection calls -------------------------------------------

    def begin_task(
        self,
        parent_id: Optional[str],
        category: str,
        action: str,
        location: str,
        time: float,
        details: Optional[dict] = None,
    ) -> str:
        """Open a task; returns its fresh id."""
        if time < 0:
            raise TimeOrderError(f"negative start time {time!r}")
        with self._lock:
            self._check_open_session()
            tid = self._fresh_id()
            self._open[tid] = _OpenTask(
                tid, parent_id, category, action, location, time, dict(details or {})
            )
            if classify_kind(category) is TaskKind.REQUEST_OUT:
                self._open_children[tid] = set()
                self._child_max_end[tid] = None
        return tid

    def end_task(self, task_id: str, time: float) -> None:
        """Complete an open task; the record is queued for writing."""
        with self._lock:
            self._check_open_session()
            record = self._complete(task_id, time)
        self._enqueue(record)

    def initiate_request(
        self,
        parent_id: Optional[str],
        action: str,
        source_location: str,
        time: float,
        details: Optional[dict] = None,
    ) -> str:
        """Open a Request Out at the requesting component."""
        return self.begin_task(parent_id, "Request Out", action, source_location, time, details)

    def receive_request(self, request_out_id: str, dest_location: str, time: float) -> str:
        """Open the paired Request In at the receiving component."""
        with self._lock:
            self._check_open_session()
            ro = self._open.get(request_out_id)
            if ro is None or classify_kind(ro.category) is not TaskKind.REQUEST_OUT:
                raise UnknownIdError(f"no open Request Out {request_out_id!r}")
            if dest_location == ro.location:
                raise SameLocationError(
                    f"request received at {dest_location!r}, where it was sent from"
                )
            if time < ro.start:
                raise TimeOrderError(
                    f"received at {time!r}, before the request was sent at {ro.start!r}"
                )
            tid = self._fresh_id()
            self._open[tid] = _OpenTask(
                tid, request_out_id, "Request In", ro.action, dest_location, time
            )
            self._open_children[request_out_id].add(tid)
        return tid

    def complete_request(self, request_in_id: str, time: float) -> None:
        """Complete a Request In (the component sends its response)."""
        with self._lock:
            self._check_open_session()
            ri = self._open.get(request_in_id)
            if ri is None or classify_kind(ri.category) is not TaskKind.REQUEST_IN:
                raise UnknownIdError(f"no open Request In {request_in_id!r}")
            record = self._complete(request_in_id, time)
        self._enqueue(record)

    def receive_response(self, request_out_id: str, time: float) -> None:
        """Complete a Request Out (the requester got its response)."""
        with self._lock:
            self._check_open_session()
            ro = self._open.get(request_out_id)
            if ro is None or classify_kind(ro.category) is not TaskKind.REQUEST_OUT:
                raise UnknownIdError(f"no open Request Out {request_out_id!r}")
            if self.strict:
                still_open = self._open_children.get(request_out_id)
                if still_open:
                    raise ChildOpenError(
                        f"Request Out {request_out_id!r} has open Request In children: {sorted(still_open)}"
                    )
                latest = self._child_max_end.get(request_out_id)
                if latest is not None and time < latest:
                    raise TimeOrderError(
                        f"response at {time!r} precedes a child Request In end at {latest!r}"
                    )
            record = self._complete(request_out_id, time)
        self._enqueue(record)

    def flush(self) -> WriteStats:
        """Drain the buffer to the sink; durable on return, idempotent.

        Reports the records made durable since the previous flush. Open
        tasks are untouched: only completed tasks are records.
        """
        with self._written_cond:
            target = self._enqueued
            self._written_cond.wait_for(lambda: self._written >= target)
        if self._writer_error is not None:
            exc, self._writer_error = self._writer_error, None
            raise StoreIOError(f"background writer failed: {exc}")
        self.sink.flush()
        with self._written_cond:
            stats = WriteStats(records_written=self._written - self._flush_mark)
            self._flush_mark = self._written
        return stats

    # --- lifecycle ------------------------------------------------------------

    def close(self) -> WriteStats:
        with self._lock:
            if self._closed:
                return WriteStats(0)
            stats = self.flush()
            self._closed = True
        self._queue.put(None)
        self._writer.join()
        self.sink.close()
        return stats

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False

    @property
    def open_task_count(self) -> int:
        return len(self._open)

    # --- internals --------------------------------------------------------------

    def _check_open_session(self) -> None:
        if self._closed:
            raise SessionClosedError("session is closed")

    def _fresh_id(self) -> str:
        tid = self._id_source()
        if tid in self._issued:
            raise RuntimeError(f"id source repeated token {tid!r}")
        self._issued.add(tid)
        return tid

    def _complete(self, task_id: str, time: float) -> Task:
        open_task = self._open.get(task_id)
        if open_task is None:
            raise UnknownIdError(f"no open task {task_id!r}")
        if time < open_task.start:
            raise TimeOrderError(
                f"end {time!r} precedes start {open_task.start!r} for task {task_id!r}"
            )
        del self._open[task_id]
        if classify_kind(open_task.category) is TaskKind.REQUEST_IN:
            parent = open_task.parent_id
            if parent in self._open_children:
                self._open_children[parent].discard(task_id)
                prev = self._child_max_end.get(parent)
                if prev is None or time > prev:
                    self._child_max_end[parent] = time
        self._open_children.pop(task_id, None)
        self._child_max_end.pop(task_id, None)
        return Task(
            id=open_task.id,
            parent_id=open_task.parent_id,
            category=open_task.category,
            action=open_task.action,
            location=open_task.location,
            start=open_task.start,
            end=time,
            details=open_task.details,
        )


def replay_trace(tasks: Iterable[Task], sink, strict: bool = True) -> WriteStats:
    """Re-drive a completed trace through a fresh session.

    Events are ordered by time (begins before ends at equal times, parents
    before children among begins, children before parents among ends), and
    the session's id source replays the original ids, so a strict-valid
    trace reproduces its exact record set.
    """
    tasks = list(tasks)
    by_id = {t.id: t for t in tasks}

    def depth(t: Task) -> int:
        d, cur, seen = 0, t, {t.id}
        while cur.parent_id is not None and cur.parent_id in by_id:
            cur = by_id[cur.parent_id]
            if cur.id in seen:
                break
            seen.add(cur.id)
            d += 1
        return d

    events = []
    for t in tasks:
        if t.end is None:
            raise ValueError(f"task {t.id!r} is open; replay needs a completed trace")
        d = depth(t)
        events.append((t.start, 0, d, t.id))
        events.append((t.end, 1, -d, t.id))
    events.sort()

    begin_order = [e[3] for e in events if e[1] == 0]
    ids = iter(begin_order)
    session = CollectorSession(sink, id_source=lambda: next(ids), strict=strict)
    try:
        for _, phase, _, tid in events:
            t = by_id[tid]
            parent = by_id.get(t.parent_id) if t.parent_id is not None else None
            as_quartet_in = (
                t.kind is TaskKind.REQUEST_IN
                and parent is not None
                and parent.kind is TaskKind.REQUEST_OUT
                and parent.action == t.action
                and parent.location != t.location
                and not t.details
            )
            if phase == 0:
                if t.kind is TaskKind.REQUEST_OUT and not t.details:
                    session.initiate_request(t.parent_id, t.action, t.location, t.start)
                elif as_quartet_in:
                    session.receive_request(t.parent_id, t.location, t.start)
                else:
                    session.begin_task(
                        t.parent_id, t.category, t.action, t.location, t.start, t.details
                    )
            else:
                if t.kind is TaskKind.REQUEST_OUT and not t.details:
                    session.receive_response(t.id, t.end)
                elif as_quartet_in:
                    session.complete_request(t.id, t.end)
                else:
                    session.end_task(t.id, t.end)
        return session.flush()
    finally:
        session.close()
