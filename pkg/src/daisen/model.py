"""Task record schema, task-tree / request-pairing semantics, and validation.

A trace is a set of tasks. Each task is one piece of hardware work with a
single location, a half-open time interval [start, end), and an optional
parent forming a tree. Component-to-component communication is a pair of
tasks: a "Request Out" at the requester and a child "Request In" at the
receiver, the child contained in the parent's interval.

The canonical on-disk form is "daisen-jsonl v1": UTF-8, one JSON object per
line with keys {id, parent_id, kind, what, where, start, end, detail},
where kind/what/where carry category/action/location. That key mapping is
the fixed dialect of the format.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional

FORMAT_VERSION = "daisen-jsonl/1"

_JSONL_KEYS = ("id", "parent_id", "kind", "what", "where", "start", "end", "detail")
_ID_RE = re.compile(r"^[A-Za-z0-9]{6,}$")


class TaskKind(Enum):
    REQUEST_IN = "RequestIn"
    REQUEST_OUT = "RequestOut"
    OTHER = "Other"


def classify_kind(category: str) -> TaskKind:
    """Classify a category string; matching is exact and case-sensitive."""
    if category == "Request In":
        return TaskKind.REQUEST_IN
    if category == "Request Out":
        return TaskKind.REQUEST_OUT
    return TaskKind.OTHER


@dataclass(frozen=True, slots=True)
class Task:
    id: str
    parent_id: Optional[str]
    category: str
    action: str
    location: str
    start: float
    end: Optional[float]  # None while the task is still open
    details: dict = field(default_factory=dict)

    @property
    def kind(self) -> TaskKind:
        return classify_kind(self.category)

    @property
    def duration(self) -> float:
        return (self.end - self.start) if self.end is not None else 0.0

    def closed(self, end: float) -> "Task":
        return replace(self, end=end)

    def key(self):
        """Hashable content tuple, for multiset comparisons in tests/tools."""
        return (
            self.id,
            self.parent_id,
            self.category,
            self.action,
            self.location,
            self.start,
            self.end,
            tuple(sorted(self.details.items())),
        )


@dataclass(frozen=True)
class Finding:
    task_id: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def extend(self, other: "ValidationReport") -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)

    def sort(self) -> "ValidationReport":
        key = lambda f: (f.task_id, f.rule, f.message)
        self.errors.sort(key=key)
        self.warnings.sort(key=key)
        return self

    def summary(self) -> str:
        return f"{len(self.errors)} errors, {len(self.warnings)} warnings"


def validate_task(task: Task, strict: bool = True) -> ValidationReport:
    """Per-record checks. Validation reports, it never raises."""
    rep = ValidationReport()
    err = lambda rule, msg: rep.errors.append(Finding(task.id, rule, msg))
    warn = lambda rule, msg: rep.warnings.append(Finding(task.id, rule, msg))

    if not task.id:
        err("E_NO_ID", "task has an empty id")
    elif not _ID_RE.match(task.id):
        warn("W_ID_FORMAT", "id is not 6+ characters of [A-Za-z0-9]")
    if not task.location:
        err("E_NO_LOCATION", "task has no location; every task needs exactly one")
    if task.end is not None and task.end < task.start:
        err("E_TIME_ORDER", f"end {task.end!r} precedes start {task.start!r}")
    if task.start < 0:
        err("E_TIME_ORDER", f"negative start time {task.start!r}")
    if task.end is None:
        (err if strict else warn)("E_OPEN_TASK", "task was never ended")
    for name, empty_rule in (("category", "E_NO_CATEGORY"), ("action", "E_NO_ACTION")):
        if not getattr(task, name):
            (err if strict else warn)(empty_rule, f"empty {name}")
    return rep


def validate_trace(tasks: Iterable[Task], strict: bool = True) -> ValidationReport:
    """Whole-trace checks: id uniqueness, tree shape, request pairing.

    Deterministic and order-independent: permuting the input yields the
    same findings. Needs the whole trace in memory (id -> task map).
    """
    tasks = list(tasks)
    rep = ValidationReport()
    for t in tasks:
        rep.extend(validate_task(t, strict))

    by_id: dict[str, Task] = {}
    dup_ids: dict[str, int] = {}
    for t in tasks:
        if t.id in by_id:
            dup_ids[t.id] = dup_ids.get(t.id, 1) + 1
            # keep a canonical representative so downstream findings do not
            # depend on input order
            if t.key() < by_id[t.id].key():
                by_id[t.id] = t
        else:
            by_id[t.id] = t
    for tid, n in dup_ids.items():
        rep.errors.append(Finding(tid, "E_DUP_ID", f"{n} tasks share this id"))

    roots = [t for t in tasks if t.parent_id is None and t.id not in dup_ids]
    roots += [by_id[tid] for tid in dup_ids if by_id[tid].parent_id is None]
    if strict and len(roots) > 1:
        for t in roots:
            rep.errors.append(
                Finding(t.id, "E_MULTI_ROOT", f"{len(roots)} parentless tasks; a strict trace has exactly one root")
            )

    for t in by_id.values():
        if t.parent_id is None:
            continue
        parent = by_id.get(t.parent_id)
        if parent is None:
            finding = Finding(t.id, "E_UNKNOWN_PARENT", f"parent {t.parent_id!r} not in trace")
            (rep.errors if strict else rep.warnings).append(finding)
            continue
        if t.kind is TaskKind.REQUEST_IN:
            if parent.kind is not TaskKind.REQUEST_OUT:
                rep.errors.append(
                    Finding(t.id, "E_PARENT_KIND", f"Request In under {parent.category!r}; parent must be a Request Out")
                )
            else:
                if t.location == parent.location:
                    rep.errors.append(
                        Finding(t.id, "E_SAME_LOCATION", f"Request In at {t.location!r}, same as its Request Out; communication must cross components")
                    )
                contained = parent.start <= t.start and (
                    t.end is None or parent.end is None or t.end <= parent.end
                )
                if not contained:
                    finding = Finding(t.id, "E_NOT_CONTAINED", "Request In interval not inside its Request Out")
                    (rep.errors if strict else rep.warnings).append(finding)

    for tid in _cycle_members(by_id):
        rep.errors.append(Finding(tid, "E_CYCLE", "task is part of a parent-chain cycle"))

    return rep.sort()


def _cycle_members(by_id: dict[str, Task]) -> list[str]:
    DONE, ACTIVE = 1, 2
    state: dict[str, int] = {}
    members: set[str] = set()
    for start_id in by_id:
        if state.get(start_id):
            continue
        path: list[str] = []
        cur: Optional[str] = start_id
        while cur is not None and cur in by_id and not state.get(cur):
            state[cur] = ACTIVE
            path.append(cur)
            cur = by_id[cur].parent_id
        if cur is not None and state.get(cur) == ACTIVE:
            members.update(path[path.index(cur):])
        for tid in path:
            state[tid] = DONE
    return sorted(members)


# --- daisen-jsonl v1 ---------------------------------------------------------

def task_to_json(task: Task) -> dict:
    obj: dict = {"id": task.id}
    if task.parent_id is not None:
        obj["parent_id"] = task.parent_id
    obj["kind"] = task.category
    obj["what"] = task.action
    obj["where"] = task.location
    obj["start"] = task.start
    obj["end"] = task.end
    if task.details:
        obj["detail"] = task.details
    return obj


def format_record(task: Task) -> str:
    """One jsonl line, deterministic key order and float formatting."""
    return json.dumps(task_to_json(task), ensure_ascii=False, separators=(",", ":"))


def task_from_json(obj: dict, on_warning: Optional[Callable[[str], None]] = None) -> Task:
    warn = on_warning or (lambda msg: None)
    unknown = [k for k in obj if k not in _JSONL_KEYS]
    if unknown:
        warn(f"ignoring unknown keys {unknown}")

    raw_id = obj.get("id")
    if not isinstance(raw_id, str):
        raise ValueError("record has no text 'id'")
    start = obj.get("start")
    if not isinstance(start, (int, float)) or isinstance(start, bool):
        raise ValueError(f"record {raw_id!r} has no numeric 'start'")
    end = obj.get("end")
    if end == "open" or end is None:
        if "end" not in obj or end == "open":
            warn(f"record {raw_id!r} has no end time; treated as open")
        end_val = None
    elif isinstance(end, (int, float)) and not isinstance(end, bool):
        end_val = float(end)
    else:
        raise ValueError(f"record {raw_id!r} has a non-numeric 'end'")

    details = {}
    raw_detail = obj.get("detail")
    if raw_detail is not None:
        if not isinstance(raw_detail, dict):
            raise ValueError(f"record {raw_id!r} 'detail' is not an object")
        for k, v in raw_detail.items():
            if isinstance(v, str):
                details[k] = v
            else:
                warn(f"record {raw_id!r} detail {k!r} is not text; stringified")
                details[k] = json.dumps(v, ensure_ascii=False, separators=(",", ":"))

    parent = obj.get("parent_id")
    if parent is not None and not isinstance(parent, str):
        raise ValueError(f"record {raw_id!r} has a non-text 'parent_id'")

    return Task(
        id=raw_id,
        parent_id=parent,
        category=sys.intern(str(obj.get("kind", ""))),
        action=sys.intern(str(obj.get("what", ""))),
        location=sys.intern(str(obj.get("where", ""))),
        start=float(start),
        end=end_val,
        details=details,
    )


def read_jsonl(source, on_warning: Optional[Callable[[str], None]] = None) -> Iterator[Task]:
    """Stream tasks from a daisen-jsonl v1 file path or line iterable."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            yield from read_jsonl(fh, on_warning)
        return
    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ValueError(f"line {lineno}: record is not a JSON object")
        try:
            yield task_from_json(obj, on_warning)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc


def write_jsonl(tasks: Iterable[Task], path, include_open: bool = False) -> int:
    """Write tasks to a daisen-jsonl v1 file; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for t in tasks:
            if t.end is None and not include_open:
                raise ValueError(f"task {t.id!r} is still open; only completed tasks are records")
            fh.write(format_record(t))
            fh.write("\n")
            n += 1
    return n
