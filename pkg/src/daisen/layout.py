"""Bar layout for the timeline views: row packing, nesting, colors.

The row packer is the "up-floating" scheme: intervals are processed in
ascending (start, end, id) order and each takes the smallest row index
where it overlaps nothing already placed. Intervals are half-open, so two
bars meeting at a point share a row. First-fit by start time is optimal
for interval graphs: the number of rows equals the maximum overlap depth.

Nested bars: a component's layout roots (tasks whose parent is absent or
lives at another location) occupy level 0; each task's same-location
children are packed recursively inside the parent bar, below a top band
that keeps the parent's own color visible. All bars of one level share the
same height.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import Task

PARENT_TOP_INSET = 0.15  # fraction of a parent bar reserved above its children
DEFAULT_MAX_COLORS = 16
DEFAULT_MIN_PX = 1.0

CUBEHELIX_START = 0.5
CUBEHELIX_ROTATIONS = -1.5
CUBEHELIX_HUE = 1.0
CUBEHELIX_GAMMA = 1.0


@dataclass(frozen=True)
class LayoutBar:
    task_id: str
    level: int
    row: int
    x0: float  # seconds, clipped to the viewport
    x1: float
    y: float  # normalized [0,1] within the owning region, 0 = top
    h: float
    color_key: str


@dataclass(frozen=True)
class ColorKeyMap:
    mode: str  # "CategoryAction" | "CategoryOnly"
    keys: dict  # legend key -> palette index
    palette: list  # [(r, g, b)] 8-bit

    def key_for(self, category: str, action: str) -> str:
        if self.mode == "CategoryOnly":
            return category
        return f"{category}-{action}"

    def color_for(self, key: str):
        idx = self.keys.get(key)
        return self.palette[idx] if idx is not None else None


@dataclass(frozen=True)
class TaskViewLayout:
    parent: list  # 0 or 1 LayoutBar
    current: list
    children: list


def assign_rows(intervals: Iterable[tuple]) -> dict:
    """Pack (id, start, end) intervals into rows; returns id -> row index.

    A row becomes free again the instant its occupant ends (half-open).
    """
    order = sorted(intervals, key=lambda iv: (iv[1], iv[2], iv[0]))
    rows: dict = {}
    active: list = []  # (end, row)
    free: list = []  # row indices
    next_row = 0
    for tid, start, end in order:
        if end == start:
            # a zero-duration interval overlaps nothing, so the top row
            # never conflicts and it occupies no row time
            rows[tid] = 0
            continue
        while active and active[0][0] <= start:
            _, row = heapq.heappop(active)
            heapq.heappush(free, row)
        if free:
            row = heapq.heappop(free)
        else:
            row = next_row
            next_row += 1
        rows[tid] = row
        heapq.heappush(active, (end, row))
    return rows


def layout_component(
    tasks: Sequence[Task],
    viewport: tuple,
    min_px: float = DEFAULT_MIN_PX,
    px_per_second: float = 1.0,
    color_key_map: Optional[ColorKeyMap] = None,
) -> list:
    """Lay out one component's tasks as positioned bars.

    Layout roots are tasks whose parent is not in ``tasks`` or sits at a
    different location. Bars narrower than ``min_px`` at the given pixel
    density are culled after placement, so the surviving bars keep the
    rows they would have on a full render.
    """
    t0, t1 = viewport
    if not t0 < t1:
        from .errors import BadRangeError

        raise BadRangeError(f"bad viewport [{t0}, {t1})")

    visible = [t for t in tasks if _overlaps_window(t, t0, t1)]
    by_id = {t.id: t for t in visible}
    children: dict = {}
    roots: list = []
    for t in visible:
        parent = by_id.get(t.parent_id) if t.parent_id is not None else None
        if parent is None or parent.location != t.location:
            roots.append(t)
        else:
            children.setdefault(parent.id, []).append(t)

    # Breadth-first: row-assign each sibling group, remember per-level max
    # row count, then resolve uniform heights level by level.
    placed: list = []  # (task, level, row, parent_id)
    level_rows: list = []  # max rows used at each level
    frontier = [(None, roots)]
    level = 0
    while frontier:
        rows_this_level = 1
        next_frontier = []
        for parent_id, group in frontier:
            rowmap = assign_rows((t.id, t.start, _end_of(t)) for t in group)
            if rowmap:
                rows_this_level = max(rows_this_level, max(rowmap.values()) + 1)
            for t in group:
                placed.append((t, level, rowmap[t.id], parent_id))
                kids = children.get(t.id)
                if kids:
                    next_frontier.append((t.id, kids))
        level_rows.append(rows_this_level)
        frontier = next_frontier
        level += 1

    heights = []
    for lvl, nrows in enumerate(level_rows):
        if lvl == 0:
            heights.append(1.0 / nrows)
        else:
            heights.append(heights[lvl - 1] * (1.0 - PARENT_TOP_INSET) / nrows)

    y_of: dict = {}
    span_of: dict = {}  # drawable horizontal span; children render inside it
    bars = []
    for t, lvl, row, parent_id in placed:
        h = heights[lvl]
        if parent_id is None:
            y = row * h
            p0, p1 = t0, t1
        else:
            if parent_id not in span_of:
                continue  # parent has no visible span here
            y = y_of[parent_id] + heights[lvl - 1] * PARENT_TOP_INSET + row * h
            p0, p1 = span_of[parent_id]
        x0 = max(t.start, p0)
        x1 = min(_end_of(t), p1)
        if x1 < x0:
            continue
        y_of[t.id] = y
        span_of[t.id] = (x0, x1)
        if (x1 - x0) * px_per_second < min_px:
            continue
        key = (
            color_key_map.key_for(t.category, t.action)
            if color_key_map is not None
            else f"{t.category}-{t.action}"
        )
        bars.append(LayoutBar(t.id, lvl, row, x0, x1, y, h, key))
    bars.sort(key=lambda b: (b.level, b.row, b.x0, b.task_id))
    return bars


def layout_task_view(
    current: Task,
    parent: Optional[Task],
    children: Sequence[Task],
    viewport: tuple,
    color_key_map: Optional[ColorKeyMap] = None,
) -> TaskViewLayout:
    """Three stacked groups sharing one time axis: parent, current, subtasks."""
    t0, t1 = viewport
    if not t0 < t1:
        from .errors import BadRangeError

        raise BadRangeError(f"bad viewport [{t0}, {t1})")

    def bar(task: Task, row: int, h: float, level: int = 0) -> Optional[LayoutBar]:
        if not _overlaps_window(task, t0, t1):
            return None
        key = (
            color_key_map.key_for(task.category, task.action)
            if color_key_map is not None
            else f"{task.category}-{task.action}"
        )
        x0 = max(task.start, t0)
        x1 = min(_end_of(task), t1)
        return LayoutBar(task.id, level, row, x0, x1, row * h, h, key)

    parent_bars = []
    if parent is not None:
        b = bar(parent, 0, 1.0)
        if b:
            parent_bars.append(b)
    current_bars = []
    b = bar(current, 0, 1.0)
    if b:
        current_bars.append(b)

    kids = [t for t in children if _overlaps_window(t, t0, t1)]
    rowmap = assign_rows((t.id, t.start, _end_of(t)) for t in kids)
    nrows = max(rowmap.values(), default=0) + 1
    child_bars = []
    for t in kids:
        b = bar(t, rowmap[t.id], 1.0 / nrows)
        if b:
            child_bars.append(b)
    child_bars.sort(key=lambda b: (b.row, b.x0, b.task_id))
    return TaskViewLayout(parent_bars, current_bars, child_bars)


def _end_of(t: Task) -> float:
    return t.end if t.end is not None else t.start


def _overlaps_window(t: Task, t0: float, t1: float) -> bool:
    end = _end_of(t)
    if end == t.start:
        return t0 <= t.start < t1
    return t.start < t1 and end > t0


# --- coloring ----------------------------------------------------------------

def cubehelix_curve(lam: float) -> tuple:
    """One point of the cubehelix curve as floats in [0,1]."""
    g = lam ** CUBEHELIX_GAMMA
    phi = 2.0 * math.pi * (CUBEHELIX_START / 3.0 + CUBEHELIX_ROTATIONS * lam)
    a = CUBEHELIX_HUE * g * (1.0 - g) / 2.0
    c, s = math.cos(phi), math.sin(phi)
    r = g + a * (-0.14861 * c + 1.78277 * s)
    gr = g + a * (-0.29227 * c - 0.90649 * s)
    b = g + a * (1.97294 * c)
    clamp = lambda x: min(1.0, max(0.0, x))
    return clamp(r), clamp(gr), clamp(b)


def cubehelix_palette(n: int) -> list:
    """n colors sampled away from the black/white endpoints of the curve."""
    if n < 1:
        raise ValueError("palette needs at least one color")
    out = []
    for i in range(n):
        lam = (i + 1) / (n + 1)
        r, g, b = cubehelix_curve(lam)
        out.append((round(r * 255), round(g * 255), round(b * 255)))
    return out


def build_color_key(tasks: Iterable[Task], max_colors: int = DEFAULT_MAX_COLORS) -> ColorKeyMap:
    """Legend keys for a task set: Category-Action pairs, or categories only
    when there are too many pairs for one readable palette."""
    return color_key_from_pairs({(t.category, t.action) for t in tasks}, max_colors)


def color_key_from_pairs(pairs: Iterable[tuple], max_colors: int = DEFAULT_MAX_COLORS) -> ColorKeyMap:
    if max_colors < 1:
        raise ValueError("max_colors must be >= 1")
    pairs = sorted(set(pairs))
    if len(pairs) > max_colors:
        keys = sorted({c for c, _ in pairs})
        mode = "CategoryOnly"
    else:
        keys = [f"{c}-{a}" for c, a in pairs]
        mode = "CategoryAction"
    palette = cubehelix_palette(len(keys)) if keys else []
    return ColorKeyMap(mode=mode, keys={k: i for i, k in enumerate(keys)}, palette=palette)
