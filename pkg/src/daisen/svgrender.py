"""Server-side SVG rendering of the three views.

Output is deterministic: element order is fixed, geometry uses fixed
3-fractional-digit decimals, and data attributes carry the underlying
metric values in fixed "%.9g" form so rendered charts can be checked
against the metrics engine. Identical inputs produce byte-identical
documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape, quoteattr

from .errors import BadRangeError
from .layout import ColorKeyMap, layout_component, layout_task_view
from .metrics import ExpectationTable, MetricKind, compute_series

FONT = "font-family:monospace"

TIME_UNITS = ((1e-6, 1e9, "ns"), (1e-3, 1e6, "µs"), (1.0, 1e3, "ms"), (math.inf, 1.0, "s"))


@dataclass
class ViewSpec:
    kind: str  # overview | component | task
    component: Optional[str] = None
    task_id: Optional[str] = None
    t0: float = 0.0
    t1: float = 0.0
    metric_primary: Optional[MetricKind] = None
    metric_secondary: Optional[MetricKind] = None
    bins: int = 50
    width_px: int = 1200
    height_px: int = 400
    filter: str = ""
    page: int = 0
    page_size: int = 16
    min_px: float = 1.0
    px_per_s: Optional[float] = None

    def validate(self) -> None:
        if self.kind not in ("overview", "component", "task"):
            raise BadRangeError(f"unknown view kind {self.kind!r}")
        if self.kind == "component" and not self.component:
            raise BadRangeError("component view needs ?component=")
        if self.kind == "task" and not self.task_id:
            raise BadRangeError("task view needs ?task=")
        if not self.t0 < self.t1:
            raise BadRangeError(f"bad window [{self.t0}, {self.t1})")
        if self.bins < 1:
            raise BadRangeError("bins must be >= 1")


def fmt(x: float) -> str:
    return f"{x:.3f}"


def fmt_val(x: float) -> str:
    return "nan" if x != x else f"{x:.9g}"


def _hex(rgb) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _time_label(value: float, extent: float) -> str:
    for limit, scale, unit in TIME_UNITS:
        if extent < limit:
            return f"{value * scale:.3f}{unit}"
    return f"{value:.3f}s"


def _nice_ticks(t0: float, t1: float, target: int = 6) -> list:
    span = t1 - t0
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    norm = raw / mag
    if norm < 1.5:
        step = mag
    elif norm < 3:
        step = 2 * mag
    elif norm < 7:
        step = 5 * mag
    else:
        step = 10 * mag
    first = math.ceil(t0 / step) * step
    ticks = []
    k = 0
    while first + k * step <= t1 + step * 1e-9:
        ticks.append(first + k * step)
        k += 1
    return ticks


class _Doc:
    def __init__(self, width: int, height: int):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<style>text{{{FONT};font-size:10px;fill:#333}}</style>',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]

    def add(self, fragment: str) -> None:
        self.parts.append(fragment)

    def rect(self, x, y, w, h, fill, extra="") -> None:
        self.add(
            f'<rect x="{fmt(x)}" y="{fmt(y)}" width="{fmt(w)}" height="{fmt(h)}" fill="{fill}"{extra}/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#999", extra="") -> None:
        self.add(
            f'<line x1="{fmt(x1)}" y1="{fmt(y1)}" x2="{fmt(x2)}" y2="{fmt(y2)}" stroke="{stroke}"{extra}/>'
        )

    def text(self, x, y, s, extra="") -> None:
        self.add(f'<text x="{fmt(x)}" y="{fmt(y)}"{extra}>{escape(s)}</text>')

    def finish(self) -> bytes:
        self.parts.append("</svg>")
        return "\n".join(self.parts).encode("utf-8")


def _draw_time_axis(doc: _Doc, x0, x1, y, t0, t1) -> None:
    doc.line(x0, y, x1, y, stroke="#333")
    extent = t1 - t0
    for tick in _nice_ticks(t0, t1):
        px = x0 + (tick - t0) / extent * (x1 - x0)
        doc.line(px, y, px, y + 4, stroke="#333")
        doc.text(px - 18, y + 14, _time_label(tick, extent))


def _draw_bars(doc: _Doc, bars, cmap: ColorKeyMap, x0, y0, w, h, t0, t1) -> None:
    extent = t1 - t0
    for b in bars:
        px = x0 + (b.x0 - t0) / extent * w
        pw = (b.x1 - b.x0) / extent * w
        color = cmap.color_for(b.color_key)
        fill = _hex(color) if color else "#888888"
        doc.add(
            f'<rect x="{fmt(px)}" y="{fmt(y0 + b.y * h)}" width="{fmt(pw)}" '
            f'height="{fmt(b.h * h)}" fill="{fill}" stroke="#ffffff" stroke-width="0.2" '
            f"data-task-id={quoteattr(b.task_id)} data-key={quoteattr(b.color_key)}/>"
        )


def _draw_legend(doc: _Doc, cmap: ColorKeyMap, x, y) -> None:
    doc.text(x, y, "Legend", extra=' font-weight="bold"')
    keys = sorted(cmap.keys, key=cmap.keys.get)
    for i, key in enumerate(keys):
        sy = y + 10 + i * 14
        doc.rect(x, sy, 10, 10, _hex(cmap.palette[cmap.keys[key]]))
        doc.text(x + 14, sy + 9, key)


def render_svg(store, spec: ViewSpec, expectations: Optional[ExpectationTable] = None) -> bytes:
    spec.validate()
    if spec.kind == "component":
        return _render_component(store, spec)
    if spec.kind == "task":
        return _render_task(store, spec)
    return _render_overview(store, spec, expectations)


def _render_component(store, spec: ViewSpec) -> bytes:
    doc = _Doc(spec.width_px, spec.height_px)
    left, right, top, bottom = 10, 180, 24, 30
    pw = spec.width_px - left - right
    ph = spec.height_px - top - bottom
    pps = spec.px_per_s if spec.px_per_s is not None else pw / (spec.t1 - spec.t0)
    cmap = store.color_key_map()
    tasks = store.query_window(spec.component, spec.t0, spec.t1)
    bars = layout_component(
        tasks, (spec.t0, spec.t1), min_px=spec.min_px, px_per_second=pps, color_key_map=cmap
    )
    # component name watermark
    doc.add(
        f'<text x="{fmt(left + 4)}" y="{fmt(top + 16)}" opacity="0.25" '
        f'style="{FONT};font-size:16px">{escape(spec.component)}</text>'
    )
    _draw_bars(doc, bars, cmap, left, top, pw, ph, spec.t0, spec.t1)
    _draw_time_axis(doc, left, left + pw, top + ph, spec.t0, spec.t1)
    _draw_legend(doc, cmap, left + pw + 16, top + 8)
    return doc.finish()


def _render_task(store, spec: ViewSpec) -> bytes:
    doc = _Doc(spec.width_px, spec.height_px)
    left, right, top, bottom = 70, 180, 24, 30
    pw = spec.width_px - left - right
    ph = spec.height_px - top - bottom
    cmap = store.color_key_map()
    current = store.get_task(spec.task_id)
    chain = store.parent_chain(spec.task_id)
    parent = chain[1] if len(chain) > 1 else None
    children = store.children(spec.task_id)
    groups = layout_task_view(current, parent, children, (spec.t0, spec.t1), color_key_map=cmap)
    regions = (
        ("Parent", groups.parent, 0.0, 0.18),
        ("Current", groups.current, 0.22, 0.18),
        ("Subtasks", groups.children, 0.44, 0.56),
    )
    for label, bars, rel_y, rel_h in regions:
        ry = top + rel_y * ph
        rh = rel_h * ph
        doc.text(4, ry + 12, label)
        doc.rect(left, ry, pw, rh, "#f7f7f7")
        _draw_bars(doc, bars, cmap, left, ry, pw, rh, spec.t0, spec.t1)
    _draw_time_axis(doc, left, left + pw, top + ph, spec.t0, spec.t1)
    _draw_legend(doc, cmap, left + pw + 16, top + 8)
    return doc.finish()


def _render_overview(store, spec: ViewSpec, expectations: Optional[ExpectationTable]) -> bytes:
    metric = spec.metric_primary or MetricKind.CONCURRENT_TASKS
    _, comps = store.list_components(spec.filter, page=spec.page, page_size=spec.page_size)
    cols = 2
    rows = max(1, math.ceil(len(comps) / cols))
    chart_w = (spec.width_px - 20) // cols
    chart_h = 150
    height = rows * chart_h + 20
    doc = _Doc(spec.width_px, height)
    for i, comp in enumerate(comps):
        cx = 10 + (i % cols) * chart_w
        cy = 10 + (i // cols) * chart_h
        _render_chart(doc, store, comp.name, metric, spec, cx, cy, chart_w - 16, chart_h - 24, expectations)
        if spec.metric_secondary is not None:
            _render_chart(
                doc, store, comp.name, spec.metric_secondary, spec,
                cx, cy, chart_w - 16, chart_h - 24, expectations,
                secondary=True,
            )
    return doc.finish()


def _render_chart(
    doc, store, component, metric, spec, cx, cy, cw, ch, expectations, secondary=False
) -> None:
    series = compute_series(store, component, metric, spec.t0, spec.t1, spec.bins)
    values = series.values
    peak = None
    if expectations is not None:
        peak = expectations.peak_reference(f"{component} {metric.value}")
    finite = [v for v in values if v == v]
    vmax = max([*finite, peak or 0.0, 1e-12])
    plot_x, plot_y = cx + 40, cy + 16
    plot_w, plot_h = cw - 50, ch - 34
    if not secondary:
        doc.text(cx + 40, cy + 10, component, extra=' font-weight="bold"')
        doc.rect(plot_x, plot_y, plot_w, plot_h, "#fbfbfb")
        _draw_time_axis(doc, plot_x, plot_x + plot_w, plot_y + plot_h, spec.t0, spec.t1)
        doc.text(cx, plot_y + 8, f"{vmax:.3g}"[:8])
        doc.text(cx, plot_y + plot_h, "0")
        doc.text(cx, cy + ch + 4, metric.value)
    else:
        doc.text(plot_x + plot_w - 60, cy + 10, metric.value)
        doc.text(plot_x + plot_w + 2, plot_y + 8, f"{vmax:.3g}"[:8])
    if peak is not None and not secondary:
        py = plot_y + plot_h * (1 - peak / vmax)
        doc.line(plot_x, py, plot_x + plot_w, py, stroke="#cc3333", extra=' stroke-dasharray="4,3"')
        doc.text(plot_x + plot_w - 34, py - 2, "ideal")
    # one polyline per run of finite values so gaps stay gaps
    run: list = []
    runs: list = []
    for i, v in enumerate(values):
        if v == v:
            run.append((i, v))
        elif run:
            runs.append(run)
            run = []
    if run:
        runs.append(run)
    dash = ' stroke-dasharray="5,2"' if secondary else ""
    stroke = "#886633" if secondary else "#336688"
    data = ",".join(fmt_val(v) for v in values)
    for run in runs:
        pts = " ".join(
            f"{fmt(plot_x + (i + 0.5) / spec.bins * plot_w)},{fmt(plot_y + plot_h * (1 - v / vmax))}"
            for i, v in run
        )
        doc.add(
            f'<polyline fill="none" stroke="{stroke}"{dash} points="{pts}" '
            f"data-component={quoteattr(component)} data-metric={quoteattr(metric.value)} "
            f'data-values="{data}"/>'
        )
