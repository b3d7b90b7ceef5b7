"""HTTP query server: read-only JSON endpoints over one store snapshot.

All endpoints are GET and pure functions of (store contents, request), so
repeated identical requests return identical bodies. The optional ``gen``
query parameter is echoed back in the X-Daisen-Gen response header; clients
use it to discard stale responses after zooming, the server keeps no state
about it. Metric NaNs serialize as JSON null.
"""

from __future__ import annotations

import os
import socket
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .errors import BadRangeError, BindError, DaisenError
from .layout import ColorKeyMap, LayoutBar, layout_component, layout_task_view
from .metrics import ExpectationTable, MetricKind, compute_series
from .model import Task
from .store import TraceStore
from .svgrender import ViewSpec, render_svg

ENV_BIND = "DAISEN_BIND"
DEFAULT_BIND = "127.0.0.1:3001"

_STATUS_BY_CODE = {
    "E_BAD_RANGE": 400,
    "E_BAD_REGEX": 400,
    "E_CONFIG": 400,
    "E_VALIDATION": 400,
    "E_UNKNOWN_ID": 404,
    "E_IO": 500,
}


def task_json(t: Task) -> dict:
    return {
        "id": t.id,
        "parent_id": t.parent_id,
        "category": t.category,
        "action": t.action,
        "location": t.location,
        "start": t.start,
        "end": t.end,
        "details": t.details,
    }


def bar_json(b: LayoutBar) -> dict:
    return {
        "task_id": b.task_id,
        "level": b.level,
        "row": b.row,
        "x0": b.x0,
        "x1": b.x1,
        "y": b.y,
        "h": b.h,
        "color_key": b.color_key,
    }


def color_key_json(cmap: ColorKeyMap) -> dict:
    return {
        "mode": cmap.mode,
        "keys": dict(cmap.keys),
        "palette": ["#{:02x}{:02x}{:02x}".format(*rgb) for rgb in cmap.palette],
    }


def create_app(
    store: TraceStore,
    expectations: Optional[ExpectationTable] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="daisen", docs_url=None, redoc_url=None)

    @app.exception_handler(DaisenError)
    async def on_error(request: Request, exc: DaisenError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=status)

    def respond(payload, gen: Optional[str]) -> JSONResponse:
        resp = JSONResponse(payload)
        if gen is not None:
            resp.headers["X-Daisen-Gen"] = gen
        return resp

    def window(start: Optional[float], end: Optional[float]) -> tuple:
        t0 = store.meta.time_min if start is None else start
        t1 = end
        if t1 is None:
            # half-open queries need the last instant inside the window
            span = max(store.meta.time_max - store.meta.time_min, 0.0)
            t1 = store.meta.time_max + max(span * 1e-6, 1e-12)
        return t0, t1

    @app.get("/api/meta")
    def api_meta(gen: Optional[str] = None):
        return respond(store.meta.to_json(), gen)

    @app.get("/api/components")
    def api_components(
        filter: str = "",
        page: int = 0,
        page_size: int = 16,
        gen: Optional[str] = None,
    ):
        total, items = store.list_components(filter, page=page, page_size=page_size)
        return respond({"total": total, "items": [c.to_json() for c in items]}, gen)

    @app.get("/api/metrics")
    def api_metrics(
        component: str,
        metric: str,
        metric2: Optional[str] = None,
        start: Optional[float] = None,
        end: Optional[float] = None,
        bins: int = 50,
        gen: Optional[str] = None,
    ):
        t0, t1 = window(start, end)
        names = [metric] + ([metric2] if metric2 else [])
        series = [
            compute_series(store, component, MetricKind.parse(name), t0, t1, bins).to_json()
            for name in names
        ]
        return respond({"series": series}, gen)

    @app.get("/api/tasks-layout")
    def api_tasks_layout(
        component: Optional[str] = None,
        task: Optional[str] = None,
        start: Optional[float] = None,
        end: Optional[float] = None,
        min_px: float = 1.0,
        px_per_s: Optional[float] = None,
        gen: Optional[str] = None,
    ):
        t0, t1 = window(start, end)
        cmap = store.color_key_map()
        if task is not None:
            current = store.get_task(task)
            chain = store.parent_chain(task)
            parent = chain[1] if len(chain) > 1 else None
            groups = layout_task_view(
                current, parent, store.children(task), (t0, t1), color_key_map=cmap
            )
            payload = {
                "groups": {
                    "parent": [bar_json(b) for b in groups.parent],
                    "current": [bar_json(b) for b in groups.current],
                    "children": [bar_json(b) for b in groups.children],
                },
                "color_key": color_key_json(cmap),
            }
            return respond(payload, gen)
        if component is None:
            raise BadRangeError("tasks-layout needs ?component= or ?task=")
        effective_min_px = min_px if px_per_s is not None else 0.0
        bars = layout_component(
            store.query_window(component, t0, t1),
            (t0, t1),
            min_px=effective_min_px,
            px_per_second=px_per_s if px_per_s is not None else 1.0,
            color_key_map=cmap,
        )
        min_h = min((b.h for b in bars), default=1.0)
        payload = {
            "bars": [bar_json(b) for b in bars],
            "color_key": color_key_json(cmap),
            "min_row_height": min_h,
            "window": [t0, t1],
        }
        return respond(payload, gen)

    @app.get("/api/task/{task_id}")
    def api_task(task_id: str, gen: Optional[str] = None):
        return respond(task_json(store.get_task(task_id)), gen)

    @app.get("/api/task/{task_id}/children")
    def api_task_children(task_id: str, gen: Optional[str] = None):
        store.get_task(task_id)  # 404 on unknown ids
        return respond([task_json(t) for t in store.children(task_id)], gen)

    @app.get("/api/task/{task_id}/parents")
    def api_task_parents(task_id: str, gen: Optional[str] = None):
        return respond([task_json(t) for t in store.parent_chain(task_id)], gen)

    @app.get("/api/render.svg")
    def api_render(
        kind: str = "component",
        component: Optional[str] = None,
        task: Optional[str] = None,
        start: Optional[float] = None,
        end: Optional[float] = None,
        metric: Optional[str] = None,
        metric2: Optional[str] = None,
        bins: int = 50,
        width: int = 1200,
        height: int = 400,
        filter: str = "",
        page: int = 0,
        page_size: int = 16,
        min_px: float = 1.0,
        px_per_s: Optional[float] = None,
        gen: Optional[str] = None,
    ):
        t0, t1 = window(start, end)
        spec = ViewSpec(
            kind=kind,
            component=component,
            task_id=task,
            t0=t0,
            t1=t1,
            metric_primary=MetricKind.parse(metric) if metric else None,
            metric_secondary=MetricKind.parse(metric2) if metric2 else None,
            bins=bins,
            width_px=width,
            height_px=height,
            filter=filter,
            page=page,
            page_size=page_size,
            min_px=min_px,
            px_per_s=px_per_s,
        )
        body = render_svg(store, spec, expectations)
        resp = Response(content=body, media_type="image/svg+xml")
        if gen is not None:
            resp.headers["X-Daisen-Gen"] = gen
        return resp

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def parse_bind(bind_address: Optional[str]) -> tuple:
    addr = bind_address or os.environ.get(ENV_BIND) or DEFAULT_BIND
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise BindError(f"bad bind address {addr!r}; expected host:port")
    return host, int(port)


def serve(
    store: TraceStore,
    bind_address: Optional[str] = None,
    expectations: Optional[ExpectationTable] = None,
    static_dir: Optional[str] = None,
) -> None:
    """Run the server until interrupted."""
    import uvicorn

    host, port = parse_bind(bind_address)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from None
    finally:
        probe.close()
    app = create_app(store, expectations=expectations, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
