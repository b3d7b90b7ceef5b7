"""Command-line interface: ingest, gen, serve, render, validate, stats.

Exit codes: 0 success, 1 usage or general error, 2 validation errors,
3 I/O errors.
"""

from __future__ import annotations

import sys

import click

from .collector import CollectorSession, store_sink
from .errors import DaisenError, StoreIOError, ValidationError
from .metrics import ExpectationTable, MetricKind
from .model import read_jsonl, validate_trace
from .simkit import (
    compute_bound_config,
    default_config,
    dispatch_experiment,
    load_sim_config,
    simulate,
)
from .store import TraceStore
from .svgrender import ViewSpec, render_svg


@click.group(name="daisen")
def cli_group():
    """Record, store, query and visualize hardware execution traces."""


@cli_group.command()
@click.argument("input_path", metavar="TRACE.jsonl")
@click.option("-o", "--output", "output_path", required=True, metavar="STORE.dtrace",
              help="Store log to create (sidecar index written alongside).")
@click.option("--lenient", is_flag=True, help="Keep going on validation errors.")
def ingest(input_path, output_path, lenient):
    """Validate and index a trace file into a store."""
    warnings: list = []
    records = read_jsonl(input_path, on_warning=warnings.append)
    store = TraceStore.ingest(records, mode="lenient" if lenient else "strict", path=output_path)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    rep = store.validation_report
    if rep is not None and (rep.errors or rep.warnings):
        click.echo(f"validation: {rep.summary()}", err=True)
    m = store.meta
    click.echo(
        f"ingested {m.task_count} tasks, {m.component_count} components, "
        f"[{m.time_min:.9g}s, {m.time_max:.9g}s] -> {output_path}"
    )


@cli_group.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="sim.toml file.")
@click.option("--preset", type=click.Choice(["dispatch", "compute"]), default="dispatch",
              help="Built-in kernel preset when no config file is given.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--rate", type=int, default=None, help="Override the dispatch rate.")
@click.option("--experiment", is_flag=True,
              help="Run the rate-1 vs rate-2 dispatch experiment instead of one run.")
@click.option("-o", "--output", "output_path", required=True, metavar="STORE.dtrace")
def gen(config_path, preset, seed, rate, experiment, output_path):
    """Simulate the miniature GPU and store the generated trace."""
    from dataclasses import replace

    if config_path:
        cfg = load_sim_config(config_path)
    else:
        cfg = default_config() if preset == "dispatch" else compute_bound_config()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if rate is not None:
        cfg = replace(cfg, dispatch_rate=rate)

    if experiment:
        base = output_path[: -len(".dtrace")] if output_path.endswith(".dtrace") else output_path
        exp = dispatch_experiment(cfg, sink_factory=lambda r: store_sink(f"{base}.rate{r}.dtrace"))
        for label, res in (("rate 1", exp.rate1), ("rate 2", exp.rate2)):
            click.echo(f"{label}: {res.total_time:.9g}s, {res.tasks_emitted} tasks")
        click.echo(f"speedup: {exp.speedup:.3f}x")
        return

    sink = store_sink(output_path)
    with CollectorSession(sink, seed=cfg.seed) as session:
        result = simulate(cfg, session)
    click.echo(
        f"simulated {result.cycles} cycles ({result.total_time:.9g}s), "
        f"{result.tasks_emitted} tasks -> {output_path}"
    )


@cli_group.command()
@click.argument("store_path", metavar="STORE.dtrace")
@click.option("--bind", default=None, help="host:port (default DAISEN_BIND or 127.0.0.1:3001).")
@click.option("--expectations", "expectations_path", type=click.Path(exists=True),
              help="expectations.toml with anticipated metric values.")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Directory with the web frontend bundle to serve at /.")
def serve(store_path, bind, expectations_path, static_dir):
    """Serve the HTTP API (and frontend, if built) over a store."""
    from .server import serve as run_server

    store = TraceStore.open(store_path)
    table = ExpectationTable.from_toml(expectations_path) if expectations_path else None
    click.echo(f"serving {store_path} ({store.meta.task_count} tasks)")
    run_server(store, bind_address=bind, expectations=table, static_dir=static_dir)


@cli_group.command()
@click.argument("store_path", metavar="STORE.dtrace")
@click.option("--kind", type=click.Choice(["overview", "component", "task"]), default="component")
@click.option("--component", default=None)
@click.option("--task", "task_id", default=None)
@click.option("--from", "t0", type=float, default=None, help="Window start, seconds.")
@click.option("--to", "t1", type=float, default=None, help="Window end, seconds.")
@click.option("--metric", default=None, type=click.Choice([m.value for m in MetricKind]))
@click.option("--metric2", default=None, type=click.Choice([m.value for m in MetricKind]))
@click.option("--bins", type=int, default=50)
@click.option("--width", type=int, default=1200)
@click.option("--height", type=int, default=400)
@click.option("--filter", "filter_rx", default="")
@click.option("--page", type=int, default=0)
@click.option("--page-size", type=int, default=16)
@click.option("--min-px", type=float, default=1.0)
@click.option("--expectations", "expectations_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, metavar="FILE.svg")
def render(store_path, kind, component, task_id, t0, t1, metric, metric2, bins,
           width, height, filter_rx, page, page_size, min_px, expectations_path, out_path):
    """Render a view to a deterministic SVG file."""
    store = TraceStore.open(store_path)
    meta = store.meta
    span = max(meta.time_max - meta.time_min, 0.0)
    if t0 is None:
        t0 = meta.time_min
    if t1 is None:
        t1 = meta.time_max + max(span * 1e-6, 1e-12)
    spec = ViewSpec(
        kind=kind,
        component=component,
        task_id=task_id,
        t0=t0,
        t1=t1,
        metric_primary=MetricKind.parse(metric) if metric else None,
        metric_secondary=MetricKind.parse(metric2) if metric2 else None,
        bins=bins,
        width_px=width,
        height_px=height,
        filter=filter_rx,
        page=page,
        page_size=page_size,
        min_px=min_px,
    )
    table = ExpectationTable.from_toml(expectations_path) if expectations_path else None
    body = render_svg(store, spec, table)
    try:
        with open(out_path, "wb") as fh:
            fh.write(body)
    except OSError as exc:
        raise StoreIOError(f"cannot write {out_path}: {exc}") from None
    click.echo(f"wrote {out_path} ({len(body)} bytes)")


@cli_group.command()
@click.argument("input_path", metavar="TRACE.jsonl")
@click.option("--lenient", is_flag=True, help="Report with lenient severities.")
def validate(input_path, lenient):
    """Check a trace file; exits 2 when it has validation errors."""
    warnings: list = []
    tasks = list(read_jsonl(input_path, on_warning=warnings.append))
    for w in warnings:
        click.echo(f"format warning: {w}", err=True)
    report = validate_trace(tasks, strict=not lenient)
    for f in report.errors:
        click.echo(f"error {f.rule} [{f.task_id}]: {f.message}")
    for f in report.warnings:
        click.echo(f"warning {f.rule} [{f.task_id}]: {f.message}")
    click.echo(f"{len(tasks)} tasks: {report.summary()}")
    if not report.ok:
        raise ValidationError(report)


@cli_group.command()
@click.argument("store_path", metavar="STORE.dtrace")
@click.option("--top", type=int, default=10, help="How many components to list.")
def stats(store_path, top):
    """Print corpus summary and the busiest components."""
    store = TraceStore.open(store_path)
    m = store.meta
    click.echo(f"tasks:      {m.task_count}")
    click.echo(f"extent:     [{m.time_min:.9g}s, {m.time_max:.9g}s]")
    click.echo(f"components: {m.component_count}")
    click.echo(f"format:     {m.format_version}")
    busiest = sorted(store.components, key=lambda c: -c.task_count)[:top]
    for c in busiest:
        click.echo(f"  {c.name:30s} {c.task_count:10d} tasks")


def main(argv=None) -> int:
    try:
        cli_group.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValidationError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        return 2
    except StoreIOError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        return 3
    except DaisenError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"E_IO: {exc}", err=True)
        return 3
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
