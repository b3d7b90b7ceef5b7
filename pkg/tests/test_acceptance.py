"""Acceptance suite: one test per criterion, one PASS line each (run -s).

Criteria 1-10 cover the backend; the frontend has its own suite under
frontend/ and nothing here depends on it being built.
"""

import os
import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from daisen import (
    CollectorSession,
    MetricKind,
    TraceStore,
    assign_rows,
    build_color_key,
    compute_series,
    cubehelix_curve,
    default_config,
    dispatch_experiment,
    compute_bound_config,
    read_jsonl,
    replay_trace,
    simulate,
)
from daisen.model import format_record, validate_trace
from daisen.server import create_app
from daisen.svgrender import render_svg

from conftest import make_task
from test_layout import assert_no_same_row_overlap, sweep_max_depth
from test_svg import GOLDEN_DIR, GOLDEN_CONFIG, golden_specs


def ok(criterion, detail):
    print(f"PASS criterion {criterion}: {detail}")


# --- shared fixtures ---------------------------------------------------------

@pytest.fixture(scope="module")
def experiment():
    base = default_config()
    return dispatch_experiment(base)


@pytest.fixture(scope="module")
def rate1_store(experiment):
    return TraceStore.ingest(experiment.rate1.sink.records, mode="strict")


@pytest.fixture(scope="module")
def rate2_store(experiment):
    return TraceStore.ingest(experiment.rate2.sink.records, mode="strict")


# --- 1: layout optimality -----------------------------------------------------

def test_c01_layout_optimality():
    rnd = random.Random(20240601)
    started = time.perf_counter()
    sets = biggest = 0
    for trial in range(1000):
        n = rnd.randrange(1, 501)
        intervals = []
        for i in range(n):
            start = rnd.uniform(0, 1000)
            dur = rnd.choice([0.0, rnd.uniform(0, 5), rnd.uniform(0, 80)])
            intervals.append((f"i{i:05d}", start, start + dur))
        if not any(e > s for _, s, e in intervals):
            intervals[0] = ("i00000", 0.0, 1.0)
        rows = assign_rows(intervals)
        used = max(rows.values()) + 1
        assert used == sweep_max_depth(intervals), f"trial {trial}"
        assert_no_same_row_overlap(intervals, rows)
        sets += 1
        biggest = max(biggest, n)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    ok(1, f"rows == sweep depth on {sets} random sets (max n {biggest}), {elapsed:.1f}s")


# --- 2: metrics oracle ----------------------------------------------------------

def occupancy_exact(intervals, a, b):
    acc = 0.0
    for s, e in intervals:
        lo = s if s > a else a
        hi = e if e < b else b
        if hi > lo:
            acc += hi - lo
    return acc / (b - a)


def sampling_estimate(starts, ends, a, b, points=100_000):
    pts = a + (np.arange(points) + 0.5) * ((b - a) / points)
    live = np.searchsorted(starts, pts, side="right") - np.searchsorted(ends, pts, side="right")
    return float(live.mean())


def test_c02_metrics_oracle():
    rnd = random.Random(7341)
    window = (0.0, 100.0)
    occupancy = {
        MetricKind.CONCURRENT_TASKS: lambda kinds: slice(None),
        MetricKind.BUFFER_PRESSURE: lambda kinds: kinds == 1,
        MetricKind.PENDING_REQ_OUT: lambda kinds: kinds == 2,
    }
    traces = checked_bins = 0
    for trial in range(200):
        bins = rnd.choice([1, 2, 4])
        n = rnd.randrange(5, 250)
        tasks = []
        for i in range(n):
            # times on the 1e-3 grid so sampling subintervals align with jumps
            start = rnd.randrange(0, 90_000) / 1000.0
            dur = rnd.choice([0, rnd.randrange(0, 10_000)]) / 1000.0
            tasks.append(
                make_task(
                    f"t{i:05d}",
                    category=rnd.choice(["Request In", "Request Out", "Instruction"]),
                    location="C0",
                    start=start,
                    end=start + dur,
                )
            )
        store = TraceStore.ingest(tasks, mode="lenient")
        starts, ends, kinds = store.location_columns("C0")
        width = (window[1] - window[0]) / bins
        for metric, select in occupancy.items():
            series = compute_series(store, "C0", metric, window[0], window[1], bins)
            sel = select(kinds)
            s_sel, e_sel = starts[sel], ends[sel]
            ivs = list(zip(s_sel.tolist(), e_sel.tolist()))
            s_sorted, e_sorted = np.sort(s_sel), np.sort(e_sel)
            maxcount = max(1.0, float(max(series.values)))
            for k, got in enumerate(series.values):
                a = window[0] + k * width
                b = window[1] if k == bins - 1 else window[0] + (k + 1) * width
                assert got == pytest.approx(occupancy_exact(ivs, a, b), abs=1e-9)
                est = sampling_estimate(s_sorted, e_sorted, a, b)
                assert abs(got - est) <= 2e-5 * maxcount, (metric, trial, k)
                checked_bins += 1
            # bin-refinement consistency at 1e-9
            fine = compute_series(store, "C0", metric, window[0], window[1], bins * 2)
            for k in range(bins):
                merged = (fine.values[2 * k] + fine.values[2 * k + 1]) / 2
                assert merged == pytest.approx(series.values[k], abs=1e-9)
        traces += 1
    ok(2, f"{traces} traces, {checked_bins} occupancy bins vs exact + 1e5-point sampling oracles")


# --- 3: Little's law ------------------------------------------------------------

def test_c03_littles_law(rate1_store):
    store = rate1_store
    t0 = store.meta.time_min
    t1 = store.meta.time_max + 1e-9
    checked = 0
    for comp in store.components:
        rate = compute_series(store, comp.name, MetricKind.REQ_IN_RATE, t0, t1, 1).values[0]
        if rate == 0.0:
            continue
        pressure = compute_series(store, comp.name, MetricKind.BUFFER_PRESSURE, t0, t1, 1).values[0]
        latency = compute_series(store, comp.name, MetricKind.AVG_REQ_LATENCY, t0, t1, 1).values[0]
        assert pressure == pytest.approx(rate * latency, rel=1e-6), comp.name
        checked += 1
    assert checked >= 8
    ok(3, f"BufferPressure == ReqInRate x latency (rel 1e-6) at {checked} components")


# --- 4: round-trip and window-query oracle ----------------------------------------

def random_strict_trace(rnd, n_target):
    """A random strict-valid task tree with request pairs, ids preassigned."""
    locations = [f"C{i}" for i in range(10)]
    tasks = [make_task("root00", category="Kernel", action="Run",
                       location="ROOT", start=0.0, end=1000.0)]
    i = 0
    while len(tasks) < n_target:
        parent = tasks[rnd.randrange(0, len(tasks))]
        if parent.category == "Request In" or parent.end - parent.start < 1e-3:
            continue
        start = rnd.uniform(parent.start, parent.end)
        end = rnd.uniform(start, parent.end)
        i += 1
        if rnd.random() < 0.35 and len(tasks) + 1 < n_target:
            src = rnd.choice(locations)
            dst = rnd.choice([l for l in locations if l != src])
            ro = make_task(f"o{i:06d}", parent=parent.id, category="Request Out",
                           action="Read Memory", location=src, start=start, end=end)
            mid0 = rnd.uniform(start, end)
            mid1 = rnd.uniform(mid0, end)
            ri = make_task(f"n{i:06d}", parent=ro.id, category="Request In",
                           action="Read Memory", location=dst, start=mid0, end=mid1)
            tasks += [ro, ri]
        else:
            tasks.append(
                make_task(f"t{i:06d}", parent=parent.id,
                          category=rnd.choice(["Instruction", "Stage", "Wavefront"]),
                          action=rnd.choice(["Exec", "Decode"]),
                          location=rnd.choice(locations), start=start, end=end)
            )
    return tasks


def brute_force_window(tasks, location, t0, t1):
    hits = []
    for t in tasks:
        if t.location != location:
            continue
        if t.end == t.start:
            if t0 <= t.start < t1:
                hits.append(t)
        elif t.start < t1 and t.end > t0:
            hits.append(t)
    return [(t.start, t.id) for t in sorted(hits, key=lambda t: (t.start, t.id))]


def test_c04_round_trip_and_window_oracle(tmp_path):
    rnd = random.Random(99)
    tasks = random_strict_trace(rnd, 10_000)
    report = validate_trace(tasks, strict=True)
    assert report.ok, report.errors[:5]

    trace_path = tmp_path / "generated.jsonl"
    replay_trace(tasks, str(trace_path))
    store = TraceStore.ingest(read_jsonl(trace_path), mode="strict",
                              path=str(tmp_path / "generated.dtrace"))
    assert sorted(t.key() for t in store.all_tasks()) == sorted(t.key() for t in tasks)

    windows = 0
    for _ in range(500):
        t0 = rnd.uniform(-50, 1050)
        t1 = t0 + rnd.uniform(0, 300)
        loc = rnd.choice([f"C{i}" for i in range(10)] + ["ROOT", "missing"])
        got = [(t.start, t.id) for t in store.query_window(loc, t0, t1)]
        assert got == brute_force_window(tasks, loc, t0, t1)
        windows += 1
    ok(4, f"collector->file->ingest multiset identity on {len(tasks)} tasks; "
          f"{windows} windows == brute force")


# --- 5: simkit strict validity ----------------------------------------------------

def test_c05_simkit_strict_validity(experiment, rate1_store, rate2_store):
    for result, store in ((experiment.rate1, rate1_store), (experiment.rate2, rate2_store)):
        records = result.sink.records
        report = validate_trace(records, strict=True)
        assert not report.errors and not report.warnings

        by_id = {t.id: t for t in records}
        req_ins = [t for t in records if t.category == "Request In"]
        assert req_ins
        for ri in req_ins:
            ro = by_id[ri.parent_id]
            assert ro.category == "Request Out"
            assert ro.location != ri.location
            assert ro.start <= ri.start and ri.end <= ro.end

        insts = [t for t in records if t.category == "Instruction"]
        assert insts
        for inst in insts:
            chain = [t.category for t in store.parent_chain(inst.id)]
            assert chain == ["Instruction", "Wavefront", "Work-Group", "Kernel"]

        cap = default_config().max_wavefronts_per_cu
        for comp in store.components:
            if ".CU" not in comp.name or ".SIMD" in comp.name:
                continue
            wfs = [(t.start, t.end) for t in records
                   if t.category == "Wavefront" and t.location == comp.name]
            events = sorted([(s, 1) for s, _ in wfs] + [(e, -1) for _, e in wfs])
            depth = peak = 0
            for _, d in events:
                depth += d
                peak = max(peak, depth)
            assert peak <= cap, comp.name
    ok(5, "both experiment traces strict-clean; pairing, hierarchy and the "
          f"{default_config().max_wavefronts_per_cu}-wavefront cap hold")


# --- 6: case-study reproduction ---------------------------------------------------

def peak_concurrent(records, category, location):
    events = []
    for t in records:
        if t.category == category and t.location == location and t.end > t.start:
            events.append((t.start, 1))
            events.append((t.end, -1))
    events.sort()
    depth = peak = 0
    for _, d in events:
        depth += d
        peak = max(peak, depth)
    return peak


def test_c06_case_study(experiment):
    started = time.perf_counter()
    assert 1.05 < experiment.speedup <= 2.0, experiment.speedup

    compute = dispatch_experiment(compute_bound_config())
    assert compute.speedup <= 1.02, compute.speedup

    cfg = default_config()
    peaks = []
    for result in (experiment.rate1, experiment.rate2):
        peaks.append(max(
            peak_concurrent(result.sink.records, "Work-Group", f"GPU1.CU{cu:02d}")
            for cu in range(cfg.cu_count)
        ))
    assert peaks[1] > peaks[0], peaks
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    ok(6, f"dispatch-bound speedup {experiment.speedup:.2f}x in (1.05, 2.0], "
          f"compute-bound {compute.speedup:.2f}x <= 1.02, peak WG/CU {peaks[0]} -> {peaks[1]}")


# --- 7: bottleneck signature ---------------------------------------------------------

def test_c07_bottleneck_signature(rate1_store):
    store = rate1_store
    t0 = store.meta.time_min
    t1 = store.meta.time_max + 1e-9
    simd_vals = [
        compute_series(store, c.name, MetricKind.CONCURRENT_TASKS, t0, t1, 1).values[0]
        for c in store.components if ".SIMD" in c.name
    ]
    assert simd_vals
    simd_mean = sum(simd_vals) / len(simd_vals)
    assert simd_mean < 0.5, simd_mean

    l1_vals = [
        compute_series(store, c.name, MetricKind.BUFFER_PRESSURE, t0, t1, 1).values[0]
        for c in store.components if "L1_" in c.name
    ]
    assert l1_vals
    assert all(v < 1.0 for v in l1_vals)
    ok(7, f"mean SIMD ConcurrentTasks {simd_mean:.3f} < 0.5 (anticipated 1.0); "
          f"L1 BufferPressure max {max(l1_vals):.3f} < 1.0")


# --- 8: cubehelix ---------------------------------------------------------------------

def test_c08_cubehelix():
    assert cubehelix_curve(0.0) == (0.0, 0.0, 0.0)
    assert cubehelix_curve(1.0) == (1.0, 1.0, 1.0)
    lumas = [
        0.299 * r + 0.587 * g + 0.114 * b
        for r, g, b in (cubehelix_curve(i / 255) for i in range(256))
    ]
    assert all(b > a for a, b in zip(lumas, lumas[1:]))

    def tasks_with_pairs(n_pairs):
        return [make_task(f"t{i:05d}", category=f"C{i % 3}", action=f"A{i}", start=i, end=i + 1)
                for i in range(n_pairs)]

    for max_colors in (1, 2, 7, 16):
        at_limit = build_color_key(tasks_with_pairs(max_colors), max_colors)
        assert at_limit.mode == "CategoryAction"
        over = build_color_key(tasks_with_pairs(max_colors + 1), max_colors)
        assert over.mode == "CategoryOnly"
    ok(8, "black/white endpoints channel-exact; luma strictly increasing over 256 "
          "samples; category fallback flips exactly past max_colors")


# --- 9: determinism --------------------------------------------------------------------

def test_c09_determinism(tmp_path):
    blobs = []
    for name in ("one.jsonl", "two.jsonl"):
        path = tmp_path / name
        with CollectorSession(path, seed=GOLDEN_CONFIG.seed) as session:
            simulate(GOLDEN_CONFIG, session)
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1] and blobs[0]

    store = TraceStore.ingest(list(read_jsonl(tmp_path / "one.jsonl")), mode="strict")
    rendered = {}
    for name, spec in golden_specs(store).items():
        a = render_svg(store, spec)
        b = render_svg(store, spec)
        assert a == b
        rendered[name] = a
    for name, body in rendered.items():
        with open(os.path.join(GOLDEN_DIR, name), "rb") as fh:
            assert fh.read() == body, f"golden {name} deviates"
    ok(9, f"fixed-seed traces byte-identical; {len(rendered)} SVG renders match goldens")


# --- 10: scale/engineering target --------------------------------------------------------

def synth_million(path, cus=32, l1s=16):
    """~1e6-record strict trace: bounded fan-out tree plus request pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        def emit(task):
            fh.write(format_record(task))
            fh.write("\n")

        total = 0
        emit(make_task("root000", category="Kernel", action="Run",
                       location="GPU1.CP", start=0.0, end=1.0))
        total += 1
        for cu in range(cus):
            loc = f"GPU1.CU{cu:02d}"
            for g in range(12):
                group = f"g{cu:02d}{g:03d}"
                emit(make_task(group, parent="root000", category="Work-Group", action="Exec",
                               location=loc, start=g / 12, end=(g + 1) / 12))
                total += 1
                for i in range(1000):
                    s = g / 12 + (i * 83 % 1000) / 12000.0
                    emit(make_task(f"i{cu:02d}{g:03d}{i:04d}", parent=group,
                                   category="Instruction", action="Exec", location=loc,
                                   start=s, end=s + 2e-5))
                    total += 1
            l1 = f"GPU1.L1_{cu % l1s:02d}"
            for i in range(6000):
                s = (i * 167 % 100000) / 100000.0
                ro = f"o{cu:02d}{i:06d}"
                emit(make_task(ro, parent=f"g{cu:02d}000", category="Request Out",
                               action="Read Memory", location=loc, start=s, end=s + 9e-5))
                emit(make_task(f"n{cu:02d}{i:06d}", parent=ro, category="Request In",
                               action="Read Memory", location=l1,
                               start=s + 1e-5, end=s + 8e-5))
                total += 2
        for l1i in range(l1s):
            l1 = f"GPU1.L1_{l1i:02d}"
            l2 = f"GPU1.L2_{l1i % 8}"
            for i in range(7250):
                s = (i * 59 % 100000) / 100000.0
                ro = f"p{l1i:02d}{i:06d}"
                emit(make_task(ro, parent="root000", category="Request Out", action="Fetch",
                               location=l1, start=s, end=s + 7e-5))
                emit(make_task(f"q{l1i:02d}{i:06d}", parent=ro, category="Request In",
                               action="Fetch", location=l2, start=s + 1e-5, end=s + 6e-5))
                total += 2
    return total


def test_c10_scale_target(tmp_path):
    trace_path = tmp_path / "million.jsonl"
    expected = synth_million(trace_path)
    assert expected >= 1_000_000

    started = time.perf_counter()
    store = TraceStore.ingest(read_jsonl(trace_path), mode="strict",
                              path=str(tmp_path / "million.dtrace"))
    ingest_s = time.perf_counter() - started
    assert store.meta.task_count == expected
    assert ingest_s < 60.0, f"ingest took {ingest_s:.1f}s"

    client = TestClient(create_app(store))
    busiest = max(store.components, key=lambda c: c.task_count)
    queries = [
        ("/api/tasks-layout", {"component": busiest.name, "px_per_s": 1200.0, "min_px": 1.0}),
        ("/api/tasks-layout", {"component": busiest.name, "start": 0.4, "end": 0.400003,
                               "px_per_s": 4e8, "min_px": 1.0}),
        ("/api/tasks-layout", {"task": "g00000", "px_per_s": 1200.0}),
        ("/api/metrics", {"component": busiest.name, "metric": "ConcurrentTasks",
                          "metric2": "ReqInRate", "bins": 100}),
        ("/api/metrics", {"component": "GPU1.L1_00", "metric": "BufferPressure", "bins": 200}),
    ]
    worst = 0.0
    for url, params in queries:
        first = client.get(url, params=params)
        assert first.status_code == 200, first.text
        t0 = time.perf_counter()
        again = client.get(url, params=params)
        dt = time.perf_counter() - t0
        assert again.status_code == 200
        assert dt < 0.2, f"{url} {params} took {dt * 1000:.0f} ms"
        worst = max(worst, dt)
    ok(10, f"{expected} tasks ingested in {ingest_s:.1f}s (< 60s); "
           f"worst layout/metrics query {worst * 1000:.0f} ms (< 200ms), "
           f"busiest component {busiest.name} with {busiest.task_count} tasks")
