import re
import threading

import pytest

from daisen import CollectorSession, TokenSource, TraceStore, replay_trace
from daisen.collector import ListSink, store_sink
from daisen.errors import (
    ChildOpenError,
    ConfigError,
    SameLocationError,
    SessionClosedError,
    TimeOrderError,
    UnknownIdError,
)
from daisen.model import validate_trace

from conftest import quartet_tasks


@pytest.fixture
def session():
    sink = ListSink()
    s = CollectorSession(sink, seed=123)
    yield s
    if not s._closed:
        s.close()


def drive_quartet(session, times=(0.0, 2.0, 8.0, 10.0), src="CU0", dst="L1_0"):
    t_send, t_recv, t_done, t_back = times
    ro = session.initiate_request(None, "Read Memory", src, t_send)
    ri = session.receive_request(ro, dst, t_recv)
    session.complete_request(ri, t_done)
    session.receive_response(ro, t_back)
    return ro, ri


class TestTokenSource:
    def test_format(self):
        src = TokenSource(seed=1)
        for _ in range(100):
            assert re.fullmatch(r"[A-Za-z0-9]{6}", src())

    def test_unique_at_scale(self):
        src = TokenSource(seed=2)
        seen = {src() for _ in range(100_000)}
        assert len(seen) == 100_000

    def test_deterministic(self):
        a = [TokenSource(seed=3)() for _ in range(10)]
        b = [TokenSource(seed=3)() for _ in range(10)]
        assert a == b
        assert a != [TokenSource(seed=4)() for _ in range(10)]

    def test_min_length(self):
        with pytest.raises(ValueError):
            TokenSource(length=4)


class TestTaskCalls:
    def test_begin_end(self, session):
        tid = session.begin_task(None, "Kernel", "Run", "GPU1.CommandProcessor", 0.0)
        assert session.open_task_count == 1
        session.end_task(tid, 2.0)
        session.flush()
        (rec,) = session.sink.records
        assert (rec.id, rec.start, rec.end) == (tid, 0.0, 2.0)
        assert rec.category == "Kernel"

    def test_child_begin(self, session):
        k = session.begin_task(None, "Kernel", "Run", "GPU1.CommandProcessor", 0.0)
        wg = session.begin_task(k, "Work-Group", "Exec", "GPU1.CU01", 1e-6)
        session.end_task(wg, 2e-6)
        session.flush()
        assert session.sink.records[0].parent_id == k

    def test_end_unknown(self, session):
        with pytest.raises(UnknownIdError):
            session.end_task("nope42", 1.0)

    def test_end_before_start(self, session):
        tid = session.begin_task(None, "K", "R", "CU0", 2.0)
        with pytest.raises(TimeOrderError):
            session.end_task(tid, 1.0)

    def test_negative_time(self, session):
        with pytest.raises(TimeOrderError):
            session.begin_task(None, "K", "R", "CU0", -1.0)

    def test_closed_session(self):
        s = CollectorSession(ListSink(), seed=1)
        s.close()
        with pytest.raises(SessionClosedError):
            s.begin_task(None, "K", "R", "CU0", 0.0)


class TestRequestCalls:
    def test_canonical_quartet(self, session):
        drive_quartet(session)
        session.flush()
        records = session.sink.records
        assert len(records) == 2
        report = validate_trace(records, strict=True)
        assert not report.errors and not report.warnings
        ri = next(r for r in records if r.category == "Request In")
        ro = next(r for r in records if r.category == "Request Out")
        assert ri.parent_id == ro.id
        assert (ro.start, ro.end, ri.start, ri.end) == (0.0, 10.0, 2.0, 8.0)
        assert ri.action == ro.action == "Read Memory"

    def test_parentless_request_out(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        session.receive_response(ro, 1.0)
        session.flush()
        assert session.sink.records[0].parent_id is None

    def test_distinct_ids_at_same_time(self, session):
        a = session.initiate_request(None, "Read Memory", "CU0", 1.0)
        b = session.initiate_request(None, "Read Memory", "CU0", 1.0)
        assert a != b

    def test_same_location_rejected(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        with pytest.raises(SameLocationError):
            session.receive_request(ro, "CU0", 1.0)

    def test_receive_before_send(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 5.0)
        with pytest.raises(TimeOrderError):
            session.receive_request(ro, "L1_0", 4.0)

    def test_receive_request_unknown(self, session):
        with pytest.raises(UnknownIdError):
            session.receive_request("nope42", "L1_0", 1.0)

    def test_receive_request_on_non_request(self, session):
        tid = session.begin_task(None, "Kernel", "Run", "CU0", 0.0)
        with pytest.raises(UnknownIdError):
            session.receive_request(tid, "L1_0", 1.0)

    def test_zero_duration_request_in(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        ri = session.receive_request(ro, "L1_0", 2.0)
        session.complete_request(ri, 2.0)
        session.receive_response(ro, 3.0)
        session.flush()
        ri_rec = next(r for r in session.sink.records if r.category == "Request In")
        assert ri_rec.start == ri_rec.end == 2.0

    def test_complete_twice(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        ri = session.receive_request(ro, "L1_0", 1.0)
        session.complete_request(ri, 2.0)
        with pytest.raises(UnknownIdError):
            session.complete_request(ri, 3.0)

    def test_response_before_child_end(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        ri = session.receive_request(ro, "L1_0", 2.0)
        session.complete_request(ri, 8.0)
        with pytest.raises(TimeOrderError):
            session.receive_response(ro, 7.0)

    def test_response_with_open_child(self, session):
        ro = session.initiate_request(None, "Read Memory", "CU0", 0.0)
        session.receive_request(ro, "L1_0", 2.0)
        with pytest.raises(ChildOpenError):
            session.receive_response(ro, 9.0)

    def test_lenient_session_skips_child_checks(self):
        s = CollectorSession(ListSink(), seed=9, strict=False)
        ro = s.initiate_request(None, "Read Memory", "CU0", 0.0)
        s.receive_request(ro, "L1_0", 2.0)
        s.receive_response(ro, 9.0)  # open child tolerated
        s.close()


class TestFlush:
    def test_counts_records(self, session):
        for i in range(3):
            tid = session.begin_task(None, "K", "R", "CU0", float(i))
            session.end_task(tid, float(i + 1))
        assert session.flush().records_written == 3
        assert session.flush().records_written == 0  # idempotent

    def test_open_tasks_retained(self, session):
        session.begin_task(None, "K", "R", "CU0", 0.0)
        stats = session.flush()
        assert stats.records_written == 0
        assert session.open_task_count == 1
        assert session.sink.records == []

    def test_nothing_dropped(self, session):
        n = 5000
        for i in range(n):
            tid = session.begin_task(None, "K", "R", "CU0", float(i))
            session.end_task(tid, float(i + 1))
        stats = session.flush()
        assert stats.records_written == n
        assert stats.dropped == 0
        assert len(session.sink.records) == n


class TestSinks:
    def test_file_sink_deterministic(self, tmp_path):
        paths = []
        for name in ("a.jsonl", "b.jsonl"):
            path = tmp_path / name
            with CollectorSession(path, seed=77) as s:
                drive_quartet(s)
            paths.append(path)
        a, b = (p.read_bytes() for p in paths)
        assert a == b and a

    def test_env_default_sink(self, tmp_path, monkeypatch):
        path = tmp_path / "default.jsonl"
        monkeypatch.setenv("DAISEN_TRACE_PATH", str(path))
        with CollectorSession(seed=1) as s:
            tid = s.begin_task(None, "K", "R", "CU0", 0.0)
            s.end_task(tid, 1.0)
        assert path.exists() and path.read_text().count("\n") == 1

    def test_no_sink_configured(self, monkeypatch):
        monkeypatch.delenv("DAISEN_TRACE_PATH", raising=False)
        with pytest.raises(ConfigError):
            CollectorSession()

    def test_store_sink(self, tmp_path):
        path = str(tmp_path / "run.dtrace")
        sink = store_sink(path)
        with CollectorSession(sink, seed=5) as s:
            drive_quartet(s)
        assert sink.store.meta.task_count == 2
        again = TraceStore.open(path)
        assert again.meta.task_count == 2
        assert not (tmp_path / "run.dtrace.staging").exists()


class TestReplayRoundTrip:
    def test_quartet(self):
        sink = ListSink()
        replay_trace(quartet_tasks(), sink)
        assert sorted(t.key() for t in sink.records) == sorted(t.key() for t in quartet_tasks())

    def test_simkit_trace(self):
        from daisen import KernelSpec, SimConfig, simulate

        first = ListSink()
        cfg = SimConfig(kernel=KernelSpec(work_groups=24, insts_per_wavefront=3, mem_inst_fraction=0.4))
        with CollectorSession(first, seed=11) as s:
            simulate(cfg, s)
        assert validate_trace(first.records, strict=True).ok
        second = ListSink()
        replay_trace(first.records, second)
        assert sorted(t.key() for t in second.records) == sorted(t.key() for t in first.records)


class TestConcurrency:
    def test_parallel_emitters(self):
        sink = ListSink()
        session = CollectorSession(sink, seed=31)
        errors = []

        def emit(worker):
            try:
                for i in range(200):
                    tid = session.begin_task(None, "K", "R", f"CU{worker}", float(i))
                    session.end_task(tid, float(i + 1))
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        threads = [threading.Thread(target=emit, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        session.close()
        assert not errors
        assert len(sink.records) == 800
        assert len({r.id for r in sink.records}) == 800
