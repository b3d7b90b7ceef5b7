"""A miniature deterministic GPU model that emits hierarchical traces.

The pipeline mirrors how real GPU hardware is organized: a Command
Processor splits a kernel into work-groups and dispatches up to
``dispatch_rate`` of them per cycle to Compute Units with free wavefront
slots; each work-group's wavefronts run on the CU's SIMD units (one
wavefront is pinned to one SIMD, round-robin); a compute instruction
occupies its SIMD for ceil(64/simd_width) cycles (64 work-items per
wavefront); a memory instruction blocks its wavefront while a request
chain runs CU -> L1 -> (miss) L2 -> (miss) DRAM with the configured
latencies and one transit cycle per hop.

Everything is emitted through the collector's seven calls. The event queue
is ordered by (cycle, sequence) and all stochastic draws (opcodes,
hit/miss) are pregenerated per wavefront from the seed, so one seed means
one byte-identical trace, independent of event timing.

Scale note: defaults use 8 CUs rather than a full chip's 64 so traces stay
desk-sized; the structural ratios (4 SIMD/CU, width 16, 40 wavefront
slots) follow the R9-Nano-class organization the defaults are modeled on.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .collector import CollectorSession
from .errors import ConfigError

WAVEFRONT_SIZE = 64
_OP_POOL = ("ADD", "MUL", "MAD", "SUB")


@dataclass(frozen=True)
class KernelSpec:
    work_groups: int = 1024
    wavefronts_per_wg: int = 1
    insts_per_wavefront: int = 2
    mem_inst_fraction: float = 0.125


@dataclass(frozen=True)
class MemorySpec:
    l1_latency: int = 4
    l2_latency: int = 16
    dram_latency: int = 64
    l1_hit_rate: float = 0.8
    l2_hit_rate: float = 0.7


@dataclass(frozen=True)
class SimConfig:
    cu_count: int = 8
    simd_per_cu: int = 4
    simd_width: int = 16
    max_wavefronts_per_cu: int = 40
    dispatch_rate: int = 1
    clock_period: float = 1e-9
    kernel: KernelSpec = field(default_factory=KernelSpec)
    memory: MemorySpec = field(default_factory=MemorySpec)
    seed: int = 42

    def validate(self) -> None:
        k, m = self.kernel, self.memory
        checks = [
            (self.cu_count >= 1, "cu_count must be >= 1"),
            (self.simd_per_cu >= 1, "simd_per_cu must be >= 1"),
            (self.simd_width >= 1, "simd_width must be >= 1"),
            (self.dispatch_rate >= 1, "dispatch_rate must be >= 1"),
            (self.clock_period > 0, "clock_period must be positive"),
            (k.work_groups >= 1, "kernel needs at least one work-group"),
            (1 <= k.wavefronts_per_wg <= 8, "wavefronts_per_wg must be in [1, 8]"),
            (k.insts_per_wavefront >= 0, "insts_per_wavefront must be >= 0"),
            (0.0 <= k.mem_inst_fraction <= 1.0, "mem_inst_fraction must be in [0, 1]"),
            (self.max_wavefronts_per_cu >= k.wavefronts_per_wg,
             "a work-group must fit in a CU's wavefront slots"),
            (m.l1_latency >= 1 and m.l2_latency >= 1 and m.dram_latency >= 1,
             "memory latencies must be >= 1 cycle"),
            (0.0 <= m.l1_hit_rate <= 1.0 and 0.0 <= m.l2_hit_rate <= 1.0,
             "hit rates must be in [0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)


@dataclass(frozen=True)
class SimResult:
    total_time: float
    tasks_emitted: int
    sink: object
    cycles: int


@dataclass(frozen=True)
class DispatchExperiment:
    rate1: SimResult
    rate2: SimResult
    speedup: float


def default_config() -> SimConfig:
    """The dispatch-bound preset: many one-wavefront work-groups with short
    compute bursts, so the Command Processor is the bottleneck."""
    return SimConfig()


def compute_bound_config() -> SimConfig:
    """One huge work-group; dispatch is off the critical path by construction."""
    return SimConfig(
        kernel=KernelSpec(
            work_groups=1, wavefronts_per_wg=8, insts_per_wavefront=256, mem_inst_fraction=0.0
        )
    )


def load_sim_config(path) -> SimConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    base = SimConfig()
    kernel = replace(base.kernel, **data.pop("kernel", {}))
    memory = replace(base.memory, **data.pop("memory", {}))
    try:
        cfg = replace(base, kernel=kernel, memory=memory, **data)
    except TypeError as exc:
        raise ConfigError(f"bad sim config: {exc}") from None
    cfg.validate()
    return cfg


# --- locations ------------------------------------------------------------

def cp_location() -> str:
    return "GPU1.CommandProcessor"


def cu_location(cu: int) -> str:
    return f"GPU1.CU{cu:02d}"


def simd_location(cu: int, simd: int) -> str:
    return f"GPU1.CU{cu:02d}.SIMD{simd}"


def l1_location(cu: int) -> str:
    return f"GPU1.L1_{cu:02d}"


def l2_location(cu: int, cfg: SimConfig) -> str:
    return f"GPU1.L2_{cu // 4}"


def dram_location() -> str:
    return "GPU1.DRAM_0"


@dataclass
class _Wavefront:
    wg: int
    index: int  # within the work-group
    cu: int
    simd: int
    task_id: str = ""
    insts: list = field(default_factory=list)  # pregenerated draws
    next_inst: int = 0


class _Sim:
    def __init__(self, cfg: SimConfig, session: CollectorSession):
        cfg.validate()
        self.cfg = cfg
        self.session = session
        self.clk = cfg.clock_period
        self.events: list = []
        self.seq = 0
        self.emitted = 0
        self.kernel_id: Optional[str] = None
        self.pending_wgs: list = []
        self.next_cu = 0
        self.free_slots = [cfg.max_wavefronts_per_cu] * cfg.cu_count
        self.simd_busy_until = [
            [0] * cfg.simd_per_cu for _ in range(cfg.cu_count)
        ]
        self.simd_ready: list = [
            [[] for _ in range(cfg.simd_per_cu)] for _ in range(cfg.cu_count)
        ]
        self.next_simd = [0] * cfg.cu_count
        self.wg_tasks: dict = {}
        self.wg_live_wfs: dict = {}
        self.live_wgs = 0
        self.last_end_cycle = 0
        self.compute_cycles = max(1, math.ceil(WAVEFRONT_SIZE / cfg.simd_width))

    # --- helpers ---------------------------------------------------------------

    def t(self, cycle: int) -> float:
        return cycle * self.clk

    def push(self, cycle: int, kind: str, payload=None) -> None:
        heapq.heappush(self.events, (cycle, self.seq, kind, payload))
        self.seq += 1

    def begin(self, parent, category, action, location, cycle, details=None) -> str:
        return self.session.begin_task(parent, category, action, location, self.t(cycle), details)

    def end(self, task_id, cycle) -> None:
        self.session.end_task(task_id, self.t(cycle))
        self.emitted += 1
        self.last_end_cycle = max(self.last_end_cycle, cycle)

    def _wf_rng(self, wg: int, wf: int) -> random.Random:
        return random.Random(self.cfg.seed * 2654435761 + wg * 40503 + wf * 97 + 1)

    def _gen_insts(self, wg: int, wf: int) -> list:
        rng = self._wf_rng(wg, wf)
        k = self.cfg.kernel
        m = self.cfg.memory
        insts = []
        for _ in range(k.insts_per_wavefront):
            if rng.random() < k.mem_inst_fraction:
                insts.append(("mem", rng.random() < m.l1_hit_rate, rng.random() < m.l2_hit_rate))
            else:
                insts.append(("compute", rng.choice(_OP_POOL), None))
        return insts

    # --- event handlers -------------------------------------------------------

    def run(self) -> SimResult:
        self.kernel_id = self.begin(None, "Kernel", "Run", cp_location(), 0)
        self.pending_wgs = list(range(self.cfg.kernel.work_groups))
        self.live_wgs = len(self.pending_wgs)
        self.push(0, "cp")
        while self.events:
            cycle, _, kind, payload = heapq.heappop(self.events)
            if kind == "cp":
                self.on_cp(cycle)
            elif kind == "simd":
                self.on_simd(cycle, *payload)
            elif kind == "wf_ready":
                self.on_wf_ready(cycle, payload)
        end_cycle = self.last_end_cycle
        self.end(self.kernel_id, end_cycle)
        self.session.flush()
        return SimResult(
            total_time=self.t(end_cycle),
            tasks_emitted=self.emitted,
            sink=self.session.sink,
            cycles=end_cycle,
        )

    def on_cp(self, cycle: int) -> None:
        dispatched = 0
        while self.pending_wgs and dispatched < self.cfg.dispatch_rate:
            cu = self._find_cu()
            if cu is None:
                break
            self._dispatch_wg(self.pending_wgs.pop(0), cu, cycle + 1)
            dispatched += 1
        if self.pending_wgs:
            self.push(cycle + 1, "cp")

    def _find_cu(self) -> Optional[int]:
        need = self.cfg.kernel.wavefronts_per_wg
        for i in range(self.cfg.cu_count):
            cu = (self.next_cu + i) % self.cfg.cu_count
            if self.free_slots[cu] >= need:
                self.next_cu = (cu + 1) % self.cfg.cu_count
                return cu
        return None

    def _dispatch_wg(self, wg: int, cu: int, cycle: int) -> None:
        k = self.cfg.kernel
        wg_id = self.begin(self.kernel_id, "Work-Group", "Exec", cu_location(cu), cycle)
        self.wg_tasks[wg] = wg_id
        self.wg_live_wfs[wg] = k.wavefronts_per_wg
        self.free_slots[cu] -= k.wavefronts_per_wg
        for i in range(k.wavefronts_per_wg):
            simd = self.next_simd[cu]
            self.next_simd[cu] = (simd + 1) % self.cfg.simd_per_cu
            wf = _Wavefront(wg=wg, index=i, cu=cu, simd=simd, insts=self._gen_insts(wg, i))
            wf.task_id = self.begin(wg_id, "Wavefront", "Exec", cu_location(cu), cycle)
            self.push(cycle, "wf_ready", wf)

    def on_wf_ready(self, cycle: int, wf: _Wavefront) -> None:
        if wf.next_inst >= len(wf.insts):
            self.end(wf.task_id, cycle)
            self.free_slots[wf.cu] += 1
            self.wg_live_wfs[wf.wg] -= 1
            if self.wg_live_wfs[wf.wg] == 0:
                self.end(self.wg_tasks[wf.wg], cycle)
                self.live_wgs -= 1
            return
        self.simd_ready[wf.cu][wf.simd].append(wf)
        self.push(cycle, "simd", (wf.cu, wf.simd))

    def on_simd(self, cycle: int, cu: int, simd: int) -> None:
        if self.simd_busy_until[cu][simd] > cycle:
            return
        queue = self.simd_ready[cu][simd]
        if not queue:
            return
        wf = queue.pop(0)
        inst = wf.insts[wf.next_inst]
        wf.next_inst += 1
        details = {"wf": f"{wf.wg}.{wf.index}", "wg": str(wf.wg)}
        if inst[0] == "compute":
            op = inst[1]
            done = cycle + self.compute_cycles
            tid = self.begin(
                wf.task_id,
                "Instruction",
                f"Execute {op} Instruction",
                simd_location(cu, simd),
                cycle,
                {"op": op, **details},
            )
            self.end(tid, done)
            self.simd_busy_until[cu][simd] = done
            self.push(done, "simd", (cu, simd))
            self.push(done, "wf_ready", wf)
        else:
            _, l1_hit, l2_hit = inst
            tid = self.begin(
                wf.task_id,
                "Instruction",
                "Read Memory",
                cu_location(cu),
                cycle,
                {"op": "LOAD", **details},
            )
            resp = self._emit_mem_chain(tid, cu, cycle, l1_hit, l2_hit)
            self.end(tid, resp)
            self.simd_busy_until[cu][simd] = cycle + 1
            self.push(cycle + 1, "simd", (cu, simd))
            self.push(resp, "wf_ready", wf)

    def _emit_mem_chain(self, inst_id: str, cu: int, cycle: int, l1_hit: bool, l2_hit: bool) -> int:
        """CU -> L1 (-> L2 -> DRAM on misses); one transit cycle per hop.
        Returns the cycle the response reaches the wavefront."""
        ses, m = self.session, self.cfg.memory
        ro1 = ses.initiate_request(inst_id, "Read Memory", cu_location(cu), self.t(cycle))
        ri1 = ses.receive_request(ro1, l1_location(cu), self.t(cycle + 1))
        if l1_hit:
            ri1_end = cycle + 1 + m.l1_latency
        else:
            ro2_start = cycle + 1 + m.l1_latency
            ro2 = ses.initiate_request(ri1, "Read Memory", l1_location(cu), self.t(ro2_start))
            ri2 = ses.receive_request(ro2, l2_location(cu, self.cfg), self.t(ro2_start + 1))
            if l2_hit:
                ri2_end = ro2_start + 1 + m.l2_latency
            else:
                ro3_start = ro2_start + 1 + m.l2_latency
                ro3 = ses.initiate_request(ri2, "Read Memory", l2_location(cu, self.cfg), self.t(ro3_start))
                ri3 = ses.receive_request(ro3, dram_location(), self.t(ro3_start + 1))
                ri3_end = ro3_start + 1 + m.dram_latency
                ses.complete_request(ri3, self.t(ri3_end))
                self._count(ri3_end)
                ses.receive_response(ro3, self.t(ri3_end + 1))
                self._count(ri3_end + 1)
                ri2_end = ri3_end + 1
            ses.complete_request(ri2, self.t(ri2_end))
            self._count(ri2_end)
            ses.receive_response(ro2, self.t(ri2_end + 1))
            self._count(ri2_end + 1)
            ri1_end = ri2_end + 1
        ses.complete_request(ri1, self.t(ri1_end))
        self._count(ri1_end)
        ses.receive_response(ro1, self.t(ri1_end + 1))
        self._count(ri1_end + 1)
        return ri1_end + 1

    def _count(self, cycle: int) -> None:
        self.emitted += 1
        self.last_end_cycle = max(self.last_end_cycle, cycle)


def simulate(config: SimConfig, session: CollectorSession) -> SimResult:
    """Run the model, emitting every task through the session."""
    return _Sim(config, session).run()


def dispatch_experiment(base: SimConfig, sink_factory=None) -> DispatchExperiment:
    """The case-study experiment: the same kernel at dispatch rates 1 and 2.

    ``sink_factory(rate)`` provides the sink per run (defaults to in-memory
    sinks). Speedup is total_time(rate 1) / total_time(rate 2).
    """
    from .collector import ListSink

    results = []
    for rate in (1, 2):
        sink = sink_factory(rate) if sink_factory is not None else ListSink()
        cfg = replace(base, dispatch_rate=rate)
        with CollectorSession(sink, seed=cfg.seed) as session:
            results.append(simulate(cfg, session))
    r1, r2 = results
    return DispatchExperiment(rate1=r1, rate2=r2, speedup=r1.total_time / r2.total_time)
