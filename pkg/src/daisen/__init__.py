"""daisen: record, store, query and visualize hardware execution traces."""

from .collector import CollectorSession, TokenSource, WriteStats, replay_trace, store_sink
from .errors import (
    BadRangeError,
    BadRegexError,
    BindError,
    ChildOpenError,
    ConfigError,
    CycleError,
    DaisenError,
    SameLocationError,
    SessionClosedError,
    StoreIOError,
    TimeOrderError,
    UnknownIdError,
    ValidationError,
)
from .layout import (
    ColorKeyMap,
    LayoutBar,
    TaskViewLayout,
    assign_rows,
    build_color_key,
    cubehelix_curve,
    cubehelix_palette,
    layout_component,
    layout_task_view,
)
from .metrics import (
    ExpectationTable,
    MetricKind,
    MetricSeries,
    compute_series,
    peak_reference,
    time_average_count,
)
from .model import (
    Finding,
    Task,
    TaskKind,
    ValidationReport,
    classify_kind,
    read_jsonl,
    validate_task,
    validate_trace,
    write_jsonl,
)
from .simkit import (
    DispatchExperiment,
    KernelSpec,
    MemorySpec,
    SimConfig,
    SimResult,
    compute_bound_config,
    default_config,
    dispatch_experiment,
    load_sim_config,
    simulate,
)
from .store import ComponentInfo, TraceMeta, TraceStore, natural_key

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
