"""Rebalance-aware bin packing for consumer group autoscaling.

Partitions are items sized by their measured write speed; consumers are
bins with a fixed capacity.  The package packs, scores the rebalance cost
of each repacking, benchmarks algorithm families against each other, and
drives a simulated broker through safe assignment changes.
"""

from .errors import (
    AckTimeout,
    EmptyList,
    EmptySet,
    InconsistentInput,
    IncompleteRecords,
    InvalidSpec,
    InvariantViolation,
    LengthMismatch,
    OversizeItem,
    PackingError,
    ParseError,
    ScenarioError,
    TooLarge,
    UnknownDelta,
    UnknownPartition,
)
from .model import (
    CLASSIC_ALGORITHMS,
    DEFAULT_CAPACITY,
    MODIFIED_ALGORITHMS,
    Algorithm,
    Assignment,
    Fit,
    Measurement,
    Rank,
)
from .packing import lower_bound, pack_classic, pack_modified
from .oracle import exact_pack
from .metrics import (
    CostPoint,
    IterationRecord,
    avg_rscore,
    cbs,
    pareto_front,
    rebalanced_set,
    rscore,
)
from .streams import InitMode, Stream, StreamSpec, generate, load_stream, save_stream
from .harness import (
    BenchRecord,
    ExperimentPlan,
    ExperimentResult,
    SummaryRow,
    read_summary_csv,
    run_plan,
    run_stream,
    summarize,
    write_records_csv,
    write_summary_csv,
)
from .broker import (
    BrokerWorld,
    ControlMessage,
    ConsumerState,
    MessageKind,
    MonitorWindow,
    PartitionState,
    SimBrokerPort,
    evict_stale,
    monitor_estimate,
)
from .controller import (
    Decision,
    GroupState,
    LogEvent,
    Sentinel,
    SentinelPolicy,
    StateDiff,
    apply_diff,
    compute_diff,
    control_loop,
    synchronize,
    verify_event_log,
    write_event_log,
)
from .scenarios import (
    BUILTIN_SCENARIOS,
    Scenario,
    ScenarioResult,
    builtin_scenario,
    load_scenario,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Assignment",
    "Fit",
    "Measurement",
    "Rank",
    "DEFAULT_CAPACITY",
    "CLASSIC_ALGORITHMS",
    "MODIFIED_ALGORITHMS",
    "lower_bound",
    "pack_classic",
    "pack_modified",
    "exact_pack",
    "rebalanced_set",
    "rscore",
    "cbs",
    "avg_rscore",
    "pareto_front",
    "IterationRecord",
    "CostPoint",
    "InitMode",
    "StreamSpec",
    "Stream",
    "generate",
    "save_stream",
    "load_stream",
    "ExperimentPlan",
    "ExperimentResult",
    "BenchRecord",
    "SummaryRow",
    "run_stream",
    "read_summary_csv",
    "run_plan",
    "summarize",
    "write_records_csv",
    "write_summary_csv",
    "BrokerWorld",
    "SimBrokerPort",
    "PartitionState",
    "ConsumerState",
    "ControlMessage",
    "MessageKind",
    "MonitorWindow",
    "monitor_estimate",
    "evict_stale",
    "Decision",
    "SentinelPolicy",
    "Sentinel",
    "GroupState",
    "StateDiff",
    "LogEvent",
    "compute_diff",
    "apply_diff",
    "synchronize",
    "control_loop",
    "verify_event_log",
    "write_event_log",
    "Scenario",
    "ScenarioResult",
    "BUILTIN_SCENARIOS",
    "builtin_scenario",
    "load_scenario",
    "run_scenario",
    "PackingError",
    "OversizeItem",
    "InconsistentInput",
    "TooLarge",
    "UnknownPartition",
    "LengthMismatch",
    "EmptySet",
    "EmptyList",
    "InvalidSpec",
    "IncompleteRecords",
    "ParseError",
    "UnknownDelta",
    "ScenarioError",
    "AckTimeout",
    "InvariantViolation",
]
