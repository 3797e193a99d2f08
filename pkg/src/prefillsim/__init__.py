"""Discrete-event simulation of compute/communication overlap strategies
for tensor-parallel transformer prefill."""

from .configio import (
    Config,
    ConfigError,
    SweepRow,
    SweepSpec,
    load_config,
    parse_config_text,
    parse_token_count,
    strategy_from_spec,
    strategy_spec,
)
from .cost import (
    COMM_STAGES,
    COMPUTE_STAGES,
    STAGE_ORDER,
    HardwareProfile,
    ModelSpec,
    Regime,
    RegimeReport,
    StageKind,
    Workload,
    regime_report,
    stage_comm_bytes,
    stage_duration,
    stage_flops,
)
from .harness import (
    CSV_HEADER,
    ExperimentResult,
    Scenario,
    emit_table,
    emit_trace,
    evaluate_scenario,
    format_csv,
    format_table,
    parse_scenario_key,
    run_sweep,
)
from .optimizer import SplitSearchConfig, optimize_four_part, optimize_two_chunk_ratio
from .oracle import OracleLimit, discrete_time_replay, optimal_makespan_bruteforce
from .presets import bundled_models, bundled_profiles, default_sweep
from .scheduler import (
    GraphValidationError,
    Placement,
    Schedule,
    makespan_lower_bound,
    run_schedule,
    schedule_trace,
    serial_reference_makespan,
    speedup_vs_serial,
    trace_makespan,
    trace_to_text,
)
from .taskgraph import (
    GemmOverlap,
    GraphBuildError,
    GraphMeta,
    IsoFourPart,
    IsoTwoChunk,
    Lane,
    RequestOverlap,
    Serial,
    Strategy,
    Task,
    TaskGraph,
    build_graph,
    micro_batch_spans,
    serialize_tasks,
    validate_graph,
)

__version__ = "0.1.0"
