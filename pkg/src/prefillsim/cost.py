"""Analytic cost model for tensor-parallel transformer prefill.

One transformer layer is broken into seven stages: the attention block
(QKV projection, causal attention core, output projection, all-reduce)
followed by the MLP block (fused up/gate projection, down projection,
all-reduce). Compute stages are costed in FLOPs and converted to seconds
against an effective per-device throughput; the two all-reduce stages are
costed as ring collectives against an effective per-device link bandwidth.

Token accounting is exact: every compute formula is linear in the chunk
length except the causal attention core, which uses the exact prefix-sum
form so that splitting a sequence into chunks conserves total FLOPs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class StageKind(Enum):
    QKV_PROJ = "QkvProj"
    ATTN_CORE = "AttnCore"
    O_PROJ = "OProj"
    ATTN_ALL_REDUCE = "AttnAllReduce"
    UP_GATE_PROJ = "UpGateProj"
    DOWN_PROJ = "DownProj"
    MLP_ALL_REDUCE = "MlpAllReduce"


# Fixed within-layer execution order.
STAGE_ORDER: tuple[StageKind, ...] = (
    StageKind.QKV_PROJ,
    StageKind.ATTN_CORE,
    StageKind.O_PROJ,
    StageKind.ATTN_ALL_REDUCE,
    StageKind.UP_GATE_PROJ,
    StageKind.DOWN_PROJ,
    StageKind.MLP_ALL_REDUCE,
)

STAGE_INDEX = {stage: i for i, stage in enumerate(STAGE_ORDER)}

COMM_STAGES = frozenset({StageKind.ATTN_ALL_REDUCE, StageKind.MLP_ALL_REDUCE})
COMPUTE_STAGES = frozenset(s for s in STAGE_ORDER if s not in COMM_STAGES)

_ELEMENT_BYTES = (1, 2, 4)


@dataclass(frozen=True)
class ModelSpec:
    """Transformer architecture parameters.

    weight_bytes / activation_bytes record the storage precision of the
    modeled deployment (e.g. int8 weights with float16 activations); they
    are descriptive and do not enter the timing formulas. Bytes on the
    wire are a hardware-profile property.
    """

    num_layers: int
    hidden_size: int
    num_heads: int
    num_kv_heads: int
    ffn_size: int
    weight_bytes: int = 2
    activation_bytes: int = 2

    def __post_init__(self):
        for field in ("num_layers", "hidden_size", "num_heads", "num_kv_heads", "ffn_size"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be strictly positive")
        if self.num_heads % self.num_kv_heads != 0:
            raise ValueError("num_heads must be divisible by num_kv_heads")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        for field in ("weight_bytes", "activation_bytes"):
            if getattr(self, field) not in _ELEMENT_BYTES:
                raise ValueError(f"{field} must be one of {_ELEMENT_BYTES}")

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.num_heads


@dataclass(frozen=True)
class HardwareProfile:
    """Effective (not peak) device parameters.

    compute_throughput: FLOP/s sustained per device on dense GEMMs.
    comm_bandwidth: bytes/s of per-device wire traffic during a collective.
    comm_base_latency: seconds of fixed cost per collective launch.
    contention_factor: fractional compute slowdown while a communication
        task is concurrently in flight (0 = interference-free).
    launch_overhead: seconds of fixed cost per compute kernel launch.
    comm_element_bytes: bytes per element on the wire (2 for float16
        transport, 1 for int8-quantized transport).
    """

    name: str
    compute_throughput: float
    comm_bandwidth: float
    comm_base_latency: float
    contention_factor: float
    launch_overhead: float
    comm_element_bytes: int

    def __post_init__(self):
        if not self.name:
            raise ValueError("profile name must be non-empty")
        if self.compute_throughput <= 0:
            raise ValueError("compute_throughput must be > 0")
        if self.comm_bandwidth <= 0:
            raise ValueError("comm_bandwidth must be > 0")
        if self.comm_base_latency < 0:
            raise ValueError("comm_base_latency must be >= 0")
        if self.contention_factor < 0:
            raise ValueError("contention_factor must be >= 0")
        if self.launch_overhead < 0:
            raise ValueError("launch_overhead must be >= 0")
        if not isinstance(self.comm_element_bytes, int) or self.comm_element_bytes < 1:
            raise ValueError("comm_element_bytes must be a positive integer")


@dataclass(frozen=True)
class Workload:
    """A prefill request (or one chunk of it) on a tensor-parallel group.

    prefix_len counts tokens already present in the KV cache before this
    workload runs; it is 0 for a whole request.
    """

    prompt_len: int
    tp_degree: int
    prefix_len: int = 0

    def __post_init__(self):
        if self.prompt_len < 0:
            raise ValueError("prompt_len must be >= 0")
        if self.tp_degree < 1:
            raise ValueError("tp_degree must be >= 1")
        if self.prefix_len < 0:
            raise ValueError("prefix_len must be >= 0")


def _tri(n: int) -> int:
    """n-th triangular number: 1 + 2 + ... + n."""
    return n * (n + 1) // 2


def stage_flops(stage: StageKind, model: ModelSpec, chunk_start: int, chunk_len: int) -> int:
    """FLOPs of one layer's compute stage over tokens [chunk_start, chunk_start+chunk_len).

    Counts are for the whole layer before tensor-parallel division. The
    attention core is causal: token i (global position) attends to i+1
    positions, costing 2*h for the QK^T row and 2*h for the PV row, hence
    4*h*(i+1) per token; the chunk total telescopes over triangular
    numbers, which makes the count exactly additive across chunk splits.
    """
    if stage in COMM_STAGES:
        raise ValueError(f"{stage.value} is a communication stage, not a compute stage")
    if chunk_start < 0 or chunk_len < 0:
        raise ValueError("chunk_start and chunk_len must be >= 0")
    h = model.hidden_size
    if stage is StageKind.QKV_PROJ:
        kv_dim = model.head_dim * model.num_kv_heads
        return 2 * chunk_len * h * (h + 2 * kv_dim)
    if stage is StageKind.ATTN_CORE:
        end = chunk_start + chunk_len
        return 4 * h * (_tri(end) - _tri(chunk_start))
    if stage is StageKind.O_PROJ:
        return 2 * chunk_len * h * h
    if stage is StageKind.UP_GATE_PROJ:
        return 2 * chunk_len * h * (2 * model.ffn_size)
    if stage is StageKind.DOWN_PROJ:
        return 2 * chunk_len * model.ffn_size * h
    raise ValueError(f"unknown stage {stage!r}")


def stage_comm_bytes(
    stage: StageKind,
    model: ModelSpec,
    chunk_len: int,
    tp_degree: int,
    profile: HardwareProfile,
) -> int | float:
    """Per-device wire volume of one all-reduce over a chunk's activations.

    The payload is one hidden-state tensor (chunk_len * hidden_size
    elements at the wire precision); a ring all-reduce moves
    2*(p-1)/p of the payload through every device. Returns an exact int
    whenever the ring fraction divides evenly.
    """
    if stage not in COMM_STAGES:
        raise ValueError(f"{stage.value} is a compute stage, not a communication stage")
    if tp_degree < 1:
        raise ValueError("tp_degree must be >= 1")
    if chunk_len < 0:
        raise ValueError("chunk_len must be >= 0")
    if tp_degree == 1:
        return 0
    payload = chunk_len * model.hidden_size * profile.comm_element_bytes
    scaled = 2 * (tp_degree - 1) * payload
    if scaled % tp_degree == 0:
        return scaled // tp_degree
    return scaled / tp_degree


def stage_duration(
    stage: StageKind,
    model: ModelSpec,
    workload: Workload,
    chunk_start: int,
    chunk_len: int,
    profile: HardwareProfile,
) -> float:
    """Uncontended duration of one stage on one device, in seconds.

    Compute: flops / tp_degree / throughput + launch_overhead.
    All-reduce: comm_base_latency + wire_bytes / bandwidth, and exactly 0
    when tp_degree == 1 (the collective is elided entirely).
    Contention between concurrent compute and communication is applied by
    the scheduler, not here.
    """
    if stage in COMM_STAGES:
        if workload.tp_degree == 1:
            return 0.0
        wire = stage_comm_bytes(stage, model, chunk_len, workload.tp_degree, profile)
        return profile.comm_base_latency + wire / profile.comm_bandwidth
    flops = stage_flops(stage, model, chunk_start, chunk_len)
    return flops / workload.tp_degree / profile.compute_throughput + profile.launch_overhead


class Regime(Enum):
    COMM_DOMINANT = "CommDominant"
    COMPUTE_DOMINANT = "ComputeDominant"
    BALANCED = "Balanced"


@dataclass(frozen=True)
class RegimeReport:
    """Per-layer compute/communication balance for a workload."""

    compute_seconds: float
    comm_seconds: float
    ratio: float  # comm_seconds / compute_seconds
    label: Regime

    @property
    def comm_share(self) -> float:
        total = self.compute_seconds + self.comm_seconds
        if total == 0:
            return 0.0
        return self.comm_seconds / total

    @property
    def compute_share(self) -> float:
        total = self.compute_seconds + self.comm_seconds
        if total == 0:
            return 0.0
        return self.compute_seconds / total


def regime_report(model: ModelSpec, workload: Workload, profile: HardwareProfile) -> RegimeReport:
    """Classify a scenario as communication- or compute-dominant.

    Sums the uncontended durations of one layer's five compute stages and
    two all-reduce stages for the whole workload processed as a single
    chunk. Ties within a relative tolerance of 1e-9 are labeled Balanced.
    """
    compute = 0.0
    comm = 0.0
    for stage in STAGE_ORDER:
        d = stage_duration(stage, model, workload, workload.prefix_len, workload.prompt_len, profile)
        if stage in COMM_STAGES:
            comm += d
        else:
            compute += d
    scale = max(abs(compute), abs(comm))
    if abs(comm - compute) <= 1e-9 * scale or scale == 0.0:
        label = Regime.BALANCED
    elif comm > compute:
        label = Regime.COMM_DOMINANT
    else:
        label = Regime.COMPUTE_DOMINANT
    if compute > 0:
        ratio = comm / compute
    else:
        ratio = float("inf") if comm > 0 else 1.0
    return RegimeReport(compute_seconds=compute, comm_seconds=comm, ratio=ratio, label=label)
