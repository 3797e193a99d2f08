"""Task-graph builders for the four prefill execution strategies.

A strategy turns one prefill workload into a DAG of compute and
communication tasks over a stack of transformer layers:

* Serial: one micro-batch, one straight chain per layer stack.
* GemmOverlap: the output projection and down projection are cut into
  token blocks, each followed by its own block all-reduce, so block k+1's
  GEMM can run while block k's collective is on the wire.
* RequestOverlap: a second, independent request is interleaved with the
  first; the two ping-pong between the compute and communication lanes.
* IsoTwoChunk / IsoFourPart: one request is cut along the sequence
  dimension into staggered chunks. Chunk k's attention core must wait for
  chunk k-1's attention core at the same layer (the KV cache entries it
  reads are complete only then); every other stage of a later chunk is
  free to overlap with earlier chunks' collectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .cost import (
    COMM_STAGES,
    STAGE_INDEX,
    STAGE_ORDER,
    HardwareProfile,
    ModelSpec,
    StageKind,
    Workload,
    stage_comm_bytes,
    stage_duration,
    stage_flops,
)


class Lane(Enum):
    COMPUTE = "compute"
    COMM = "comm"


@dataclass(frozen=True)
class Serial:
    pass


@dataclass(frozen=True)
class GemmOverlap:
    num_blocks: int

    def __post_init__(self):
        if self.num_blocks < 2:
            raise ValueError("num_blocks must be >= 2")


@dataclass(frozen=True)
class RequestOverlap:
    # None means "mirror the primary request's prompt length", the
    # perfectly balanced twin-request best case.
    second_prompt_len: int | None = None

    def __post_init__(self):
        if self.second_prompt_len is not None and self.second_prompt_len < 1:
            raise ValueError("second_prompt_len must be >= 1")


@dataclass(frozen=True)
class IsoTwoChunk:
    split_ratio: float = 0.5  # fraction of tokens in the FIRST chunk

    def __post_init__(self):
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class IsoFourPart:
    ratios: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.ratios) != 4:
            raise ValueError("ratios must have exactly 4 entries")
        if any(r <= 0.0 for r in self.ratios):
            raise ValueError("every ratio must be > 0")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")


Strategy = Union[Serial, GemmOverlap, RequestOverlap, IsoTwoChunk, IsoFourPart]

_ISO_STRATEGIES = (IsoTwoChunk, IsoFourPart)


class GraphBuildError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    """One schedulable unit of work.

    chunk_start/chunk_len record the token range the task was costed on
    (chunk_start is the attention prefix for AttnCore tasks); they allow
    work-conservation audits without reconstructing the split.
    """

    id: int
    micro_batch: int
    layer: int
    stage: StageKind
    block: int
    duration: float
    resource: Lane
    deps: tuple[int, ...]
    chunk_start: int = 0
    chunk_len: int = 0


@dataclass(frozen=True)
class GraphMeta:
    strategy: Strategy | None
    model: ModelSpec | None
    workload: Workload | None
    profile: HardwareProfile | None


@dataclass(frozen=True)
class TaskGraph:
    tasks: tuple[Task, ...]
    meta: GraphMeta = field(default_factory=lambda: GraphMeta(None, None, None, None))


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _block_bounds(total: int, parts: int) -> list[int]:
    # round-half-up on the exact rational i*total/parts, in integer arithmetic
    return [(2 * i * total + parts) // (2 * parts) for i in range(parts + 1)]


def micro_batch_spans(strategy: Strategy, workload: Workload) -> list[tuple[int, int]]:
    """Token span of each micro-batch as (attention_prefix, chunk_len).

    The attention prefix counts KV-cache tokens already written when the
    micro-batch's attention runs: earlier chunks of the same request
    accumulate into it, while the twin request of RequestOverlap starts
    fresh at prefix 0.
    """
    s = workload.prompt_len
    p0 = workload.prefix_len
    if isinstance(strategy, (Serial, GemmOverlap)):
        spans = [(p0, s)]
    elif isinstance(strategy, RequestOverlap):
        second = strategy.second_prompt_len if strategy.second_prompt_len is not None else s
        spans = [(p0, s), (0, second)]
    elif isinstance(strategy, IsoTwoChunk):
        m = round_half_up(strategy.split_ratio * s)
        spans = [(p0, m), (p0 + m, s - m)]
    elif isinstance(strategy, IsoFourPart):
        bounds = [0]
        cum = 0.0
        for r in strategy.ratios[:3]:
            cum += r
            bounds.append(round_half_up(cum * s))
        bounds.append(s)
        spans = []
        prefix = p0
        for a, b in zip(bounds, bounds[1:]):
            spans.append((prefix, b - a))
            prefix += b - a
    else:
        raise GraphBuildError(f"unknown strategy {strategy!r}")
    for _, length in spans:
        if length < 1:
            raise GraphBuildError(
                f"strategy {strategy!r} produces an empty chunk for prompt_len={s}"
            )
    return spans


def build_graph(
    strategy: Strategy,
    model: ModelSpec,
    workload: Workload,
    profile: HardwareProfile,
) -> TaskGraph:
    """Construct the dependency DAG for a strategy.

    Within one micro-batch and layer the seven stages are chained in
    order; layer l+1's QKV projection waits on layer l's MLP all-reduce.
    A later chunk's QKV projection deliberately does NOT wait on earlier
    chunks (projections are token-local), which is what lets a chunk's
    compute slide under another chunk's collectives. Only the attention
    cores are ordered across chunks.
    """
    spans = micro_batch_spans(strategy, workload)
    if workload.prompt_len < len(spans):
        raise GraphBuildError("prompt_len must be at least the number of micro-batches")
    iso = isinstance(strategy, _ISO_STRATEGIES)
    gemm_blocks = strategy.num_blocks if isinstance(strategy, GemmOverlap) else 0
    if gemm_blocks and workload.prompt_len < gemm_blocks:
        raise GraphBuildError("num_blocks exceeds prompt_len; blocks would be empty")

    tasks: list[Task] = []
    attn_ids: dict[tuple[int, int], int] = {}

    def add(mb, layer, stage, block, deps, chunk_start, chunk_len) -> int:
        tid = len(tasks)
        lane = Lane.COMM if stage in COMM_STAGES else Lane.COMPUTE
        duration = stage_duration(stage, model, workload, chunk_start, chunk_len, profile)
        tasks.append(
            Task(
                id=tid,
                micro_batch=mb,
                layer=layer,
                stage=stage,
                block=block,
                duration=duration,
                resource=lane,
                deps=tuple(deps),
                chunk_start=chunk_start,
                chunk_len=chunk_len,
            )
        )
        return tid

    for mb, (attn_prefix, length) in enumerate(spans):
        carry: tuple[int, ...] = ()  # ids the next stage must wait on
        for layer in range(model.num_layers):
            for stage in STAGE_ORDER:
                if gemm_blocks and stage in (StageKind.O_PROJ, StageKind.DOWN_PROJ):
                    bounds = _block_bounds(length, gemm_blocks)
                    compute_ids = []
                    for b, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
                        compute_ids.append(
                            add(mb, layer, stage, b, carry, attn_prefix + lo, hi - lo)
                        )
                    carry = tuple(compute_ids)
                elif gemm_blocks and stage in COMM_STAGES:
                    # one block collective per block GEMM, paired by index
                    bounds = _block_bounds(length, gemm_blocks)
                    comm_ids = []
                    for b, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
                        comm_ids.append(
                            add(mb, layer, stage, b, (carry[b],), attn_prefix + lo, hi - lo)
                        )
                    carry = tuple(comm_ids)
                else:
                    deps = carry
                    if stage is StageKind.ATTN_CORE and iso and mb > 0:
                        deps = deps + (attn_ids[(mb - 1, layer)],)
                    tid = add(mb, layer, stage, 0, deps, attn_prefix, length)
                    if stage is StageKind.ATTN_CORE:
                        attn_ids[(mb, layer)] = tid
                    carry = (tid,)

    meta = GraphMeta(strategy=strategy, model=model, workload=workload, profile=profile)
    return TaskGraph(tasks=tuple(tasks), meta=meta)


def validate_graph(graph: TaskGraph) -> list[str]:
    """Structural audit of a task graph; returns a list of violations.

    Checks id ordering, lane assignment, acyclicity, the within-layer
    stage chain, per-micro-batch layer chaining, and (for intra-sequence
    strategies) the cross-chunk attention ordering edges. An empty list
    means the graph is valid.
    """
    violations: list[str] = []
    tasks = graph.tasks
    ids = [t.id for t in tasks]
    known = set()
    for t in tasks:
        if t.id in known:
            violations.append(f"duplicate task id {t.id}")
        known.add(t.id)
    id_set = set(ids)

    for t in tasks:
        expected = Lane.COMM if t.stage in COMM_STAGES else Lane.COMPUTE
        if t.resource is not expected:
            violations.append(f"task {t.id} ({t.stage.value}) assigned to {t.resource.value} lane")
        for d in t.deps:
            if d not in id_set:
                violations.append(f"task {t.id} depends on unknown task {d}")
            elif d >= t.id:
                violations.append(f"task {t.id} depends on task {d} constructed later")
        if t.duration < 0 or not math.isfinite(t.duration):
            violations.append(f"task {t.id} has invalid duration {t.duration}")

    # Kahn's algorithm over the declared edges (catches cycles even when
    # the id-ordering check above is already broken)
    indeg = {t.id: 0 for t in tasks}
    dependents: dict[int, list[int]] = {t.id: [] for t in tasks}
    for t in tasks:
        for d in t.deps:
            if d in indeg:
                indeg[t.id] += 1
                dependents[d].append(t.id)
    queue = [tid for tid, deg in indeg.items() if deg == 0]
    seen = 0
    while queue:
        tid = queue.pop()
        seen += 1
        for nxt in dependents[tid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if seen != len(tasks):
        violations.append("cycle detected among task dependencies")

    # stage chain within each (micro_batch, layer)
    groups: dict[tuple[int, int], dict[StageKind, list[Task]]] = {}
    for t in tasks:
        groups.setdefault((t.micro_batch, t.layer), {}).setdefault(t.stage, []).append(t)
    for (mb, layer), stages in groups.items():
        present = [s for s in STAGE_ORDER if s in stages]
        for earlier, later in zip(present, present[1:]):
            earlier_ids = {t.id for t in stages[earlier]}
            for t in stages[later]:
                if not earlier_ids.intersection(t.deps):
                    violations.append(
                        f"missing stage-order edge {earlier.value}->{later.value} "
                        f"(micro_batch {mb}, layer {layer}, task {t.id})"
                    )

    # layer chaining per micro-batch
    by_mb: dict[int, dict[int, dict[StageKind, list[Task]]]] = {}
    for (mb, layer), stages in groups.items():
        by_mb.setdefault(mb, {})[layer] = stages
    for mb, layers in by_mb.items():
        for layer in sorted(layers):
            if layer - 1 not in layers:
                continue
            prev_stages = layers[layer - 1]
            prev_last = [s for s in STAGE_ORDER if s in prev_stages][-1]
            prev_ids = {t.id for t in prev_stages[prev_last]}
            first = [s for s in STAGE_ORDER if s in layers[layer]][0]
            for t in layers[layer][first]:
                if not prev_ids.intersection(t.deps):
                    violations.append(
                        f"missing layer-chain edge into layer {layer} "
                        f"(micro_batch {mb}, task {t.id})"
                    )

    # cross-chunk attention ordering (KV cache write completes with AttnCore)
    strategy = graph.meta.strategy if graph.meta else None
    if isinstance(strategy, _ISO_STRATEGIES):
        attn: dict[tuple[int, int], Task] = {}
        for t in tasks:
            if t.stage is StageKind.ATTN_CORE:
                attn[(t.micro_batch, t.layer)] = t
        for (mb, layer), t in sorted(attn.items()):
            if mb == 0:
                continue
            prev = attn.get((mb - 1, layer))
            if prev is None or prev.id not in t.deps:
                violations.append(
                    f"missing KV-order edge: AttnCore of micro_batch {mb} layer {layer} "
                    f"must depend on AttnCore of micro_batch {mb - 1}"
                )

    return violations


def serialize_tasks(graph: TaskGraph) -> str:
    """Line-oriented text form: one task per line, tab-separated fields
    (id, micro_batch, layer, stage, block, duration, resource, deps)."""
    lines = []
    for t in graph.tasks:
        deps = ",".join(str(d) for d in t.deps) if t.deps else "-"
        lines.append(
            f"{t.id}\t{t.micro_batch}\t{t.layer}\t{t.stage.value}\t{t.block}\t"
            f"{t.duration!r}\t{t.resource.value}\t{deps}"
        )
    return "\n".join(lines) + "\n"


def graph_flops_by_stage_layer(graph: TaskGraph) -> dict[tuple[int, StageKind], int]:
    """Total compute FLOPs per (layer, stage) summed over micro-batches and blocks."""
    if graph.meta.model is None:
        raise ValueError("graph has no model metadata")
    out: dict[tuple[int, StageKind], int] = {}
    for t in graph.tasks:
        if t.stage in COMM_STAGES:
            continue
        key = (t.layer, t.stage)
        out[key] = out.get(key, 0) + stage_flops(t.stage, graph.meta.model, t.chunk_start, t.chunk_len)
    return out


def graph_comm_payload_bytes(graph: TaskGraph) -> int:
    """Total all-reduce payload bytes (before the ring wire factor)."""
    if graph.meta.model is None or graph.meta.profile is None:
        raise ValueError("graph has no model/profile metadata")
    h = graph.meta.model.hidden_size
    e = graph.meta.profile.comm_element_bytes
    return sum(t.chunk_len * h * e for t in graph.tasks if t.stage in COMM_STAGES)


def graph_comm_wire_bytes(graph: TaskGraph) -> float:
    """Total per-device all-reduce wire bytes across the graph."""
    if graph.meta.model is None or graph.meta.profile is None or graph.meta.workload is None:
        raise ValueError("graph has no metadata")
    total = 0
    for t in graph.tasks:
        if t.stage in COMM_STAGES:
            total += stage_comm_bytes(
                t.stage, graph.meta.model, t.chunk_len, graph.meta.workload.tp_degree, graph.meta.profile
            )
    return total
