"""Event-driven two-lane list scheduler with communication contention.

Tasks are placed on two resources: a compute lane and a communication
lane (one collective in flight at a time, matching a single communicator).
Scheduling is greedy, non-preemptive and fully deterministic: whenever a
lane is idle, the ready task with the smallest
(micro_batch, layer, stage order, block, id) key starts immediately.

Contention models the ways collectives steal streaming multiprocessors
from concurrently running kernels: while the communication lane is busy,
the compute lane advances at rate 1/(1+contention_factor). Communication
tasks are never slowed. The engine integrates compute progress exactly
over the events at which the communication lane changes state, so a
compute task's integral of rate over its placement equals its
uncontended duration.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .cost import STAGE_INDEX, HardwareProfile, ModelSpec, Workload
from .taskgraph import (
    Lane,
    RequestOverlap,
    Serial,
    Strategy,
    Task,
    TaskGraph,
    build_graph,
    validate_graph,
)


class GraphValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid task graph: " + "; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Placement:
    task_id: int
    start: float
    end: float
    lane: Lane


@dataclass(frozen=True)
class Schedule:
    placements: tuple[Placement, ...]
    makespan: float
    contention_intervals: tuple[tuple[float, float], ...]

    def placement_of(self, task_id: int) -> Placement:
        return self._by_id[task_id]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {p.task_id: p for p in self.placements})


def default_priority(task: Task) -> tuple:
    return (task.micro_batch, task.layer, STAGE_INDEX[task.stage], task.block, task.id)


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _contention_intervals(placements: Sequence[Placement]) -> tuple[tuple[float, float], ...]:
    compute = _merge_intervals([(p.start, p.end) for p in placements if p.lane is Lane.COMPUTE])
    comm = _merge_intervals([(p.start, p.end) for p in placements if p.lane is Lane.COMM])
    out: list[tuple[float, float]] = []
    i = j = 0
    while i < len(compute) and j < len(comm):
        lo = max(compute[i][0], comm[j][0])
        hi = min(compute[i][1], comm[j][1])
        if lo < hi:
            out.append((lo, hi))
        if compute[i][1] <= comm[j][1]:
            i += 1
        else:
            j += 1
    return tuple(out)


def simulate(
    graph: TaskGraph,
    contention_factor: float,
    priority: Callable[[Task], tuple] = default_priority,
) -> Schedule:
    """Run the greedy list-scheduling engine; assumes the graph is valid."""
    tasks = graph.tasks
    n = len(tasks)
    if n == 0:
        return Schedule(placements=(), makespan=0.0, contention_intervals=())

    index = {t.id: i for i, t in enumerate(tasks)}
    indeg = [len(t.deps) for t in tasks]
    dependents: list[list[int]] = [[] for _ in range(n)]
    for i, t in enumerate(tasks):
        for d in t.deps:
            dependents[index[d]].append(i)

    ready: dict[Lane, list] = {Lane.COMPUTE: [], Lane.COMM: []}

    def push(i: int) -> None:
        heapq.heappush(ready[tasks[i].resource], (priority(tasks[i]), i))

    for i in range(n):
        if indeg[i] == 0:
            push(i)

    starts = [0.0] * n
    ends = [0.0] * n
    slow = 1.0 + contention_factor

    now = 0.0
    done = 0
    comp: int | None = None  # index of running compute task
    comp_remaining = 0.0  # uncontended seconds of work left
    comm: int | None = None
    comm_end = 0.0

    def finish(i: int) -> None:
        nonlocal done
        ends[i] = now
        done += 1
        for nxt in dependents[i]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                push(nxt)

    while done < n:
        if comm is None and ready[Lane.COMM]:
            _, comm = heapq.heappop(ready[Lane.COMM])
            starts[comm] = now
            comm_end = now + tasks[comm].duration
        if comp is None and ready[Lane.COMPUTE]:
            _, comp = heapq.heappop(ready[Lane.COMPUTE])
            starts[comp] = now
            comp_remaining = tasks[comp].duration

        rate_denom = slow if comm is not None else 1.0
        comp_projected = now + comp_remaining * rate_denom if comp is not None else None

        candidates = []
        if comm is not None:
            candidates.append(comm_end)
        if comp_projected is not None:
            candidates.append(comp_projected)
        if not candidates:
            raise GraphValidationError(["deadlock: tasks remain but none are ready or running"])
        t_next = min(candidates)

        if comp is not None:
            if comp_projected == t_next:
                comp_remaining = 0.0
            else:
                comp_remaining -= (t_next - now) / rate_denom
        now = t_next

        if comm is not None and comm_end == now:
            finish(comm)
            comm = None
        if comp is not None and comp_remaining == 0.0:
            finish(comp)
            comp = None

    placements = tuple(
        Placement(task_id=t.id, start=starts[i], end=ends[i], lane=t.resource)
        for i, t in enumerate(tasks)
    )
    makespan = max(ends)
    return Schedule(
        placements=placements,
        makespan=makespan,
        contention_intervals=_contention_intervals(placements),
    )


def run_schedule(graph: TaskGraph, profile: HardwareProfile) -> Schedule:
    """Validate, then schedule a graph under the profile's contention factor."""
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    return simulate(graph, profile.contention_factor)


def makespan_lower_bound(graph: TaskGraph) -> float:
    """max(critical path, total compute work, total communication work),
    all with uncontended durations."""
    tasks = graph.tasks
    if not tasks:
        return 0.0
    index = {t.id: i for i, t in enumerate(tasks)}
    finish = [0.0] * len(tasks)
    for i, t in enumerate(tasks):  # ids reference earlier tasks, so one pass suffices
        earliest = max((finish[index[d]] for d in t.deps), default=0.0)
        finish[i] = earliest + t.duration
    critical = max(finish)
    compute_work = sum(t.duration for t in tasks if t.resource is Lane.COMPUTE)
    comm_work = sum(t.duration for t in tasks if t.resource is Lane.COMM)
    return max(critical, compute_work, comm_work)


def serial_reference_makespan(
    model: ModelSpec,
    workload: Workload,
    profile: HardwareProfile,
    strategy: Strategy,
) -> float:
    """Makespan of processing the strategy's workload strictly serially.

    For single-request strategies this is the Serial schedule of the
    workload itself. RequestOverlap processes a second full request, so
    its fair serial reference is the two requests run back to back.
    """
    base = run_schedule(build_graph(Serial(), model, workload, profile), profile).makespan
    if isinstance(strategy, RequestOverlap):
        second = strategy.second_prompt_len if strategy.second_prompt_len is not None else workload.prompt_len
        twin = Workload(prompt_len=second, tp_degree=workload.tp_degree, prefix_len=0)
        base += run_schedule(build_graph(Serial(), model, twin, profile), profile).makespan
    return base


def speedup_vs_serial(
    model: ModelSpec,
    workload: Workload,
    profile: HardwareProfile,
    strategy: Strategy,
) -> float:
    """1 - makespan(strategy) / makespan(serial) on the same scenario."""
    graph = build_graph(strategy, model, workload, profile)
    strategy_makespan = run_schedule(graph, profile).makespan
    serial_makespan = serial_reference_makespan(model, workload, profile, strategy)
    return 1.0 - strategy_makespan / serial_makespan


def schedule_trace(graph: TaskGraph, schedule: Schedule) -> dict:
    """Render a schedule as a Gantt-ready trace document.

    Record fields and microsecond units are a stable contract:
    {name, lane, start_us, duration_us, micro_batch, layer, stage}.
    makespan_us is defined as max(start_us + duration_us) over the
    records, so re-deriving it from a parsed trace is exact.
    """
    by_id = {t.id: t for t in graph.tasks}
    records = []
    for p in schedule.placements:
        t = by_id[p.task_id]
        records.append(
            {
                "name": f"mb{t.micro_batch}-L{t.layer}-{t.stage.value}-b{t.block}",
                "lane": p.lane.value,
                "start_us": p.start * 1e6,
                "duration_us": (p.end - p.start) * 1e6,
                "micro_batch": t.micro_batch,
                "layer": t.layer,
                "stage": t.stage.value,
            }
        )
    records.sort(key=lambda r: (r["start_us"], r["lane"], r["name"]))
    makespan_us = max((r["start_us"] + r["duration_us"] for r in records), default=0.0)
    return {"makespan_us": makespan_us, "records": records}


def trace_makespan(trace: dict) -> float:
    """Recompute the makespan of a parsed trace from its records."""
    return max((r["start_us"] + r["duration_us"] for r in trace["records"]), default=0.0)


def trace_to_text(trace: dict) -> str:
    return json.dumps(trace, indent=2) + "\n"


def parse_trace_text(text: str) -> dict:
    return json.loads(text)
