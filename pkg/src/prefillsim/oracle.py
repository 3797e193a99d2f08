"""Brute-force reference implementations for validating the scheduler.

Two oracles, both intentionally slow and simple:

* optimal_makespan_bruteforce enumerates every topological order of a
  tiny graph, replays each as a greedy priority list, and returns the
  minimum makespan found. This is the best achievable within the
  priority-list policy class (an upper bound on the true preemptive
  optimum), which is exactly the class the production scheduler lives in.
* discrete_time_replay re-runs the greedy policy in fixed time steps
  with per-step rate accumulation; it converges to the event-driven
  makespan as the step shrinks and serves as an independent check of the
  contention integration.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator

from .cost import HardwareProfile
from .scheduler import GraphValidationError, default_priority, simulate
from .taskgraph import Lane, TaskGraph, validate_graph


@dataclass(frozen=True)
class OracleLimit:
    max_tasks: int = 12
    time_step: float = 1e-4

    def __post_init__(self):
        if self.max_tasks > 14:
            raise ValueError("max_tasks above 14 makes enumeration factorial-infeasible")
        if self.max_tasks < 1:
            raise ValueError("max_tasks must be >= 1")
        if self.time_step <= 0:
            raise ValueError("time_step must be > 0")


def _topo_orders(n: int, indeg: list[int], dependents: list[list[int]]) -> Iterator[tuple[int, ...]]:
    order: list[int] = []
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    deg = list(indeg)

    def rec() -> Iterator[tuple[int, ...]]:
        if len(order) == n:
            yield tuple(order)
            return
        for i in list(ready):
            ready.remove(i)
            order.append(i)
            opened = []
            for nxt in dependents[i]:
                deg[nxt] -= 1
                if deg[nxt] == 0:
                    ready.append(nxt)
                    opened.append(nxt)
            yield from rec()
            for nxt in opened:
                ready.remove(nxt)
            for nxt in dependents[i]:
                deg[nxt] += 1
            order.pop()
            ready.append(i)

    yield from rec()


def optimal_makespan_bruteforce(
    graph: TaskGraph,
    profile: HardwareProfile,
    limit: OracleLimit = OracleLimit(),
) -> float:
    """Minimum makespan over all topological orders used as priority lists."""
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    tasks = graph.tasks
    n = len(tasks)
    if n > limit.max_tasks:
        raise ValueError(f"graph has {n} tasks; oracle limit is {limit.max_tasks}")
    if n == 0:
        return 0.0
    index = {t.id: i for i, t in enumerate(tasks)}
    indeg = [len(t.deps) for t in tasks]
    dependents: list[list[int]] = [[] for _ in range(n)]
    for i, t in enumerate(tasks):
        for d in t.deps:
            dependents[index[d]].append(i)

    best = float("inf")
    for order in _topo_orders(n, indeg, dependents):
        pos = {tasks[i].id: k for k, i in enumerate(order)}
        makespan = simulate(graph, profile.contention_factor, priority=lambda t: (pos[t.id],)).makespan
        if makespan < best:
            best = makespan
    return best


def discrete_time_replay(graph: TaskGraph, profile: HardwareProfile, step: float) -> float:
    """Fixed-step replay of the greedy policy; returns the quantized makespan.

    Tasks start only on step boundaries and progress accrues per step at
    the interference-adjusted rate, so the result differs from the
    event-driven makespan by at most a few steps per scheduling event.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    tasks = graph.tasks
    n = len(tasks)
    if n == 0:
        return 0.0

    index = {t.id: i for i, t in enumerate(tasks)}
    indeg = [len(t.deps) for t in tasks]
    dependents: list[list[int]] = [[] for _ in range(n)]
    for i, t in enumerate(tasks):
        for d in t.deps:
            dependents[index[d]].append(i)

    ready: dict[Lane, list] = {Lane.COMPUTE: [], Lane.COMM: []}

    def push(i: int) -> None:
        heapq.heappush(ready[tasks[i].resource], (default_priority(tasks[i]), i))

    for i in range(n):
        if indeg[i] == 0:
            push(i)

    slow = 1.0 + profile.contention_factor
    now = 0.0
    done = 0
    comp: int | None = None
    comp_remaining = 0.0
    comm: int | None = None
    comm_remaining = 0.0
    makespan = 0.0

    def finish(i: int) -> None:
        nonlocal done, makespan
        done += 1
        makespan = now
        for nxt in dependents[i]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                push(nxt)

    while done < n:
        progressed = True
        while progressed:
            progressed = False
            if comm is None and ready[Lane.COMM]:
                _, comm = heapq.heappop(ready[Lane.COMM])
                comm_remaining = tasks[comm].duration
                progressed = True
            if comp is None and ready[Lane.COMPUTE]:
                _, comp = heapq.heappop(ready[Lane.COMPUTE])
                comp_remaining = tasks[comp].duration
                progressed = True
            if comm is not None and comm_remaining <= 0.0:
                finish(comm)
                comm = None
                progressed = True
            if comp is not None and comp_remaining <= 0.0:
                finish(comp)
                comp = None
                progressed = True
        if done == n:
            break
        if comp is None and comm is None:
            raise GraphValidationError(["deadlock: tasks remain but none are ready or running"])

        rate = 1.0 / slow if comm is not None else 1.0
        if comm is not None:
            comm_remaining -= step
        if comp is not None:
            comp_remaining -= step * rate
        now += step

    return makespan
