"""Grid search over sequence split ratios to minimize prefill makespan.

Causal attention makes the tail of a sequence more expensive than its
head, so equal-token chunks carry unequal work. These searches sweep the
split point(s), schedule every candidate, and return the best; grid
evaluation is cheap enough at desk scale that exhaustive search beats
anything cleverer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cost import HardwareProfile, ModelSpec, Workload
from .scheduler import run_schedule
from .taskgraph import GraphBuildError, IsoFourPart, IsoTwoChunk, build_graph, round_half_up

_FOUR_PART_CANDIDATE_CAP = 1_000_000


@dataclass(frozen=True)
class SplitSearchConfig:
    ratio_min: float = 0.30
    ratio_max: float = 0.70
    ratio_step: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.ratio_min < self.ratio_max < 1.0:
            raise ValueError("need 0 < ratio_min < ratio_max < 1")
        if self.ratio_step <= 0:
            raise ValueError("ratio_step must be > 0")


def optimize_two_chunk_ratio(
    model: ModelSpec,
    workload: Workload,
    profile: HardwareProfile,
    config: SplitSearchConfig = SplitSearchConfig(),
) -> tuple[float, float]:
    """Best first-chunk token fraction for the two-chunk strategy.

    Exhaustive sweep of the ratio grid; ties go to the ratio closest to
    0.5, then to the smaller ratio. Returns (ratio, makespan).
    """
    steps = math.floor((config.ratio_max - config.ratio_min) / config.ratio_step + 1e-9)
    by_split: dict[int, float] = {}  # distinct token splits, shared across ratios
    best_key = None
    best = None
    for i in range(steps + 1):
        ratio = config.ratio_min + i * config.ratio_step
        m = round_half_up(ratio * workload.prompt_len)
        if m < 1 or m >= workload.prompt_len:
            continue
        if m not in by_split:
            graph = build_graph(IsoTwoChunk(split_ratio=ratio), model, workload, profile)
            by_split[m] = run_schedule(graph, profile).makespan
        makespan = by_split[m]
        key = (makespan, abs(ratio - 0.5), ratio)
        if best_key is None or key < best_key:
            best_key = key
            best = (ratio, makespan)
    if best is None:
        raise ValueError("no ratio in the grid produces two non-empty chunks")
    return best


def optimize_four_part(
    model: ModelSpec,
    workload: Workload,
    profile: HardwareProfile,
    step: float = 0.05,
) -> tuple[tuple[float, float, float, float], float]:
    """Best four-way token split, searched over the step-granular simplex.

    Every candidate assigns each chunk at least one step of the sequence.
    Ties prefer the split closest to uniform (compared component-wise on
    the deviation from 0.25). Returns (ratios, makespan).
    """
    if workload.prompt_len < 4:
        raise ValueError("prompt_len must be >= 4 to form four non-empty chunks")
    if step <= 0 or step >= 1:
        raise ValueError("step must lie in (0, 1)")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise ValueError("step must divide 1")
    if n < 4:
        raise ValueError("step too coarse to form four chunks")
    candidates = math.comb(n - 1, 3)
    if candidates > _FOUR_PART_CANDIDATE_CAP:
        raise ValueError(
            f"step {step} yields {candidates} candidates (cap {_FOUR_PART_CANDIDATE_CAP})"
        )

    best_key = None
    best = None
    for k1 in range(1, n - 2):
        for k2 in range(1, n - 1 - k1):
            for k3 in range(1, n - k1 - k2):
                k4 = n - k1 - k2 - k3
                ratios = (k1 / n, k2 / n, k3 / n, k4 / n)
                try:
                    graph = build_graph(IsoFourPart(ratios=ratios), model, workload, profile)
                except GraphBuildError:
                    continue  # rounding emptied a chunk at this prompt length
                makespan = run_schedule(graph, profile).makespan
                key = (makespan, tuple(abs(r - 0.25) for r in ratios), ratios)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (ratios, makespan)
    if best is None:
        raise ValueError("no four-part split on the grid produces non-empty chunks")
    return best
