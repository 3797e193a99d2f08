"""Experiment harness: sweeps, speedup tables, and trace export.

A sweep walks (profile row x model x prompt length x strategy),
schedules the serial baseline and the strategy on each scenario, and
records the relative makespan reduction together with the scenario's
compute/communication regime. Output is deterministic: results are
sorted by scenario key and floats are written with full repr precision,
so repeated runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .configio import (
    Config,
    ConfigError,
    format_token_count,
    load_config,
    parse_token_count,
    strategy_from_spec,
    strategy_spec,
)
from .cost import HardwareProfile, ModelSpec, Workload, regime_report
from .scheduler import (
    run_schedule,
    schedule_trace,
    serial_reference_makespan,
    trace_to_text,
)
from .taskgraph import RequestOverlap, Strategy, build_graph

CSV_HEADER = "profile,model,tp,prompt_len,strategy,serial_s,strategy_s,speedup,regime"


@dataclass(frozen=True)
class Scenario:
    profile: str
    model: str
    tp: int
    prompt_len: int
    strategy: Strategy

    def key(self) -> str:
        return (
            f"{self.profile}/{self.model}/{self.tp}/{self.prompt_len}/"
            f"{strategy_spec(self.strategy)}"
        )


@dataclass(frozen=True)
class ExperimentResult:
    scenario: Scenario
    serial_makespan: float
    strategy_makespan: float
    speedup: float
    regime: str


def parse_scenario_key(key: str, with_strategy: bool = True) -> Scenario:
    """Parse 'profile/model/tp/prompt_len[/strategy]' into a Scenario."""
    parts = key.split("/")
    expected = 5 if with_strategy else 4
    if len(parts) < expected:
        raise ConfigError(
            f"scenario key {key!r} needs {expected} '/'-separated fields "
            "(profile/model/tp/prompt_len" + ("/strategy)" if with_strategy else ")")
        )
    profile, model, tp_text, len_text = parts[0], parts[1], parts[2], parts[3]
    try:
        tp = int(tp_text)
    except ValueError:
        raise ConfigError(f"invalid tp degree {tp_text!r} in scenario key") from None
    prompt_len = parse_token_count(len_text)
    if with_strategy:
        strategy = strategy_from_spec("/".join(parts[4:]))
    else:
        strategy = strategy_from_spec("/".join(parts[4:])) if len(parts) > 4 else None
    return Scenario(profile=profile, model=model, tp=tp, prompt_len=prompt_len, strategy=strategy)


def _resolve_tables(config: Config | None) -> tuple[dict[str, ModelSpec], dict[str, HardwareProfile]]:
    from .presets import bundled_models, bundled_profiles

    models = dict(bundled_models())
    profiles = dict(bundled_profiles())
    if config is not None:
        models.update(config.models)
        profiles.update(config.profiles)
    return models, profiles


def _lookup(table: dict, name: str, kind: str):
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"unknown {kind} name: {name!r}") from None


def evaluate_scenario(scenario: Scenario, config: Config | None = None) -> ExperimentResult:
    models, profiles = _resolve_tables(config)
    model = _lookup(models, scenario.model, "model")
    profile = _lookup(profiles, scenario.profile, "profile")
    workload = Workload(prompt_len=scenario.prompt_len, tp_degree=scenario.tp)
    graph = build_graph(scenario.strategy, model, workload, profile)
    strategy_makespan = run_schedule(graph, profile).makespan
    serial_makespan = serial_reference_makespan(model, workload, profile, scenario.strategy)
    regime = regime_report(model, workload, profile).label.value
    return ExperimentResult(
        scenario=scenario,
        serial_makespan=serial_makespan,
        strategy_makespan=strategy_makespan,
        speedup=1.0 - strategy_makespan / serial_makespan,
        regime=regime,
    )


def run_sweep(
    config: Config | str | Path | None = None,
    strategies: tuple[Strategy, ...] | None = None,
) -> list[ExperimentResult]:
    """Evaluate every scenario of the configured (or default) sweep.

    `strategies`, when given, overrides the sweep's strategy list.
    Results come back sorted by (profile, model, tp, prompt_len,
    strategy spec); an empty strategy list yields an empty result set.
    """
    from .presets import default_sweep

    if isinstance(config, (str, Path)):
        config = load_config(config)
    sweep = config.sweep if config is not None and config.sweep is not None else default_sweep()
    if strategies is not None:
        sweep_strategies = tuple(strategies)
    else:
        sweep_strategies = sweep.strategies

    models, profiles = _resolve_tables(config)
    results: list[ExperimentResult] = []
    for row in sweep.rows:
        profile = _lookup(profiles, row.profile, "profile")
        for model_name in sweep.models:
            model = _lookup(models, model_name, "model")
            for prompt_len in sweep.prompt_lens:
                if row.max_prompt is not None and prompt_len > row.max_prompt:
                    continue
                workload = Workload(prompt_len=prompt_len, tp_degree=row.tp)
                serial_graph_makespan = None
                regime = regime_report(model, workload, profile).label.value
                for strategy in sweep_strategies:
                    if serial_graph_makespan is None:
                        from .taskgraph import Serial

                        serial_graph = build_graph(Serial(), model, workload, profile)
                        serial_graph_makespan = run_schedule(serial_graph, profile).makespan
                    serial_makespan = serial_graph_makespan
                    if isinstance(strategy, RequestOverlap):
                        serial_makespan = serial_reference_makespan(
                            model, workload, profile, strategy
                        )
                    graph = build_graph(strategy, model, workload, profile)
                    strategy_makespan = run_schedule(graph, profile).makespan
                    results.append(
                        ExperimentResult(
                            scenario=Scenario(
                                profile=row.profile,
                                model=model_name,
                                tp=row.tp,
                                prompt_len=prompt_len,
                                strategy=strategy,
                            ),
                            serial_makespan=serial_makespan,
                            strategy_makespan=strategy_makespan,
                            speedup=1.0 - strategy_makespan / serial_makespan,
                            regime=regime,
                        )
                    )
    results.sort(
        key=lambda r: (
            r.scenario.profile,
            r.scenario.model,
            r.scenario.tp,
            r.scenario.prompt_len,
            strategy_spec(r.scenario.strategy),
        )
    )
    return results


def _percent_cell(speedup: float) -> str:
    import math

    return f"{math.floor(speedup * 100 + 0.5):d}%"


def format_table(results: list[ExperimentResult]) -> str:
    """Human-readable speedup table: one block per strategy, one row per
    (profile, model), one column per prompt length."""
    if not results:
        raise ValueError("no results to format")
    by_strategy: dict[str, list[ExperimentResult]] = {}
    for r in results:
        by_strategy.setdefault(strategy_spec(r.scenario.strategy), []).append(r)

    blocks = []
    for spec in sorted(by_strategy):
        rows_here = by_strategy[spec]
        lens = sorted({r.scenario.prompt_len for r in rows_here})
        cells: dict[tuple[str, str], dict[int, str]] = {}
        row_order: list[tuple[str, str]] = []
        for r in rows_here:
            key = (r.scenario.profile, r.scenario.model)
            if key not in cells:
                cells[key] = {}
                row_order.append(key)
            cells[key][r.scenario.prompt_len] = _percent_cell(r.speedup)

        prof_w = max(len("profile"), max(len(p) for p, _ in row_order))
        model_w = max(len("model"), max(len(m) for _, m in row_order))
        col_w = max(6, max(len(format_token_count(n)) for n in lens))

        lines = [f"strategy: {spec}  (speedup vs serial, percent decrease in makespan)"]
        header = f"{'profile':<{prof_w}}  {'model':<{model_w}}"
        for n in lens:
            header += f"  {format_token_count(n):>{col_w}}"
        lines.append(header)
        lines.append("-" * len(header))
        for key in row_order:
            profile_name, model_name = key
            line = f"{profile_name:<{prof_w}}  {model_name:<{model_w}}"
            for n in lens:
                line += f"  {cells[key].get(n, '-'):>{col_w}}"
            lines.append(line)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def format_csv(results: list[ExperimentResult]) -> str:
    """Machine-readable results with full float precision."""
    lines = [CSV_HEADER]
    for r in results:
        s = r.scenario
        lines.append(
            f"{s.profile},{s.model},{s.tp},{s.prompt_len},{strategy_spec(s.strategy)},"
            f"{r.serial_makespan!r},{r.strategy_makespan!r},{r.speedup!r},{r.regime}"
        )
    return "\n".join(lines) + "\n"


def emit_table(results: list[ExperimentResult], out_dir: str | Path) -> str:
    """Write table.txt and results.csv under out_dir; returns the table text."""
    if not results:
        raise ValueError("no results to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = format_table(results)
    (out / "table.txt").write_text(table)
    (out / "results.csv").write_text(format_csv(results))
    return table


def emit_trace(scenario: Scenario, out_path: str | Path, config: Config | None = None) -> dict:
    """Schedule one scenario and write its trace document; returns the trace."""
    models, profiles = _resolve_tables(config)
    model = _lookup(models, scenario.model, "model")
    profile = _lookup(profiles, scenario.profile, "profile")
    workload = Workload(prompt_len=scenario.prompt_len, tp_degree=scenario.tp)
    graph = build_graph(scenario.strategy, model, workload, profile)
    schedule = run_schedule(graph, profile)
    trace = schedule_trace(graph, schedule)
    path = Path(out_path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(trace_to_text(trace))
    except OSError as exc:
        raise OSError(f"failed to write trace to {path}: {exc}") from exc
    return trace
