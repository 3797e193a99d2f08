"""Command-line front end: sweep, trace, and optimize subcommands."""

from __future__ import annotations

import argparse
import sys

from .configio import ConfigError, load_config, strategy_from_spec
from .cost import Workload
from .harness import emit_table, emit_trace, parse_scenario_key, run_sweep
from .optimizer import SplitSearchConfig, optimize_four_part, optimize_two_chunk_ratio


def _load(args) -> object:
    return load_config(args.config) if args.config else None


def _cmd_sweep(args) -> int:
    config = _load(args)
    strategies = None
    if args.strategies:
        strategies = tuple(strategy_from_spec(s) for s in args.strategies)
    results = run_sweep(config, strategies=strategies)
    if not results:
        print("sweep produced no results (empty strategy list?)", file=sys.stderr)
        return 1
    table = emit_table(results, args.out)
    print(table, end="")
    print(f"wrote {args.out}/table.txt and {args.out}/results.csv")
    return 0


def _cmd_trace(args) -> int:
    config = _load(args)
    scenario = parse_scenario_key(args.scenario)
    trace = emit_trace(scenario, args.out, config=config)
    print(f"wrote {args.out} ({len(trace['records'])} records, "
          f"makespan {trace['makespan_us']:.1f} us)")
    return 0


def _cmd_optimize(args) -> int:
    config = _load(args)
    scenario = parse_scenario_key(args.scenario, with_strategy=False)
    from .harness import _lookup, _resolve_tables

    models, profiles = _resolve_tables(config)
    model = _lookup(models, scenario.model, "model")
    profile = _lookup(profiles, scenario.profile, "profile")
    workload = Workload(prompt_len=scenario.prompt_len, tp_degree=scenario.tp)
    if args.mode == "two-chunk":
        ratio, makespan = optimize_two_chunk_ratio(model, workload, profile, SplitSearchConfig())
        print(f"best two-chunk split: first chunk {ratio:.2f} of tokens, "
              f"makespan {makespan:.6g} s")
    else:
        ratios, makespan = optimize_four_part(model, workload, profile, step=args.step)
        pretty = ", ".join(f"{r:.2f}" for r in ratios)
        print(f"best four-part split: ({pretty}), makespan {makespan:.6g} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefillsim",
        description="Simulate compute/communication overlap strategies for "
        "tensor-parallel transformer prefill.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run the scenario sweep and emit tables")
    p_sweep.add_argument("--config", help="config file (defaults to the bundled sweep)")
    p_sweep.add_argument("--out", default="sweep-out", help="output directory")
    p_sweep.add_argument(
        "--strategies",
        nargs="+",
        metavar="SPEC",
        help="strategy specs overriding the config, e.g. iso2:0.5 gemm-overlap:4",
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_trace = sub.add_parser("trace", help="export one scenario's schedule as a trace file")
    p_trace.add_argument(
        "--scenario", required=True, help="profile/model/tp/prompt_len/strategy"
    )
    p_trace.add_argument("--out", required=True, help="trace file path")
    p_trace.add_argument("--config", help="config file with extra models/profiles")
    p_trace.set_defaults(func=_cmd_trace)

    p_opt = sub.add_parser("optimize", help="search sequence split ratios for a scenario")
    p_opt.add_argument(
        "--scenario", required=True, help="profile/model/tp/prompt_len"
    )
    p_opt.add_argument("--mode", choices=("two-chunk", "four-part"), default="two-chunk")
    p_opt.add_argument("--step", type=float, default=0.05, help="four-part grid step")
    p_opt.add_argument("--config", help="config file with extra models/profiles")
    p_opt.set_defaults(func=_cmd_optimize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
