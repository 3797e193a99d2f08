"""Sectioned key-value configuration files and strategy spec strings.

A config file holds any number of `[model <name>]` and `[profile <name>]`
sections plus an optional `[sweep]` section. Model and profile sections
must carry exactly the fields of ModelSpec and HardwareProfile (the name
comes from the section header); unknown or missing keys are errors.

Example::

    [model tiny]
    num_layers = 2
    hidden_size = 256
    num_heads = 4
    num_kv_heads = 4
    ffn_size = 1024
    weight_bytes = 1
    activation_bytes = 2

    [profile lab]
    compute_throughput = 1e12
    comm_bandwidth = 1e9
    comm_base_latency = 1e-6
    contention_factor = 0.0
    launch_overhead = 0.0
    comm_element_bytes = 2

    [sweep]
    models = tiny
    prompt_lens = 1k 4k
    strategies = serial iso2:0.5
    rows =
        lab tp=4 max_prompt=4k

Token counts accept a `k` suffix meaning multiples of 1024. Strategy
specs: `serial`, `gemm-overlap:<blocks>`, `request-overlap[:<tokens>]`,
`iso2[:<ratio>]`, `iso4:<r1>,<r2>,<r3>,<r4>`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .cost import HardwareProfile, ModelSpec
from .taskgraph import (
    GemmOverlap,
    IsoFourPart,
    IsoTwoChunk,
    RequestOverlap,
    Serial,
    Strategy,
)


class ConfigError(ValueError):
    pass


_MODEL_FIELDS = (
    "num_layers",
    "hidden_size",
    "num_heads",
    "num_kv_heads",
    "ffn_size",
    "weight_bytes",
    "activation_bytes",
)

_PROFILE_FIELDS = (
    "compute_throughput",
    "comm_bandwidth",
    "comm_base_latency",
    "contention_factor",
    "launch_overhead",
    "comm_element_bytes",
)

_SWEEP_FIELDS = ("models", "prompt_lens", "strategies", "rows")


def parse_token_count(text: str) -> int:
    """'8k' -> 8192, '512' -> 512."""
    text = text.strip()
    try:
        if text.lower().endswith("k"):
            return int(text[:-1]) * 1024
        return int(text)
    except ValueError:
        raise ConfigError(f"invalid token count: {text!r}") from None


def format_token_count(tokens: int) -> str:
    if tokens % 1024 == 0 and tokens >= 1024:
        return f"{tokens // 1024}k"
    return str(tokens)


def strategy_from_spec(spec: str) -> Strategy:
    name, _, arg = spec.strip().partition(":")
    try:
        if name == "serial":
            if arg:
                raise ConfigError("serial takes no parameter")
            return Serial()
        if name == "gemm-overlap":
            if not arg:
                raise ConfigError("gemm-overlap needs a block count, e.g. gemm-overlap:4")
            return GemmOverlap(num_blocks=int(arg))
        if name == "request-overlap":
            return RequestOverlap(second_prompt_len=parse_token_count(arg) if arg else None)
        if name == "iso2":
            return IsoTwoChunk(split_ratio=float(arg) if arg else 0.5)
        if name == "iso4":
            parts = tuple(float(x) for x in arg.split(",")) if arg else ()
            if len(parts) != 4:
                raise ConfigError("iso4 needs four comma-separated ratios")
            return IsoFourPart(ratios=parts)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid strategy spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown strategy {name!r}")


def strategy_spec(strategy: Strategy) -> str:
    if isinstance(strategy, Serial):
        return "serial"
    if isinstance(strategy, GemmOverlap):
        return f"gemm-overlap:{strategy.num_blocks}"
    if isinstance(strategy, RequestOverlap):
        if strategy.second_prompt_len is None:
            return "request-overlap"
        return f"request-overlap:{strategy.second_prompt_len}"
    if isinstance(strategy, IsoTwoChunk):
        return f"iso2:{strategy.split_ratio!r}"
    if isinstance(strategy, IsoFourPart):
        return "iso4:" + ",".join(repr(r) for r in strategy.ratios)
    raise ConfigError(f"unknown strategy object {strategy!r}")


@dataclass(frozen=True)
class SweepRow:
    profile: str
    tp: int
    max_prompt: int | None = None


@dataclass(frozen=True)
class SweepSpec:
    rows: tuple[SweepRow, ...]
    models: tuple[str, ...]
    prompt_lens: tuple[int, ...]
    strategies: tuple[Strategy, ...]


@dataclass(frozen=True)
class Config:
    models: dict[str, ModelSpec] = field(default_factory=dict)
    profiles: dict[str, HardwareProfile] = field(default_factory=dict)
    sweep: SweepSpec | None = None


def _check_keys(section: str, keys: list[str], allowed: tuple[str, ...]) -> None:
    unknown = [k for k in keys if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in section [{section}]")
    missing = [k for k in allowed if k not in keys and section != "sweep"]
    if missing:
        raise ConfigError(f"missing key {missing[0]!r} in section [{section}]")


def _parse_sweep_row(line: str) -> SweepRow:
    parts = line.split()
    if not parts:
        raise ConfigError("empty sweep row")
    profile = parts[0]
    tp = None
    max_prompt = None
    for token in parts[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ConfigError(f"malformed sweep row entry {token!r}")
        if key == "tp":
            tp = int(value)
        elif key == "max_prompt":
            max_prompt = parse_token_count(value)
        else:
            raise ConfigError(f"unknown sweep row key {key!r}")
    if tp is None:
        raise ConfigError(f"sweep row for {profile!r} needs tp=<degree>")
    return SweepRow(profile=profile, tp=tp, max_prompt=max_prompt)


def parse_config_text(text: str) -> Config:
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # keep key case as written
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    models: dict[str, ModelSpec] = {}
    profiles: dict[str, HardwareProfile] = {}
    sweep: SweepSpec | None = None

    for section in parser.sections():
        items = dict(parser.items(section))
        if section.startswith("model "):
            name = section[len("model "):].strip()
            if not name:
                raise ConfigError("model section needs a name: [model <name>]")
            _check_keys(section, list(items), _MODEL_FIELDS)
            try:
                models[name] = ModelSpec(**{k: int(v) for k, v in items.items()})
            except ValueError as exc:
                raise ConfigError(f"invalid model {name!r}: {exc}") from None
        elif section.startswith("profile "):
            name = section[len("profile "):].strip()
            if not name:
                raise ConfigError("profile section needs a name: [profile <name>]")
            if "/" in name:
                raise ConfigError("profile names may not contain '/'")
            _check_keys(section, list(items), _PROFILE_FIELDS)
            try:
                profiles[name] = HardwareProfile(
                    name=name,
                    compute_throughput=float(items["compute_throughput"]),
                    comm_bandwidth=float(items["comm_bandwidth"]),
                    comm_base_latency=float(items["comm_base_latency"]),
                    contention_factor=float(items["contention_factor"]),
                    launch_overhead=float(items["launch_overhead"]),
                    comm_element_bytes=int(items["comm_element_bytes"]),
                )
            except ValueError as exc:
                raise ConfigError(f"invalid profile {name!r}: {exc}") from None
        elif section == "sweep":
            _check_keys(section, list(items), _SWEEP_FIELDS)
            if "rows" not in items:
                raise ConfigError("sweep section needs a rows key")
            rows = tuple(
                _parse_sweep_row(line) for line in items["rows"].splitlines() if line.strip()
            )
            model_names = tuple(items.get("models", "").split())
            if not model_names:
                raise ConfigError("sweep section needs a models key")
            prompt_lens = tuple(
                parse_token_count(tok) for tok in items.get("prompt_lens", "").split()
            )
            if not prompt_lens:
                raise ConfigError("sweep section needs a prompt_lens key")
            strategies = tuple(
                strategy_from_spec(tok) for tok in items.get("strategies", "").split()
            )
            sweep = SweepSpec(
                rows=rows, models=model_names, prompt_lens=prompt_lens, strategies=strategies
            )
        else:
            raise ConfigError(f"unknown section [{section}]")

    return Config(models=models, profiles=profiles, sweep=sweep)


def load_config(path: str | Path) -> Config:
    return parse_config_text(Path(path).read_text())
