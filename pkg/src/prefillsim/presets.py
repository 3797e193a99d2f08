"""Bundled model and hardware presets.

The models are stand-ins for representative public dense architectures
around 30B (multi-head attention) and 70B (grouped-query attention)
parameters; they are not measurements of any specific checkpoint.

The hardware profiles are illustrative desk-scale calibrations, not
datasheet numbers. Two families are shipped:

* "4090-like": a consumer PCIe-class setup. Communication dominates;
  the wire carries int8-quantized activations and collectives do not
  interfere with concurrent kernels.
* "A800-like": a datacenter NVLink-class setup. Compute dominates; the
  wire carries float16 and concurrent collectives slow compute kernels
  by 18%. Its launch overhead is deliberately generous: it stands in
  for the efficiency loss of running half-size GEMMs, which is what
  makes splitting short prompts unprofitable.

Throughput and bandwidth values are chosen so that at an 8k-token
prompt the 4090-like profile sits mildly communication-dominant (comm
share near 55% on the int8 wire, near 70% on a float16 wire) and the
A800-like profile sits clearly compute-dominant (compute share above
75%), with the balance shifting toward compute as prompts grow.
"""

from __future__ import annotations

from .configio import SweepRow, SweepSpec
from .cost import HardwareProfile, ModelSpec
from .taskgraph import IsoTwoChunk


def bundled_models() -> dict[str, ModelSpec]:
    return {
        "dense-30b": ModelSpec(
            num_layers=48,
            hidden_size=7168,
            num_heads=56,
            num_kv_heads=56,
            ffn_size=28672,
            weight_bytes=1,
            activation_bytes=2,
        ),
        "dense-70b": ModelSpec(
            num_layers=80,
            hidden_size=8192,
            num_heads=64,
            num_kv_heads=8,
            ffn_size=28672,
            weight_bytes=1,
            activation_bytes=2,
        ),
    }


def bundled_profiles() -> dict[str, HardwareProfile]:
    return {
        "4090-like-tp4": HardwareProfile(
            name="4090-like-tp4",
            compute_throughput=120e12,
            comm_bandwidth=4.8e9,
            comm_base_latency=15e-6,
            contention_factor=0.0,
            launch_overhead=25e-6,
            comm_element_bytes=1,
        ),
        "4090-like-tp8": HardwareProfile(
            name="4090-like-tp8",
            compute_throughput=120e12,
            comm_bandwidth=3.6e9,
            comm_base_latency=15e-6,
            contention_factor=0.0,
            launch_overhead=25e-6,
            comm_element_bytes=1,
        ),
        "A800-like-tp4": HardwareProfile(
            name="A800-like-tp4",
            compute_throughput=280e12,
            comm_bandwidth=90e9,
            comm_base_latency=30e-6,
            contention_factor=0.18,
            launch_overhead=80e-6,
            comm_element_bytes=2,
        ),
        "A800-like-tp8": HardwareProfile(
            name="A800-like-tp8",
            compute_throughput=280e12,
            comm_bandwidth=110e9,
            comm_base_latency=30e-6,
            contention_factor=0.18,
            launch_overhead=80e-6,
            comm_element_bytes=2,
        ),
    }


DEFAULT_PROMPT_LENS = (1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072)


def default_sweep() -> SweepSpec:
    """The shipped sweep: both model sizes on all four profiles, with the
    consumer profiles capped where long prompts stop fitting."""
    return SweepSpec(
        rows=(
            SweepRow(profile="4090-like-tp4", tp=4, max_prompt=32768),
            SweepRow(profile="4090-like-tp8", tp=8, max_prompt=65536),
            SweepRow(profile="A800-like-tp4", tp=4, max_prompt=None),
            SweepRow(profile="A800-like-tp8", tp=8, max_prompt=None),
        ),
        models=("dense-30b", "dense-70b"),
        prompt_lens=DEFAULT_PROMPT_LENS,
        strategies=(IsoTwoChunk(split_ratio=0.5),),
    )
