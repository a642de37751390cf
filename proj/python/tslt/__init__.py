"""Distributed speculative decoding simulator with truncated sparse logits."""

from ._core import (
    ConfigError,
    ModelPair,
    mc_output_law,
    n_oracle_expected,
    payload_bits,
    residual,
    run_config,
    run_sc_session,
    sc_output_law,
    sc_speedup,
    truncate,
    tv_distance,
)

__all__ = [
    "ConfigError",
    "ModelPair",
    "mc_output_law",
    "n_oracle_expected",
    "payload_bits",
    "residual",
    "run_config",
    "run_sc_session",
    "sc_output_law",
    "sc_speedup",
    "truncate",
    "tv_distance",
]
