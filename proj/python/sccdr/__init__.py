"""Separated-stage contrastive cross-domain recommendation."""

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    config_keys,
    evaluate,
    prepare,
    schedule,
    std_final_half,
    synth,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "config_keys",
    "evaluate",
    "prepare",
    "schedule",
    "std_final_half",
    "synth",
    "train",
]
