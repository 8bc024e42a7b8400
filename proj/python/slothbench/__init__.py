"""Efficiency-degradation benchmark for a small neural translator."""

from ._slothbench import (
    Model,
    SlothError,
    detokenize,
    loop_increase_pct,
    tokenize,
)

__all__ = [
    "Model",
    "SlothError",
    "detokenize",
    "loop_increase_pct",
    "tokenize",
]
