"""Approximate controllability experiments for an impulsive delayed evolution inclusion."""

from ._core import (
    EvosteerError,
    RunConfig,
    check,
    duality_map,
    gramian,
    load_config,
    lp_norm,
    multipliers,
    parse_config,
    resolvent_solve,
    steer,
    sweep,
    unique_continuation,
)

__all__ = [
    "EvosteerError",
    "RunConfig",
    "check",
    "duality_map",
    "gramian",
    "load_config",
    "lp_norm",
    "multipliers",
    "parse_config",
    "resolvent_solve",
    "steer",
    "sweep",
    "unique_continuation",
]
