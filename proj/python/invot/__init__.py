"""Entropic optimal transport and inverse cost recovery."""

from ._invot import (
    InvotError,
    bcd,
    learn_cost,
    objective_E,
    objective_F,
    pearson_correlation,
    prox_symmetric_zero_diag,
    relative_error,
    rng_algorithm,
    sinkhorn,
    synth_cost,
    synth_marginals,
)

__all__ = [
    "InvotError",
    "bcd",
    "learn_cost",
    "objective_E",
    "objective_F",
    "pearson_correlation",
    "prox_symmetric_zero_diag",
    "relative_error",
    "rng_algorithm",
    "sinkhorn",
    "synth_cost",
    "synth_marginals",
]
