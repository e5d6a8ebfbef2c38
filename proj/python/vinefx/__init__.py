"""Vine copula scenario generation and currency overlay optimisation."""

from ._vinefx import (
    VinefxError,
    __version__,
    copula_density,
    cvar,
    frontier,
    generate_scenarios,
    h_func,
    inv_h,
    kendall_tau,
    optimize,
)

__all__ = [
    "VinefxError",
    "copula_density",
    "cvar",
    "frontier",
    "generate_scenarios",
    "h_func",
    "inv_h",
    "kendall_tau",
    "optimize",
]
