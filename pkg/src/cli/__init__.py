"""QHetSim CLI Subcommands"""

from . import analytic_cmd, simulate_cmd, sweep_cmd, validate_cmd

SUBCOMMANDS = [analytic_cmd, sweep_cmd, simulate_cmd, validate_cmd]

__all__ = [
    "SUBCOMMANDS",
    "analytic_cmd",
    "sweep_cmd",
    "simulate_cmd",
    "validate_cmd",
]
