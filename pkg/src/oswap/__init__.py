"""Oriented swap process laboratory.

Exact pathwise machinery (permutations, sorting operators, shared Poisson
clock streams, coupled TASEPs), Monte Carlo reproduction of the
hydrodynamic and fluctuation limit laws, and closed-form evaluators for
every limiting object.
"""

from . import clocks, coupling, harness, limits, lpp, perms, swap_process, tasep, tracy_widom

__all__ = [
    "clocks",
    "coupling",
    "harness",
    "limits",
    "lpp",
    "perms",
    "swap_process",
    "tasep",
    "tracy_widom",
]

__version__ = "0.1.0"
