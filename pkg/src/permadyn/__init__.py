"""Multipartite mutual information of permutation-invariant open spin systems.

Two independent routes to the intensive mutual information ``I_M/N``:
mean-field attractor averages (:mod:`permadyn.meanfield`) and exact finite-N
steady states in the Dicke basis (:mod:`permadyn.dicke`), plus Floquet
analysis of limit cycles and ferromagnetic ground states.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .dicke import (DickeState, assemble_liouvillian, dicke_dimension, finite_analysis,
                    finite_mutual_info, local_magnetization, spin_operators, steady_state,
                    steady_state_diagonal, total_entropy)
from .floquet import floquet_analysis, monodromy
from .ground_state import GroundStateResult, ground_state_mutual_info
from .lmg import LMGParams, analytic_limit_cycle, analytic_mutual_info, drift_system
from .meanfield import (DriftSystem, MeanFieldSettings, classify_attractor, find_attractor,
                        integrate, macroscopic_mutual_info, mean_field_analysis)
from .state_space import BlochVector, binary_entropy, von_neumann_entropy

__all__ = [
    "BACKEND", "BlochVector", "DickeState", "DriftSystem", "GroundStateResult", "LMGParams",
    "MeanFieldSettings", "analytic_limit_cycle", "analytic_mutual_info", "assemble_liouvillian",
    "binary_entropy", "classify_attractor", "dicke_dimension", "drift_system",
    "find_attractor", "finite_analysis", "finite_mutual_info", "floquet_analysis",
    "ground_state_mutual_info", "integrate", "local_magnetization", "macroscopic_mutual_info",
    "mean_field_analysis", "monodromy", "spin_operators", "steady_state",
    "steady_state_diagonal", "total_entropy", "von_neumann_entropy",
]
