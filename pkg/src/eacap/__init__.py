"""Classical capacity of quantum channels assisted by a limited entanglement budget."""

from .channel import KrausChannel, load_channel, make_standard
from .entropic import (
    channel_chi,
    holevo_chi,
    quantum_mutual_information,
    tradeoff_objective,
)
from .optimize import (
    SolverConfig,
    lagrangian_point,
    maximize_chi,
    maximize_qmi,
    tradeoff_curve,
    tradeoff_sweep,
)
from .qmatrix import BipartiteState, DensityMatrix, Ensemble, von_neumann_entropy

__all__ = [
    "BipartiteState",
    "DensityMatrix",
    "Ensemble",
    "KrausChannel",
    "SolverConfig",
    "channel_chi",
    "holevo_chi",
    "lagrangian_point",
    "load_channel",
    "make_standard",
    "maximize_chi",
    "maximize_qmi",
    "quantum_mutual_information",
    "tradeoff_curve",
    "tradeoff_objective",
    "tradeoff_sweep",
    "von_neumann_entropy",
]
