"""Interacting quantum walks on graphs: a walker with a coin on each node
and one spin per node, coupled by controlled-Z and exchange gates."""

from .graph import Graph, GraphError, build_graph, generate, load_graph, save_graph
from .observables import TrajectoryRecord, run_trajectory
from .ops import EvolutionOperator, build_unitary, evolve, step
from .spectral import SpectralData, diagonalize, level_spacings, thermalization_report
from .state import LIMITS, GuardError, PureState, initial_state

__version__ = "0.1.0"

__all__ = [
    "EvolutionOperator",
    "Graph",
    "GraphError",
    "GuardError",
    "LIMITS",
    "PureState",
    "SpectralData",
    "TrajectoryRecord",
    "build_graph",
    "build_unitary",
    "diagonalize",
    "evolve",
    "generate",
    "initial_state",
    "level_spacings",
    "load_graph",
    "run_trajectory",
    "save_graph",
    "step",
    "thermalization_report",
]
