"""Learning coarse causal structure by recursive partition refinement."""

from .coarsening import (Coarsening, InvalidCoarseningError, Partition, enumerate_valid, induce,
                         interventional_coarsening, is_valid, marginal_coarsening)
from .graph import CycleError, Dag
from .kernels import BACKEND
from .repare import EdgeQuery, RefineDecision, SignatureRefineOracle, repare
from .stats import EnvironmentData, TestConfig, learn

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Coarsening", "CycleError", "Dag", "EdgeQuery", "EnvironmentData", "InvalidCoarseningError",
    "Partition", "RefineDecision", "SignatureRefineOracle", "TestConfig", "enumerate_valid", "induce",
    "interventional_coarsening", "is_valid", "learn", "marginal_coarsening", "repare",
]
