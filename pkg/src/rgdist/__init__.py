"""Typical distances in rank-1 inhomogeneous random graphs.

Modules
-------
capacities
    Capacity laws and sequences, mark and offspring laws, condition checks.
graphgen
    Poissonian, expected-degree and generalized random graph generators.
distances
    BFS shells, hopcount sampling, survival curves, ``sigma_N`` and ``a_N``.
branching
    Delayed branching process, martingale limit ``W``, limit law, marked process.
coupling
    Edge coupling of the Poissonian graph with another rank-1 graph.
cli
    The ``rgdist`` experiment driver.
"""

from .capacities import (
    CapacitySequence,
    MixedPoissonLaw,
    SurvivalModel,
    deterministic_capacities,
    figure1_model,
    iid_capacities,
    offspring_laws,
)
from .distances import bfs_distance, sample_hopcounts, shells, sigma_a, survival
from .errors import DomainError, ManifestError, QuadratureError, TruncationError
from .graphgen import ConnectionKernel, SparseGraph, generate, generate_bernoulli, generate_prg

__version__ = "0.1.0"

__all__ = [
    "CapacitySequence",
    "ConnectionKernel",
    "DomainError",
    "ManifestError",
    "MixedPoissonLaw",
    "QuadratureError",
    "SparseGraph",
    "SurvivalModel",
    "TruncationError",
    "bfs_distance",
    "deterministic_capacities",
    "figure1_model",
    "generate",
    "generate_bernoulli",
    "generate_prg",
    "iid_capacities",
    "offspring_laws",
    "sample_hopcounts",
    "shells",
    "sigma_a",
    "survival",
]
