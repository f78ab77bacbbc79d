"""Radial fractional Sobolev spaces, weighted embeddings and a weighted Hamiltonian elliptic system."""

from .embedding import EmbeddingParams, check_embedding, estimate_best_constant
from .hankel import DomainError, RadialProfile, TailWarning, make_plan
from .solver import build_basis, find_multiple, newton_solve, shooting_oracle
from .system import ProblemParams, check_conditions, choose_st

__all__ = [
    "DomainError",
    "TailWarning",
    "RadialProfile",
    "make_plan",
    "EmbeddingParams",
    "check_embedding",
    "estimate_best_constant",
    "ProblemParams",
    "check_conditions",
    "choose_st",
    "build_basis",
    "newton_solve",
    "find_multiple",
    "shooting_oracle",
]

__version__ = "0.1.0"
