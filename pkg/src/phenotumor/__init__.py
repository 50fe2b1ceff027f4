"""Finite-volume simulation of a phenotype-structured tumour growth model with Darcy pressure.

Modules: ``core_fields`` (grids and derived fields), ``reaction_model``
(growth rates, initial data), ``solver`` (explicit upwind time stepping),
``diagnostics`` (estimate functionals), ``oracles`` (reference solutions),
``experiments`` and ``cli`` (configuration, sweeps, command line).
"""
from .core_fields import PhenotypeMesh, SpatialGrid
from .errors import (
    BoundaryContactError,
    ConfigError,
    DimensionError,
    DomainError,
    ModeError,
    ParameterError,
    PhenotumorError,
    StepError,
)
from .reaction_model import ReactionSpec
from .solver import SolverConfig, run, stable_dt, step

__version__ = "0.1.0"

__all__ = [
    "BoundaryContactError", "ConfigError", "DimensionError", "DomainError", "ModeError", "ParameterError",
    "PhenotumorError", "PhenotypeMesh", "ReactionSpec", "SolverConfig", "SpatialGrid", "StepError",
    "run", "stable_dt", "step",
]
