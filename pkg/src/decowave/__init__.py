"""Measurement-induced dynamics on antiferromagnetic spin-1/2 XXZ rings.

Exact state-vector simulation: Lanczos ground states, Chebyshev time
propagation and instantaneous single-spin projective measurements.
"""

__version__ = "0.1.0"

from .basis import ChainSpec, SzSector, enumerate_sector, product_state_code  # noqa: E402
from .eigensolve import GroundStateResult, LanczosConfig, lanczos_ground_state  # noqa: E402
from .errors import (  # noqa: E402
    ContractViolation,
    ConvergenceError,
    DecowaveError,
    DomainError,
    ImpossibleOutcomeError,
    PrecisionError,
    ValidationError,
)
from .measurement import ProjectorSpec, measure_nonselective, project, zeno_sequence  # noqa: E402
from .observables import (  # noqa: E402
    correlation,
    energy,
    fourier_spectrum,
    magnetization,
    magnetization_profile,
    staggered_magnetization,
)
from .operators import StateVector, product_state  # noqa: E402
from .propagate import PropagatorConfig, TimeGrid, evolve, evolve_samples  # noqa: E402

__all__ = [
    "ChainSpec",
    "ContractViolation",
    "ConvergenceError",
    "DecowaveError",
    "DomainError",
    "GroundStateResult",
    "ImpossibleOutcomeError",
    "LanczosConfig",
    "PrecisionError",
    "ProjectorSpec",
    "PropagatorConfig",
    "StateVector",
    "SzSector",
    "TimeGrid",
    "ValidationError",
    "correlation",
    "energy",
    "enumerate_sector",
    "evolve",
    "evolve_samples",
    "fourier_spectrum",
    "lanczos_ground_state",
    "magnetization",
    "magnetization_profile",
    "measure_nonselective",
    "product_state",
    "product_state_code",
    "project",
    "staggered_magnetization",
    "zeno_sequence",
]
