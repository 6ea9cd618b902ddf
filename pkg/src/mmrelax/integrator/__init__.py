"""Implicit BDF integration of the moving-mesh DAE."""

from .bdf import (IntegrationResult, IntegratorConfig, InitializationError,
                  StepRecord, Termination, consistent_initial_derivatives,
                  integrate, wrms)
from .jacobian import IterationMatrix, SingularMatrixError, fd_jacobian
from .system import (MovingMeshSystem, PrescribedMeshSystem, make_system,
                     residual)

__all__ = [
    "IntegrationResult", "IntegratorConfig", "InitializationError",
    "StepRecord", "Termination", "consistent_initial_derivatives",
    "integrate", "wrms", "IterationMatrix", "SingularMatrixError",
    "fd_jacobian", "MovingMeshSystem", "PrescribedMeshSystem", "make_system",
    "residual",
]
