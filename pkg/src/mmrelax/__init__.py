"""Moving-mesh solver for 1-D PDEs with a solution-adaptive relaxation time."""

from .core import (ConfigError, EvaluationError, MeshState, ProblemSpec,
                   RunConfig, SystemState, TauPolicy, pack_state,
                   unpack_state, validate_mesh)

__version__ = "0.1.0"
