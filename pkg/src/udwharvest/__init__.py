"""Leading-order entanglement harvesting between two smeared detectors.

The package evaluates the local noise L, the cross term L_AB and the
entangling term M (split into its anticommutator part M+ and commutator part
M-) for two Unruh-DeWitt detectors with Gaussian switching and smearing in a
massless scalar vacuum in 1+1, 2+1 and 3+1 dimensions.
"""

from .core import Coupling, DensityMatrix, MatrixElements, PairConfig, assemble_rho, validate
from .elements import (
    EvaluationContext,
    compute_elements,
    correlation_M,
    correlation_M_minus,
    correlation_M_plus,
    correlation_M_plus_momentum,
    cross_noise,
    local_noise,
    negativity,
    pointlike_M_minus_1d,
)
from .quad import QuadratureSpec

__all__ = [
    "Coupling", "DensityMatrix", "EvaluationContext", "MatrixElements", "PairConfig",
    "QuadratureSpec", "assemble_rho", "compute_elements", "correlation_M",
    "correlation_M_minus", "correlation_M_plus", "correlation_M_plus_momentum",
    "cross_noise", "local_noise", "negativity", "pointlike_M_minus_1d", "validate",
]

__version__ = "0.1.0"
