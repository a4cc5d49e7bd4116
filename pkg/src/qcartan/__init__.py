"""qcartan: numerical laboratory for Cartan subproduct chains of quantum
SL(N) modules — truncated Fock spaces, braiding, and convergence-defect
measurements."""

from .numerics import AmbiguousRank, InvariantViolation, ToleranceProfile
from .qcore import Weight, fundamental_weight, q_int, rho, weyl_dim

__version__ = "0.1.0"

__all__ = [
    "AmbiguousRank",
    "InvariantViolation",
    "ToleranceProfile",
    "Weight",
    "fundamental_weight",
    "q_int",
    "rho",
    "weyl_dim",
    "__version__",
]
