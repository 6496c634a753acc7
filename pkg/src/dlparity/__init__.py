"""Parity of the additive discrete logarithm in Z_p: exact tables, sign-matrix
spectra, orthogonality statistics and small-network learnability experiments."""

from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DomainError,
    RangeError,
    VerificationError,
)
from .zp_core import GroupSpec, additive_dlog, mod_inverse, parity_bit

__all__ = [
    "CapacityError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "GroupSpec",
    "RangeError",
    "VerificationError",
    "additive_dlog",
    "mod_inverse",
    "parity_bit",
]
