"""cubefib: exact-arithmetic toolkit for fibration-method point counts on
cubic hypersurfaces (structural analysis, local densities, lattice counts,
sieve-admissible sets, growth-exponent experiments)."""

from .polynomials import IntPolynomial, LinearChange, VariableSplit
from .linalg import QuadraticPolynomial, RationalMatrix, rank_signature_over_Q

__version__ = "0.1.0"

__all__ = [
    "IntPolynomial",
    "LinearChange",
    "VariableSplit",
    "QuadraticPolynomial",
    "RationalMatrix",
    "rank_signature_over_Q",
    "__version__",
]
