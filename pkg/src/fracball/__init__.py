"""Spectral toolkit for the fractional Dirichlet Laplacian on the unit ball.

Eigenvalue computation by angular decomposition, radial semilinear solvers,
and Morse-index certification of radial sign-changing solutions.
"""

__version__ = "0.1.0"

from .params import ProblemParams, frac_constant, harmonic_multiplicity, sphere_area

__all__ = [
    "ProblemParams",
    "frac_constant",
    "harmonic_multiplicity",
    "sphere_area",
    "__version__",
]
