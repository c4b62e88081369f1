"""Exact stationary laws, spectra and samplers for ball-and-bin Markov chains."""

from .arrays import RateVector, TriangularArray, weight
from .chains import apply_T, apply_U, apply_X, compositions, project_p
from .exact import MultiPoly, PolyFraction, fraction_equal, parse_rational
from .spectral import build_generator, spectrum
from .stationary import pi_X, pi_Y_finite, pi_Y_series, pi_Z_prefix

__all__ = [
    "RateVector", "TriangularArray", "weight",
    "apply_T", "apply_U", "apply_X", "compositions", "project_p",
    "MultiPoly", "PolyFraction", "fraction_equal", "parse_rational",
    "build_generator", "spectrum",
    "pi_X", "pi_Y_finite", "pi_Y_series", "pi_Z_prefix",
]

__version__ = "0.1.0"
