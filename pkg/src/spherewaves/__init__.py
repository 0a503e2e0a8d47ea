"""Random spherical harmonics: nodal lengths, sample trispectrum, chaos projections."""
from .chaos import (
    chaos_projection,
    pilot_cap_variance,
    sample_trispectrum,
    standardized_trispectrum,
    trispectrum_grid,
    trispectrum_variance_oracle,
)
from .kernels import BACKEND
from .nodal import FULL_SPHERE, Region, cap, contour_grid, expected_nodal_length, extract_nodal_length
from .quadrature import build_cap_rule, build_grid, integrate, integrate_cap
from .rng import RngStream
from .sphere_field import Direction, HarmonicCoefficients, evaluate_on_grid, evaluate_point, sample_coefficients
from .specfun import assoc_legendre_normalized, bessel_j0, chaos_coefficients, hermite, legendre_p

__version__ = "0.1.0"
