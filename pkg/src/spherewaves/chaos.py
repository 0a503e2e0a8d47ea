"""Sample trispectrum and explicit Wiener-chaos projections of the nodal length.

All integrals are product-rule quadratures whose degree covers the
polynomial degree of the integrand (4 ell for the trispectrum, 2q ell for
the order-2q projection), so they are exact up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import CapRule, ProductRule, build_cap_rule, build_grid, integrate, legendre_power_integral
from .rng import RngStream
from .sphere_field import FieldEvaluation, evaluate_on_grid, sample_coefficients
from .specfun import FACTORIALS, chaos_coefficients, hermite

__all__ = [
    "ChaosProjectionSample",
    "ExactnessError",
    "TrispectrumSample",
    "VarianceEstimate",
    "chaos_projection",
    "pilot_cap_variance",
    "sample_trispectrum",
    "standardized_trispectrum",
    "trispectrum_grid",
    "trispectrum_variance_oracle",
]


class ExactnessError(ValueError):
    pass


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    se: float = 0.0
    n: int | None = None


@dataclass(frozen=True)
class TrispectrumSample:
    value: float
    ell: int
    region: str
    grid_degree: int
    master_seed: int | None = None
    stream_id: int | None = None


@dataclass(frozen=True)
class ChaosProjectionSample:
    order: int
    value: float
    ell: int
    region: str
    master_seed: int | None = None
    stream_id: int | None = None


def _region_label(grid: ProductRule) -> str:
    if isinstance(grid, CapRule) and grid.radius < math.pi:
        return f"cap({grid.radius:g})"
    return "sphere"


def _prefactor(ell: int) -> float:
    return math.sqrt(ell * (ell + 1) / 2.0)


def trispectrum_grid(ell: int, radius: float | None = None, order: int = 4) -> ProductRule:
    """Quadrature rule of degree ``order * ell`` on the sphere or a polar cap."""
    degree = order * ell
    if radius is None or radius >= math.pi:
        return build_grid(degree)
    return build_cap_rule(radius, degree)


def sample_trispectrum(field: FieldEvaluation) -> TrispectrumSample:
    """-(1/4) sqrt(ell(ell+1)/2) (1/4!) * integral of H_4(T) over the grid's region."""
    ell = field.ell
    grid = field.grid
    if grid.degree < 4 * ell:
        raise ExactnessError(f"grid degree {grid.degree} < 4 ell = {4 * ell}")
    integral = integrate(grid, hermite(4, field.values))
    value = -0.25 * _prefactor(ell) / 24.0 * integral
    return TrispectrumSample(value, ell, _region_label(grid), grid.degree, field.master_seed, field.stream_id)


def trispectrum_variance_oracle(ell: int) -> float:
    """Exact Var of the full-sphere sample trispectrum.

    Cov(H4(X), H4(Y)) = 4! rho^4 for unit Gaussians with correlation rho,
    and isotropy turns the double sphere integral into 8 pi^2 times a 1-D
    integral, giving pi^2/96 * ell(ell+1) * int_{-1}^{1} P_ell(t)^4 dt.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return math.pi**2 / 96.0 * ell * (ell + 1) * legendre_power_integral(ell, 4)


_COEFFS = chaos_coefficients(6)


def chaos_projection(field: FieldEvaluation, q: int) -> ChaosProjectionSample:
    """Order-2q chaos component of the nodal length over the grid's region.

    The normalized gradient components already have unit variance at every
    point (isotropy), so no further pointwise standardization is applied.
    Nodes in the pole band have no gradient and are dropped from the sum.
    """
    if q not in (1, 2, 3):
        raise ValueError("q must be 1, 2 or 3")
    ell = field.ell
    grid = field.grid
    if grid.degree < 2 * q * ell:
        raise ExactnessError(f"grid degree {grid.degree} < 2q ell = {2 * q * ell}")
    if field.grad1 is None or field.grad2 is None:
        raise ValueError("chaos projection needs gradients")
    t, g1, g2 = field.values, field.grad1, field.grad2
    h_t = {j: hermite(j, t) for j in range(0, 2 * q + 1, 2)}
    h_1 = {j: hermite(j, g1) for j in range(0, 2 * q + 1, 2)}
    h_2 = {j: hermite(j, g2) for j in range(0, 2 * q + 1, 2)}
    integrand = np.zeros(grid.shape)
    for u in range(q + 1):
        for k in range(u + 1):
            n1, n2, n0 = 2 * k, 2 * u - 2 * k, 2 * q - 2 * u
            c = _COEFFS.a(n1, n2) * _COEFFS.b(n0) / (FACTORIALS[n1] * FACTORIALS[n2] * FACTORIALS[n0])
            integrand += c * h_t[n0] * h_1[n1] * h_2[n2]
    integrand = np.where(np.isfinite(integrand), integrand, 0.0)
    value = _prefactor(ell) * integrate(grid, integrand)
    return ChaosProjectionSample(2 * q, value, ell, _region_label(grid), field.master_seed, field.stream_id)


def standardized_trispectrum(sample: TrispectrumSample, variance: VarianceEstimate | float | None = None) -> float:
    """M / sqrt(Var M); the full sphere uses the exact oracle by default."""
    if variance is None:
        if sample.region != "sphere":
            raise ValueError("cap trispectrum needs a pilot variance estimate")
        var = trispectrum_variance_oracle(sample.ell)
    else:
        var = variance.value if isinstance(variance, VarianceEstimate) else float(variance)
    if not var > 0:
        raise ValueError("variance must be positive")
    return sample.value / math.sqrt(var)


def pilot_cap_variance(ell: int, radius: float, n_pilot: int = 2000, master_seed: int = 0) -> VarianceEstimate:
    """Monte Carlo variance of the cap trispectrum, with its standard error.

    The pilot uses its own stream family so it never reuses the draws of the
    run it standardizes.
    """
    grid = trispectrum_grid(ell, radius)
    values = np.empty(n_pilot)
    for i in range(n_pilot):
        stream = RngStream.for_replication(master_seed, f"pilot-cap-{ell}-{radius!r}", i)
        field = evaluate_on_grid(sample_coefficients(ell, stream), grid)
        values[i] = sample_trispectrum(field).value
    var = float(np.var(values, ddof=1))
    m4 = float(np.mean((values - values.mean()) ** 4))
    se = math.sqrt(max(m4 - var**2, 0.0) / n_pilot)
    return VarianceEstimate(var, se, n_pilot)
