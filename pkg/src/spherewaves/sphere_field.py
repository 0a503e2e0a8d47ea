"""Random spherical harmonics of a single degree.

T(x) = sqrt(4 pi / (2 ell + 1)) sum_m a_m Y_m(x) with i.i.d. standard
Gaussian a_m and the real orthonormal basis

    Y_0 = N_0 P^0(cos theta),
    Y_m^c = sqrt(2) N_m P^m(cos theta) cos(m phi),
    Y_m^s = sqrt(2) N_m P^m(cos theta) sin(m phi),   m = 1..ell.

Coefficient layout: ``a[0]`` is the zonal term, ``a[2m-1]`` multiplies
Y_m^c and ``a[2m]`` multiplies Y_m^s.

Gradients are returned normalized, (ell(ell+1)/2)^(-1/2) times
(d/d theta, (1/sin theta) d/d phi), so each component has unit variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernels import order_table
from .quadrature import ProductRule
from .rng import RngStream
from .specfun import legendre_p

POLE_BAND = 1e-3

__all__ = [
    "Direction",
    "FieldEvaluation",
    "HarmonicCoefficients",
    "PoleBandError",
    "RowSynthesizer",
    "covariance_oracle",
    "evaluate_on_grid",
    "evaluate_point",
    "evaluate_points",
    "geodesic_distance",
    "sample_coefficients",
]


class PoleBandError(ValueError):
    pass


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("colatitude must lie in [0, pi]")

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def geodesic_distance(x: Direction, y: Direction) -> float:
    c = float(np.dot(x.unit_vector(), y.unit_vector()))
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class HarmonicCoefficients:
    degree: int
    a: np.ndarray = field(repr=False)
    master_seed: int | None = None
    stream_id: int | None = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.a.shape != (2 * self.degree + 1,):
            raise ValueError(f"need {2 * self.degree + 1} coefficients, got {self.a.shape}")
        self.a.setflags(write=False)

    def norm_squared(self) -> float:
        return math.fsum(self.a * self.a)


def sample_coefficients(ell: int, stream: RngStream) -> HarmonicCoefficients:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    a = stream.generator().standard_normal(2 * ell + 1)
    return HarmonicCoefficients(ell, a, stream.master_seed, stream.stream_id)


def _split(a: np.ndarray):
    """Complex row coefficients A_m = C_m - i S_m, with C_0 = a_0."""
    ell = (a.shape[0] - 1) // 2
    amp = np.empty(ell + 1, dtype=complex)
    amp[0] = a[0]
    amp[1:] = (a[1::2] - 1j * a[2::2]) * math.sqrt(2.0)
    return amp


class RowSynthesizer:
    """Evaluates degree-ell fields on rows of constant colatitude.

    The Legendre table (cost O(n_theta ell^2)) is built once per (ell, rows)
    and reused for every realization; each realization then costs
    O(n_theta ell) for the row coefficients plus one real FFT of length
    n_phi per row.
    """

    def __init__(self, ell: int, theta: np.ndarray, n_phi: int, pole_band: float = POLE_BAND):
        self.ell = ell
        self.theta = np.asarray(theta, dtype=float)
        self.n_phi = n_phi
        kappa = math.sqrt(4.0 * math.pi / (2 * ell + 1))
        grad_norm = 1.0 / math.sqrt(ell * (ell + 1) / 2.0)
        p, dp = order_table(ell, self.theta)
        self._p = p * kappa
        self._dp = dp * kappa * grad_norm
        s = np.sin(self.theta)
        self.in_band = (self.theta < pole_band) | (self.theta > math.pi - pole_band)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_s = np.where(self.in_band, np.nan, 1.0 / s)
        self._mp = p * kappa * grad_norm * np.arange(ell + 1)[None, :] * inv_s[:, None]
        self._dp[self.in_band] = np.nan
        self._use_fft = n_phi > 2 * ell
        if not self._use_fft:
            phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
            self._e = np.exp(1j * np.outer(np.arange(ell + 1), phi))

    def _synth(self, rows: np.ndarray) -> np.ndarray:
        if self._use_fft:
            spec = np.zeros((rows.shape[0], self.n_phi // 2 + 1), dtype=complex)
            spec[:, : rows.shape[1]] = rows * (0.5 * self.n_phi)
            spec[:, 0] *= 2.0
            return np.fft.irfft(spec, n=self.n_phi, axis=1)
        return (rows @ self._e).real

    def point_values(self, a: np.ndarray, rows: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Values at (theta[rows[k]], phi[k]) without a full-row synthesis."""
        amp = _split(a)
        e = np.exp(1j * np.outer(phi, np.arange(self.ell + 1)))
        return np.sum(self._p[rows] * (amp[None, :] * e).real, axis=1)

    def values(self, a: np.ndarray) -> np.ndarray:
        amp = _split(a)
        return self._synth(self._p * amp[None, :])

    def gradients(self, a: np.ndarray):
        amp = _split(a)
        g1 = self._synth(self._dp * amp[None, :])
        g2 = self._synth(self._mp * (1j * amp)[None, :])
        return g1, g2


@lru_cache(maxsize=16)
def _synthesizer(ell: int, theta_bytes: bytes, n_phi: int) -> RowSynthesizer:
    return RowSynthesizer(ell, np.frombuffer(theta_bytes, dtype=float), n_phi)


def synthesizer_for(ell: int, theta: np.ndarray, n_phi: int) -> RowSynthesizer:
    return _synthesizer(ell, np.ascontiguousarray(theta, dtype=float).tobytes(), n_phi)


@dataclass(frozen=True, eq=False)
class FieldEvaluation:
    """Field values and normalized gradients on a product rule.

    Gradient entries are NaN on rows inside the pole band.
    """

    grid: ProductRule
    ell: int
    values: np.ndarray = field(repr=False)
    grad1: np.ndarray | None = field(default=None, repr=False)
    grad2: np.ndarray | None = field(default=None, repr=False)
    master_seed: int | None = None
    stream_id: int | None = None


def evaluate_on_grid(coeffs: HarmonicCoefficients, grid: ProductRule, want_gradients: bool = False) -> FieldEvaluation:
    synth = synthesizer_for(coeffs.degree, grid.theta, grid.n_phi)
    values = synth.values(coeffs.a)
    g1 = g2 = None
    if want_gradients:
        g1, g2 = synth.gradients(coeffs.a)
    return FieldEvaluation(grid, coeffs.degree, values, g1, g2, coeffs.master_seed, coeffs.stream_id)


def evaluate_points(coeffs: HarmonicCoefficients, theta, phi, gradients: bool = False, pole_band: float = POLE_BAND):
    """Field (and optionally normalized gradients) at arbitrary points."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    ell = coeffs.degree
    if gradients and np.any((theta < pole_band) | (theta > math.pi - pole_band)):
        raise PoleBandError("gradients requested inside the pole band")
    kappa = math.sqrt(4.0 * math.pi / (2 * ell + 1))
    p, dp = order_table(ell, theta)
    amp = _split(coeffs.a)
    ms = np.arange(ell + 1)
    e = np.exp(1j * np.outer(phi, ms))
    values = kappa * np.sum(p * (amp[None, :] * e).real, axis=1)
    if not gradients:
        return values
    gn = kappa / math.sqrt(ell * (ell + 1) / 2.0)
    g1 = gn * np.sum(dp * (amp[None, :] * e).real, axis=1)
    g2 = gn * np.sum(p * ms[None, :] * (1j * amp[None, :] * e).real, axis=1) / np.sin(theta)
    return values, g1, g2


def evaluate_point(coeffs: HarmonicCoefficients, x: Direction, gradients: bool = True, pole_band: float = POLE_BAND):
    """(value, grad1, grad2) at one direction; value only if ``gradients`` is False."""
    out = evaluate_points(coeffs, [x.theta], [x.phi], gradients=gradients, pole_band=pole_band)
    if not gradients:
        return float(out[0])
    return tuple(float(v[0]) for v in out)


def covariance_oracle(ell: int, d: float) -> float:
    """Cov(T(x), T(y)) = P_ell(cos d(x, y))."""
    if not 0.0 <= d <= math.pi + 1e-12:
        raise ValueError("distance must lie in [0, pi]")
    return legendre_p(ell, math.cos(min(d, math.pi)))
