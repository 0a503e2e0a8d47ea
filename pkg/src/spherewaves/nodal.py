"""Nodal length of a random spherical harmonic.

The field is sampled on a uniform (theta, phi) contour grid, the zero set
is traced cell by cell with marching squares, and each segment is measured
in the round metric d theta^2 + sin^2(theta_mid) d phi^2.  The polar bands
theta < pole_band and theta > pi - pole_band are not covered; the nodal
length lost there is at most a few times 2 pi pole_band.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import contour_length
from .rng import RngStream
from .sphere_field import (
    POLE_BAND,
    FieldEvaluation,
    HarmonicCoefficients,
    sample_coefficients,
    synthesizer_for,
)

TIE_VALUE = 1e-14
MIN_RHO = 4
MIN_ROWS = 32

__all__ = [
    "ContourGrid",
    "FULL_SPHERE",
    "NodalLengthSample",
    "Region",
    "ResolutionError",
    "cap",
    "contour_grid",
    "epsilon_length_estimate",
    "expected_nodal_length",
    "extract_nodal_length",
    "nodal_length_replicate",
]


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    """The full sphere, a polar cap {theta <= radius}, or its complement."""

    radius: float = math.pi
    complement: bool = False

    def __post_init__(self):
        if not 0.0 < self.radius <= math.pi:
            raise ValueError("cap radius must lie in (0, pi]")

    @property
    def is_full(self) -> bool:
        return self.radius >= math.pi and not self.complement

    @property
    def area(self) -> float:
        inside = 2.0 * math.pi * (1.0 - math.cos(self.radius))
        return 4.0 * math.pi - inside if self.complement else inside

    def label(self) -> str:
        if self.is_full:
            return "sphere"
        return f"{'outside' if self.complement else 'cap'}({self.radius:g})"


FULL_SPHERE = Region()


def cap(radius: float) -> Region:
    return Region(radius=radius)


def expected_nodal_length(ell: int, region: Region = FULL_SPHERE) -> float:
    """area(region) / (2 sqrt 2) * sqrt(ell (ell + 1))."""
    return region.area / (2.0 * math.sqrt(2.0)) * math.sqrt(ell * (ell + 1))


@dataclass(frozen=True, eq=False)
class ContourGrid:
    ell: int
    rho: float
    theta: np.ndarray = field(repr=False)
    n_phi: int
    values: np.ndarray | None = field(default=None, repr=False)
    coeffs: HarmonicCoefficients | None = field(default=None, repr=False)

    @property
    def dphi(self) -> float:
        return 2.0 * math.pi / self.n_phi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.shape[0], self.n_phi)

    def populated(self, coeffs: HarmonicCoefficients) -> "ContourGrid":
        values = synthesizer_for(coeffs.degree, self.theta, self.n_phi).values(coeffs.a)
        return ContourGrid(self.ell, self.rho, self.theta, self.n_phi, values, coeffs)


def contour_grid(ell: int, rho: float = 8, pole_band: float = POLE_BAND, min_rows: int = MIN_ROWS) -> ContourGrid:
    """Uniform grid with spacing <= 2 pi / (rho ell) in both directions.

    Very low degrees get at least ``min_rows`` rows (and twice as many
    columns) so the polygonal approximation of long, gently curved nodal
    lines stays accurate.
    """
    if rho < MIN_RHO:
        raise ResolutionError(f"rho must be >= {MIN_RHO}")
    step = 2.0 * math.pi / (rho * ell)
    span = math.pi - 2.0 * pole_band
    n_rows = max(min_rows, math.ceil(span / step) + 1)
    n_phi = max(2 * (n_rows - 1), math.ceil(rho * ell))
    theta = np.linspace(pole_band, math.pi - pole_band, n_rows)
    return ContourGrid(ell, rho, theta, n_phi)


@dataclass(frozen=True)
class NodalLengthSample:
    length: float
    n_segments: int
    rho: float
    region: Region
    n_clipped: int = 0
    n_saddles: int = 0
    master_seed: int | None = None
    stream_id: int | None = None


def _saddle_centers(grid: ContourGrid, values: np.ndarray):
    """Sign of the field at the centre of every saddle cell (0 elsewhere)."""
    pos = values > 0
    right = np.roll(pos, -1, axis=1)
    p00, p01, p10, p11 = pos[:-1], right[:-1], pos[1:], right[1:]
    saddle = (p00 == p11) & (p01 == p10) & (p00 != p01)
    signs = np.zeros(saddle.shape, dtype=np.int8)
    ii, jj = np.nonzero(saddle)
    if ii.size == 0:
        return signs, 0
    if grid.coeffs is not None:
        mid = 0.5 * (grid.theta[:-1] + grid.theta[1:])
        synth = synthesizer_for(grid.ell, mid, grid.n_phi)
        centre = synth.point_values(grid.coeffs.a, ii, (jj + 0.5) * grid.dphi)
    else:
        v = values
        jn = (jj + 1) % grid.n_phi
        centre = 0.25 * (v[ii, jj] + v[ii, jn] + v[ii + 1, jj] + v[ii + 1, jn])
    signs[ii, jj] = np.where(centre > 0, 1, -1)
    return signs, int(ii.size)


def extract_nodal_length(grid: ContourGrid, region: Region = FULL_SPHERE) -> NodalLengthSample:
    if grid.values is None:
        raise ValueError("contour grid has no field values")
    if grid.rho < MIN_RHO:
        raise ResolutionError(f"rho must be >= {MIN_RHO}")
    values = grid.values
    zeros = values == 0.0
    if np.any(zeros):
        warnings.warn(f"{int(zeros.sum())} grid values exactly zero; set to {TIE_VALUE}", RuntimeWarning, stacklevel=2)
        values = np.where(zeros, TIE_VALUE, values)
    signs, n_saddles = _saddle_centers(grid, values)
    cap_theta = math.inf if region.is_full else region.radius
    length, n_seg, n_clip = contour_length(values, grid.theta, grid.dphi, signs, cap_theta, region.complement)
    seed = grid.coeffs.master_seed if grid.coeffs is not None else None
    sid = grid.coeffs.stream_id if grid.coeffs is not None else None
    return NodalLengthSample(float(length), int(n_seg), grid.rho, region, int(n_clip), n_saddles, seed, sid)


def nodal_length_replicate(ell: int, rho: float, region: Region, stream: RngStream) -> NodalLengthSample:
    coeffs = sample_coefficients(ell, stream)
    grid = contour_grid(ell, rho).populated(coeffs)
    return extract_nodal_length(grid, region)


def epsilon_length_estimate(field_eval: FieldEvaluation, eps: float, region: Region | None = None) -> float:
    """(1/2 eps) * integral over the region of 1{|T| <= eps} |grad T|.

    The region defaults to the one covered by the evaluation grid (full
    sphere or cap rule); an explicit ``region`` masks the grid further.
    Nodes in the pole band carry no gradient and contribute nothing.
    The indicator is not polynomial, so the rule is only accurate once the
    node spacing is comparable to the band width eps / sqrt(ell (ell + 1) / 2);
    a 4 ell rule is far too coarse for small eps.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if field_eval.grad1 is None or field_eval.grad2 is None:
        raise ValueError("epsilon estimate needs gradients")
    ell = field_eval.ell
    grid = field_eval.grid
    band = np.abs(field_eval.values) <= eps
    norm = math.sqrt(ell * (ell + 1) / 2.0) * np.hypot(field_eval.grad1, field_eval.grad2)
    integrand = np.where(band & np.isfinite(norm), norm, 0.0)
    if region is not None and not region.is_full:
        inside = (grid.theta <= region.radius) != region.complement
        integrand = integrand * inside[:, None]
        band = band & inside[:, None]
    n_band = int(np.count_nonzero(band))
    if n_band < 1000:
        warnings.warn(f"only {n_band} nodes in the band |T| <= {eps}", RuntimeWarning, stacklevel=2)
    rows = integrand.sum(axis=1) * grid.theta_weights
    return math.fsum(rows) * grid.phi_weight / (2.0 * eps)
