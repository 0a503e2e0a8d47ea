"""Product quadrature on the sphere and on polar caps.

Colatitude nodes are Gauss-Legendre in cos(theta), longitudes are uniform.
A grid of degree L integrates every spherical polynomial of degree <= L
exactly, which is what makes the trispectrum and chaos integrals exact up
to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .specfun import legendre_p

NODE_CAP = 10**8

__all__ = [
    "CapRule",
    "GridTooLarge",
    "ProductRule",
    "SphericalGrid",
    "build_cap_rule",
    "build_grid",
    "integrate",
    "integrate_cap",
    "legendre_power_integral",
]


class GridTooLarge(RuntimeError):
    pass


@lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True, eq=False)
class ProductRule:
    """Tensor rule: theta rows (ascending) times ``n_phi`` uniform longitudes."""

    degree: int
    theta: np.ndarray = field(repr=False)
    theta_weights: np.ndarray = field(repr=False)
    n_phi: int

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.shape[0], self.n_phi)

    @property
    def size(self) -> int:
        return self.theta.shape[0] * self.n_phi

    @property
    def phi_weight(self) -> float:
        return 2.0 * math.pi / self.n_phi

    def weights(self) -> np.ndarray:
        return np.repeat(self.theta_weights[:, None] * self.phi_weight, self.n_phi, axis=1)

    @property
    def area(self) -> float:
        return math.fsum(self.theta_weights) * 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class SphericalGrid(ProductRule):
    pass


@dataclass(frozen=True, eq=False)
class CapRule(ProductRule):
    radius: float = math.pi


def _n_theta(degree: int) -> int:
    return max(1, math.ceil((degree + 1) / 2))


def _check_size(n_theta: int, n_phi: int, node_cap: int):
    if n_theta * n_phi > node_cap:
        raise GridTooLarge(f"{n_theta} x {n_phi} nodes exceeds the cap of {node_cap}")


def build_grid(degree: int, n_phi: int | None = None, node_cap: int = NODE_CAP) -> SphericalGrid:
    """Full-sphere product grid exact for spherical polynomials of degree <= ``degree``."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n_t = _n_theta(degree)
    n_phi = degree + 1 if n_phi is None else n_phi
    if n_phi < degree + 1:
        raise ValueError("n_phi must be >= degree + 1")
    _check_size(n_t, n_phi, node_cap)
    x, w = _gauss_legendre(n_t)
    order = np.argsort(-x)
    theta = np.arccos(x[order])
    return SphericalGrid(degree=degree, theta=theta, theta_weights=np.array(w[order]), n_phi=n_phi)


def build_cap_rule(radius: float, degree: int, n_phi: int | None = None, node_cap: int = NODE_CAP) -> CapRule:
    """Polar cap {theta <= radius} with a fresh Gauss-Legendre rule on [cos r, 1]."""
    if not 0.0 < radius <= math.pi:
        raise ValueError("cap radius must lie in (0, pi]")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n_t = _n_theta(degree)
    n_phi = degree + 1 if n_phi is None else n_phi
    if n_phi < degree + 1:
        raise ValueError("n_phi must be >= degree + 1")
    _check_size(n_t, n_phi, node_cap)
    x, w = _gauss_legendre(n_t)
    lo = math.cos(radius)
    half = 0.5 * (1.0 - lo)
    xs = lo + half * (x + 1.0)
    order = np.argsort(-xs)
    theta = np.arccos(np.clip(xs[order], -1.0, 1.0))
    return CapRule(degree=degree, theta=theta, theta_weights=np.array(w[order]) * half, n_phi=n_phi, radius=radius)


def integrate(grid: ProductRule, values) -> float:
    """Weighted sum of per-node values, shape ``grid.shape``.

    Rows are reduced pairwise by numpy and the row totals are combined with
    exactly rounded summation, so the result does not depend on how the work
    is partitioned.
    """
    v = np.asarray(values, dtype=float)
    if v.shape != grid.shape:
        raise ValueError(f"values have shape {v.shape}, grid has {grid.shape}")
    rows = v.sum(axis=1) * grid.theta_weights
    return math.fsum(rows) * grid.phi_weight


def integrate_cap(rule: CapRule, values) -> float:
    if not isinstance(rule, CapRule):
        raise TypeError("integrate_cap needs a CapRule")
    return integrate(rule, values)


def legendre_power_integral(ell: int, p: int) -> float:
    """int_0^pi P_ell(cos theta)^p sin theta d theta for p in {2, 4}."""
    if p not in (2, 4):
        raise ValueError("p must be 2 or 4")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    n = max(1, math.ceil((p * ell + 2) / 2))
    x, w = _gauss_legendre(n)
    vals = legendre_p(ell, x) ** p
    return math.fsum(vals * w)
