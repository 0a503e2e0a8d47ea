"""Scalar special functions used throughout the package.

Legendre and fully normalized associated Legendre functions, the Bessel
function J0, probabilists' Hermite polynomials, the swinging factorial
polynomial and the chaos coefficients of the Dirac mass and of the
Euclidean norm in the plane.

All functions accept numpy arrays where that makes sense and return arrays
of the broadcast shape; scalars in give floats out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChaosCoefficientTable",
    "assoc_legendre_normalized",
    "bessel_j0",
    "chaos_coefficients",
    "hermite",
    "hilb_approximation",
    "legendre_p",
    "swinging_factorial_poly",
    "FACTORIALS",
    "HILB_EPSILON",
]

X_TOLERANCE = 1e-12
HILB_EPSILON = 0.1
MAX_SWING_ORDER = 20
MAX_CHAOS_ORDER = 40

#: n! for n = 0..41 as floats (exact up to 22!, correctly rounded beyond).
FACTORIALS = tuple(float(math.factorial(n)) for n in range(42))

_J0_SERIES_CUTOFF = 8.0
_J0_ASYMPTOTIC_CUTOFF = 25.0
_J0_SERIES_TERMS = 40
_J0_ASYMPTOTIC_TERMS = 20


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def _clamp_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + X_TOLERANCE):
        raise ValueError("argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def legendre_p(degree: int, x):
    """Legendre polynomial P_degree(x) by the three-term recurrence."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    xs = _clamp_unit(x)
    p_prev = np.ones_like(xs)
    if degree == 0:
        return _scalar_or_array(p_prev, x)
    p = xs.copy()
    for n in range(1, degree):
        p_prev, p = p, ((2 * n + 1) * xs * p - n * p_prev) / (n + 1)
    return _scalar_or_array(p, x)


def _sectoral_log(m: int, sin_t):
    """log of the normalized sectoral value N_mm P_m^m at sin(theta)."""
    log_norm = -0.5 * math.log(4.0 * math.pi)
    log_norm += 0.5 * sum(math.log((2.0 * k + 1.0) / (2.0 * k)) for k in range(1, m + 1))
    if m == 0:
        return np.full_like(sin_t, log_norm)
    with np.errstate(divide="ignore"):
        return log_norm + m * np.log(sin_t)


def _degree_pair(ell: int, m: int, xs: np.ndarray):
    """(N P_ell^m, N P_{ell-1}^m) on a 1-D array of cos(theta) values.

    The sectoral seed is carried as (mantissa, log-scale) through the
    normalized three-term recurrence so that it neither overflows nor
    underflows prematurely.
    """
    sin_t = np.sqrt((1.0 - xs) * (1.0 + xs))
    log_seed = _sectoral_log(m, sin_t)
    dead = np.isneginf(log_seed)
    tiny = log_seed < -300.0
    scale = np.where(tiny & ~dead, log_seed, 0.0)
    p = np.where(tiny, 1.0, np.exp(np.maximum(log_seed, -300.0)))
    p[dead] = 0.0
    p_prev = np.zeros_like(p)
    if ell > m:
        p_prev, p = p, math.sqrt(2.0 * m + 3.0) * xs * p
        for n in range(m + 2, ell + 1):
            a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            p_prev, p = p, a * (xs * p - b * p_prev)
            big = np.abs(p) > 1e200
            if np.any(big):
                p[big] *= 1e-200
                p_prev[big] *= 1e-200
                scale[big] += 200.0 * math.log(10.0)
    with np.errstate(under="ignore"):
        factor = np.exp(scale)
        return p * factor, p_prev * factor


def assoc_legendre_normalized(ell: int, m: int, x):
    """Fully normalized associated Legendre function.

    Normalized so that ``N P_ell^m(cos theta) exp(i m phi)`` has unit L2
    norm on the sphere (no Condon-Shortley phase).  Stable for ell in the
    thousands.
    """
    if not 0 <= m <= ell:
        raise ValueError("need 0 <= m <= ell")
    xs = _clamp_unit(x)
    out, _ = _degree_pair(ell, m, np.atleast_1d(xs).ravel())
    return _scalar_or_array(out.reshape(np.shape(xs)), x)


def _j0_series(x):
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _J0_SERIES_TERMS):
        term = term * q / (k * k)
        total = total + term
    return total


def _j0_miller(x):
    # backward recurrence from J_N = 0, J_{N-1} = tiny, normalized by J0 + 2 sum J_2k = 1
    n_top = 2 * (int(np.max(x)) // 2) + 60
    j_next = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(n_top - 1, 0, -1):
        j_next, j = j, (2.0 * k / x) * j - j_next
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm = norm + 2.0 * j
        big = np.abs(j) > 1e250
        if np.any(big):
            j = np.where(big, j * 1e-250, j)
            j_next = np.where(big, j_next * 1e-250, j_next)
            norm = np.where(big, norm * 1e-250, norm)
    return j / (norm + j)


def _j0_asymptotic(x):
    # Hankel expansion; a_k(0) = (-1)^k prod_{j<=k} (2j-1)^2 / (k! 8^k)
    z = 8.0 * x
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(2 * _J0_ASYMPTOTIC_TERMS):
        if k % 2 == 0:
            p = p + (-1) ** (k // 2) * term
        else:
            q = q - (-1) ** (k // 2) * term
        term = term * (2 * k + 1) ** 2 / ((k + 1) * z)
    chi = x - 0.25 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """Bessel function of the first kind of order zero for x >= 0.

    Power series up to x = 8, Miller backward recurrence on (8, 25] and the
    Hankel asymptotic expansion beyond; absolute error stays below 1e-12 on
    the whole half line.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("bessel_j0 is defined here for x >= 0")
    out = np.empty_like(xs)
    small = xs <= _J0_SERIES_CUTOFF
    large = xs > _J0_ASYMPTOTIC_CUTOFF
    mid = ~small & ~large
    if np.any(small):
        out[small] = _j0_series(xs[small])
    if np.any(mid):
        out[mid] = _j0_miller(xs[mid])
    if np.any(large):
        out[large] = _j0_asymptotic(xs[large])
    return _scalar_or_array(out, x)


def hermite(q: int, t):
    """Probabilists' Hermite polynomial H_q(t); H_{q+1} = t H_q - q H_{q-1}."""
    if q < 0:
        raise ValueError("q must be >= 0")
    ts = np.asarray(t, dtype=float)
    h_prev = np.ones_like(ts)
    if q == 0:
        return _scalar_or_array(h_prev, t)
    h = ts.copy()
    for n in range(1, q):
        h_prev, h = h, ts * h - n * h_prev
    return _scalar_or_array(h, t)


def swinging_factorial_poly(n: int, x: float) -> float:
    """p_N(x) = sum_j (-1)^(N+j) C(N,j) (2j+1)!/(j!)^2 x^j.

    The integer coefficients are formed exactly and summed with fsum.
    """
    if n < 0:
        raise ValueError("N must be >= 0")
    if n > MAX_SWING_ORDER:
        raise OverflowError(f"swinging factorial limited to N <= {MAX_SWING_ORDER}")
    terms = [
        (-1) ** (n + j) * math.comb(n, j) * (math.factorial(2 * j + 1) // math.factorial(j) ** 2) * x**j
        for j in range(n + 1)
    ]
    return math.fsum(terms)


@dataclass(frozen=True)
class ChaosCoefficientTable:
    """beta_{2k} (Dirac mass at 0) and alpha_{2n,2m} (planar Euclidean norm).

    ``beta[k]`` holds beta_{2k}; ``alpha[n, m]`` holds alpha_{2n,2m} for
    2n + 2m <= max_order and NaN elsewhere.
    """

    max_order: int
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.beta.setflags(write=False)
        self.alpha.setflags(write=False)

    def b(self, order: int) -> float:
        """beta at an even order (2k), indexed by the order itself."""
        return float(self.beta[order // 2])

    def a(self, order1: int, order2: int) -> float:
        """alpha at even orders (2n, 2m), indexed by the orders themselves."""
        return float(self.alpha[order1 // 2, order2 // 2])


def chaos_coefficients(max_order: int) -> ChaosCoefficientTable:
    if max_order % 2 or max_order < 0:
        raise ValueError("max_order must be a non-negative even integer")
    if max_order > MAX_CHAOS_ORDER:
        raise ValueError(f"max_order limited to {MAX_CHAOS_ORDER}")
    half = max_order // 2
    beta = np.array([hermite(2 * k, 0.0) / math.sqrt(2.0 * math.pi) for k in range(half + 1)])
    alpha = np.full((half + 1, half + 1), np.nan)
    root = math.sqrt(math.pi / 2.0)
    for n in range(half + 1):
        for m in range(half + 1 - n):
            ratio = (math.factorial(2 * n) // math.factorial(n)) * (math.factorial(2 * m) // math.factorial(m))
            alpha[n, m] = root * ratio * 2.0 ** (-(n + m)) * swinging_factorial_poly(n + m, 0.25)
    return ChaosCoefficientTable(max_order=max_order, beta=beta, alpha=alpha)


def hilb_approximation(ell: int, theta):
    """Leading Hilb term sqrt(theta/sin theta) J0((ell + 1/2) theta).

    Valid on (0, pi - HILB_EPSILON].
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th > math.pi - HILB_EPSILON):
        raise ValueError(f"theta must lie in (0, pi - {HILB_EPSILON}]")
    prefactor = np.sqrt(th / np.sin(th))
    return _scalar_or_array(prefactor * bessel_j0((ell + 0.5) * th), theta)
