"""Estimators and deviation diagnostics.

Cumulants are k-statistics with delete-one jackknife errors.  Distances to
the standard Gaussian are computed exactly from the order statistics.  Tail
probabilities carry Clopper-Pearson intervals, which are pushed through the
log transforms of the rate and log-ratio diagnostics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri
from scipy.stats import beta as beta_dist

from .rng import RngStream

TAIL_FLOOR = 0.5
MIN_TAIL_COUNT = 10

__all__ = [
    "ExpEquivalenceGap",
    "MdpCurve",
    "SampleSummary",
    "TailDiagnostic",
    "clopper_pearson",
    "exp_equivalence_gap",
    "gaussian_reference_rate",
    "iid_mdp_calibration",
    "kolmogorov_distance",
    "mdp_rate",
    "scale_schedule",
    "summarize",
    "tail_log_ratio",
    "validate_schedule",
    "wasserstein1_to_gaussian",
]


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    variance: float
    k3: float
    k4: float
    se_mean: float
    se_variance: float
    se_k3: float
    se_k4: float


def _kstats(n, s1, s2, s3, s4):
    """k2, k3, k4 from power sums taken about a fixed centre (broadcasts)."""
    mu = s1 / n
    m2 = s2 / n - mu**2
    m3 = s3 / n - 3 * mu * s2 / n + 2 * mu**3
    m4 = s4 / n - 4 * mu * s3 / n + 6 * mu**2 * s2 / n - 3 * mu**4
    m2 = np.maximum(m2, 0.0)
    k2 = n / (n - 1) * m2
    k3 = n**2 / ((n - 1) * (n - 2)) * m3 if n > 2 else np.nan * m3
    if n > 3:
        k4 = n**2 * ((n + 1) * m4 - 3 * (n - 1) * m2**2) / ((n - 1) * (n - 2) * (n - 3))
    else:
        k4 = np.nan * m4
    return mu, k2, k3, k4


def summarize(samples) -> SampleSummary:
    """Mean, variance and k-statistics k3, k4 with jackknife standard errors."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    y = x - x.mean()
    sums = [math.fsum(y**p) for p in (1, 2, 3, 4)]
    mean_c, k2, k3, k4 = _kstats(n, *sums)
    mean = float(x.mean() + mean_c)
    if abs(k2) < 1e-300 * max(1.0, abs(mean)):
        k3 = k4 = 0.0
    if n < 8:
        nan = float("nan")
        return SampleSummary(n, mean, float(k2), float(k3), float(k4), nan, nan, nan, nan)
    loo = [sums[p - 1] - y**p for p in (1, 2, 3, 4)]
    jm, j2, j3, j4 = _kstats(n - 1, *loo)
    factor = (n - 1) / n

    def se(stat):
        return float(math.sqrt(factor * np.sum((stat - stat.mean()) ** 2)))

    return SampleSummary(n, mean, float(k2), float(k3), float(k4), se(jm), se(j2), se(j3), se(j4))


def kolmogorov_distance(samples) -> float:
    """sup_x |F_n(x) - Phi(x)|, exact from the order statistics."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    cdf = ndtr(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def _phi_antiderivative(x):
    # d/dx [x Phi(x) + phi(x)] = Phi(x)
    return x * ndtr(x) + np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def wasserstein1_to_gaussian(samples) -> float:
    """integral |F_n - Phi| dx, integrated exactly piece by piece."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    pieces = [float(_phi_antiderivative(x[0])), float(_phi_antiderivative(-x[-1]))]
    a, b = x[:-1], x[1:]
    c = np.arange(1, n) / n
    keep = b > a
    a, b, c = a[keep], b[keep], c[keep]
    g_a, g_b = _phi_antiderivative(a), _phi_antiderivative(b)
    # Phi crosses the level c inside (a, b) at most once
    z = ndtri(c)
    inside = (z > a) & (z < b)
    z = np.where(inside, z, a)
    g_z = _phi_antiderivative(z)
    below = c * (z - a) - (g_z - g_a)  # c >= Phi on (a, z)
    above = (g_b - g_z) - c * (b - z)  # Phi >= c on (z, b)
    split = np.where(inside, below + above, 0.0)
    whole = c * (b - a) - (g_b - g_a)
    nosplit = np.where(ndtr(a) >= c, -whole, whole)
    pieces.extend(np.where(inside, split, nosplit).tolist())
    return math.fsum(pieces)


def clopper_pearson(k, n: int, level: float = 0.95):
    """Exact binomial interval for k successes out of n."""
    k = np.asarray(k)
    alpha = 1.0 - level
    with np.errstate(invalid="ignore"):
        lo = np.where(k > 0, beta_dist.ppf(alpha / 2, k, n - k + 1), 0.0)
        hi = np.where(k < n, beta_dist.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    return lo, hi


def _neg_log(p):
    with np.errstate(divide="ignore"):
        return -np.log(p)


@dataclass(frozen=True)
class MdpCurve:
    """Empirical rates -(1/a^2) log P(X >= a x) against the reference x^2/2.

    ``flagged`` marks points whose tail count is below ``MIN_TAIL_COUNT``;
    empty tails give NaN rates.  The ``two_sided_*`` fields use |X|.
    """

    a: float
    x: np.ndarray
    counts: np.ndarray
    n: int
    rate: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    two_sided_rate: np.ndarray
    two_sided_lo: np.ndarray
    two_sided_hi: np.ndarray
    flagged: np.ndarray

    @property
    def reference(self) -> np.ndarray:
        return 0.5 * self.x**2

    def rows(self):
        for i in range(self.x.size):
            yield self.x[i], self.rate[i], self.ci_lo[i], self.ci_hi[i], self.reference[i]


def _rates(counts, n, a, level):
    p = counts / n
    lo, hi = clopper_pearson(counts, n, level)
    rate = np.where(counts > 0, _neg_log(np.where(counts > 0, p, 1.0)) / a**2, np.nan)
    return rate, _neg_log(hi) / a**2, _neg_log(lo) / a**2


def mdp_rate(samples, a: float, thresholds, level: float = 0.95) -> MdpCurve:
    if not a > 0:
        raise ValueError("scale a must be positive")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    t = np.atleast_1d(np.asarray(thresholds, dtype=float))
    counts = n - np.searchsorted(x, a * t, side="left")
    absx = np.sort(np.abs(x))
    counts2 = n - np.searchsorted(absx, a * t, side="left")
    rate, lo, hi = _rates(counts, n, a, level)
    rate2, lo2, hi2 = _rates(counts2, n, a, level)
    return MdpCurve(float(a), t, counts, n, rate, lo, hi, rate2, lo2, hi2, counts < MIN_TAIL_COUNT)


def gaussian_reference_rate(a: float, x):
    """-(1/a^2) log(1 - Phi(a x)): the exact finite-a rate for an N(0,1) sample."""
    return -log_ndtr(-a * np.asarray(x, dtype=float)) / a**2


@dataclass(frozen=True)
class TailDiagnostic:
    """log P(X >= x) / log(1 - Phi(x)) and log P(X <= -x) / log Phi(-x)."""

    x: np.ndarray
    right: np.ndarray
    right_lo: np.ndarray
    right_hi: np.ndarray
    left: np.ndarray
    left_lo: np.ndarray
    left_hi: np.ndarray
    flagged: np.ndarray

    def rows(self):
        for i in range(self.x.size):
            yield self.x[i], self.right[i], self.right_lo[i], self.right_hi[i], 1.0
        for i in range(self.x.size):
            yield -self.x[i], self.left[i], self.left_lo[i], self.left_hi[i], 1.0


def tail_log_ratio(samples, thresholds, level: float = 0.95) -> TailDiagnostic:
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    t = np.atleast_1d(np.asarray(thresholds, dtype=float))
    gauss_log = log_ndtr(-t)  # log(1 - Phi(t)) = log Phi(-t)
    out = []
    for counts in (n - np.searchsorted(x, t, side="left"), np.searchsorted(x, -t, side="right")):
        lo, hi = clopper_pearson(counts, n, level)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(counts > 0, np.log(np.maximum(counts, 1) / n) / gauss_log, np.nan)
            # the denominator is negative, so the map p -> ratio is decreasing
            r_lo = np.log(hi) / gauss_log
            r_hi = np.where(lo > 0, np.log(np.where(lo > 0, lo, 1.0)) / gauss_log, np.inf)
        out.append((ratio, r_lo, r_hi, counts))
    (r, rl, rh, cr), (lft, ll, lh, cl) = out
    flagged = (t < TAIL_FLOOR) | (cr < MIN_TAIL_COUNT) | (cl < MIN_TAIL_COUNT)
    floor = t < TAIL_FLOOR
    r, lft = np.where(floor, np.nan, r), np.where(floor, np.nan, lft)
    return TailDiagnostic(t, r, rl, rh, lft, ll, lh, flagged)


@dataclass(frozen=True)
class ExpEquivalenceGap:
    gap: float
    markov_bound: float
    n_exceed: int
    mean_square: float


def exp_equivalence_gap(x, y, a: float, delta: float) -> ExpEquivalenceGap:
    """(1/a^2) log P(|X - Y|/a > delta) for paired samples, with its Markov bound."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("paired samples must have equal length")
    if not (a > 0 and delta > 0):
        raise ValueError("a and delta must be positive")
    d = x - y
    n = d.size
    k = int(np.count_nonzero(np.abs(d) / a > delta))
    ms = math.fsum(d * d) / n
    gap = math.log(k / n) / a**2 if k else -math.inf
    bound = math.log(ms / (a * a * delta * delta)) / a**2 if ms > 0 else -math.inf
    return ExpEquivalenceGap(gap, bound, k, ms)


def scale_schedule(kind: str, gamma: float, ell: float, radius: float | None = None) -> float:
    """a_ell = (log log ell)^gamma, or (log log (r ell))^gamma on caps."""
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    if kind == "sphere":
        arg = float(ell)
    elif kind == "cap":
        if radius is None:
            raise ValueError("cap schedule needs a radius")
        arg = float(radius) * float(ell)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    if arg <= math.e**math.e:
        raise ValueError("log log of the argument must exceed 1")
    return math.log(math.log(arg)) ** gamma


def validate_schedule(kind: str, gamma: float, start: float = 1e3, steps: int = 40, radius_exponent: float = 0.5) -> bool:
    """Check the admissibility conditions of a schedule along ell = start^(2^k).

    Squaring ell at each step reaches the asymptotic regime quickly; the work
    is done in u = log(argument) to avoid overflow.  Checks that a_ell grows,
    that a_ell / sqrt(log log) decreases, and that a_ell / (log)^(1/7)
    (sample-trispectrum condition) decreases on the last quarter, since it
    only turns down once log log exceeds 7 gamma.  For caps the radius is
    r_ell = ell^(-radius_exponent).
    """
    if not 0.0 < gamma < 0.5:
        return False
    scale = 1.0 - radius_exponent if kind == "cap" else 1.0
    if kind not in ("sphere", "cap"):
        raise ValueError(f"unknown schedule kind {kind!r}")
    u = scale * math.log(start) * 2.0 ** np.arange(steps)
    if u[0] <= math.e:
        raise ValueError("start too small: log log must exceed 1")
    loglog = np.log(u)
    a = loglog**gamma
    ratio = a / np.sqrt(loglog)
    ratio_m = a / u ** (1.0 / 7.0)
    tail = ratio_m[-max(2, steps // 4) :]
    return bool(np.all(np.diff(a) > 0) and np.all(np.diff(ratio) < 0) and np.all(np.diff(tail) < 0))


def iid_mdp_calibration(n: int, a: float, distribution: str, thresholds, reps: int, stream: RngStream, level: float = 0.95) -> MdpCurve:
    """Rates for X = sum_i Z_i / sqrt(n) over ``reps`` independent draws.

    Rademacher sums are drawn exactly as (2B - n)/sqrt(n) with
    B ~ Binomial(n, 1/2); Gaussian sums are exactly N(0, 1).
    """
    if a > n**0.25:
        warnings.warn(f"a = {a} exceeds n^(1/4) = {n ** 0.25:.3g}", RuntimeWarning, stacklevel=2)
    rng = stream.generator()
    if distribution == "rademacher":
        b = rng.binomial(n, 0.5, size=reps)
        x = (2.0 * b - n) / math.sqrt(n)
    elif distribution == "gaussian":
        x = rng.standard_normal(reps)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return mdp_rate(x, a, thresholds, level)
