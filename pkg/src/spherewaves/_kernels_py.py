"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, and as the reference the
extension is benchmarked and tested against.
"""
from __future__ import annotations

import math

import numpy as np

from .specfun import _degree_pair


def order_table(ell: int, theta: np.ndarray):
    """Normalized N P_ell^m(cos theta) and its theta-derivative for all m.

    Returns two arrays of shape (len(theta), ell + 1).  Rows at the poles
    get a zero derivative for m != 1 and the analytic limit is not attempted;
    callers keep gradient nodes out of the pole band.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    x = np.cos(theta)
    s = np.sin(theta)
    n_t = theta.shape[0]
    p_tab = np.empty((n_t, ell + 1))
    d_tab = np.empty((n_t, ell + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s = np.where(s > 0, 1.0 / s, 0.0)
    for m in range(ell + 1):
        p, p_prev = _degree_pair(ell, m, x)
        c = math.sqrt((2.0 * ell + 1.0) * (ell * ell - m * m) / (2.0 * ell - 1.0)) if ell > m else 0.0
        p_tab[:, m] = p
        d_tab[:, m] = (ell * x * p - c * p_prev) * inv_s
    return p_tab, d_tab


def _crossing(v0, v1):
    return v0 / (v0 - v1)


def _seg_length(t0, f0, t1, f1):
    mid = 0.5 * (t0 + t1)
    return np.sqrt((t1 - t0) ** 2 + (np.sin(mid) * (f1 - f0)) ** 2)


def _clip(t0, f0, t1, f1, cap_theta, complement):
    """Length of each segment inside the region, and whether it was clipped."""
    full = _seg_length(t0, f0, t1, f1)
    if not np.isfinite(cap_theta):
        return (full, np.zeros(full.shape, bool)) if not complement else (np.zeros_like(full), np.zeros(full.shape, bool))
    in0 = (t0 <= cap_theta) != complement
    in1 = (t1 <= cap_theta) != complement
    out = np.where(in0 & in1, full, 0.0)
    part = in0 != in1
    if np.any(part):
        a0, b0, a1, b1 = t0[part], f0[part], t1[part], f1[part]
        u = (cap_theta - a0) / (a1 - a0)
        tc = a0 + u * (a1 - a0)
        fc = b0 + u * (b1 - b0)
        keep_first = in0[part]
        ta = np.where(keep_first, a0, tc)
        fa = np.where(keep_first, b0, fc)
        tb = np.where(keep_first, tc, a1)
        fb = np.where(keep_first, fc, b1)
        out[part] = _seg_length(ta, fa, tb, fb)
    return out, part


def contour_length(values, theta, dphi, center_sign, cap_theta=math.inf, complement=False):
    """Marching-squares length of the zero set of a (theta, phi) grid.

    ``values`` has shape (n_theta, n_phi) with a periodic seam in phi;
    ``center_sign`` holds the sign of the field at each cell centre for
    saddle cells (zero elsewhere).  Zero crossings are placed by linear
    interpolation and segments are measured in the metric
    d theta^2 + sin^2(theta_mid) d phi^2.  Returns
    (length, n_segments, n_clipped).
    """
    v = np.asarray(values, dtype=float)
    v00 = v[:-1, :]
    v01 = np.roll(v, -1, axis=1)[:-1, :]
    v10 = v[1:, :]
    v11 = np.roll(v, -1, axis=1)[1:, :]
    th0 = theta[:-1, None] * np.ones_like(v00)
    dth = np.diff(theta)[:, None] * np.ones_like(v00)
    p00, p01, p11, p10 = v00 > 0, v01 > 0, v11 > 0, v10 > 0
    e0 = p00 != p01  # top: (i, j) -> (i, j+1)
    e1 = p01 != p11  # right: (i, j+1) -> (i+1, j+1)
    e2 = p10 != p11  # bottom: (i+1, j) -> (i+1, j+1)
    e3 = p00 != p10  # left: (i, j) -> (i+1, j)
    count = e0.astype(np.int8) + e1 + e2 + e3
    with np.errstate(divide="ignore", invalid="ignore"):
        # crossing points in cell-local (theta, phi) coordinates
        pts = np.stack(
            [
                np.stack([th0, _crossing(v00, v01) * dphi], -1),
                np.stack([th0 + _crossing(v01, v11) * dth, np.full_like(v00, dphi)], -1),
                np.stack([th0 + dth, _crossing(v10, v11) * dphi], -1),
                np.stack([th0 + _crossing(v00, v10) * dth, np.zeros_like(v00)], -1),
            ],
            axis=2,
        )
    crossed = np.stack([e0, e1, e2, e3], axis=-1)
    starts, ends = [], []

    two = count == 2
    if np.any(two):
        sel = crossed[two]
        cells = pts[two]
        order = np.argsort(~sel, axis=1, kind="stable")[:, :2]
        rows = np.arange(cells.shape[0])
        starts.append(cells[rows, order[:, 0]])
        ends.append(cells[rows, order[:, 1]])

    four = count == 4
    if np.any(four):
        cells = pts[four]
        same = center_sign[four] == np.where(p00[four], 1, -1)
        # centre joins corner 00 -> isolate corners 01 and 10
        pairs_a = np.where(same[:, None], [0, 1, 2, 3], [3, 0, 1, 2])
        rows = np.arange(cells.shape[0])
        for k in range(2):
            idx = pairs_a[:, 2 * k : 2 * k + 2]
            starts.append(cells[rows, idx[:, 0]])
            ends.append(cells[rows, idx[:, 1]])

    if not starts:
        return 0.0, 0, 0
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    seg, clipped = _clip(a[:, 0], a[:, 1], b[:, 0], b[:, 1], cap_theta, complement)
    if np.isfinite(cap_theta):
        inside = seg > 0
        n_seg = int(np.count_nonzero(inside))
    else:
        n_seg = seg.shape[0]
    return float(math.fsum(seg)), n_seg, int(np.count_nonzero(clipped))
