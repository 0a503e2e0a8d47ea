import math
import os
import subprocess
import sys

import numpy as np
import pytest

from spherewaves import _kernels_py, kernels, nodal
from spherewaves.rng import RngStream
from spherewaves.sphere_field import sample_coefficients

ckernels = pytest.importorskip("spherewaves._ckernels", reason="compiled extension not built")


@pytest.mark.parametrize("ell", [1, 10, 200, 1000])
def test_order_table_backends_agree(ell):
    theta = np.linspace(1e-3, math.pi - 1e-3, 301)
    p_py, dp_py = _kernels_py.order_table(ell, theta)
    p_c, dp_c = ckernels.order_table(ell, theta)
    scale = math.sqrt((2 * ell + 1) / (4 * math.pi))
    assert np.max(np.abs(p_py - p_c)) <= 1e-10 * scale
    assert np.max(np.abs(dp_py - dp_c)) <= 1e-10 * scale * ell


@pytest.mark.parametrize("radius, complement", [(math.inf, False), (0.7, False), (0.7, True), (2.5, False)])
def test_contour_backends_agree(radius, complement):
    for i in range(5):
        coeffs = sample_coefficients(40, RngStream.for_replication(0, "kernels", i))
        grid = nodal.contour_grid(40, 8).populated(coeffs)
        signs, _ = nodal._saddle_centers(grid, grid.values)
        a = _kernels_py.contour_length(grid.values, grid.theta, grid.dphi, signs, radius, complement)
        b = ckernels.contour_length(grid.values, grid.theta, grid.dphi, signs, radius, complement)
        assert a[0] == pytest.approx(b[0], rel=1e-12)
        assert a[1:] == tuple(b[1:])


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, SPHEREWAVES_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from spherewaves import kernels; print(kernels.BACKEND)"], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_length_identical_on_both_backends_end_to_end():
    code = "from spherewaves import nodal; from spherewaves.rng import RngStream; print(repr(nodal.nodal_length_replicate(25, 8, nodal.cap(1.0), RngStream(5, 6)).length))"
    env = dict(os.environ, SPHEREWAVES_PURE_PYTHON="1")
    pure = float(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    here = nodal.nodal_length_replicate(25, 8, nodal.cap(1.0), RngStream(5, 6)).length
    assert pure == pytest.approx(here, rel=1e-12)
