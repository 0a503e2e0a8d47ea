import math

import numpy as np
from scipy import special


def real_harmonic(ell, m, theta, phi):
    """Real orthonormal Y_{ell,m} built from scipy's complex harmonics.

    m > 0 gives the cosine member, m < 0 the sine member; the
    Condon-Shortley phase is removed so signs match the package basis.
    """
    k = abs(m)
    y = special.sph_harm_y(ell, k, theta, phi) * (-1) ** k
    if m == 0:
        return y.real
    return math.sqrt(2) * (y.real if m > 0 else y.imag)


def coefficient_index(m):
    """Position of the real harmonic of order m in a coefficient vector."""
    return 0 if m == 0 else (2 * m - 1 if m > 0 else -2 * m)


def unit_coeffs(ell, m, scale=1.0):
    a = np.zeros(2 * ell + 1)
    a[coefficient_index(m)] = scale
    return a


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
