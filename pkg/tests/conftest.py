import math
import os

import numpy as np
import pytest
from scipy.integrate import quad

from vibpendulum.model import ParameterPoint, VibrationSpec, averaged_potential


def seed() -> int:
    return int(os.environ.get("APL_SEED", "0"))


@pytest.fixture
def rng():
    return np.random.default_rng(seed())


def quadrature_averages(spec: VibrationSpec):
    """(A, B, C) from finite-difference velocities of the displacement and
    adaptive quadrature over one period; shares no code with the Parseval sums."""
    T = spec.fast_period
    h = T * 1e-5

    def vel(t):
        (x1, y1), (x0, y0) = spec.displacements(t + h), spec.displacements(t - h)
        return (float(x1) - float(x0)) / (2 * h), (float(y1) - float(y0)) / (2 * h)

    opts = dict(limit=200, epsabs=1e-12, epsrel=1e-12)
    A = quad(lambda t: 0.5 * vel(t)[0] ** 2, 0, T, **opts)[0] / T
    B = quad(lambda t: 0.5 * vel(t)[1] ** 2, 0, T, **opts)[0] / T
    C = quad(lambda t: vel(t)[0] * vel(t)[1], 0, T, **opts)[0] / T
    return A, B, C


def brute_force_roots(pt: ParameterPoint, n: int = 200_000) -> int:
    """Number of sign changes of v' on a fine periodic grid (simple roots only)."""
    x = np.linspace(-math.pi, math.pi, n, endpoint=False)
    d = pt.a * np.sin(2 * x) + pt.c * np.cos(2 * x) + np.sin(x)
    return int(np.count_nonzero(np.sign(d) != np.sign(np.roll(d, -1))))


def point_in_polygon(x: float, y: float, poly: np.ndarray) -> bool:
    """Even-odd ray casting."""
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return bool(np.count_nonzero(straddle & (xc > x)) % 2)


def loop_area_quadrature(pt: ParameterPoint, h: float, lo: float, hi: float) -> float:
    """Area enclosed by p = +-sqrt(2(h - v)) over [lo, hi]."""
    f = lambda t: math.sqrt(max(2.0 * (h - averaged_potential(t, pt)), 0.0))
    return 2.0 * quad(f, lo, hi, limit=400, epsabs=1e-12)[0]
