"""Partition of the (a, c) plane: the degenerate-equilibrium curve, its
cusps, the heteroclinic ray and the region classifier."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .equilibria import SADDLE, EquilibriumSet, find_equilibria
from .model import ParameterPoint, Polyline, angle_distance, potential_derivatives

BAND = 1e-9
CUSP_ANGLES = (0.0, math.pi)


class RegionLabel(str, enum.Enum):
    I = "I"
    II_POS = "II_pos"
    II_NEG = "II_neg"
    # c = 0 with a < -1/2: four equilibria, mirror-symmetric portrait
    II_AXIS = "II_axis"
    GAMMA = "GAMMA"
    HETEROCLINIC_RAY = "HETEROCLINIC_RAY"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class GammaPoint:
    phi_star: float
    a: float
    c: float

    @property
    def point(self) -> ParameterPoint:
        return ParameterPoint(self.a, self.c)


@dataclass(frozen=True)
class NondegeneracyReport:
    phi_star: float
    v3: float
    transversal_deriv: float
    v4_at_cusp: float | None


def gamma_point(phi_star: float) -> GammaPoint:
    """Parameters at which ``phi_star`` is a degenerate equilibrium."""
    cs, sn = math.cos(phi_star), math.sin(phi_star)
    gp = GammaPoint(phi_star, cs**3 - 1.5 * cs, sn**3)
    pt = gp.point
    for order in (1, 2):
        residual = potential_derivatives(phi_star, pt, order)
        if abs(residual) > 1e-12:
            raise ArithmeticError(f"v^({order}) = {residual:.3e} at gamma_point({phi_star})")
    return gp


def gamma_tangent(phi_star: float) -> np.ndarray:
    """d(a, c)/d(phi_star); vanishes at the cusps."""
    cs, sn = math.cos(phi_star), math.sin(phi_star)
    return np.array([-3 * cs**2 * sn + 1.5 * sn, 3 * sn**2 * cs])


def gamma_normal(phi_star: float) -> np.ndarray:
    """Tangent rotated by -90 degrees; points towards the two-equilibrium side."""
    cs, sn = math.cos(phi_star), math.sin(phi_star)
    return np.array([3 * sn**2 * cs, 3 * cs**2 * sn - 1.5 * sn])


def is_cusp(phi_star: float, tol: float = 1e-9) -> bool:
    return any(angle_distance(phi_star, x) < tol for x in CUSP_ANGLES)


def nondegeneracy_check(phi_star: float) -> NondegeneracyReport:
    pt = gamma_point(phi_star).point
    v3 = potential_derivatives(phi_star, pt, 3)
    # v' = a sin 2phi + c cos 2phi + sin phi is linear in (a, c)
    grad = np.array([math.sin(2 * phi_star), math.cos(2 * phi_star)])
    transversal = float(grad @ gamma_normal(phi_star))
    v4 = potential_derivatives(phi_star, pt, 4) if is_cusp(phi_star) else None
    return NondegeneracyReport(phi_star, v3, transversal, v4)


def trace_gamma(n: int = 721) -> Polyline:
    """The closed curve sampled at n points over phi_star in [0, 2 pi]."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    phi = np.linspace(0.0, 2 * math.pi, n)
    phi[-1] = 0.0  # close exactly
    cs, sn = np.cos(phi), np.sin(phi)
    pts = np.column_stack([cs**3 - 1.5 * cs, sn**3])
    return Polyline(pts, label="gamma", parameter=phi)


def distance_to_gamma(pt: ParameterPoint) -> tuple[float, float]:
    """(distance, phi_star) of the nearest point of the degenerate curve."""
    phis = np.linspace(-math.pi, math.pi, 1025)
    cs, sn = np.cos(phis), np.sin(phis)
    d2 = (cs**3 - 1.5 * cs - pt.a) ** 2 + (sn**3 - pt.c) ** 2

    def dist2(t):
        g = gamma_point_unchecked(t)
        return (g[0] - pt.a) ** 2 + (g[1] - pt.c) ** 2

    best = (math.inf, 0.0)
    h = phis[1] - phis[0]
    for i in np.argsort(d2)[:4]:
        res = minimize_scalar(dist2, bounds=(phis[i] - h, phis[i] + h), method="bounded",
                              options={"xatol": 1e-13})
        t = _polish_foot(float(res.x), pt)
        for cand in (t, float(res.x)):
            d = dist2(cand)
            if d < best[0]:
                best = (float(d), cand)
    return math.sqrt(best[0]), best[1]


def _polish_foot(t: float, pt: ParameterPoint) -> float:
    # Newton on (g(t) - P) . g'(t) = 0; the bounded search stalls near sqrt(eps)
    for _ in range(4):
        cs, sn = math.cos(t), math.sin(t)
        ga, gc = cs**3 - 1.5 * cs - pt.a, sn**3 - pt.c
        ta, tc = -3 * cs**2 * sn + 1.5 * sn, 3 * sn**2 * cs
        sa, sc = -3 * cs**3 + 6 * cs * sn**2 + 1.5 * cs, 6 * sn * cs**2 - 3 * sn**3
        f = ga * ta + gc * tc
        df = ta * ta + tc * tc + ga * sa + gc * sc
        if df <= 0:
            break
        t -= f / df
    return t


def gamma_point_unchecked(phi_star: float) -> tuple[float, float]:
    cs, sn = math.cos(phi_star), math.sin(phi_star)
    return cs**3 - 1.5 * cs, sn**3


def classify_region(pt: ParameterPoint, eqs: EquilibriumSet | None = None) -> RegionLabel:
    """Region of the parameter plane, decided by counting equilibria."""
    eqs = eqs if eqs is not None else find_equilibria(pt)
    if eqs.has_degenerate:
        return RegionLabel.GAMMA
    # near the curve the closest centre/saddle pair has a small |v''|
    if min(abs(e.v2) for e in eqs) < 1e-3 and distance_to_gamma(pt)[0] <= BAND:
        return RegionLabel.GAMMA
    if eqs.count == 2:
        return RegionLabel.I
    if eqs.count != 4:
        raise RuntimeError(f"{eqs.count} non-degenerate equilibria at ({pt.a}, {pt.c})")
    if abs(pt.c) <= BAND:
        return RegionLabel.HETEROCLINIC_RAY if pt.a > 0 else RegionLabel.II_AXIS
    return RegionLabel.II_POS if pt.c > 0 else RegionLabel.II_NEG


def saddle_energy_gap(pt: ParameterPoint, eqs: EquilibriumSet | None = None) -> float | None:
    """v(first saddle) - v(second saddle), saddles ordered by phi.

    None when there is only one saddle.
    """
    eqs = eqs if eqs is not None else find_equilibria(pt)
    saddles = eqs.of_kind(SADDLE)
    if len(saddles) != 2:
        return None
    return saddles[0].v - saddles[1].v


def _label_row(args) -> tuple[float, float, str]:
    a, c = args
    return a, c, classify_region(ParameterPoint(a, c)).value


def grid_axes(box: tuple[float, float, float, float], resolution: int) -> tuple[np.ndarray, np.ndarray]:
    a_min, a_max, c_min, c_max = box
    return np.linspace(a_min, a_max, resolution), np.linspace(c_min, c_max, resolution)


def region_sweep(box=(-2.0, 2.0, -2.0, 2.0), resolution: int = 64, workers: int = 1) -> list[tuple[float, float, str]]:
    """Region label at every node of a resolution x resolution grid.

    Rows are ordered c-major (outer loop over c), independent of ``workers``.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    a_axis, c_axis = grid_axes(box, resolution)
    jobs = [(float(a), float(c)) for c in c_axis for a in a_axis]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_label_row, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [_label_row(j) for j in jobs]


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["a", "c", "label"])
    for a, c, label in rows:
        writer.writerow([f"{a:.12g}", f"{c:.12g}", label])
    return buf.getvalue()


def sweep_to_json(rows) -> str:
    return json.dumps([{"a": float(f"{a:.12g}"), "c": float(f"{c:.12g}"), "label": label} for a, c, label in rows])


def equal_energy_pair_relation(phi1: float, phi2: float, tol: float = 1e-6) -> str | None:
    """Which of the two exceptional angle relations a pair of equal-energy
    equilibria satisfies: 'determinant' when sin 2(phi1 - phi2) = 0,
    'mirror' when phi1 = -phi2 mod 2 pi; None otherwise."""
    if abs(math.sin(2 * (phi1 - phi2))) < tol:
        return "determinant"
    if angle_distance(phi1, -phi2) < tol:
        return "mirror"
    return None


def critical_pair_parameters(phi1: float, phi2: float, tol: float = 1e-12) -> ParameterPoint | None:
    """The (a, c) for which both angles are equilibria.

    v' is linear in (a, c), so this is a 2x2 solve with determinant
    sin 2(phi1 - phi2); None when the determinant vanishes.
    """
    M = np.array([[math.sin(2 * phi1), math.cos(2 * phi1)], [math.sin(2 * phi2), math.cos(2 * phi2)]])
    if abs(np.linalg.det(M)) < tol:
        return None
    a, c = np.linalg.solve(M, [-math.sin(phi1), -math.sin(phi2)])
    return ParameterPoint(float(a), float(c))
