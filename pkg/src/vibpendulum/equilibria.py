"""Equilibria of the averaged potential on the circle.

The general solver brackets every root of v' on [-pi, pi); the two special
cases of the parameter plane (c = 0 and a = 0) have closed forms that are
kept here as independent oracles.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np
from scipy.optimize import brentq

from .model import ParameterPoint, angle_distance, averaged_potential, potential_derivatives, wrap_angle

TOL_ROOT = 1e-10
TOL_DEG = 1e-8
MERGE_TOL = 1e-6
N_SCAN = 2048

CENTRE = "centre"
SADDLE = "saddle"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Equilibrium:
    phi: float
    kind: str
    v: float
    v2: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EquilibriumSet:
    """Equilibria ordered by increasing phi in [-pi, pi)."""

    items: tuple[Equilibrium, ...]

    def __iter__(self) -> Iterator[Equilibrium]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i) -> Equilibrium:
        return self.items[i]

    @property
    def count(self) -> int:
        return len(self.items)

    @property
    def phis(self) -> np.ndarray:
        return np.array([e.phi for e in self.items])

    @property
    def kinds(self) -> list[str]:
        return [e.kind for e in self.items]

    def of_kind(self, kind: str) -> list[Equilibrium]:
        return [e for e in self.items if e.kind == kind]

    @property
    def has_degenerate(self) -> bool:
        return any(e.kind == DEGENERATE for e in self.items)

    def to_json(self, indent=None) -> str:
        return json.dumps([e.to_dict() for e in self.items], indent=indent)


def _kind_from_v2(v2: float) -> str:
    if v2 > TOL_DEG:
        return CENTRE
    if v2 < -TOL_DEG:
        return SADDLE
    return DEGENERATE


def _make(phi: float, pt: ParameterPoint, kind: str | None = None) -> Equilibrium:
    phi = wrap_angle(phi)
    v2 = potential_derivatives(phi, pt, 2)
    return Equilibrium(phi, kind or _kind_from_v2(v2), averaged_potential(phi, pt), v2)


def _sorted_set(eqs) -> EquilibriumSet:
    return EquilibriumSet(tuple(sorted(eqs, key=lambda e: e.phi)))


def classify(phi: float, pt: ParameterPoint) -> str:
    """Kind of the equilibrium at ``phi``: centre, saddle or degenerate."""
    residual = potential_derivatives(phi, pt, 1)
    if not abs(residual) < TOL_ROOT:
        raise ValueError(f"phi={phi!r} is not an equilibrium of ({pt.a}, {pt.c}): |v'|={abs(residual):.3e}")
    return _kind_from_v2(potential_derivatives(phi, pt, 2))


def _sign_change_roots(f, x: np.ndarray, fx: np.ndarray, tol: float = 0.0) -> list[float]:
    roots = []
    for i in np.flatnonzero(fx[:-1] * fx[1:] < 0):
        roots.append(brentq(f, x[i], x[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    roots.extend(x[np.abs(fx) <= tol].tolist())
    return roots


def _scalar_derivatives(pt: ParameterPoint):
    a, c = pt.a, pt.c
    sin, cos = math.sin, math.cos

    def d1(t):
        return a * sin(2 * t) + c * cos(2 * t) + sin(t)

    def d2(t):
        return 2 * a * cos(2 * t) - 2 * c * sin(2 * t) + cos(t)

    return d1, d2


def _newton_polish(phi: float, d1, d2) -> float:
    f = d1(phi)
    for _ in range(20):
        d = d2(phi)
        if d == 0.0:
            break
        step = f / d
        trial = phi - step
        f_trial = d1(trial)
        # bracketed root is already close; reject steps that do not reduce |v'|
        if abs(step) > MERGE_TOL or abs(f_trial) >= abs(f):
            break
        phi, f = trial, f_trial
        if abs(step) < 1e-16:
            break
    return phi


def _cluster(roots: list[float]) -> list[list[float]]:
    """Group angles closer than MERGE_TOL on the circle."""
    if not roots:
        return []
    roots = sorted(wrap_angle(r) for r in roots)
    groups = [[roots[0]]]
    for r in roots[1:]:
        if r - groups[-1][-1] < MERGE_TOL:
            groups[-1].append(r)
        else:
            groups.append([r])
    if len(groups) > 1 and angle_distance(groups[0][0], groups[-1][-1]) < MERGE_TOL:
        groups[0] = [g - 2 * math.pi for g in groups[-1]] + groups[0]
        groups.pop()
    return groups


def _merge_cluster(group: list[float], d1, d2) -> float:
    if len(group) == 1:
        return group[0]
    # coalescing roots straddle an extremum of v'; that is the degenerate point
    lo, hi = group[0] - MERGE_TOL, group[-1] + MERGE_TOL
    if d2(lo) * d2(hi) < 0:
        return brentq(d2, lo, hi, xtol=1e-15)
    return min(group, key=lambda x: abs(d1(x)))


_SCAN_GRID = np.linspace(-math.pi, math.pi, N_SCAN + 1)
_SCAN_TRIG = (np.sin(_SCAN_GRID), np.cos(_SCAN_GRID), np.sin(2 * _SCAN_GRID), np.cos(2 * _SCAN_GRID))


def find_equilibria(pt: ParameterPoint) -> EquilibriumSet:
    """All equilibria of the averaged potential for the parameter point ``pt``."""
    x = _SCAN_GRID
    s1, c1, s2, c2 = _SCAN_TRIG
    d1, d2 = _scalar_derivatives(pt)

    # v' is monotone between consecutive zeros of v'', so adding those zeros
    # as breakpoints catches root pairs that share a scan cell
    extrema = _sign_change_roots(d2, x, 2 * pt.a * c2 - 2 * pt.c * s2 + c1)
    f = pt.a * s2 + pt.c * c2 + s1
    if extrema:
        breaks = np.concatenate([x, extrema])
        order = np.argsort(breaks, kind="stable")
        breaks = breaks[order]
        f = np.concatenate([f, [d1(e) for e in extrema]])[order]
    else:
        breaks = x
    candidates = _sign_change_roots(d1, breaks, f, tol=TOL_ROOT)

    roots = []
    for group in _cluster([_newton_polish(r, d1, d2) for r in candidates]):
        phi = _merge_cluster(group, d1, d2)
        if abs(d1(phi)) < TOL_ROOT:
            roots.append(phi)
    eqs = _sorted_set(_make(r, pt) for r in roots)
    if not 2 <= eqs.count <= 4:
        raise RuntimeError(f"found {eqs.count} equilibria at ({pt.a}, {pt.c}); expected 2..4")
    return eqs


def closed_form_C0(a: float) -> EquilibriumSet:
    """Equilibria on the line c = 0 from the arccos formula.

    Kinds come from the formula's case analysis, not from v''.
    """
    pt = ParameterPoint(a, 0.0)
    two_a = 2.0 * a
    if abs(two_a) < 1.0:
        eqs = [_make(0.0, pt, CENTRE), _make(math.pi, pt, SADDLE)]
    elif two_a == 1.0:
        eqs = [_make(0.0, pt, CENTRE), _make(math.pi, pt, DEGENERATE)]
    elif two_a == -1.0:
        eqs = [_make(0.0, pt, DEGENERATE), _make(math.pi, pt, SADDLE)]
    else:
        side = math.acos(-1.0 / two_a)
        vertical, tilted = (CENTRE, SADDLE) if two_a > 1.0 else (SADDLE, CENTRE)
        eqs = [
            _make(0.0, pt, vertical),
            _make(math.pi, pt, vertical),
            _make(side, pt, tilted),
            _make(-side, pt, tilted),
        ]
    return _sorted_set(eqs)


def closed_form_A_eq_B(c: float) -> EquilibriumSet:
    """Equilibria on the line a = 0: sin(phi) = (1 +- sqrt(1 + 8c^2)) / (4c)."""
    if c == 0.0:
        return closed_form_C0(0.0)
    pt = ParameterPoint(0.0, c)
    root = math.sqrt(1.0 + 8.0 * c * c)
    lower = math.asin((1.0 - root) / (4.0 * c))
    eqs = [_make(lower, pt, CENTRE), _make(math.pi - lower, pt, SADDLE)]
    if abs(c) == 1.0:
        eqs.append(_make(math.copysign(math.pi / 2, c), pt, DEGENERATE))
    elif abs(c) > 1.0:
        upper = math.asin((1.0 + root) / (4.0 * c))
        eqs += [_make(upper, pt, SADDLE), _make(math.pi - upper, pt, CENTRE)]
    return _sorted_set(eqs)
