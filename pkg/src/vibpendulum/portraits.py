"""Level sets, separatrices and the discrete signature of a phase portrait
of the averaged system H = p^2/2 + v(phi) (dimensionless momentum)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .bifurcation import saddle_energy_gap
from .equilibria import CENTRE, DEGENERATE, SADDLE, EquilibriumSet, find_equilibria
from .model import TWO_PI, ParameterPoint, Polyline, averaged_potential, potential_derivatives, wrap_angle

P_MAX = 4.0
LEVEL_TOL = 1e-9
SEPARATRIX_OFFSET = 1e-7
CLOSURE_TOL = 1e-5

SIMPLE_LOOP = "simple_loop"
FIGURE_EIGHT_RIGHT_SMALL = "figure_eight_right_small"
FIGURE_EIGHT_LEFT_SMALL = "figure_eight_left_small"
FIGURE_EIGHT_SYMMETRIC = "figure_eight_symmetric"
HETEROCLINIC_PAIR = "heteroclinic_pair"
DEGENERATE_TOPOLOGY = "degenerate"

_MIRROR_TOPOLOGY = {
    FIGURE_EIGHT_RIGHT_SMALL: FIGURE_EIGHT_LEFT_SMALL,
    FIGURE_EIGHT_LEFT_SMALL: FIGURE_EIGHT_RIGHT_SMALL,
}


@dataclass(frozen=True)
class PortraitSignature:
    kinds: tuple[str, ...]
    saddle_energy_order: int
    separatrix_topology: str

    def mirrored(self) -> "PortraitSignature":
        # phi -> -phi reverses the cyclic order; keep the same starting element
        kinds = (self.kinds[0],) + tuple(reversed(self.kinds[1:]))
        topo = _MIRROR_TOPOLOGY.get(self.separatrix_topology, self.separatrix_topology)
        order = self.saddle_energy_order
        # a symmetric figure-eight has its saddles at 0 and pi, which the mirror fixes
        if topo != FIGURE_EIGHT_SYMMETRIC:
            order = -order
        return PortraitSignature(kinds, order, topo)

    def to_dict(self) -> dict:
        return {
            "kinds": list(self.kinds),
            "saddle_energy_order": self.saddle_energy_order,
            "separatrix_topology": self.separatrix_topology,
        }


@dataclass(frozen=True)
class Separatrix:
    """One unstable branch of a saddle, followed until it comes back to a saddle."""

    polyline: Polyline
    saddle_phi: float
    direction: int
    energy: float
    end_phi: float | None
    winding: int
    kind: str = field(default="open")


# -- level sets ---------------------------------------------------------------

def _special_points(pt: ParameterPoint, h: float, eqs: EquilibriumSet):
    """Crossings of v = h and equilibria lying on the level, sorted on [-pi, pi)."""
    x = np.linspace(-math.pi, math.pi, 2049)
    g = averaged_potential(x, pt) - h
    f = lambda t: averaged_potential(t, pt) - h
    on_level = [e for e in eqs if abs(e.v - h) <= LEVEL_TOL]
    points = []
    for i in np.flatnonzero(g[:-1] * g[1:] < 0):
        r = brentq(f, x[i], x[i + 1], xtol=1e-15)
        # crossings created by rounding next to an equilibrium on the level are absorbed by it
        if any(abs(wrap_angle(r - e.phi)) < 1e-3 for e in on_level):
            continue
        points.append((wrap_angle(r), "turn"))
    for e in on_level:
        if e.kind == SADDLE:
            points.append((e.phi, "saddle"))
        elif e.kind == DEGENERATE:
            points.append((e.phi, "turn"))
        else:
            points.append((e.phi, "centre"))
    return sorted(points)


def _branch_samples(lo: float, hi: float, n: int) -> np.ndarray:
    # cosine spacing: uniform in p near turning points, where p ~ sqrt(distance)
    theta = np.linspace(0.0, math.pi, n)
    return 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(theta)


def _refine(phis: np.ndarray, momentum, max_step: float, max_rounds: int = 12) -> np.ndarray:
    for _ in range(max_rounds):
        p = momentum(phis)
        steps = np.hypot(np.diff(phis), np.diff(p))
        bad = np.flatnonzero(steps > max_step)
        if bad.size == 0:
            break
        mids = 0.5 * (phis[bad] + phis[bad + 1])
        phis = np.insert(phis, bad + 1, mids)
    return phis


def _clip_to_strip(points: np.ndarray, p_max: float, label: str) -> list[Polyline]:
    inside = np.abs(points[:, 1]) <= p_max
    if inside.all():
        return [Polyline(points, label=label)]
    pieces, start = [], None
    for i, ok in enumerate(inside):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            pieces.append(Polyline(points[start:i], label=label))
            start = None
    if start is not None:
        pieces.append(Polyline(points[start:], label=label))
    return [pc for pc in pieces if len(pc) > 1]


def trace_level_set(
    pt: ParameterPoint,
    h: float,
    p_max: float = P_MAX,
    n: int = 257,
    max_step: float = 0.02,
    eqs: EquilibriumSet | None = None,
) -> list[Polyline]:
    """Components of {p^2/2 + v(phi) = h} on the strip |p| <= p_max.

    The level set is followed along phi on each arc where v <= h, upper
    branch then lower branch; vertex density is refined until consecutive
    vertices are closer than ``max_step``. Arcs bounded by a turning point
    give one closed polyline, arcs running saddle-to-saddle (or once around
    the cylinder) give separate upper and lower polylines. A level through a
    centre contributes that single point.
    """
    eqs = eqs if eqs is not None else find_equilibria(pt)
    if h < min(e.v for e in eqs) - LEVEL_TOL:
        return []

    def momentum(phis):
        return np.sqrt(2.0 * np.maximum(h - averaged_potential(phis, pt), 0.0))

    special = _special_points(pt, h, eqs)
    out: list[Polyline] = []
    for phi, tag in special:
        if tag == "centre":
            out.append(Polyline([[phi, 0.0]], label="point"))
    ends = [(phi, tag) for phi, tag in special if tag != "centre"]

    if not ends:
        if max(e.v for e in eqs) > h:
            return out  # only isolated minima lie on the level
        phis = _refine(np.linspace(-math.pi, math.pi, n), momentum, max_step)
        p = momentum(phis)
        out += _clip_to_strip(np.column_stack([phis, p]), p_max, "rotation")
        out += _clip_to_strip(np.column_stack([phis, -p]), p_max, "rotation")
        return out

    for i, (lo, lo_tag) in enumerate(ends):
        hi, hi_tag = ends[(i + 1) % len(ends)]
        if hi <= lo:
            hi += TWO_PI
        mid = 0.5 * (lo + hi)
        if averaged_potential(mid, pt) > h:
            continue
        phis = _refine(_branch_samples(lo, hi, n), momentum, max_step)
        p = momentum(phis)
        upper = np.column_stack([phis, p])
        lower = np.column_stack([phis[::-1], -p[::-1]])
        if lo_tag == "saddle" and hi_tag == "saddle":
            out += _clip_to_strip(upper, p_max, "saddle_connection")
            out += _clip_to_strip(lower, p_max, "saddle_connection")
        else:
            loop = np.vstack([upper, lower[1:]])
            label = "homoclinic_loop" if "saddle" in (lo_tag, hi_tag) else "closed_orbit"
            out += _clip_to_strip(loop, p_max, label)
    return out


def level_set_residual(polylines, pt: ParameterPoint, h: float) -> float:
    worst = 0.0
    for pl in polylines:
        r = np.abs(0.5 * pl.y**2 + averaged_potential(pl.x, pt) - h)
        worst = max(worst, float(np.max(r)))
    return worst


def homoclinic_loop_areas(pt: ParameterPoint, eqs: EquilibriumSet | None = None) -> tuple[float, float] | None:
    """Shoelace areas (right, left) of the two lobes of the figure-eight.

    "Right" is the lobe entered from the lower saddle in the +phi direction.
    None unless there are two saddles with distinct energies.
    """
    eqs = eqs if eqs is not None else find_equilibria(pt)
    saddles = eqs.of_kind(SADDLE)
    if len(saddles) != 2 or abs(saddles[0].v - saddles[1].v) <= LEVEL_TOL:
        return None
    low = min(saddles, key=lambda e: e.v)
    right = left = None
    for pl in trace_level_set(pt, low.v, p_max=math.inf, eqs=eqs):
        if pl.label != "homoclinic_loop":
            continue
        start = pl.x[0]
        if abs(wrap_angle(start - low.phi)) < 1e-9:
            right = pl.area()
        else:
            left = pl.area()
    if right is None or left is None:
        raise RuntimeError(f"figure-eight lobes not found at ({pt.a}, {pt.c})")
    return right, left


# -- separatrices by flow --------------------------------------------------------

def _averaged_rhs(pt: ParameterPoint):
    a, c = pt.a, pt.c

    def rhs(t, y):
        phi, p = y
        return [p, -(a * math.sin(2 * phi) + c * math.cos(2 * phi) + math.sin(phi))]

    return rhs


def _trace_branch(pt: ParameterPoint, saddle, direction: int, saddle_phis, max_time: float) -> Separatrix:
    lam = math.sqrt(-saddle.v2)
    vec = np.array([1.0, lam]) / math.hypot(1.0, lam)
    y0 = np.array([saddle.phi, 0.0]) + direction * SEPARATRIX_OFFSET * vec
    escape = 1e-3

    def dist(y):
        return min(math.hypot(wrap_angle(y[0] - s), y[1]) for s in saddle_phis)

    def left_neighbourhood(t, y):
        return dist(y) - escape

    left_neighbourhood.terminal = True
    left_neighbourhood.direction = 1

    def returned(t, y):
        return dist(y) - CLOSURE_TOL

    returned.terminal = True
    returned.direction = -1

    rhs = _averaged_rhs(pt)
    opts = dict(method="DOP853", rtol=1e-12, atol=1e-13, max_step=0.01)
    first = solve_ivp(rhs, (0.0, max_time), y0, events=left_neighbourhood, **opts)
    second = solve_ivp(rhs, (first.t[-1], max_time), first.y[:, -1], events=returned, **opts)
    ys = np.hstack([first.y, second.y[:, 1:]])
    ts = np.concatenate([first.t, second.t[1:]])
    end = ys[:, -1]
    end_phi = None
    winding = 0
    kind = "open"
    if second.status == 1:
        nearest = min(saddle_phis, key=lambda s: abs(wrap_angle(end[0] - s)))
        end_phi = nearest
        shift = end[0] - saddle.phi
        if abs(wrap_angle(nearest - saddle.phi)) < 1e-9:
            winding = round(shift / TWO_PI)
            kind = "homoclinic" if winding == 0 else "rotational"
        else:
            winding = 0
            kind = "heteroclinic"
    pl = Polyline(ys.T, label=f"separatrix:{kind}", parameter=ts)
    return Separatrix(pl, saddle.phi, direction, saddle.v, end_phi, winding, kind)


def separatrices(pt: ParameterPoint, eqs: EquilibriumSet | None = None, max_time: float = 200.0) -> list[Separatrix]:
    """Unstable branches of every hyperbolic saddle, followed by the flow.

    Branches start 1e-7 from the saddle along its unstable eigendirection and
    stop once they come within 1e-5 of a saddle. Degenerate equilibria have
    no eigendirection; their level set is traced as a contour instead.
    """
    eqs = eqs if eqs is not None else find_equilibria(pt)
    saddles = eqs.of_kind(SADDLE)
    saddle_phis = [s.phi for s in saddles]
    out = []
    for s in saddles:
        for direction in (1, -1):
            out.append(_trace_branch(pt, s, direction, saddle_phis, max_time))
    for d in eqs.of_kind(DEGENERATE):
        for pl in trace_level_set(pt, d.v, eqs=eqs):
            if len(pl) > 1:
                out.append(Separatrix(pl, d.phi, 0, d.v, None, 0, "degenerate_level"))
    return out


# -- signature -------------------------------------------------------------------

def _canonical_kinds(eqs: EquilibriumSet) -> tuple[str, ...]:
    items = list(eqs)
    start = min(range(len(items)), key=lambda i: (round(items[i].v, 9), items[i].phi))
    return tuple(e.kind for e in items[start:] + items[:start])


def portrait_signature(pt: ParameterPoint) -> PortraitSignature:
    eqs = find_equilibria(pt)
    kinds = _canonical_kinds(eqs)
    gap = saddle_energy_gap(pt, eqs)
    order = 0 if gap is None or abs(gap) <= LEVEL_TOL else int(math.copysign(1, gap))
    if eqs.has_degenerate:
        topo = DEGENERATE_TOPOLOGY
    elif eqs.count == 2:
        topo = SIMPLE_LOOP
    elif order == 0:
        topo = HETEROCLINIC_PAIR
    else:
        right, left = homoclinic_loop_areas(pt, eqs)
        if abs(right - left) <= 1e-9 * max(right, left):
            topo = FIGURE_EIGHT_SYMMETRIC
        elif right < left:
            topo = FIGURE_EIGHT_RIGHT_SMALL
        else:
            topo = FIGURE_EIGHT_LEFT_SMALL
    return PortraitSignature(kinds, order, topo)


@dataclass
class Portrait:
    """Everything needed to draw one phase portrait."""

    point: ParameterPoint
    equilibria: EquilibriumSet
    separatrices: list[Separatrix]
    orbits: list[Polyline]
    signature: PortraitSignature

    @property
    def polylines(self) -> list[Polyline]:
        return [s.polyline for s in self.separatrices] + list(self.orbits)


def build_portrait(pt: ParameterPoint, n_levels: int = 6, p_max: float = P_MAX) -> Portrait:
    """Separatrices plus a few ordinary level curves for context."""
    eqs = find_equilibria(pt)
    seps = separatrices(pt, eqs)
    vmin = min(e.v for e in eqs)
    vmax = max(e.v for e in eqs)
    orbits = []
    levels = np.linspace(vmin, vmax + 1.5, n_levels + 2)[1:-1]
    for h in levels:
        if any(abs(h - e.v) < 1e-3 for e in eqs):
            continue
        orbits += trace_level_set(pt, float(h), p_max=p_max, eqs=eqs)
    return Portrait(pt, eqs, seps, orbits, portrait_signature(pt))
