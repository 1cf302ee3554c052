"""Deterministic SVG and CSV output for portraits and parameter diagrams."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .equilibria import CENTRE, DEGENERATE, SADDLE
from .model import TWO_PI, Polyline

REGION_COLOURS = {
    "I": "#dbe9f6",
    "II_pos": "#f6e0c8",
    "II_neg": "#e3f1d9",
    "II_axis": "#e8dcef",
    "GAMMA": "#444444",
    "HETEROCLINIC_RAY": "#aa2222",
}


def _f(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


@dataclass(frozen=True)
class Canvas:
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    width: int = 800
    height: int = 500
    margin: int = 50

    def x(self, v) -> np.ndarray:
        lo, hi = self.xlim
        return self.margin + (np.asarray(v) - lo) / (hi - lo) * (self.width - 2 * self.margin)

    def y(self, v) -> np.ndarray:
        lo, hi = self.ylim
        return self.height - self.margin - (np.asarray(v) - lo) / (hi - lo) * (self.height - 2 * self.margin)


def _header(cv: Canvas, title: str) -> list[str]:
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{cv.width}" height="{cv.height}" '
        f'viewBox="0 0 {cv.width} {cv.height}">',
        f"<title>{escape(title)}</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        "<defs>",
        f'<clipPath id="plot"><rect x="{cv.margin}" y="{cv.margin}" width="{cv.width - 2 * cv.margin}" '
        f'height="{cv.height - 2 * cv.margin}"/></clipPath>',
        "</defs>",
    ]
    return out


def _axes(cv: Canvas, xticks, yticks, xlabel: str, ylabel: str) -> list[str]:
    x0, x1 = cv.margin, cv.width - cv.margin
    y0, y1 = cv.height - cv.margin, cv.margin
    out = [f'<g stroke="black" stroke-width="1" fill="none">',
           f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}"/>']
    for value, text in xticks:
        px = _f(float(cv.x(value)))
        out.append(f'<line x1="{px}" y1="{y0}" x2="{px}" y2="{y0 + 5}"/>')
    for value, text in yticks:
        py = _f(float(cv.y(value)))
        out.append(f'<line x1="{x0 - 5}" y1="{py}" x2="{x0}" y2="{py}"/>')
    out.append("</g>")
    out.append('<g font-family="sans-serif" font-size="12" fill="black">')
    for value, text in xticks:
        out.append(f'<text x="{_f(float(cv.x(value)))}" y="{y0 + 18}" text-anchor="middle">{escape(text)}</text>')
    for value, text in yticks:
        out.append(f'<text x="{x0 - 8}" y="{_f(float(cv.y(value)) + 4)}" text-anchor="end">{escape(text)}</text>')
    out.append(f'<text x="{(x0 + x1) // 2}" y="{cv.height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{(y0 + y1) // 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {(y0 + y1) // 2})">{escape(ylabel)}</text>')
    out.append("</g>")
    return out


def _path(cv: Canvas, pts: np.ndarray, stroke: str, width: float = 1.2, dash: str | None = None) -> str:
    xs, ys = cv.x(pts[:, 0]), cv.y(pts[:, 1])
    d = "M" + " L".join(f"{_f(float(a))},{_f(float(b))}" for a, b in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>'


def _ticks(lo: float, hi: float, n: int = 5):
    return [(v, f"{v:g}") for v in np.round(np.linspace(lo, hi, n), 6)]


PI_TICKS = [(-math.pi, "-π"), (-math.pi / 2, "-π/2"), (0.0, "0"), (math.pi / 2, "π/2"), (math.pi, "π")]


def phase_svg(
    polylines,
    equilibria=(),
    p_max: float = 4.0,
    width: int = 800,
    height: int = 500,
    title: str = "phase portrait",
    highlight=(),
) -> str:
    """Polylines in (phi, p) on the strip [-pi, pi] x [-p_max, p_max].

    Curves are drawn with their 2 pi translates and clipped, so unwrapped
    angles render correctly. ``highlight`` polylines are drawn heavier.
    """
    cv = Canvas((-math.pi, math.pi), (-p_max, p_max), width, height)
    out = _header(cv, title)
    out += _axes(cv, PI_TICKS, _ticks(-p_max, p_max), "φ", "p")
    out.append('<g clip-path="url(#plot)">')
    for group, stroke, w in ((polylines, "#3465a4", 1.0), (highlight, "#cc0000", 1.6)):
        for pl in group:
            pts = pl.points if isinstance(pl, Polyline) else np.asarray(pl)
            if len(pts) < 2:
                continue
            lo, hi = float(np.min(pts[:, 0])), float(np.max(pts[:, 0]))
            for k in range(math.floor((-math.pi - hi) / TWO_PI), math.ceil((math.pi - lo) / TWO_PI) + 1):
                shifted = pts + np.array([k * TWO_PI, 0.0])
                out.append(_path(cv, shifted, stroke, w))
    for e in equilibria:
        cx, cy = _f(float(cv.x(e.phi))), _f(float(cv.y(0.0)))
        if e.kind == CENTRE:
            out.append(f'<circle cx="{cx}" cy="{cy}" r="4" fill="black"/>')
        elif e.kind == SADDLE:
            out.append(f'<circle cx="{cx}" cy="{cy}" r="4" fill="white" stroke="black"/>')
        else:
            out.append(f'<rect x="{_f(float(cx) - 4)}" y="{_f(float(cy) - 4)}" width="8" height="8" fill="#888888"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def diagram_svg(rows, gamma: Polyline, box, resolution: int, width: int = 700, height: int = 700) -> str:
    """Region map over a grid plus the degenerate curve and heteroclinic ray."""
    a_min, a_max, c_min, c_max = box
    cv = Canvas((a_min, a_max), (c_min, c_max), width, height)
    out = _header(cv, "partition of the (a, c) parameter plane")
    da = (a_max - a_min) / max(resolution - 1, 1)
    dc = (c_max - c_min) / max(resolution - 1, 1)
    out.append('<g clip-path="url(#plot)" stroke="none">')
    for a, c, label in rows:
        x0, x1 = cv.x(a - da / 2), cv.x(a + da / 2)
        y0, y1 = cv.y(c + dc / 2), cv.y(c - dc / 2)
        out.append(f'<rect x="{_f(float(x0))}" y="{_f(float(y0))}" width="{_f(float(x1 - x0))}" '
                   f'height="{_f(float(y1 - y0))}" fill="{REGION_COLOURS[label]}"/>')
    out.append("</g>")
    out += _axes(cv, _ticks(a_min, a_max), _ticks(c_min, c_max), "a = (B-A)/(gl)", "c = C/(gl)")
    out.append('<g clip-path="url(#plot)">')
    out.append(_path(cv, gamma.points, "#000000", 1.8))
    if a_max > 0.5:
        ray = np.array([[0.5, 0.0], [a_max, 0.0]])
        out.append(_path(cv, ray, "#aa2222", 2.0, dash="6,3"))
    for a in (-0.5, 0.5):
        out.append(f'<circle cx="{_f(float(cv.x(a)))}" cy="{_f(float(cv.y(0.0)))}" r="3.5" fill="black"/>')
    out.append("</g>")
    out.append('<g font-family="sans-serif" font-size="11">')
    for i, (label, colour) in enumerate(REGION_COLOURS.items()):
        y = cv.margin + 14 * i + 10
        out.append(f'<rect x="{cv.width - cv.margin - 110}" y="{y - 9}" width="10" height="10" fill="{colour}"/>')
        out.append(f'<text x="{cv.width - cv.margin - 95}" y="{y}">{label}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polylines_csv(polylines, header=("component_id", "phi", "p")) -> str:
    lines = [",".join(header)]
    for i, pl in enumerate(polylines):
        pts = pl.points if isinstance(pl, Polyline) else np.asarray(pl)
        lines += [f"{i},{x:.12g},{y:.12g}" for x, y in pts]
    return "\n".join(lines) + "\n"
