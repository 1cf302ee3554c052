"""Command-line front end.

    vibpendulum coeffs --spec vib.json
    vibpendulum equilibria --a 1 --c 0.3
    vibpendulum diagram --box -2,2,-2,2 --resolution 128 --out out/
    vibpendulum portrait --a 1 --c 0 --out out/
    vibpendulum verify --spec vib.json --epsilon 0.04,0.02,0.01 --out out/
    vibpendulum sweep --box 0.5,3,-1,1 --resolution 64 --workers 4 --out out/
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import classify_region, region_sweep, sweep_to_csv, sweep_to_json, trace_gamma
from .equilibria import TOL_ROOT, find_equilibria
from .exact import IntegrationConfig, epsilon_scaling
from .model import (
    ParameterPoint,
    PendulumParams,
    VibrationSpec,
    averaged_coefficients,
    dimensionless,
    potential_derivatives,
)
from .portraits import build_portrait, level_set_residual, portrait_signature
from .render import diagram_svg, phase_svg, polylines_csv

SIG = 12


class CheckFailed(RuntimeError):
    """An internal residual or invariant check did not pass."""


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.{SIG}g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False)


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _box(text: str):
    a0, a1, c0, c1 = _floats(text, 4)
    if not (a0 < a1 and c0 < c1):
        raise argparse.ArgumentTypeError("box must be aMin,aMax,cMin,cMax with aMin<aMax and cMin<cMax")
    return a0, a1, c0, c1


def _params(args) -> PendulumParams:
    return PendulumParams(args.m, args.l, args.g)


def _point(args) -> ParameterPoint:
    has_spec = getattr(args, "spec", None) is not None
    has_ac = args.a is not None or args.c is not None
    if has_spec == has_ac:
        raise ValueError("give exactly one parameter source: --spec PATH or --a/--c")
    if has_spec:
        return dimensionless(averaged_coefficients(VibrationSpec.from_json(args.spec)), _params(args))
    if args.a is None or args.c is None:
        raise ValueError("both --a and --c are required")
    return ParameterPoint(args.a, args.c)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_coeffs(args) -> int:
    spec = VibrationSpec.from_json(args.spec)
    co = averaged_coefficients(spec)
    pt = dimensionless(co, _params(args))
    doc = {"A": co.A, "B": co.B, "C": co.C, "a": pt.a, "c": pt.c}
    for k, v in doc.items():
        print(f"{k} = {v:.{SIG}g}")
    print(dumps(doc))
    out = _out_dir(args)
    if out:
        _write(out / "coeffs.json", dumps(doc) + "\n")
    return 0


def cmd_equilibria(args) -> int:
    pt = _point(args)
    eqs = find_equilibria(pt)
    worst = max(abs(potential_derivatives(e.phi, pt, 1)) for e in eqs)
    if worst >= TOL_ROOT:
        raise CheckFailed(f"equilibrium residual {worst:.3e} exceeds {TOL_ROOT}")
    text = dumps([e.to_dict() for e in eqs])
    print(text)
    out = _out_dir(args)
    if out:
        _write(out / "equilibria.json", text + "\n")
    return 0


def cmd_diagram(args) -> int:
    if args.resolution < 16:
        raise ValueError("--resolution must be at least 16")
    rows = region_sweep(args.box, args.resolution, args.workers)
    gamma = trace_gamma(721)
    out = _out_dir(args) or Path(".")
    _write(out / "diagram.csv", sweep_to_csv(rows))
    _write(out / "gamma.csv", polylines_csv([gamma], header=("component_id", "a", "c")))
    _write(out / "diagram.svg", diagram_svg(rows, gamma, args.box, args.resolution, args.width, args.width))
    counts = {}
    for _, _, label in rows:
        counts[label] = counts.get(label, 0) + 1
    print(dumps({"cells": len(rows), "labels": dict(sorted(counts.items())),
                 "cusps": [[-0.5, 0.0], [0.5, 0.0]], "files": ["diagram.csv", "diagram.svg", "gamma.csv"]}))
    return 0


def cmd_portrait(args) -> int:
    pt = _point(args)
    portrait = build_portrait(pt, p_max=args.p_max)
    worst = 0.0
    for s in portrait.separatrices:
        worst = max(worst, level_set_residual([s.polyline], pt, s.energy))
    if worst >= 1e-6:
        raise CheckFailed(f"separatrix energy residual {worst:.3e} exceeds 1e-6")
    out = _out_dir(args) or Path(".")
    title = f"averaged phase portrait a={pt.a:.6g} c={pt.c:.6g}"
    svg = phase_svg(portrait.orbits, portrait.equilibria, args.p_max, args.width, args.height, title,
                    highlight=[s.polyline for s in portrait.separatrices])
    _write(out / "portrait.svg", svg)
    _write(out / "portrait.csv", polylines_csv(portrait.polylines))
    doc = {
        "a": pt.a,
        "c": pt.c,
        "region": classify_region(pt, portrait.equilibria).value,
        "signature": portrait.signature.to_dict(),
        "separatrices": [{"saddle": s.saddle_phi, "direction": s.direction, "kind": s.kind,
                          "energy": s.energy} for s in portrait.separatrices],
        "max_energy_residual": worst,
    }
    _write(out / "signature.json", dumps(doc) + "\n")
    print(dumps(doc))
    return 0


def cmd_verify(args) -> int:
    spec = VibrationSpec.from_json(args.spec)
    params = _params(args)
    cfg = IntegrationConfig(steps_per_fast_period=args.steps)
    report = epsilon_scaling(spec, params, args.epsilon, cfg, workers=args.workers)
    doc = report.to_dict()
    failures = []
    if not report.all_converged:
        failures.append("fixed-point Newton did not converge for every seed")
    if report.max_det_error > 1e-6:
        failures.append(f"return-map Jacobian determinant off by {report.max_det_error:.3e}")
    if len(args.epsilon) > 1 and not report.slope >= 0.9:
        failures.append(f"epsilon-scaling slope {report.slope:.4g} < 0.9")
    doc["checks_passed"] = not failures
    doc["failures"] = failures
    text = dumps(doc)
    out = _out_dir(args)
    if out:
        _write(out / "fixed_points.json", text + "\n")
    print(text)
    if failures:
        raise CheckFailed("; ".join(failures))
    return 0


def cmd_sweep(args) -> int:
    rows = region_sweep(args.box, args.resolution, args.workers)
    out = _out_dir(args) or Path(".")
    _write(out / "sweep.csv", sweep_to_csv(rows))
    _write(out / "sweep.json", sweep_to_json(rows) + "\n")
    summary = {"rows": len(rows)}
    if args.random:
        seed = int(os.environ.get("APL_SEED", "0"))
        rng = np.random.default_rng(seed)
        a0, a1, c0, c1 = args.box
        lines = ["a,c,label,kinds,saddle_energy_order,topology"]
        for a, c in zip(rng.uniform(a0, a1, args.random), rng.uniform(c0, c1, args.random)):
            pt = ParameterPoint(float(a), float(c))
            sig = portrait_signature(pt)
            lines.append(f"{a:.12g},{c:.12g},{classify_region(pt).value},{'-'.join(sig.kinds)},"
                         f"{sig.saddle_energy_order},{sig.separatrix_topology}")
        _write(out / "signatures.csv", "\n".join(lines) + "\n")
        summary.update(seed=seed, random_points=args.random)
    print(dumps(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vibpendulum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def physical(p):
        p.add_argument("--m", type=float, default=1.0, help="bob mass")
        p.add_argument("--l", type=float, default=1.0, help="rod length")
        p.add_argument("--g", type=float, default=1.0, help="gravity")

    def point(p):
        p.add_argument("--a", type=float, help="(B-A)/(g l)")
        p.add_argument("--c", type=float, help="C/(g l)")
        p.add_argument("--spec", help="vibration spec JSON")
        physical(p)

    p = sub.add_parser("coeffs", help="averaged coefficients of a vibration spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    physical(p)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("equilibria", help="equilibria of the averaged system")
    point(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("diagram", help="partition of the parameter plane")
    p.add_argument("--box", type=_box, default=(-2.0, 2.0, -2.0, 2.0))
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--width", type=int, default=700)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("portrait", help="phase portrait with separatrices")
    point(p)
    p.add_argument("--p-max", dest="p_max", type=float, default=4.0)
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--height", type=int, default=500)
    p.add_argument("--out")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("verify", help="return-map fixed points vs averaged equilibria")
    p.add_argument("--spec", required=True)
    p.add_argument("--epsilon", type=_floats, default=[0.04, 0.02, 0.01])
    p.add_argument("--steps", type=int, default=256, help="steps per vibration period")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    physical(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="region labels on a grid")
    p.add_argument("--box", type=_box, default=(-2.0, 2.0, -2.0, 2.0))
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--random", type=int, default=0, help="also sign N random points (seed from APL_SEED)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, CheckFailed, RuntimeError) as exc:
        kind = "check_failed" if isinstance(exc, CheckFailed) else type(exc).__name__
        print(json.dumps({"error": kind, "message": str(exc), "command": args.command}), file=sys.stderr)
        return 2 if isinstance(exc, CheckFailed) else 1


if __name__ == "__main__":
    sys.exit(main())
