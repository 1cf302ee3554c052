"""Exact (non-averaged) dynamics: integration, the stroboscopic return map
over one vibration period and its fixed points."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
# Dormand-Prince 8(5,3) tableau; used here as a fixed-step 8th-order method
from scipy.integrate._ivp.dop853_coefficients import A as _DOP_A, B as _DOP_B, C as _DOP_C, N_STAGES as _DOP_STAGES

from .equilibria import CENTRE, SADDLE, find_equilibria
from .model import (
    PendulumParams,
    PhaseState,
    VibrationSpec,
    angle_distance,
    averaged_coefficients,
    dimensionless,
    exact_hamiltonian,
    wrap_angle,
)

_STAGES = [
    (float(_DOP_C[i]), [(j, float(_DOP_A[i, j])) for j in range(i) if _DOP_A[i, j] != 0.0])
    for i in range(_DOP_STAGES)
]
_WEIGHTS = [(i, float(w)) for i, w in enumerate(_DOP_B) if w != 0.0]


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegrationConfig:
    """``rk8``: fixed step, fast period / steps_per_fast_period.
    ``adaptive``: scipy DOP853 with the given tolerances."""

    method: str = "rk8"
    steps_per_fast_period: int = 256
    rtol: float = 1e-12
    atol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("rk8", "adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.steps_per_fast_period < 64:
            raise ValueError("steps_per_fast_period must be >= 64")

    def dt(self, spec: VibrationSpec) -> float:
        return spec.fast_period / self.steps_per_fast_period


@dataclass
class Trajectory:
    t: np.ndarray
    phi: np.ndarray
    p: np.ndarray

    @property
    def final(self) -> PhaseState:
        return PhaseState(float(self.phi[-1]), float(self.p[-1]))

    def to_csv(self) -> str:
        rows = ["t,phi,p"]
        rows += [f"{t:.12g},{x:.12g},{y:.12g}" for t, x, y in zip(self.t, self.phi, self.p)]
        return "\n".join(rows) + "\n"


def _make_rhs(spec: VibrationSpec, params: PendulumParams):
    m, l, g = params.m, params.l, params.g
    ml2 = m * l * l
    mgl = m * g * l
    scale = spec.omega / spec.epsilon
    harmonics = []
    xi, eta = spec._padded()
    for k in range(spec.n_harmonics):
        kk = k + 1
        # d/dtau of (c cos k tau + s sin k tau) = k (s cos - c sin)
        harmonics.append((kk, spec.omega * kk * xi[k, 1], -spec.omega * kk * xi[k, 0],
                          spec.omega * kk * eta[k, 1], -spec.omega * kk * eta[k, 0]))
    sin, cos = math.sin, math.cos

    def rhs(t, phi, p):
        xd = yd = 0.0
        tau = scale * t
        for kk, xc, xs, yc, ys in harmonics:
            ck, sk = cos(kk * tau), sin(kk * tau)
            xd += xc * ck + xs * sk
            yd += yc * ck + ys * sk
        s, c = sin(phi), cos(phi)
        u = xd * c + yd * s
        du = yd * c - xd * s
        return p / ml2 - u / l, p * du / l - m * u * du - mgl * s

    return rhs


def _rk8_run(rhs, t0: float, phi: float, p: float, dt: float, n_steps: int, record_every: int = 0):
    """Fixed-step integration; returns final (phi, p) and optional samples."""
    samples = [(t0, phi, p)] if record_every else None
    for n in range(n_steps):
        t = t0 + n * dt
        k_phi = []
        k_p = []
        for ci, row in _STAGES:
            yphi, yp = phi, p
            for j, aij in row:
                yphi += dt * aij * k_phi[j]
                yp += dt * aij * k_p[j]
            f0, f1 = rhs(t + ci * dt, yphi, yp)
            k_phi.append(f0)
            k_p.append(f1)
        for i, w in _WEIGHTS:
            phi += dt * w * k_phi[i]
            p += dt * w * k_p[i]
        if record_every and (n + 1) % record_every == 0:
            samples.append((t0 + (n + 1) * dt, phi, p))
    return phi, p, samples


def _rk8_checked(rhs, t0, phi, p, dt, n_steps, record_every=0):
    try:
        with np.errstate(all="ignore"):
            phi, p, samples = _rk8_run(rhs, t0, phi, p, dt, n_steps, record_every)
    except (OverflowError, ValueError) as exc:
        raise IntegrationError(f"integration blew up ({exc}); step too large") from exc
    if not (math.isfinite(phi) and math.isfinite(p)):
        raise IntegrationError("non-finite state; step too large")
    return phi, p, samples


def integrate_exact(
    spec: VibrationSpec,
    params: PendulumParams,
    state0: PhaseState,
    cfg: IntegrationConfig,
    t_end: float,
    t0: float = 0.0,
    record_every: int = 1,
) -> Trajectory:
    """Integrate Hamilton's equations of the exact Hamiltonian from t0 to t_end.

    With the fixed-step method the horizon is rounded to a whole number of
    steps; ``record_every`` thins the stored samples (the final state is
    always kept).
    """
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    rhs = _make_rhs(spec, params)
    if cfg.method == "adaptive":
        sol = solve_ivp(lambda t, y: rhs(t, y[0], y[1]), (t0, t_end), [state0.phi, state0.p],
                        method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
        if not sol.success:
            raise IntegrationError(sol.message)
        idx = np.arange(0, sol.t.size, max(1, record_every))
        if idx[-1] != sol.t.size - 1:
            idx = np.append(idx, sol.t.size - 1)
        return Trajectory(sol.t[idx], sol.y[0, idx], sol.y[1, idx])
    dt = cfg.dt(spec)
    n_steps = max(1, round((t_end - t0) / dt))
    stride = max(1, record_every)
    phi, p, samples = _rk8_checked(rhs, t0, state0.phi, state0.p, dt, n_steps, record_every=stride)
    if n_steps % stride:
        samples.append((t0 + n_steps * dt, phi, p))
    arr = np.array(samples)
    return Trajectory(arr[:, 0], arr[:, 1], arr[:, 2])


def poincare_map(
    spec: VibrationSpec,
    params: PendulumParams,
    state: PhaseState,
    cfg: IntegrationConfig = IntegrationConfig(),
    periods: int = 1,
    t0: float = 0.0,
) -> PhaseState:
    """Advance ``state`` by whole vibration periods (phi is not wrapped)."""
    rhs = _make_rhs(spec, params)
    if cfg.method == "adaptive":
        T = spec.fast_period * periods
        sol = solve_ivp(lambda t, y: rhs(t, y[0], y[1]), (t0, t0 + T), [state.phi, state.p],
                        method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
        if not sol.success:
            raise IntegrationError(sol.message)
        return PhaseState(float(sol.y[0, -1]), float(sol.y[1, -1]))
    phi, p, _ = _rk8_checked(rhs, t0, state.phi, state.p, cfg.dt(spec), cfg.steps_per_fast_period * periods)
    return PhaseState(float(phi), float(p))


def map_jacobian(spec, params, state: PhaseState, cfg: IntegrationConfig = IntegrationConfig(), h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the return map in (phi, p)."""
    scale = params.momentum_scale
    steps = (h, h * scale)
    J = np.empty((2, 2))
    for col, (dphi, dp) in enumerate([(steps[0], 0.0), (0.0, steps[1])]):
        plus = poincare_map(spec, params, PhaseState(state.phi + dphi, state.p + dp), cfg)
        minus = poincare_map(spec, params, PhaseState(state.phi - dphi, state.p - dp), cfg)
        step = 2 * (dphi + dp)
        J[:, col] = [(plus.phi - minus.phi) / step, (plus.p - minus.p) / step]
    return J


def state_distance(x: PhaseState, y: PhaseState, params: PendulumParams) -> tuple[float, float]:
    """(|dphi| on the circle, |dp| in units of m l^2 sqrt(g/l))."""
    return angle_distance(x.phi, y.phi), abs(x.p - y.p) / params.momentum_scale


@dataclass
class PoincareFixedPoint:
    state: PhaseState
    residual: float
    matched_equilibrium: float
    seed_kind: str
    distance: float
    dphi: float
    dp_scaled: float
    converged: bool
    iterations: int
    eigenvalues: tuple[complex, complex] = (0j, 0j)
    jacobian_det: float = float("nan")

    @property
    def stability(self) -> str:
        """'elliptic' (eigenvalues on the unit circle), 'hyperbolic' (real
        reciprocal pair) or 'parabolic'."""
        l1, l2 = self.eigenvalues
        if abs(l1.imag) > 1e-9 and abs(abs(l1) - 1) < 1e-6 and abs(abs(l2) - 1) < 1e-6:
            return "elliptic"
        if abs(l1.imag) <= 1e-9 and max(abs(l1), abs(l2)) > 1 + 1e-9:
            return "hyperbolic"
        return "parabolic"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["state"] = {"phi": self.state.phi, "p": self.state.p}
        d["eigenvalues"] = [[complex(z).real, complex(z).imag] for z in self.eigenvalues]
        d["stability"] = self.stability
        return d


def refine_fixed_point(
    spec: VibrationSpec,
    params: PendulumParams,
    seed: PhaseState,
    cfg: IntegrationConfig = IntegrationConfig(),
    tol: float = 1e-11,
    max_iter: int = 30,
    fd_step: float = 1e-7,
    max_angle_step: float = 0.1,
):
    """Newton iteration on P(x) - x; returns (state, residual, iterations, converged)."""
    scale = params.momentum_scale
    x = np.array([seed.phi, seed.p / scale])

    def F(z):
        img = poincare_map(spec, params, PhaseState(z[0], z[1] * scale), cfg)
        return np.array([img.phi - z[0], img.p / scale - z[1]])

    fx = F(x)
    residual = float(np.sum(np.abs(fx)))
    for it in range(1, max_iter + 1):
        if residual < tol:
            return PhaseState(float(x[0]), float(x[1] * scale)), residual, it - 1, True
        J = np.empty((2, 2))
        for col in range(2):
            e = np.zeros(2)
            e[col] = fd_step
            J[:, col] = (F(x + e) - F(x - e)) / (2 * fd_step)
        try:
            dx = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            break
        size = float(np.max(np.abs(dx)))
        if size > max_angle_step:
            dx *= max_angle_step / size
        x = x + dx
        fx = F(x)
        new_residual = float(np.sum(np.abs(fx)))
        if not math.isfinite(new_residual):
            break
        residual = new_residual
        if size < 1e-15:
            break
    return PhaseState(float(x[0]), float(x[1] * scale)), residual, max_iter, residual < 1e-9


def find_fixed_points(
    spec: VibrationSpec,
    params: PendulumParams,
    cfg: IntegrationConfig = IntegrationConfig(),
    jacobian_step: float = 1e-5,
) -> list[PoincareFixedPoint]:
    """Fixed points of the return map, one Newton run per averaged equilibrium.

    A seed that fails to converge is reported with ``converged=False``.
    """
    pt = dimensionless(averaged_coefficients(spec), params)
    out = []
    for eq in find_equilibria(pt):
        seed = PhaseState(eq.phi, 0.0)
        try:
            state, residual, iters, ok = refine_fixed_point(spec, params, seed, cfg)
        except IntegrationError:
            out.append(PoincareFixedPoint(seed, math.inf, eq.phi, eq.kind, math.inf, math.inf, math.inf, False, 0))
            continue
        state = PhaseState(wrap_angle(state.phi), state.p)
        dphi, dp = state_distance(state, seed, params)
        J = map_jacobian(spec, params, state, cfg, h=jacobian_step)
        w = np.linalg.eigvals(J)
        out.append(
            PoincareFixedPoint(
                state=state,
                residual=residual,
                matched_equilibrium=eq.phi,
                seed_kind=eq.kind,
                distance=dphi + dp,
                dphi=dphi,
                dp_scaled=dp,
                converged=ok,
                iterations=iters,
                eigenvalues=(complex(w[0]), complex(w[1])),
                jacobian_det=float(np.linalg.det(J)),
            )
        )
    return out


@dataclass
class ScalingReport:
    epsilons: list[float]
    fixed_points: list[list[PoincareFixedPoint]]
    max_distance: list[float]
    slope: float
    prefactor: float
    per_seed_slopes: dict[str, float] = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return all(fp.converged for fps in self.fixed_points for fp in fps)

    @property
    def max_det_error(self) -> float:
        return max(abs(fp.jacobian_det - 1.0) for fps in self.fixed_points for fp in fps)

    def to_dict(self) -> dict:
        return {
            "epsilons": self.epsilons,
            "max_distance": self.max_distance,
            "fit": {"slope": self.slope, "prefactor": self.prefactor, "model": "distance = K * epsilon**q"},
            "per_seed_slopes": self.per_seed_slopes,
            "all_converged": self.all_converged,
            "max_jacobian_det_error": self.max_det_error,
            "fixed_points": [
                {"epsilon": e, "points": [fp.to_dict() for fp in fps]}
                for e, fps in zip(self.epsilons, self.fixed_points)
            ],
        }


def _loglog_fit(eps, dist) -> tuple[float, float]:
    if len(set(eps)) < 2 or min(dist) <= 0:
        return math.nan, math.nan
    q, logk = np.polyfit(np.log(eps), np.log(dist), 1)
    return float(q), float(math.exp(logk))


def _fixed_points_job(args):
    spec, params, cfg = args
    return find_fixed_points(spec, params, cfg)


def epsilon_scaling(
    spec: VibrationSpec,
    params: PendulumParams,
    epsilons,
    cfg: IntegrationConfig = IntegrationConfig(),
    workers: int = 1,
    noise_floor: float = 1e-12,
) -> ScalingReport:
    """Fixed points for each epsilon and a log-log fit of the worst distance
    to the averaged equilibria against epsilon.

    Seeds whose distance stays below ``noise_floor`` (fixed points that the
    symmetry pins exactly on the averaged equilibrium) are left out of the
    per-seed fits.
    """
    epsilons = [float(e) for e in epsilons]
    jobs = [(spec.with_epsilon(e), params, cfg) for e in epsilons]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fixed_points_job, jobs))
    else:
        results = [_fixed_points_job(j) for j in jobs]
    worst = [max(fp.distance for fp in fps) for fps in results]
    slope, prefactor = _loglog_fit(epsilons, worst)
    per_seed = {}
    n_seeds = min(len(fps) for fps in results)
    for i in range(n_seeds):
        d = [fps[i].distance for fps in results]
        if min(d) > noise_floor and len(set(epsilons)) > 1:
            per_seed[f"{results[0][i].seed_kind}@{results[0][i].matched_equilibrium:.6f}"] = _loglog_fit(epsilons, d)[0]
    return ScalingReport(epsilons, results, worst, slope, prefactor, per_seed)


def energy_drift(traj: Trajectory, spec: VibrationSpec, params: PendulumParams) -> float:
    """Max |H(t) - H(0)| along a trajectory (meaningful for zero vibration)."""
    h = np.array([exact_hamiltonian(t, PhaseState(x, y), spec, params) for t, x, y in zip(traj.t, traj.phi, traj.p)])
    return float(np.max(np.abs(h - h[0])))
