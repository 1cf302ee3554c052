"""Pendulum parameters, vibration profiles and the averaged potential.

All analysis downstream works in dimensionless units: energies in units of
``m*g*l``, the averaged potential is

    v(phi) = -(a/2) cos 2phi + (c/2) sin 2phi - cos phi

with ``a = (B - A)/(g l)`` and ``c = C/(g l)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(phi):
    """Map an angle (scalar or array) onto the canonical interval [-pi, pi)."""
    wrapped = np.mod(np.asarray(phi, dtype=float) + math.pi, TWO_PI) - math.pi
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angle_distance(x: float, y: float) -> float:
    """Distance between two angles on the circle."""
    return abs(wrap_angle(x - y))


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0
    l: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        for name in ("m", "l", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def momentum_scale(self) -> float:
        """m l^2 sqrt(g/l): converts momentum to the dimensionless one."""
        return self.m * self.l**2 * math.sqrt(self.g / self.l)

    @property
    def small_oscillation_period(self) -> float:
        return TWO_PI * math.sqrt(self.l / self.g)


def _as_harmonics(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=float).reshape(-1, 2) if len(coeffs) else np.zeros((0, 2))
    if not np.all(np.isfinite(arr)):
        raise ValueError("Fourier coefficients must be finite")
    return arr


@dataclass(frozen=True)
class VibrationSpec:
    """Zero-mean periodic motion of the suspension point.

    ``xi`` (horizontal) and ``eta`` (vertical) are ``(K, 2)`` arrays of
    ``(cos_k, sin_k)`` coefficients for harmonics ``k = 1..K`` of the
    2*pi-periodic profiles; the physical displacement is
    ``epsilon * profile(omega * t / epsilon)``.
    """

    xi: np.ndarray
    eta: np.ndarray
    epsilon: float = 0.01
    omega: float = 1.0

    def __init__(self, xi=(), eta=(), epsilon: float = 0.01, omega: float = 1.0):
        object.__setattr__(self, "xi", _as_harmonics(xi))
        object.__setattr__(self, "eta", _as_harmonics(eta))
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "omega", float(omega))
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {epsilon!r}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {omega!r}")
        self.xi.setflags(write=False)
        self.eta.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, VibrationSpec):
            return NotImplemented
        return (
            np.array_equal(self.xi, other.xi)
            and np.array_equal(self.eta, other.eta)
            and self.epsilon == other.epsilon
            and self.omega == other.omega
        )

    def __hash__(self):
        return hash((self.xi.tobytes(), self.eta.tobytes(), self.epsilon, self.omega))

    @property
    def n_harmonics(self) -> int:
        return max(len(self.xi), len(self.eta))

    @property
    def fast_period(self) -> float:
        """Period of the vibration in physical time, 2*pi*epsilon/omega."""
        return TWO_PI * self.epsilon / self.omega

    def with_epsilon(self, epsilon: float) -> "VibrationSpec":
        return VibrationSpec(self.xi, self.eta, epsilon=epsilon, omega=self.omega)

    def _padded(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_harmonics
        xi = np.zeros((n, 2))
        eta = np.zeros((n, 2))
        xi[: len(self.xi)] = self.xi
        eta[: len(self.eta)] = self.eta
        return xi, eta

    def velocities(self, t):
        """Suspension-point velocities (xi_dot, eta_dot) at physical time t."""
        tau = self.omega * np.asarray(t, dtype=float) / self.epsilon
        return (
            self.omega * _profile_derivative(self.xi, tau),
            self.omega * _profile_derivative(self.eta, tau),
        )

    def displacements(self, t):
        tau = self.omega * np.asarray(t, dtype=float) / self.epsilon
        return (
            self.epsilon * _profile(self.xi, tau),
            self.epsilon * _profile(self.eta, tau),
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "VibrationSpec":
        if not isinstance(doc, dict):
            raise ValueError("vibration spec must be a JSON object")
        unknown = set(doc) - {"xi", "eta", "epsilon", "omega"}
        if unknown:
            raise ValueError(f"unknown field(s) in vibration spec: {sorted(unknown)}")
        harmonics = {}
        for key in ("xi", "eta"):
            rows = doc.get(key, [])
            if not isinstance(rows, list):
                raise ValueError(f"field {key!r}: expected a list of [cos, sin] pairs")
            for k, row in enumerate(rows, start=1):
                if (
                    not isinstance(row, (list, tuple))
                    or len(row) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row)
                ):
                    raise ValueError(f"field {key!r}, harmonic {k}: expected [cos, sin] numbers, got {row!r}")
            harmonics[key] = rows
        kwargs = {}
        for key in ("epsilon", "omega"):
            if key in doc:
                value = doc[key]
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ValueError(f"field {key!r}: expected a number, got {value!r}")
                kwargs[key] = value
        try:
            return cls(harmonics["xi"], harmonics["eta"], **kwargs)
        except ValueError as exc:
            raise ValueError(f"invalid vibration spec: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "VibrationSpec":
        text = Path(path).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi.tolist(),
            "eta": self.eta.tolist(),
            "epsilon": self.epsilon,
            "omega": self.omega,
        }


def _profile(coeffs: np.ndarray, tau):
    out = np.zeros_like(tau, dtype=float)
    for k, (ck, sk) in enumerate(coeffs, start=1):
        out = out + ck * np.cos(k * tau) + sk * np.sin(k * tau)
    return out


def _profile_derivative(coeffs: np.ndarray, tau):
    out = np.zeros_like(tau, dtype=float)
    for k, (ck, sk) in enumerate(coeffs, start=1):
        out = out + k * (sk * np.cos(k * tau) - ck * np.sin(k * tau))
    return out


def vertical_vibration(a: float, params: PendulumParams = PendulumParams(), epsilon: float = 0.01) -> VibrationSpec:
    """Profile eta = sin(tau), omega tuned so that (B - A)/(g l) = a."""
    if a < 0:
        raise ValueError("vertical vibration only reaches a >= 0")
    if a == 0:
        return VibrationSpec(epsilon=epsilon)
    return VibrationSpec(eta=[[0.0, 1.0]], epsilon=epsilon, omega=math.sqrt(4.0 * a * params.g * params.l))


@dataclass(frozen=True)
class AveragedCoefficients:
    A: float
    B: float
    C: float

    def __post_init__(self):
        if self.A < 0 or self.B < 0:
            raise ValueError("A and B are averages of squares and cannot be negative")
        if self.C**2 > 4.0 * self.A * self.B + 1e-12 * max(1.0, self.A * self.B):
            raise ValueError("C^2 <= 4AB violated")


@dataclass(frozen=True)
class ParameterPoint:
    a: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.c)):
            raise ValueError(f"parameter point must be finite, got ({self.a}, {self.c})")

    def mirrored(self) -> "ParameterPoint":
        return ParameterPoint(self.a, -self.c)


@dataclass(frozen=True)
class PhaseState:
    phi: float
    p: float

    def canonical(self) -> "PhaseState":
        return PhaseState(wrap_angle(self.phi), self.p)


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered (n, 2) vertex array; ``parameter`` optionally carries the
    curve parameter (time, angle) at each vertex."""

    points: np.ndarray
    label: str = ""
    parameter: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def signed_area(self) -> float:
        """Shoelace area of the polygon closed from last vertex to first."""
        x, y = self.x, self.y
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def area(self) -> float:
        return abs(self.signed_area())

    def max_step(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.hypot(*np.diff(self.points, axis=0).T)))


def averaged_coefficients(spec: VibrationSpec) -> AveragedCoefficients:
    """Exact period averages of xi_dot^2/2, eta_dot^2/2 and xi_dot*eta_dot.

    Uses Parseval on the Fourier coefficients, so there is no quadrature error.
    """
    xi, eta = spec._padded()
    k2 = np.arange(1, spec.n_harmonics + 1, dtype=float) ** 2
    w2 = spec.omega**2
    A = 0.25 * w2 * float(np.sum(k2 * (xi[:, 0] ** 2 + xi[:, 1] ** 2)))
    B = 0.25 * w2 * float(np.sum(k2 * (eta[:, 0] ** 2 + eta[:, 1] ** 2)))
    C = 0.5 * w2 * float(np.sum(k2 * (xi[:, 0] * eta[:, 0] + xi[:, 1] * eta[:, 1])))
    return AveragedCoefficients(A, B, C)


def averaged_coefficients_quadrature(spec: VibrationSpec, n: int = 4096) -> AveragedCoefficients:
    """Same averages by the composite trapezoid rule over one period.

    Kept as a cross-check for :func:`averaged_coefficients`; for trigonometric
    polynomials of degree < n/2 the periodic trapezoid rule is exact up to
    rounding.
    """
    t = np.arange(n) * (spec.fast_period / n)
    xd, yd = spec.velocities(t)
    return AveragedCoefficients(
        float(np.mean(0.5 * xd**2)), float(np.mean(0.5 * yd**2)), float(np.mean(xd * yd))
    )


def dimensionless(coeffs: AveragedCoefficients, params: PendulumParams) -> ParameterPoint:
    gl = params.g * params.l
    return ParameterPoint((coeffs.B - coeffs.A) / gl, coeffs.C / gl)


def averaged_potential(phi, pt: ParameterPoint):
    """Averaged potential v(phi) in units of m g l (no constant offset)."""
    phi = np.asarray(phi, dtype=float)
    val = -0.5 * pt.a * np.cos(2 * phi) + 0.5 * pt.c * np.sin(2 * phi) - np.cos(phi)
    return float(val) if val.ndim == 0 else val


def potential_derivatives(phi, pt: ParameterPoint, order: int):
    """Closed-form d^k v / d phi^k for k = 1..4."""
    phi = np.asarray(phi, dtype=float)
    a, c = pt.a, pt.c
    s1, c1 = np.sin(phi), np.cos(phi)
    s2, c2 = np.sin(2 * phi), np.cos(2 * phi)
    if order == 1:
        val = a * s2 + c * c2 + s1
    elif order == 2:
        val = 2 * a * c2 - 2 * c * s2 + c1
    elif order == 3:
        val = -4 * a * s2 - 4 * c * c2 - s1
    elif order == 4:
        val = -8 * a * c2 + 8 * c * s2 - c1
    else:
        raise ValueError(f"derivative order must be 1, 2, 3 or 4, got {order!r}")
    return float(val) if val.ndim == 0 else val


def averaged_hamiltonian(phi, p, pt: ParameterPoint):
    """Dimensionless averaged energy p^2/2 + v(phi)."""
    return 0.5 * np.asarray(p, dtype=float) ** 2 + averaged_potential(phi, pt)


def exact_hamiltonian(t: float, state: PhaseState, spec: VibrationSpec, params: PendulumParams) -> float:
    """Exact time-dependent Hamiltonian (dimensional)."""
    m, l, g = params.m, params.l, params.g
    xd, yd = spec.velocities(t)
    u = float(xd) * math.cos(state.phi) + float(yd) * math.sin(state.phi)
    return 0.5 * (state.p**2 / (m * l**2) - 2.0 * state.p * u / l + m * u**2) - m * g * l * math.cos(state.phi)


def exact_vector_field(t: float, state: PhaseState, spec: VibrationSpec, params: PendulumParams) -> tuple[float, float]:
    """Hamilton's equations (dphi/dt, dp/dt) of the exact Hamiltonian."""
    xd, yd = spec.velocities(t)
    return _exact_rhs(state.phi, state.p, float(xd), float(yd), params.m, params.l, params.g)


def _exact_rhs(phi, p, xd, yd, m, l, g):
    s, c = math.sin(phi), math.cos(phi)
    u = xd * c + yd * s
    du = -xd * s + yd * c
    return p / (m * l * l) - u / l, p * du / l - m * u * du - m * g * l * s
