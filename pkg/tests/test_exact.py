import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from vibpendulum.equilibria import CENTRE, SADDLE, find_equilibria
from vibpendulum.exact import (
    IntegrationConfig,
    IntegrationError,
    energy_drift,
    epsilon_scaling,
    find_fixed_points,
    integrate_exact,
    map_jacobian,
    poincare_map,
    refine_fixed_point,
)
from vibpendulum.model import (
    PendulumParams,
    PhaseState,
    VibrationSpec,
    averaged_coefficients,
    dimensionless,
    vertical_vibration,
    wrap_angle,
)

UNIT = PendulumParams()
STILL = VibrationSpec(epsilon=1.0)  # no vibration; the fast period is just a step unit of 2 pi
FAST = IntegrationConfig(steps_per_fast_period=128)


def inclined(beta: float, scale: float, epsilon: float) -> VibrationSpec:
    """Straight-line vibration at angle beta; (a, c) = (scale/4)(-cos 2 beta, sin 2 beta) for g = l = 1."""
    return VibrationSpec(xi=[[0.0, math.cos(beta)]], eta=[[0.0, math.sin(beta)]], epsilon=epsilon, omega=math.sqrt(scale))


def test_rest_point_stays():
    tr = integrate_exact(STILL, UNIT, PhaseState(0.0, 0.0), FAST, 50.0)
    assert np.max(np.abs(tr.phi)) == 0.0 and np.max(np.abs(tr.p)) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(method="euler")
    with pytest.raises(ValueError):
        IntegrationConfig(steps_per_fast_period=16)
    with pytest.raises(ValueError):
        integrate_exact(STILL, UNIT, PhaseState(0, 0), FAST, 0.0)


def test_energy_conserved_without_vibration():
    params = PendulumParams(m=0.7, l=1.3, g=9.81)
    spec = VibrationSpec(epsilon=params.small_oscillation_period / (2 * math.pi))
    T = params.small_oscillation_period
    tr = integrate_exact(spec, params, PhaseState(2.0, 0.0), IntegrationConfig(steps_per_fast_period=64),
                         1000 * T, record_every=500)
    assert energy_drift(tr, spec, params) / (params.m * params.g * params.l) < 1e-8


@pytest.mark.parametrize("params", [PendulumParams(), PendulumParams(m=2.0, l=0.5, g=9.81)])
def test_small_oscillation_period(params):
    T0 = params.small_oscillation_period
    spec = VibrationSpec(epsilon=T0 / (2 * math.pi))
    tr = integrate_exact(spec, params, PhaseState(0.01, 0.0), FAST, 3.2 * T0)
    # downward zero crossings of phi, interpolated
    idx = np.nonzero((tr.phi[:-1] > 0) & (tr.phi[1:] <= 0))[0]
    cross = tr.t[idx] - tr.phi[idx] * (tr.t[idx + 1] - tr.t[idx]) / (tr.phi[idx + 1] - tr.phi[idx])
    assert len(cross) >= 3
    assert np.mean(np.diff(cross)) == pytest.approx(T0, rel=0.01)


def test_map_matches_simple_pendulum():
    state = PhaseState(1.2, -0.4)
    out = poincare_map(STILL, UNIT, state, FAST)
    sol = solve_ivp(lambda t, y: [y[1], -math.sin(y[0])], (0, 2 * math.pi), [state.phi, state.p],
                    method="DOP853", rtol=1e-13, atol=1e-13)
    assert (out.phi, out.p) == pytest.approx((sol.y[0, -1], sol.y[1, -1]), abs=1e-10)


def test_adaptive_and_fixed_step_agree():
    spec = vertical_vibration(1.0, epsilon=0.05)
    state = PhaseState(2.5, 0.3)
    fixed = poincare_map(spec, UNIT, state, IntegrationConfig(), periods=3)
    adaptive = poincare_map(spec, UNIT, state, IntegrationConfig(method="adaptive"), periods=3)
    assert (fixed.phi, fixed.p) == pytest.approx((adaptive.phi, adaptive.p), abs=1e-9)


def test_map_composition():
    spec = inclined(0.4, 3.0, 0.05)
    state = PhaseState(0.7, 0.2)
    s = state
    for _ in range(5):
        s = poincare_map(spec, UNIT, s, FAST)
    many = poincare_map(spec, UNIT, state, FAST, periods=5)
    tr = integrate_exact(spec, UNIT, state, FAST, 5 * spec.fast_period)
    assert (s.phi, s.p) == pytest.approx((many.phi, many.p), abs=1e-11)
    assert (tr.final.phi, tr.final.p) == pytest.approx((many.phi, many.p), abs=1e-12)


def test_map_is_area_preserving():
    spec = inclined(1.1, 5.0, 0.05)
    for state in (PhaseState(0.3, 0.1), PhaseState(-2.0, 1.0)):
        assert np.linalg.det(map_jacobian(spec, UNIT, state, FAST)) == pytest.approx(1.0, abs=1e-7)


def test_blow_up_reported():
    cfg = IntegrationConfig(steps_per_fast_period=64)
    for amp in (1e4, 1e6):
        spec = VibrationSpec(eta=[[0.0, amp]], epsilon=1.0)
        with pytest.raises(IntegrationError):
            poincare_map(spec, UNIT, PhaseState(1.0, 0.0), cfg)
        with pytest.raises(IntegrationError):
            integrate_exact(spec, UNIT, PhaseState(1.0, 0.0), cfg, spec.fast_period)


def test_fixed_points_without_vibration():
    # a strobe period of 2 pi would make the linearised centre map the identity
    fps = find_fixed_points(VibrationSpec(epsilon=0.7), UNIT, FAST)
    assert [fp.seed_kind for fp in fps] == [SADDLE, CENTRE]
    for fp in fps:
        assert fp.converged and fp.distance < 1e-12
        # the saddle multipliers are e^(+-1.4 pi), so the difference quotient is the limit here
        assert fp.jacobian_det == pytest.approx(1.0, abs=1e-6)
    assert fps[0].stability == "hyperbolic" and fps[1].stability == "elliptic"


def test_inverted_position_stabilised():
    spec = vertical_vibration(1.0, epsilon=0.05)
    fps = {round(abs(fp.matched_equilibrium), 6): fp for fp in find_fixed_points(spec, UNIT)}
    top = fps[round(math.pi, 6)]
    assert top.converged and top.stability == "elliptic"
    tr = integrate_exact(spec, UNIT, PhaseState(math.pi + 0.1, 0.0), FAST, 20.0, record_every=8)
    assert np.max(np.abs(wrap_angle(tr.phi - math.pi))) < 0.3
    # below the threshold a = 1/2 the top stays unstable
    weak = {round(abs(fp.matched_equilibrium), 6): fp for fp in find_fixed_points(vertical_vibration(0.3, epsilon=0.05), UNIT)}
    assert weak[round(math.pi, 6)].stability == "hyperbolic"


def test_stability_matches_averaged_kind():
    for spec in (vertical_vibration(1.0, epsilon=0.02), inclined(0.5, 6.0, 0.02)):
        for fp in find_fixed_points(spec, UNIT):
            assert fp.converged
            assert fp.stability == ("elliptic" if fp.seed_kind == CENTRE else "hyperbolic")


def test_vertical_scaling():
    rep = epsilon_scaling(vertical_vibration(1.0), UNIT, [0.04, 0.02, 0.01])
    assert rep.all_converged
    assert rep.slope >= 0.9
    assert rep.max_det_error < 1e-6
    assert all(d < 0.05 for d in rep.max_distance)
    assert len(rep.fixed_points[0]) == 4


@pytest.mark.parametrize("beta", [0.3, 1.0])
def test_inclined_scaling(beta):
    spec = inclined(beta, 6.0, 0.01)
    pt = dimensionless(averaged_coefficients(spec), UNIT)
    assert (pt.a, pt.c) == pytest.approx((-1.5 * math.cos(2 * beta), 1.5 * math.sin(2 * beta)), abs=1e-12)
    rep = epsilon_scaling(spec, UNIT, [0.04, 0.02, 0.01], workers=2)
    assert rep.all_converged
    assert len(rep.fixed_points[0]) == find_equilibria(pt).count
    assert rep.slope >= 0.9
    assert all(q >= 0.9 for q in rep.per_seed_slopes.values())
    doc = rep.to_dict()
    assert doc["fit"]["slope"] == rep.slope and len(doc["fixed_points"]) == 3


def test_failed_seed_is_reported():
    spec = vertical_vibration(1.0, epsilon=0.05)
    state, residual, iters, ok = refine_fixed_point(spec, UNIT, PhaseState(2.0, 0.0), max_iter=1)
    assert not ok and iters == 1 and residual > 1e-11
