import io
import math

import numpy as np
import pytest

from calabi_slag.construction import construct
from calabi_slag.errors import BadInterval, BlowUp, MultipleCriticalPoints, SelfIntersection, StepUnstable
from calabi_slag.flow import (
    FLOW_LOG_HEADER,
    Convention,
    FlowConfig,
    FlowState,
    Scheme,
    SymplecticPotentialProfile,
    barrier_monitor,
    critical_point_tracker,
    curve_flow_step,
    curve_geometry,
    default_potential,
    find_self_intersection,
    normal_speed,
    profile_flow_step,
    resample_arclength,
    section_profile,
    stable_relaxation_experiment,
    stationarity_residual,
    unstable_limit_experiment,
)
from calabi_slag.levelset import MomentumProfile, sample_level_profile, split_graphical, trace_component


def level_graph(params, x_lo, count):
    """Uniform samples of the level-set piece through (a, 0) over [x_lo, a]."""
    level = params.level_set
    ymax = 4 * max(abs(params.ap), abs(params.q), 1.0)
    br = trace_component(level, (params.a, 0.0), (0.5, params.a, -ymax, ymax))
    profiles, _ = split_graphical(br)
    home = min(profiles, key=lambda p: abs(p(params.a)) if p.x_hi >= params.a - 1e-9 else 1e9)
    return sample_level_profile(level, np.linspace(x_lo, params.a, count), home)


def wavy(x, b, a):
    return -0.5 + 0.3 * np.sin(np.pi * (x - b) / (a - b)) + 0.2 * (x - b)


def test_default_potential():
    pot = default_potential(3.0, 1.0)
    assert pot(1.0) == 0.0 and pot(3.0) == 0.0
    assert pot(2.0) == pytest.approx(1.0)
    xs = np.linspace(1.001, 2.999, 50)
    assert np.all(pot(xs) > 0)
    h = 1e-7
    assert float(pot.phi(1.0 + h) - pot.phi(1.0)) / h == pytest.approx(2.0, rel=1e-6)
    assert float(pot.phi(3.0) - pot.phi(3.0 - h)) / h == pytest.approx(-2.0, rel=1e-6)
    with pytest.raises(BadInterval):
        default_potential(1.0, 2.0)
    with pytest.raises(BadInterval):
        SymplecticPotentialProfile(0.0, 1.0, lambda x: x)


@pytest.mark.parametrize("n,theta", [(2, math.pi / 6), (4, 0.3)])
def test_level_profile_stationary_second_order(n, theta):
    params = construct(n, theta)
    pot = default_potential(params.a, 1.05)
    res = [stationarity_residual(level_graph(params, 1.05, N), pot, n) for N in (500, 1000, 2000)]
    assert res[-1] < 1e-5
    for coarse, fine in zip(res, res[1:]):
        assert 3.5 < coarse / fine < 4.5


def test_flat_profile_stationary():
    xs = np.linspace(1.0, 2.0, 101)
    pr = MomentumProfile(xs, np.zeros_like(xs))
    pot = default_potential(2.0, 1.0)
    assert stationarity_residual(pr, pot, 3) == 0.0
    out = profile_flow_step(pr, pot, 3, FlowConfig())
    assert np.array_equal(out.y, pr.y)


def test_perturbed_profile_not_stationary():
    params = construct(2, math.pi / 6)
    g = level_graph(params, 1.05, 400)
    pot = default_potential(params.a, 1.05)
    bumped = MomentumProfile(g.x, g.y + 0.01 * np.sin(np.pi * (g.x - g.x[0]) / (g.x[-1] - g.x[0])))
    assert stationarity_residual(bumped, pot, 2) > 1e-3


def test_profile_endpoints_fixed_long_run():
    b, a = 1.0, 2.0
    xs = np.linspace(b, a, 40)
    pr = MomentumProfile(xs, wavy(xs, b, a))
    pot = default_potential(a, b)
    cfg = FlowConfig(dt=1e-3)
    ends = (pr.y[0], pr.y[-1])
    for _ in range(10_000):
        pr = profile_flow_step(pr, pot, 2, cfg)
    assert abs(pr.y[0] - ends[0]) <= 1e-12 and abs(pr.y[-1] - ends[1]) <= 1e-12


def test_explicit_step_bound():
    xs = np.linspace(1.0, 2.0, 200)
    pr = MomentumProfile(xs, wavy(xs, 1.0, 2.0))
    with pytest.raises(StepUnstable):
        profile_flow_step(pr, default_potential(2.0, 1.0), 2, FlowConfig(dt=1e-2, scheme=Scheme.EXPLICIT))


def test_divergence_guard():
    xs = np.linspace(1.0, 2.0, 50)
    pr = MomentumProfile(xs, wavy(xs, 1.0, 2.0))
    cfg = FlowConfig(dt=10.0, divergence_guard=1e-6)
    with pytest.raises(StepUnstable):
        profile_flow_step(pr, default_potential(2.0, 1.0), 2, cfg)


def test_discrete_comparison():
    b, a = 1.0, 2.0
    xs = np.linspace(b, a, 120)
    base = wavy(xs, b, a)
    bump = np.sin(np.pi * (xs - b)) ** 2
    hi = MomentumProfile(xs, base + 0.05 * bump)
    lo = MomentumProfile(xs, base - 0.02 * bump)
    pot = default_potential(a, b)
    cfg = FlowConfig(dt=2e-3)
    for _ in range(400):
        hi = profile_flow_step(hi, pot, 3, cfg)
        lo = profile_flow_step(lo, pot, 3, cfg)
        assert np.all(hi.y >= lo.y - 1e-12)


def _graph_steps(N, convention):
    b, a, n = 1.0, 2.0, 2
    pot = default_potential(a, b)
    xs = np.linspace(b, a, N)
    pr = MomentumProfile(xs, wavy(xs, b, a))
    dt = 1e-6
    cfg = FlowConfig(dt=dt, scheme=Scheme.EXPLICIT, stability_constant=1e9, convention=convention)
    p1 = profile_flow_step(pr, pot, n, cfg)
    dense = np.linspace(b, a, 20 * N)
    curve = resample_arclength(np.column_stack([dense, wavy(dense, b, a)]), N)
    c1 = curve_flow_step(FlowState(curve), pot, n, FlowConfig(dt=dt, scheme=Scheme.EXPLICIT, stability_constant=1e9))
    moved = np.interp(xs, c1.curve[:, 0], c1.curve[:, 1]) - np.interp(xs, curve[:, 0], curve[:, 1])
    return float(np.abs(moved / dt - (p1.y - pr.y) / dt)[5:-5].max())


def test_curve_and_profile_steps_agree():
    errs = [_graph_steps(N, Convention.X_SQUARED_PLUS_F2) for N in (200, 400, 800)]
    assert errs[-1] < 1e-3
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_printed_denominator_disagrees():
    errs = [_graph_steps(N, Convention.X_PLUS_F2) for N in (200, 400, 800)]
    assert min(errs) > 0.05


def test_circle_shrinks():
    r0 = 1.0
    ang = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    st = FlowState(np.column_stack([3 + r0 * np.cos(ang), r0 * np.sin(ang)]), closed=True)

    def pot(x):
        return np.ones_like(np.asarray(x, dtype=float))

    cfg = FlowConfig(dt=1e-4)
    while st.t < 0.2 - 1e-12:
        st = curve_flow_step(st, pot, 1, cfg)
    centre = st.curve.mean(axis=0)
    r = np.hypot(*(st.curve - centre).T).mean()
    assert r == pytest.approx(math.sqrt(r0**2 - 2 * st.t), rel=1e-2)


def test_level_curve_stationary():
    params = construct(2, math.pi / 6)
    level = params.level_set
    b = 0.95
    ymax = 4 * max(abs(params.ap), abs(params.q), 1.0)
    br = trace_component(level, (params.a, 0.0), (b, params.a, -ymax, ymax))
    pot = default_potential(params.a, b)
    st = FlowState(resample_arclength(br.points, 400))
    V, _, _ = normal_speed(st, pot, 2)
    assert np.abs(V).max() < 2e-3
    cp = critical_point_tracker(FlowState(resample_arclength(br.points, 400)), pot, 2)
    assert abs(cp.velocity_x) < 1e-3


def test_critical_point_constructed_minimum():
    s = np.linspace(-1, 1, 201)
    xc, sc = 1.3, 0.1
    curve = np.column_stack([xc + (s - sc) ** 2, 2.0 * s])
    pot = default_potential(3.0, 1.0)
    cp = critical_point_tracker(FlowState(curve), pot, 2)
    assert cp.x == pytest.approx(xc, abs=(s[1] - s[0]) ** 2)
    assert cp.y == pytest.approx(2 * sc, abs=1e-2)


def test_multiple_critical_points():
    s = np.linspace(-1, 1, 301)
    curve = np.column_stack([1.5 + 0.3 * np.cos(3 * np.pi * s), s])
    with pytest.raises(MultipleCriticalPoints):
        critical_point_tracker(FlowState(curve), default_potential(3.0, 1.0), 2)


def test_barrier_monitor():
    xs = np.linspace(1.0, 2.0, 50)
    upper = MomentumProfile(xs, np.ones_like(xs))
    lower = MomentumProfile(xs, -np.ones_like(xs))
    inside = FlowState(np.column_stack([xs, 0.5 * np.sin(xs)]))
    outside = FlowState(np.column_stack([xs, 1.5 + 0 * xs]))
    assert barrier_monitor(inside, upper, lower)
    assert not barrier_monitor(outside, upper, lower)
    touching = FlowState(np.column_stack([xs, np.where(xs == xs[10], 1.0, 0.0)]))
    assert barrier_monitor(touching, upper, lower)


def test_self_intersection():
    curve = np.array([[0, 0], [1, 1], [1, 0], [0, 1], [0.5, 2]], dtype=float)
    assert find_self_intersection(curve) is not None
    assert find_self_intersection(np.column_stack([np.linspace(0, 1, 10), np.zeros(10)])) is None
    # a figure eight cannot be evolved
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    eight = np.column_stack([3 + np.sin(2 * t), np.sin(t)])
    with pytest.raises(SelfIntersection):
        curve_flow_step(FlowState(eight, closed=True), lambda x: np.ones_like(x), 1, FlowConfig(dt=1e-5))


def test_blow_up_guard():
    s = np.linspace(-1, 1, 101)
    curve = np.column_stack([1.5 + 0.5 * s**2, s])
    curve[50, 0] += 0.05  # a kink
    with pytest.raises(BlowUp) as info:
        curve_flow_step(FlowState(curve), default_potential(3.0, 1.0), 2, FlowConfig(curvature_guard=1.0))
    assert info.value.state is not None


@pytest.fixture(scope="module")
def short_unstable():
    params = construct(2, math.pi / 6)
    return params, unstable_limit_experiment(params, 1.05, FlowConfig(), t_max=1.0)


def test_unstable_short_run(short_unstable):
    params, rep = short_unstable
    assert rep.log[0].t == 0.0
    assert np.array_equal(rep.snapshots[0].curve, rep.initial.curve)
    assert all(r.velocity_x < 0 for r in rep.log)
    assert all(r.barrier_ok for r in rep.log)
    assert rep.xc_nonincreasing_after(0.0)
    # endpoints stay on x = a at heights 0 and a p
    first, last = rep.final.endpoints
    assert np.allclose(sorted([first[1], last[1]]), sorted([0.0, params.ap]), atol=1e-12)
    assert first[0] == pytest.approx(params.a, abs=1e-12)
    a0, a1 = rep.initial.endpoints
    assert np.array_equal(a0, first) and np.array_equal(a1, last)
    buf = io.StringIO()
    rep.write_log(buf)
    assert buf.getvalue().splitlines()[0] == ",".join(FLOW_LOG_HEADER)


def test_velocity_sign_matches_analytic(short_unstable):
    params, rep = short_unstable
    pot = default_potential(params.a, 1.05)
    cp = critical_point_tracker(rep.final, pot, 2)
    want = -np.sign(float(pot(np.array([cp.x]))[0]) * (cp.kappa + cp.xi))
    assert np.sign(cp.velocity_x) == want


def test_zero_time_report_is_initial():
    params = construct(2, math.pi / 6)
    rep = unstable_limit_experiment(params, 1.05, FlowConfig(), t_max=0.0)
    assert len(rep.log) == 1
    assert np.array_equal(rep.final.curve, rep.initial.curve)


def test_section_profiles_reach_b():
    params = construct(2, math.pi / 6)
    lower = section_profile(params, 0.95, params.ap, 200)
    upper = section_profile(params, 0.95, 0.0, 200)
    assert lower(0.95) == pytest.approx(params.q, abs=1e-9)
    assert lower.level_residual() < 1e-10 and upper.level_residual() < 1e-10
    assert upper.x_lo == 0.95 and upper.y[-1] == 0.0


def test_stable_relaxation():
    params = construct(2, math.pi / 6)
    short = stable_relaxation_experiment(params, 0.95, FlowConfig(), t_max=1.0)
    longer = stable_relaxation_experiment(params, 0.95, FlowConfig(), t_max=5.0)
    d0 = short.distances[0]
    assert short.distances[1] < d0
    assert longer.distances[1] < short.distances[1]
    speeds = [r.max_speed for r in longer.log]
    assert speeds[-1] < speeds[0]
