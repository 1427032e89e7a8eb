import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calabi_slag import csvio
from calabi_slag.errors import DegenerateBranch, OutOfDomain, SeedOffLevelSet, SingularPoint
from calabi_slag.levelset import (
    Branch,
    HarmonicLevelSet,
    MomentumProfile,
    TraceConfig,
    eval_F,
    lifted_angle,
    sample_level_profile,
    split_graphical,
    trace_all,
    trace_component,
    trace_curve,
    wedge_distance,
)

SQ2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def quarter_branch():
    level = HarmonicLevelSet(2, math.pi / 4, -SQ2)
    return trace_component(level, (SQ2, 0.0), (0.5, 3.0, -4.0, 4.0))


def test_eval_examples():
    assert eval_F(HarmonicLevelSet(2, math.pi / 2, 0.0), (1.0, 0.0)) == pytest.approx(-1.0, abs=1e-15)
    assert eval_F(HarmonicLevelSet(2, math.pi / 4, -SQ2), (1.0, -1.0)) == pytest.approx(0.0, abs=1e-14)
    level = HarmonicLevelSet(3, 0.0, 0.0)
    for x in (-2.0, 0.3, 5.0):
        assert eval_F(level, (x, 0.0)) == 0.0


def test_level_set_validation():
    with pytest.raises(ValueError):
        HarmonicLevelSet(1, 0.5, 0.0)
    with pytest.raises(ValueError):
        HarmonicLevelSet(2, math.pi, 0.0)
    with pytest.raises(ValueError):
        HarmonicLevelSet(2, 0.5, float("nan"))


def test_vectorized_matches_scalar():
    level = HarmonicLevelSet(4, 0.7, 0.3)
    xs = np.array([0.1, -1.2, 2.0])
    ys = np.array([0.5, 0.0, -0.7])
    vec = level(xs, ys)
    gx, gy = level.gradient(xs, ys)
    for i in range(3):
        assert vec[i] == pytest.approx(level(xs[i], ys[i]), abs=1e-14)
        sx, sy = level.gradient(xs[i], ys[i])
        assert (gx[i], gy[i]) == pytest.approx((sx, sy), abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 6),
    theta=st.floats(-3.1, 3.1),
    c=st.floats(-5, 5),
    x=st.floats(-2, 2),
    y=st.floats(-2, 2),
)
def test_discrete_laplacian_is_small(n, theta, c, x, y):
    level = HarmonicLevelSet(n, theta, c)
    h = 1e-3
    lap = (level(x + h, y) + level(x - h, y) + level(x, y + h) + level(x, y - h) - 4 * level(x, y)) / h**2
    assert abs(lap) <= 50 * h * h * (1 + math.hypot(x, y)) ** n + 1e-8 * (1 + math.hypot(x, y)) ** n


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 5), theta=st.floats(-3.0, 3.0), c=st.floats(-3, 3), x=st.floats(-2, 2), y=st.floats(-2, 2))
def test_gradient_matches_differences(n, theta, c, x, y):
    level = HarmonicLevelSet(n, theta, c)
    h = 1e-6
    gx, gy = level.gradient(x, y)
    fx = (level(x + h, y) - level(x - h, y)) / (2 * h)
    fy = (level(x, y + h) - level(x, y - h)) / (2 * h)
    scale = 1 + math.hypot(x, y) ** n
    assert gx == pytest.approx(fx, abs=1e-6 * scale)
    assert gy == pytest.approx(fy, abs=1e-6 * scale)


def test_trace_passes_through_critical_point(quarter_branch):
    br = quarter_branch
    assert br.distance_to((SQ2, 0.0)) < 1e-9
    assert br.distance_to((1.0, -1.0)) < 1e-9
    tangents = br.vertical_tangents()
    assert len(tangents) == 1
    assert tangents[0].x == pytest.approx(1.0, abs=1e-10)
    assert tangents[0].y == pytest.approx(-1.0, abs=1e-9)


def test_branch_invariants(quarter_branch):
    br = quarter_branch
    level = br.level
    assert np.abs(level(br.x, br.y)).max() <= 1e-11
    steps = np.hypot(*np.diff(br.points, axis=0).T)
    assert steps.max() <= br.max_step * (1 + 1e-9)
    for i in br.vertical_tangent_points:
        assert abs(level.gradient(*br.points[i])[1]) <= 1e-8
    # y increases through the vertical tangent
    i = br.vertical_tangent_points[0]
    assert br.points[i + 1, 1] > br.points[i - 1, 1]


def test_seed_errors():
    level = HarmonicLevelSet(2, math.pi / 4, -SQ2)
    with pytest.raises(SeedOffLevelSet):
        trace_component(level, (2.0, 2.0), (0.5, 3.0, -4.0, 4.0))
    with pytest.raises(SeedOffLevelSet):
        trace_component(level, (SQ2, 0.0), (2.0, 3.0, -4.0, 4.0))


def test_zero_level_is_rays():
    theta = 0.8
    level = HarmonicLevelSet(3, theta, 0.0)
    phi = theta / 3
    seed = (1.5 * math.cos(phi), 1.5 * math.sin(phi))
    with pytest.raises(SingularPoint) as info:
        trace_component(level, seed, (-3, 3, -3, 3))
    assert info.value.branch is not None
    br = trace_component(level, seed, (-3, 3, -3, 3), TraceConfig(on_singular="stop"))
    assert br.singular_points
    d = br.points / np.hypot(br.x, br.y)[:, None]
    cross = d[:, 0] * math.sin(phi) - d[:, 1] * math.cos(phi)
    assert np.abs(cross).max() < 1e-9


def test_cubic_right_component():
    level = HarmonicLevelSet(3, 1.0, 3.0)
    window = (-6.0, 6.0, -6.0, 6.0)
    branches = trace_all(level, window)
    assert len(branches) == 3
    right = max(branches, key=lambda b: b.x.mean())
    assert not right.is_closed
    # both ends approach rays of the zero level
    tail = max(len(right) // 10, 5)
    for seg in (right.points[-tail:], right.points[:tail][::-1]):
        dist = wedge_distance(level, seg[:, 0], seg[:, 1])
        r = np.hypot(seg[:, 0], seg[:, 1])
        order = np.argsort(r)
        assert np.all(np.diff(dist[order]) <= 1e-12)


def test_split_critical_branch(quarter_branch):
    profiles, critical = split_graphical(quarter_branch)
    assert critical == [pytest.approx(1.0, abs=1e-10)]
    assert len(profiles) == 2
    for pr in profiles:
        assert pr.x_lo == pytest.approx(1.0, abs=1e-10)
        assert pr.vertical_lo
    # concatenation reproduces the traced points exactly (split point shared)
    pts = {tuple(p) for p in quarter_branch.points}
    got = set()
    for pr in profiles:
        got |= {tuple(p) for p in pr.samples}
    assert got == pts
    assert sum(len(pr.x) for pr in profiles) == len(quarter_branch) + 1


def test_split_graphical_branch():
    level = HarmonicLevelSet(2, 0.3, 0.0)
    br = Branch(np.column_stack([np.linspace(1, 2, 20), np.linspace(0, 1, 20)]), level=level)
    profiles, critical = split_graphical(br)
    assert len(profiles) == 1 and critical == []


def test_split_closed_oval():
    def ellipse(x, y):
        return x * x / 4 + y * y - 1

    def grad(x, y):
        return x / 2, 2 * y

    br = trace_curve(ellipse, grad, (0.0, 1.0), (-3, 3, -2, 2))
    assert br.is_closed
    # oracle: sign changes of the x-increments along the oval
    dx = np.diff(np.vstack([br.points, br.points[:1]])[:, 0])
    s = np.sign(dx[np.abs(dx) > 1e-14])
    flips = int(np.count_nonzero(s != np.roll(s, 1)))
    assert flips == len(br.vertical_tangent_points) == 2
    profiles, critical = split_graphical(br)
    assert len(profiles) == 2
    for pr in profiles:
        assert pr.x_lo == pytest.approx(-2.0, abs=1e-9)
        assert pr.x_hi == pytest.approx(2.0, abs=1e-9)


def test_vertical_segment_degenerate():
    br = Branch(np.column_stack([np.ones(5), np.linspace(0, 1, 5)]))
    with pytest.raises(DegenerateBranch):
        split_graphical(br)


def test_lifted_angle_flat():
    pr = MomentumProfile(np.linspace(1, 2, 11), np.zeros(11))
    assert lifted_angle(pr, 3, 1.5) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(OutOfDomain):
        lifted_angle(pr, 3, 2.5)


def test_lifted_angle_constant_and_endpoint(quarter_branch):
    theta = math.pi / 4
    profiles, _ = split_graphical(quarter_branch)
    h = quarter_branch.max_step
    for pr in profiles:
        vals = np.array([lifted_angle(pr, 2, x) for x in pr.x[1:-1]])
        assert np.ptp(vals) <= 10 * h
        end = lifted_angle(pr, 2, pr.x_lo)
        if pr.y[1] < pr.y[0]:
            # descending piece: limit theta - pi
            assert end == pytest.approx(theta - math.pi, abs=1e-12)
            assert vals.mean() == pytest.approx(theta - math.pi, abs=10 * h)
        else:
            assert end == pytest.approx(theta, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(theta=st.floats(0.15, 1.4), c=st.floats(0.5, 3.0))
def test_lifted_angle_constant_on_traced_pieces(theta, c):
    level = HarmonicLevelSet(3, theta, c)
    branches = trace_all(level, (0.2, 4.0, -4.0, 4.0), lines=12)
    for br in branches:
        assert np.abs(level(br.x, br.y)).max() <= 1e-10
        for pr in split_graphical(br)[0]:
            if len(pr.x) < 5:
                continue
            vals = [lifted_angle(pr, 3, x) for x in pr.x[1:-1]]
            assert np.ptp(vals) <= 10 * br.max_step


def test_sample_level_profile_and_csv(quarter_branch):
    profiles, _ = split_graphical(quarter_branch)
    upper = max(profiles, key=lambda p: p.y.mean())
    xs = np.linspace(1.1, 2.0, 50)
    pr = sample_level_profile(quarter_branch.level, xs, upper)
    assert pr.level_residual() < 1e-12
    buf = io.StringIO()
    pr.to_csv(buf)
    buf.seek(0)
    header, rows = csvio.read_rows(buf)
    assert header == ["x", "y"]
    assert np.array_equal(np.array(rows), pr.samples)
    buf2 = io.StringIO()
    quarter_branch.to_csv(buf2)
    assert buf2.getvalue().splitlines()[0] == "x,y"


def test_profile_validation():
    with pytest.raises(ValueError):
        MomentumProfile(np.array([1.0, 1.0, 2.0]), np.zeros(3))
    with pytest.raises(ValueError):
        MomentumProfile(np.array([1.0, 2.0]), np.array([0.0, np.inf]))
