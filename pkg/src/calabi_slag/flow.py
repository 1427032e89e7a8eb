"""Momentum mean curvature flow for profiles and for parametric curves.

Profile form (x in [b, a], u'' = phi):

    df/dt = phi(x) * ( f'' / (1 + f'^2) + (n - 1)(x f' - f) / (x^2 + f^2) )

Curve form, with N the tangent rotated by +90 degrees:

    dgamma/dt = phi(x) * (kappa + (n - 1) xi) N,
    kappa = d/ds arctan(y'/x'),  xi = d/ds arctan(y/x).

phi vanishes at both ends of the interval, so boundary points never move.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from . import csvio
from .construction import ConstructionParams
from .errors import BadInterval, BlowUp, MultipleCriticalPoints, SelfIntersection, StepUnstable
from .levelset import (
    HarmonicLevelSet,
    MomentumProfile,
    TraceConfig,
    sample_level_profile,
    split_graphical,
    trace_component,
)


class Convention(enum.Enum):
    X_SQUARED_PLUS_F2 = "x2+f2"
    X_PLUS_F2 = "x+f2"


class Scheme(enum.Enum):
    SEMI_IMPLICIT = "semi-implicit"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SymplecticPotentialProfile:
    """u''(x) on [b, a]; values outside the interval are taken to be zero."""

    b: float
    a: float
    phi: Callable

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a > self.b > 0):
            raise BadInterval(f"need a > b > 0, got a={self.a}, b={self.b}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.b) & (x < self.a)
        return np.where(inside, self.phi(np.clip(x, self.b, self.a)), 0.0)

    def max_value(self, samples=401):
        return float(np.max(self(np.linspace(self.b, self.a, samples))))


def default_potential(a: float, b: float) -> SymplecticPotentialProfile:
    """phi(x) = 2 (x - b)(a - x)/(a - b), with slopes +2 and -2 at the ends."""
    if not (math.isfinite(a) and math.isfinite(b) and a > b > 0):
        raise BadInterval(f"need a > b > 0, got a={a}, b={b}")
    return SymplecticPotentialProfile(b, a, lambda x: 2.0 * (x - b) * (a - x) / (a - b))


@dataclass
class FlowConfig:
    dt: float = 1e-2
    grid: int = 200
    convention: Convention = Convention.X_SQUARED_PLUS_F2
    scheme: Scheme = Scheme.SEMI_IMPLICIT
    stability_constant: float = 0.45
    divergence_guard: float = 1.0
    curvature_guard: float = 1e3
    check_intersections: bool = True

    def check_explicit(self, h: float, max_phi: float):
        if self.scheme is Scheme.EXPLICIT and max_phi > 0:
            bound = self.stability_constant * h * h / max_phi
            if self.dt > bound:
                raise StepUnstable(f"explicit step dt={self.dt} exceeds the bound {bound:.3g}")


@dataclass
class FlowState:
    curve: np.ndarray
    t: float = 0.0
    closed: bool = False

    def __post_init__(self):
        self.curve = np.asarray(self.curve, dtype=float).reshape(-1, 2)

    @property
    def endpoints(self):
        return self.curve[0].copy(), self.curve[-1].copy()

    def spacing(self) -> float:
        seg = np.hypot(*np.diff(self._ring(), axis=0).T)
        return float(seg.mean())

    def _ring(self):
        return np.vstack([self.curve, self.curve[:1]]) if self.closed else self.curve

    def to_csv(self, stream):
        csvio.write_rows(stream, ("x", "y"), self.curve)


# ---------------------------------------------------------- finite differences


def _three_point(s, v):
    """First and second derivatives at interior nodes of a nonuniform grid."""
    h1 = s[1:-1] - s[:-2]
    h2 = s[2:] - s[1:-1]
    if np.ndim(v) == 2:
        h1 = h1[:, None]
        h2 = h2[:, None]
    vm, v0, vp = v[:-2], v[1:-1], v[2:]
    d1 = (-h2 / (h1 * (h1 + h2))) * vm + ((h2 - h1) / (h1 * h2)) * v0 + (h1 / (h2 * (h1 + h2))) * vp
    d2 = 2.0 * (vm / (h1 * (h1 + h2)) - v0 / (h1 * h2) + vp / (h2 * (h1 + h2)))
    return d1, d2


def _denominator(x, f, convention):
    if convention is Convention.X_PLUS_F2:
        return x + f * f
    return x * x + f * f


def profile_rhs(x, f, pot, n, convention=Convention.X_SQUARED_PLUS_F2):
    """Right side of the profile flow at interior samples (zeros at the ends)."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    d1, d2 = _three_point(x, f)
    xi = x[1:-1]
    fi = f[1:-1]
    out = np.zeros_like(f)
    out[1:-1] = pot(xi) * (
        d2 / (1.0 + d1 * d1) + (n - 1) * (xi * d1 - fi) / _denominator(xi, fi, convention)
    )
    return out


def stationarity_residual(profile: MomentumProfile, pot, n, convention=Convention.X_SQUARED_PLUS_F2):
    return float(np.abs(profile_rhs(profile.x, profile.y, pot, n, convention)).max())


def profile_flow_step(profile: MomentumProfile, pot, n, cfg: FlowConfig) -> MomentumProfile:
    """Advance a graph by one time step; the end values are held fixed."""
    x = profile.x
    f = profile.y
    h = float(np.min(np.diff(x)))
    phi = pot(x)
    cfg.check_explicit(h, float(np.max(phi)))
    if cfg.scheme is Scheme.EXPLICIT:
        new = f + cfg.dt * profile_rhs(x, f, pot, n, cfg.convention)
    else:
        d1, _ = _three_point(x, f)
        xi, fi = x[1:-1], f[1:-1]
        w = cfg.dt * phi[1:-1] / (1.0 + d1 * d1)
        h1 = xi - x[:-2]
        h2 = x[2:] - xi
        lower = -w * 2.0 / (h1 * (h1 + h2))
        diag = 1.0 + w * 2.0 / (h1 * h2)
        upper = -w * 2.0 / (h2 * (h1 + h2))
        rhs = fi + cfg.dt * phi[1:-1] * (n - 1) * (xi * d1 - fi) / _denominator(xi, fi, cfg.convention)
        rhs[0] -= lower[0] * f[0]
        rhs[-1] -= upper[-1] * f[-1]
        ab = np.zeros((3, len(xi)))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        new = f.copy()
        new[1:-1] = solve_banded((1, 1), ab, rhs)
    jump = np.abs(new - f).max()
    if not np.all(np.isfinite(new)) or jump > cfg.divergence_guard:
        raise StepUnstable(f"profile update of size {jump} exceeds the divergence guard")
    return MomentumProfile(x.copy(), new, profile.vertical_lo, profile.vertical_hi)


# ---------------------------------------------------------------- curves


def arclength(curve, closed=False):
    pts = np.vstack([curve, curve[:1]]) if closed else curve
    return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])


def resample_arclength(curve, count, closed=False):
    """Cubic-spline reparametrisation at equal arc-length spacing."""
    curve = np.asarray(curve, dtype=float)
    s = arclength(curve, closed)
    if closed:
        pts = np.vstack([curve, curve[:1]])
        spline = CubicSpline(s, pts, bc_type="periodic")
        t = np.linspace(0.0, s[-1], count + 1)[:-1]
        return spline(t)
    spline = CubicSpline(s, curve)
    t = np.linspace(0.0, s[-1], count)
    out = spline(t)
    out[0] = curve[0]
    out[-1] = curve[-1]
    return out


def curve_geometry(curve, closed=False):
    """Unit normals, curvature and the angular term xi at every node.

    For open curves the two end nodes get zero curvature and xi (they do
    not move anyway).
    """
    curve = np.asarray(curve, dtype=float)
    if closed:
        ext = np.vstack([curve[-1:], curve, curve[:1]])
        s = arclength(ext)
        d1, d2 = _three_point(s, ext)
        mid = slice(None)
        x, y = curve[:, 0], curve[:, 1]
    else:
        s = arclength(curve)
        d1, d2 = _three_point(s, curve)
        x, y = curve[1:-1, 0], curve[1:-1, 1]
    xp, yp = d1[:, 0], d1[:, 1]
    xpp, ypp = d2[:, 0], d2[:, 1]
    speed = np.hypot(xp, yp)
    kappa = (xp * ypp - yp * xpp) / speed**3
    xi = (x * yp - y * xp) / ((x * x + y * y) * speed)
    normal = np.column_stack([-yp, xp]) / speed[:, None]
    if closed:
        return normal, kappa, xi
    N = np.zeros_like(curve)
    K = np.zeros(len(curve))
    X = np.zeros(len(curve))
    N[1:-1] = normal
    K[1:-1] = kappa
    X[1:-1] = xi
    return N, K, X


def normal_speed(state: FlowState, pot, n):
    N, kappa, xi = curve_geometry(state.curve, state.closed)
    return pot(state.curve[:, 0]) * (kappa + (n - 1) * xi), N, kappa


def find_self_intersection(curve, closed=False):
    """Indices (i, j) of two non-adjacent crossing segments, or None."""
    pts = np.vstack([curve, curve[:1]]) if closed else np.asarray(curve)
    A = pts[:-1]
    B = pts[1:]
    m = len(A)
    if m < 4:
        return None
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    overlap = (
        (lo[:, None, 0] <= hi[None, :, 0])
        & (lo[None, :, 0] <= hi[:, None, 0])
        & (lo[:, None, 1] <= hi[None, :, 1])
        & (lo[None, :, 1] <= hi[:, None, 1])
    )
    idx = np.arange(m)
    overlap &= idx[:, None] + 1 < idx[None, :]
    if closed:
        overlap[0, m - 1] = False
    I, J = np.nonzero(overlap)
    if I.size == 0:
        return None

    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

    o1 = orient(A[I], B[I], A[J])
    o2 = orient(A[I], B[I], B[J])
    o3 = orient(A[J], B[J], A[I])
    o4 = orient(A[J], B[J], B[I])
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    if np.any(hit):
        k = int(np.argmax(hit))
        return int(I[k]), int(J[k])
    return None


def curve_flow_step(state: FlowState, pot, n, cfg: FlowConfig) -> FlowState:
    """One step of the parametric flow followed by arc-length resampling."""
    curve = state.curve
    count = len(curve)
    h = state.spacing()
    phi = pot(curve[:, 0])
    cfg.check_explicit(h, float(np.max(phi)))
    V, N, kappa = normal_speed(state, pot, n)
    if np.max(np.abs(kappa)) > cfg.curvature_guard / h:
        raise BlowUp(f"curvature {np.max(np.abs(kappa)):.3g} exceeds guard at t={state.t}", state)
    if cfg.scheme is Scheme.EXPLICIT:
        new = curve + cfg.dt * V[:, None] * N
    else:
        _, _, xi = curve_geometry(curve, state.closed)
        forcing = curve + cfg.dt * ((phi * (n - 1) * xi)[:, None] * N)
        new = _implicit_smoothing(curve, phi, forcing, cfg.dt, state.closed)
    if not np.all(np.isfinite(new)):
        raise BlowUp(f"non-finite curve at t={state.t}", state)
    new = resample_arclength(new, count, state.closed)
    if not state.closed:
        new[0] = curve[0]
        new[-1] = curve[-1]
    if cfg.check_intersections:
        hit = find_self_intersection(new, state.closed)
        if hit is not None:
            raise SelfIntersection(f"segments {hit} cross at t={state.t + cfg.dt}", hit)
    return FlowState(new, state.t + cfg.dt, state.closed)


def _implicit_smoothing(curve, phi, forcing, dt, closed):
    """Solve (I - dt phi D_ss) new = forcing, D_ss on the chord-length grid."""
    if closed:
        m = len(curve)
        ext = np.vstack([curve[-1:], curve, curve[:1]])
        s = arclength(ext)
        h1 = s[1:-1] - s[:-2]
        h2 = s[2:] - s[1:-1]
        w = dt * phi
        lower = -w * 2.0 / (h1 * (h1 + h2))
        upper = -w * 2.0 / (h2 * (h1 + h2))
        diag = 1.0 + w * 2.0 / (h1 * h2)
        rows = np.concatenate([np.arange(m)] * 3)
        cols = np.concatenate([np.arange(m), (np.arange(m) - 1) % m, (np.arange(m) + 1) % m])
        vals = np.concatenate([diag, lower, upper])
        A = sparse.csc_matrix((vals, (rows, cols)), shape=(m, m))
        return np.column_stack([spsolve(A, forcing[:, 0]), spsolve(A, forcing[:, 1])])
    s = arclength(curve)
    h1 = s[1:-1] - s[:-2]
    h2 = s[2:] - s[1:-1]
    w = dt * phi[1:-1]
    lower = -w * 2.0 / (h1 * (h1 + h2))
    upper = -w * 2.0 / (h2 * (h1 + h2))
    diag = 1.0 + w * 2.0 / (h1 * h2)
    rhs = forcing[1:-1].copy()
    rhs[0] -= lower[0] * curve[0]
    rhs[-1] -= upper[-1] * curve[-1]
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    new = curve.copy()
    new[1:-1] = solve_banded((1, 1), ab, rhs)
    return new


# --------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    y: float
    velocity_x: float
    kappa: float
    xi: float
    index: int


def critical_point_tracker(state: FlowState, pot, n) -> CriticalPoint:
    """Locate the single vertical tangent and its horizontal velocity.

    The minimiser of x along the curve is refined by quadratic fits of
    x(s) and y(s) through five neighbouring nodes.
    """
    curve = state.curve
    x = curve[:, 0]
    dx = np.diff(x)
    scale = 1e-13 * (1.0 + np.abs(x).max())
    sgn = np.sign(np.where(np.abs(dx) <= scale, 0.0, dx))
    sgn = sgn[sgn != 0]
    flips = int(np.count_nonzero(sgn[1:] != sgn[:-1]))
    if flips > 1:
        raise MultipleCriticalPoints(f"{flips} vertical tangents on the curve")
    if flips == 0:
        raise ValueError("curve has no vertical tangent")
    i = int(np.argmin(x))
    lo = max(0, i - 2)
    hi = min(len(curve), lo + 5)
    lo = max(0, hi - 5)
    s = arclength(curve[lo:hi])
    s0 = s[i - lo]
    px = np.polyfit(s - s0, curve[lo:hi, 0], 2)
    py = np.polyfit(s - s0, curve[lo:hi, 1], 2)
    ss = -px[1] / (2 * px[0]) if px[0] != 0 else 0.0
    xc = float(np.polyval(px, ss))
    yc = float(np.polyval(py, ss))
    xp = 2 * px[0] * ss + px[1]
    yp = 2 * py[0] * ss + py[1]
    xpp = 2 * px[0]
    ypp = 2 * py[0]
    speed = math.hypot(xp, yp)
    kappa = (xp * ypp - yp * xpp) / speed**3
    xi = (xc * yp - yc * xp) / ((xc * xc + yc * yc) * speed)
    nx = -yp / speed
    v = float(pot(np.array([xc]))[0]) * (kappa + (n - 1) * xi)
    return CriticalPoint(xc, yc, v * nx, kappa, xi, i)


def barrier_monitor(state: FlowState, upper: MomentumProfile, lower: MomentumProfile, tol=0.0) -> bool:
    """True when every curve point lies between the two graphs (up to ``tol``)."""
    x = state.curve[:, 0]
    y = state.curve[:, 1]
    lo_x = max(upper.x_lo, lower.x_lo)
    hi_x = min(upper.x_hi, lower.x_hi)
    if np.any(x < lo_x - tol) or np.any(x > hi_x + tol):
        return False
    xc = np.clip(x, lo_x, hi_x)
    return bool(np.all(y <= upper(xc) + tol) and np.all(y >= lower(xc) - tol))


# ----------------------------------------------------------- experiments


def _phase_mod_pi(w: complex) -> float:
    t = cmath.phase(w)
    if t >= math.pi - 1e-15:
        t -= math.pi
    return t


def section_level(n, a, b, q, y_end) -> HarmonicLevelSet:
    """The level set through (b, q) and (a, y_end)."""
    w = (b + 1j * q) ** n - (a + 1j * y_end) ** n
    theta = _phase_mod_pi(w)
    c = (cmath.exp(-1j * theta) * (b + 1j * q) ** n).imag
    return HarmonicLevelSet(n, theta, c)


def section_profile(params: ConstructionParams, b: float, y_end: float, count: int) -> MomentumProfile:
    """Graph over [b, a] of the level set through (b, q) and (a, y_end).

    It is traced from (a, y_end) and resampled on ``count`` uniform
    abscissae.  When b > 1 the graph generally misses (b, q): the traced arm
    through (a, y_end) reaches x = b at a different height.
    """
    a, q, n = params.a, params.q, params.n
    level = section_level(n, a, b, q, y_end)
    ymax = 4.0 * max(abs(params.ap), abs(q), 1.0)
    branch = trace_component(level, (a, y_end), (b, a, -ymax, ymax), TraceConfig(on_singular="stop"))
    profiles, _ = split_graphical(branch)
    home = min(profiles, key=lambda pr: abs(pr(a) - y_end) + (0 if pr.x_hi >= a - 1e-12 else 1e9))
    if home.x_lo > b + 1e-9:
        raise ValueError(f"section through (a, {y_end}) does not reach x = b")
    xs = np.linspace(b, a, count)
    out = sample_level_profile(level, xs, home)
    out.y[-1] = y_end
    return out


@dataclass
class FlowLogRow:
    t: float
    x_c: float
    y_c: float
    velocity_x: float
    max_speed: float
    barrier_ok: bool


FLOW_LOG_HEADER = ("t", "x_c", "y_c", "velocity_x", "max_speed", "barrier_ok")


@dataclass
class FlowReport:
    initial: FlowState
    final: FlowState
    log: list
    upper: Optional[MomentumProfile] = None
    lower: Optional[MomentumProfile] = None
    distances: tuple = (float("nan"), float("nan"))
    limit_point: tuple = (float("nan"), float("nan"))
    gaps_at_b: tuple = (float("nan"), float("nan"))
    snapshots: list = field(default_factory=list)
    blew_up: bool = False

    @property
    def spacing(self) -> float:
        return self.final.spacing()

    def xc_nonincreasing_after(self, t0: float, slack: float = 0.0) -> bool:
        xs = np.array([r.x_c for r in self.log if r.t >= t0])
        return bool(np.all(np.diff(xs) <= slack)) if len(xs) > 1 else True

    def write_log(self, stream):
        csvio.write_rows(
            stream,
            FLOW_LOG_HEADER,
            [(r.t, r.x_c, r.y_c, r.velocity_x, r.max_speed, r.barrier_ok) for r in self.log],
        )


def initial_interpolating_curve(lower: MomentumProfile, upper: MomentumProfile, x_tip: float, count: int):
    """A multi-section between two graphs with its vertical tangent at ``x_tip``.

    x(s) = x_tip + (a - x_tip) s^4 for s in [-1, 1] and y interpolates
    linearly in s between the graphs.  The quartic makes the tip flat, so
    the angular term dominates the curvature term there at t = 0.
    """
    a = min(lower.x_hi, upper.x_hi)
    s = np.linspace(-1.0, 1.0, 4 * count + 1)
    x = x_tip + (a - x_tip) * s**4
    lo = lower(x)
    hi = upper(x)
    y = 0.5 * (lo + hi) + 0.5 * s * (hi - lo)
    curve = np.column_stack([x, y])
    curve[0] = (a, lower.y[-1])
    curve[-1] = (a, upper.y[-1])
    return resample_arclength(curve, count)


def _piece_distances(curve, lower, upper):
    i = int(np.argmin(curve[:, 0]))
    first = curve[: i + 1]
    second = curve[i:]
    d1 = float(np.abs(first[:, 1] - lower(first[:, 0])).max())
    d2 = float(np.abs(second[:, 1] - upper(second[:, 0])).max())
    return d1, d2


def unstable_limit_experiment(
    params: ConstructionParams,
    b: float,
    cfg: Optional[FlowConfig] = None,
    t_max: float = 50.0,
    speed_tol: float = 1e-6,
    tip_fraction: float = 0.2,
    snapshot_every: int = 0,
    barrier_tol_factor: float = 1.0,
) -> FlowReport:
    """Run the curve flow from a multi-section squeezed between the section profiles.

    The lower and upper graphs are the level-set sections through (a, a p)
    and (a, 0) with boundary data (b, q).  Stops at ``t_max`` or once the
    largest normal speed drops below ``speed_tol``.
    """
    cfg = cfg or FlowConfig()
    if b <= 1.0:
        raise ValueError("the unstable experiment needs b > 1")
    pot = default_potential(params.a, b)
    count = max(cfg.grid, 50)
    lower = section_profile(params, b, params.ap, 4 * count)
    upper = section_profile(params, b, 0.0, 4 * count)
    if params.p > 0:
        lower, upper = upper, lower
    x_tip = b + tip_fraction * (params.a - b)
    curve = initial_interpolating_curve(lower, upper, x_tip, count)
    state = FlowState(curve)
    return _run(state, pot, params.n, cfg, t_max, speed_tol, lower, upper, b, params.q, snapshot_every, barrier_tol_factor)


def _run(state, pot, n, cfg, t_max, speed_tol, lower, upper, b, q, snapshot_every, barrier_tol_factor):
    initial = FlowState(state.curve.copy(), state.t, state.closed)
    log = []
    snaps = [FlowState(state.curve.copy(), state.t)]

    def record(st):
        cp = critical_point_tracker(st, pot, n)
        V, _, _ = normal_speed(st, pot, n)
        h = st.spacing()
        ok = True
        if lower is not None:
            ok = barrier_monitor(st, upper, lower, tol=barrier_tol_factor * h * h)
        log.append(FlowLogRow(st.t, cp.x, cp.y, cp.velocity_x, float(np.abs(V).max()), ok))
        return float(np.abs(V).max())

    speed = record(state)
    steps = 0
    blew = False
    try:
        while state.t < t_max - 1e-12 and speed >= speed_tol:
            state = curve_flow_step(state, pot, n, cfg)
            steps += 1
            speed = record(state)
            if snapshot_every and steps % snapshot_every == 0:
                snaps.append(FlowState(state.curve.copy(), state.t))
    except BlowUp as exc:
        blew = True
        report = FlowReport(initial, state, log, upper, lower, snapshots=snaps, blew_up=True)
        exc.report = report
        raise
    report = FlowReport(initial, state, log, upper, lower, snapshots=snaps, blew_up=blew)
    if lower is not None:
        report.distances = _piece_distances(state.curve, lower, upper)
        report.gaps_at_b = (float(lower(b) - q), float(upper(b) - q))
    last = log[-1]
    report.limit_point = (last.x_c, last.y_c)
    return report


def stable_relaxation_experiment(
    params: ConstructionParams,
    b: float,
    cfg: Optional[FlowConfig] = None,
    t_max: float = 5.0,
    amplitude: float = 0.02,
    speed_tol: float = 1e-8,
) -> FlowReport:
    """Perturb the constant-phase multi-section for b < 1 and let it relax.

    The report's ``distances`` hold the sup distance from the level set
    through (a, 0) at the start and at the end of the run.
    """
    cfg = cfg or FlowConfig()
    if b >= 1.0:
        raise ValueError("the stable experiment needs b < 1")
    pot = default_potential(params.a, b)
    level = params.level_set
    ymax = 4.0 * max(abs(params.ap), abs(params.q), 1.0)
    branch = trace_component(level, (params.a, 0.0), (b, params.a, -ymax, ymax))
    count = max(cfg.grid, 50)
    curve = resample_arclength(branch.points, count)
    s = arclength(curve)
    bump = amplitude * np.sin(np.pi * s / s[-1]) ** 2
    N, _, _ = curve_geometry(curve)
    curve = curve + bump[:, None] * N
    state = FlowState(curve)

    def level_distance(st):
        F = level(st.curve[:, 0], st.curve[:, 1])
        gx, gy = level.gradient(st.curve[:, 0], st.curve[:, 1])
        return float(np.max(np.abs(F) / np.hypot(gx, gy)))

    d0 = level_distance(state)
    report = _run(state, pot, params.n, cfg, t_max, speed_tol, None, None, b, params.q, 0, 1.0)
    report.distances = (d0, level_distance(report.final))
    return report
