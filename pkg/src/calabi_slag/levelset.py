"""Level sets of F(x, y) = Im(exp(-i theta) (x + iy)^n) - c.

Tracing is done with a generic predictor-corrector continuation that
accepts any smooth function and its gradient, so the same machinery is
reused for the bundle polynomials and for synthetic test curves.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import csvio
from .errors import (
    DegenerateBranch,
    OutOfDomain,
    SeedOffLevelSet,
    SingularPoint,
    TraceFailure,
)
from .validation import check_dimension, check_finite, check_open_interval

ScalarFn = Callable[[float, float], float]
GradFn = Callable[[float, float], tuple]


class PlanePoint(NamedTuple):
    x: float
    y: float


class Window(NamedTuple):
    """Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi]."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def contains(self, x, y):
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    @property
    def diagonal(self):
        return math.hypot(self.x_hi - self.x_lo, self.y_hi - self.y_lo)


def as_window(window) -> Window:
    w = Window(*map(float, window))
    if not (w.x_lo < w.x_hi and w.y_lo < w.y_hi):
        raise ValueError(f"empty window {tuple(w)}")
    return w


@dataclass(frozen=True)
class HarmonicLevelSet:
    """The curve Im(exp(-i theta_hat) z^n) = c in the (x, y) plane."""

    n: int
    theta_hat: float
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n", check_dimension(self.n))
        object.__setattr__(
            self, "theta_hat", check_open_interval(self.theta_hat, -math.pi, math.pi, "theta_hat")
        )
        object.__setattr__(self, "c", check_finite(self.c, "c"))

    @property
    def rotation(self) -> complex:
        return cmath.exp(-1j * self.theta_hat)

    def __call__(self, x, y):
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return (self.rotation * complex(x, y) ** self.n).imag - self.c
        z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        return np.imag(self.rotation * z**self.n) - self.c

    def gradient(self, x, y):
        """(dF/dx, dF/dy); with g = n e^{-i theta} z^(n-1) these are (Im g, Re g)."""
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            g = self.n * self.rotation * complex(x, y) ** (self.n - 1)
            return g.imag, g.real
        z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        g = self.n * self.rotation * z ** (self.n - 1)
        return np.imag(g), np.real(g)

    def ray_angles(self):
        """Arguments of the 2n rays making up the zero level."""
        return np.array([(self.theta_hat + k * math.pi) / self.n for k in range(2 * self.n)])


def eval_F(level: HarmonicLevelSet, point) -> float:
    x, y = point
    return level(float(x), float(y))


def wedge_distance(level: HarmonicLevelSet, x, y):
    """Angular distance from arg(x + iy) to the nearest ray of the zero level."""
    ang = np.angle(np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float))
    rays = level.ray_angles()
    diff = np.angle(np.exp(1j * (np.asarray(ang)[..., None] - rays)))
    return np.abs(diff).min(axis=-1)


@dataclass
class TraceConfig:
    """Knobs of the continuation.

    ``singular_tol`` is the gradient norm below which tracing stops at a
    singular point.  ``on_singular`` is ``"raise"`` (default) or ``"stop"``;
    with ``"stop"`` the branch is returned and the stopping points recorded.
    """

    max_step: Optional[float] = None
    min_step_ratio: float = 1e-7
    corrector_tol: float = 1e-13
    max_corrector_iter: int = 16
    max_turn: float = 0.1
    max_grad_change: float = 0.5
    singular_tol: float = 1e-8
    seed_tol: float = 1e-6
    max_points: int = 200_000
    refine_tol: float = 1e-10
    on_singular: str = "raise"


@dataclass
class Branch:
    points: np.ndarray
    is_closed: bool = False
    vertical_tangent_points: tuple = ()
    singular_points: tuple = ()
    level: Optional[HarmonicLevelSet] = None
    max_step: float = float("nan")

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def vertical_tangents(self):
        return [PlanePoint(*self.points[i]) for i in self.vertical_tangent_points]

    def distance_to(self, point) -> float:
        return polyline_distance(self.points, point, closed=self.is_closed)

    def to_csv(self, stream):
        csvio.write_rows(stream, ("x", "y"), self.points)


def polyline_distance(points, point, closed=False) -> float:
    pts = np.asarray(points, dtype=float)
    px, py = point
    if len(pts) == 1:
        return float(math.hypot(pts[0, 0] - px, pts[0, 1] - py))
    a = pts[:-1]
    b = pts[1:]
    if closed:
        a = np.vstack([a, pts[-1:]])
        b = np.vstack([b, pts[:1]])
    d = b - a
    rel = np.array([px, py]) - a
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.where(L2 > 0, np.einsum("ij,ij->i", rel, d) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    return float(np.hypot(*(closest - np.array([px, py])).T).min())


# ---------------------------------------------------------------- tracing


def project_to_level(func: ScalarFn, grad: GradFn, x, y, cfg: TraceConfig):
    """Newton projection along the gradient; returns (x, y) or None."""
    x = float(x)
    y = float(y)
    for _ in range(cfg.max_corrector_iter):
        f = func(x, y)
        gx, gy = grad(x, y)
        g2 = gx * gx + gy * gy
        if not (g2 > 0 and math.isfinite(g2)):
            return None
        dx = f * gx / g2
        dy = f * gy / g2
        x -= dx
        y -= dy
        if math.hypot(dx, dy) <= cfg.corrector_tol * (1.0 + math.hypot(x, y)):
            return x, y
    return None


def _boundary_hit(func, grad, p, q, window: Window, cfg):
    """Point where the segment p->q leaves the window, pulled onto the curve.

    The pull-back is a one-dimensional Newton solve along the side that
    was crossed so the returned point lies exactly on the window edge.
    """
    (x0, y0), (x1, y1) = p, q
    best = 1.0
    side = None
    for idx, bound, v0, v1 in (
        (0, window.x_lo, x0, x1),
        (0, window.x_hi, x0, x1),
        (1, window.y_lo, y0, y1),
        (1, window.y_hi, y0, y1),
    ):
        if v1 != v0:
            s = (bound - v0) / (v1 - v0)
            if 0.0 <= s < best and ((v1 - bound) * (v0 - bound) <= 0):
                best = s
                side = (idx, bound)
    bx = x0 + best * (x1 - x0)
    by = y0 + best * (y1 - y0)
    if side is None:
        return bx, by
    idx, bound = side
    if idx == 0:
        t = by
        for _ in range(cfg.max_corrector_iter):
            g = grad(bound, t)[1]
            if g == 0:
                break
            step = func(bound, t) / g
            t -= step
            if abs(step) <= cfg.corrector_tol * (1 + abs(t)):
                break
        if abs(t - by) <= abs(y1 - y0) + abs(x1 - x0):
            return bound, t
        return bound, by
    t = bx
    for _ in range(cfg.max_corrector_iter):
        g = grad(t, bound)[0]
        if g == 0:
            break
        step = func(t, bound) / g
        t -= step
        if abs(step) <= cfg.corrector_tol * (1 + abs(t)):
            break
    if abs(t - bx) <= abs(y1 - y0) + abs(x1 - x0):
        return t, bound
    return bx, bound


def _march(func, grad, start, direction, window, cfg, h_max, detect_closure):
    """Walk from ``start`` along the curve; returns (points, reason)."""
    pts = [start]
    x, y = start
    tx, ty = direction
    h = h_max
    travelled = 0.0
    h_min = h_max * cfg.min_step_ratio
    while len(pts) < cfg.max_points:
        gx, gy = grad(x, y)
        gn = math.hypot(gx, gy)
        if gn < cfg.singular_tol:
            return pts, "singular"
        ux, uy = -gy / gn, gx / gn
        if ux * tx + uy * ty < 0:
            ux, uy = -ux, -uy
        while True:
            px, py = x + h * ux, y + h * uy
            proj = project_to_level(func, grad, px, py, cfg)
            ok = proj is not None
            if ok:
                nx, ny = proj
                if math.hypot(nx - px, ny - py) > 0.5 * h:
                    ok = False
                else:
                    gx2, gy2 = grad(nx, ny)
                    gn2 = math.hypot(gx2, gy2)
                    if gn2 == 0.0:
                        ok = False
                    else:
                        vx, vy = -gy2 / gn2, gx2 / gn2
                        dot = vx * ux + vy * uy
                        if dot < 0:
                            vx, vy, dot = -vx, -vy, -dot
                        turn = math.acos(min(1.0, dot))
                        if turn > cfg.max_turn or abs(gn2 / gn - 1.0) > cfg.max_grad_change:
                            ok = False
            if ok:
                break
            h *= 0.5
            if h < h_min:
                return pts, "singular"
        if not window.contains(nx, ny):
            hit = _boundary_hit(func, grad, (x, y), (nx, ny), window, cfg)
            if math.hypot(hit[0] - x, hit[1] - y) > 1e-13 * (1.0 + math.hypot(x, y)):
                pts.append(hit)
            return pts, "window"
        step = math.hypot(nx - x, ny - y)
        if detect_closure and travelled > 3 * h_max:
            sx, sy = start
            dist = math.hypot(sx - nx, sy - ny)
            if dist <= h and (sx - x) * ux + (sy - y) * uy > 0:
                return pts, "closed"
        travelled += step
        pts.append((nx, ny))
        x, y = nx, ny
        tx, ty = vx, vy
        if turn < 0.5 * cfg.max_turn:
            h = min(h * 1.5, h_max)
    raise TraceFailure(f"exceeded {cfg.max_points} points while tracing")


def _refine_vertical(func, grad, pts, i, cfg):
    """Bisection for dF/dy = 0 between samples i-1 and i+1."""
    p0 = pts[i - 1]
    p1 = pts[i + 1]

    def point_at(s):
        cx = p0[0] + s * (p1[0] - p0[0])
        cy = p0[1] + s * (p1[1] - p0[1])
        got = project_to_level(func, grad, cx, cy, cfg)
        return got if got is not None else (cx, cy)

    fy0 = grad(*p0)[1]
    fy1 = grad(*p1)[1]
    if fy0 == 0.0:
        return tuple(p0)
    if fy1 == 0.0:
        return tuple(p1)
    if fy0 * fy1 > 0:
        return tuple(pts[i])
    lo, hi = 0.0, 1.0
    while hi - lo > cfg.refine_tol:
        mid = 0.5 * (lo + hi)
        fm = grad(*point_at(mid))[1]
        if fm == 0.0:
            lo = hi = mid
            break
        if fm * fy0 > 0:
            lo = mid
        else:
            hi = mid
    return point_at(0.5 * (lo + hi))


def _find_vertical(func, grad, pts, closed, cfg, h_max=None):
    pts = [tuple(p) for p in pts]
    n = len(pts)
    found = []
    if n < 3:
        return pts, found
    rng = range(n) if closed else range(1, n - 1)
    for i in rng:
        a = pts[i - 1]
        b = pts[i]
        c = pts[(i + 1) % n]
        d0 = b[0] - a[0]
        d1 = c[0] - b[0]
        if d0 * d1 < 0:
            found.append(i)
    for i in found:
        if closed:
            ring = [pts[i - 1], pts[i], pts[(i + 1) % n]]
            pts[i] = _refine_vertical(func, grad, ring, 1, cfg)
        else:
            pts[i] = _refine_vertical(func, grad, pts, i, cfg)
    if not found or h_max is None:
        return pts, found
    # the refined point may sit up to one step away from a neighbour;
    # re-split those gaps so the step bound still holds
    marked = set(found)
    out, idx = [], []
    for i in range(n):
        if i in marked:
            idx.append(len(out))
        out.append(pts[i])
        j = (i + 1) % n
        if j == 0 and not closed:
            break
        if i in marked or j in marked:
            out[len(out):] = _fill_gap(func, grad, pts[i], pts[j], h_max, cfg)
    return out, idx


def _fill_gap(func, grad, p, q, h_max, cfg):
    gap = math.hypot(q[0] - p[0], q[1] - p[1])
    if gap <= h_max:
        return []
    k = int(math.ceil(gap / h_max))
    extra = []
    for j in range(1, k):
        t = j / k
        cx, cy = p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])
        got = project_to_level(func, grad, cx, cy, cfg)
        extra.append(got if got is not None else (cx, cy))
    return extra


def trace_curve(
    func: ScalarFn,
    grad: GradFn,
    seed,
    window,
    config: Optional[TraceConfig] = None,
    level: Optional[HarmonicLevelSet] = None,
) -> Branch:
    """Trace the connected piece of {func = 0} through ``seed`` inside ``window``."""
    cfg = config or TraceConfig()
    window = as_window(window)
    h_max = cfg.max_step if cfg.max_step is not None else window.diagonal / 400.0
    sx, sy = map(float, seed)
    if not window.contains(sx, sy):
        raise SeedOffLevelSet(f"seed {(sx, sy)} lies outside the window")
    gx, gy = grad(sx, sy)
    gn = math.hypot(gx, gy)
    if gn < cfg.singular_tol:
        raise SingularPoint("seed is a singular point", point=PlanePoint(sx, sy))
    if abs(func(sx, sy)) / gn > cfg.seed_tol:
        raise SeedOffLevelSet(f"seed {(sx, sy)} is off the level set")
    start = project_to_level(func, grad, sx, sy, cfg)
    if start is None:
        raise SeedOffLevelSet(f"corrector failed to converge at seed {(sx, sy)}")
    gx, gy = grad(*start)
    gn = math.hypot(gx, gy)
    t0 = (-gy / gn, gx / gn)

    fwd, why_f = _march(func, grad, start, t0, window, cfg, h_max, True)
    closed = why_f == "closed"
    singular = []
    if why_f == "singular":
        singular.append(PlanePoint(*fwd[-1]))
    if closed:
        pts = fwd
    else:
        back, why_b = _march(func, grad, start, (-t0[0], -t0[1]), window, cfg, h_max, False)
        if why_b == "singular":
            singular.append(PlanePoint(*back[-1]))
        pts = back[::-1] + fwd[1:]

    pts, vert = _find_vertical(func, grad, pts, closed, cfg, h_max)
    pts = np.array(pts, dtype=float)
    if vert:
        i = vert[0]
        nxt = pts[(i + 1) % len(pts)]
        prv = pts[i - 1]
        if nxt[1] < prv[1]:
            pts = pts[::-1].copy()
            vert = [len(pts) - 1 - j for j in vert]
            if closed:
                # keep index 0 as the start after reversal
                pts = np.roll(pts, 1, axis=0)
                vert = [(j + 1) % len(pts) for j in vert]
        vert = sorted(vert)
        if closed and vert[0] != 0:
            shift = vert[0]
            pts = np.roll(pts, -shift, axis=0)
            vert = sorted((j - shift) % len(pts) for j in vert)
    branch = Branch(
        pts,
        is_closed=closed,
        vertical_tangent_points=tuple(vert),
        singular_points=tuple(singular),
        level=level,
        max_step=h_max,
    )
    if singular and cfg.on_singular == "raise":
        raise SingularPoint(
            f"gradient vanishes near {tuple(singular[0])}", point=singular[0], branch=branch
        )
    return branch


def trace_component(level: HarmonicLevelSet, seed, window, config=None) -> Branch:
    """Trace the component of ``level`` through ``seed`` clipped to ``window``."""
    return trace_curve(level, level.gradient, seed, window, config, level=level)


def seed_points(func, window, lines=24):
    """Points of {func = 0} on a grid of horizontal and vertical lines."""
    from scipy.optimize import brentq

    window = as_window(window)
    seeds = []
    xs = np.linspace(window.x_lo, window.x_hi, lines + 1)
    ys = np.linspace(window.y_lo, window.y_hi, lines + 1)
    fine = 8 * lines
    for x in xs:
        grid = np.linspace(window.y_lo, window.y_hi, fine + 1)
        vals = np.array([func(x, t) for t in grid])
        for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            seeds.append((x, brentq(lambda t: func(x, t), grid[j], grid[j + 1], xtol=1e-14)))
    for y in ys:
        grid = np.linspace(window.x_lo, window.x_hi, fine + 1)
        vals = np.array([func(t, y) for t in grid])
        for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            seeds.append((brentq(lambda t: func(t, y), grid[j], grid[j + 1], xtol=1e-14), y))
    return seeds


def trace_all(level: HarmonicLevelSet, window, config=None, lines=24):
    """Trace every piece of the level set meeting ``window``, deduplicated.

    Singular points (only the origin at c = 0) split pieces; tracing stops
    there and the caller sees separate branches on each side.
    """
    cfg = config or TraceConfig()
    cfg = TraceConfig(**{**cfg.__dict__, "on_singular": "stop"})
    window = as_window(window)
    h = cfg.max_step if cfg.max_step is not None else window.diagonal / 400.0
    branches = []
    for s in seed_points(level, window, lines):
        if any(b.distance_to(s) < 0.05 * h for b in branches):
            continue
        gx, gy = level.gradient(*s)
        if math.hypot(gx, gy) < cfg.singular_tol:
            continue
        branches.append(trace_component(level, s, window, cfg))
    return branches


# ------------------------------------------------------ graphical pieces


@dataclass
class MomentumProfile:
    """A graph y = f(x) sampled at strictly increasing x.

    ``vertical_lo`` / ``vertical_hi`` mark ends where the slope blows up
    (the piece was cut at a vertical tangent).  ``level`` tags profiles
    that lie on a harmonic level set.
    """

    x: np.ndarray
    y: np.ndarray
    vertical_lo: bool = False
    vertical_hi: bool = False
    level: Optional[HarmonicLevelSet] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1 or len(self.x) < 2:
            raise ValueError("profile needs matching 1-d sample arrays of length >= 2")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("profile samples must be finite")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("profile x samples must be strictly increasing")

    @property
    def x_lo(self) -> float:
        return float(self.x[0])

    @property
    def x_hi(self) -> float:
        return float(self.x[-1])

    @property
    def samples(self):
        return np.column_stack([self.x, self.y])

    def __call__(self, x):
        return np.interp(x, self.x, self.y)

    def tangent_angles(self) -> np.ndarray:
        """arctan f' at the samples from chord directions of the sample polyline.

        Central chords are second-order accurate in arc length and stay well
        behaved next to a vertical end, where slopes in x would not.
        """
        x, y = self.x, self.y
        ang = np.empty_like(x)
        ang[1:-1] = np.arctan((y[2:] - y[:-2]) / (x[2:] - x[:-2]))
        if len(x) >= 3:
            ang[0] = np.arctan((-3 * y[0] + 4 * y[1] - y[2]) / (-3 * x[0] + 4 * x[1] - x[2]))
            ang[-1] = np.arctan((3 * y[-1] - 4 * y[-2] + y[-3]) / (3 * x[-1] - 4 * x[-2] + x[-3]))
        else:
            ang[:] = np.arctan((y[1] - y[0]) / (x[1] - x[0]))
        if self.vertical_lo:
            ang[0] = math.copysign(math.pi / 2, y[1] - y[0])
        if self.vertical_hi:
            ang[-1] = math.copysign(math.pi / 2, y[-1] - y[-2])
        return ang

    def level_residual(self) -> float:
        if self.level is None:
            raise ValueError("profile is not tagged with a level set")
        return float(np.abs(self.level(self.x, self.y)).max())

    def to_csv(self, stream):
        csvio.write_rows(stream, ("x", "y"), self.samples)


def split_graphical(branch: Branch):
    """Cut a branch at its vertical tangents into graphs over the x-axis.

    Returns ``(profiles, critical_x)``.  Each cut point is shared by the two
    pieces it separates; every other point lies in exactly one piece.
    """
    pts = branch.points
    n = len(pts)
    if n == 0:
        raise DegenerateBranch("empty branch")
    span = pts[:, 0].max() - pts[:, 0].min()
    if n < 2 or span <= 1e-12 * (1.0 + np.abs(pts[:, 0]).max()):
        raise DegenerateBranch("branch has no graphical piece")
    cuts = sorted(branch.vertical_tangent_points)
    pieces = []
    if branch.is_closed:
        if not cuts:
            raise DegenerateBranch("closed branch without vertical tangents")
        ring = np.vstack([pts, pts[:1]])
        bounds = cuts + [n]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            pieces.append((ring[lo : hi + 1], True, True))
    else:
        bounds = [0] + [c for c in cuts if 0 < c < n - 1] + [n - 1]
        for k, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
            pieces.append((pts[lo : hi + 1], k > 0, k < len(bounds) - 2))
    profiles = []
    for seg, vert_start, vert_end in pieces:
        if len(seg) < 2:
            continue
        if seg[-1, 0] < seg[0, 0]:
            seg = seg[::-1]
            vert_start, vert_end = vert_end, vert_start
        if np.any(np.diff(seg[:, 0]) <= 0):
            raise DegenerateBranch("piece between vertical tangents is not graphical")
        profiles.append(
            MomentumProfile(
                seg[:, 0].copy(),
                seg[:, 1].copy(),
                vertical_lo=vert_start,
                vertical_hi=vert_end,
                level=branch.level,
            )
        )
    if not profiles:
        raise DegenerateBranch("branch has no graphical piece")
    critical_x = [float(pts[i, 0]) for i in cuts]
    return profiles, critical_x


def lifted_angle(profile: MomentumProfile, n: int, x: float) -> float:
    """(n - 1) arctan(f/x) + arctan f' at ``x``.

    At an end flagged as vertical the slope term takes its one-sided
    limit +-pi/2.
    """
    x = float(x)
    if not profile.x_lo <= x <= profile.x_hi:
        raise OutOfDomain(f"x={x} outside [{profile.x_lo}, {profile.x_hi}]")
    f = float(profile(x))
    ang = profile.tangent_angles()
    slope_term = float(np.interp(x, profile.x, ang))
    return (n - 1) * math.atan2(f, x) + slope_term


def sample_level_profile(level: HarmonicLevelSet, xs, guess, tol=1e-14, max_iter=50) -> MomentumProfile:
    """Re-solve the level set on the abscissae ``xs`` by Newton in y.

    ``guess`` is any callable x -> y close to the wanted graph, typically a
    traced profile.  Useful to obtain level-set graphs on uniform grids.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(guess(xs), dtype=float).copy()
    for _ in range(max_iter):
        f = level(xs, ys)
        fy = level.gradient(xs, ys)[1]
        step = f / fy
        ys -= step
        if np.all(np.abs(step) <= tol * (1 + np.abs(ys))):
            break
    else:
        raise TraceFailure("Newton resampling of the level set did not converge")
    return MomentumProfile(xs, ys, level=level)
