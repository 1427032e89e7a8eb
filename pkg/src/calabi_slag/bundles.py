"""Split Fano bundles: the polynomial P and its vertical-tangent branch.

P(z) = integral from 0 to z of (xi + s)^m s^r ds, and the relevant curves
are components of Im(e^{-i theta} P(x + iy)) = 0 through the origin.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from math import comb
from typing import Optional

import numpy as np

from .errors import BranchEscapesWindow, OutOfDomain
from .levelset import MomentumProfile, TraceConfig, trace_curve
from .rational import nearest_rational
from .validation import check_integer, check_positive


@dataclass(frozen=True)
class BundleParams:
    r: int
    m: int
    xi: complex
    b: float
    theta_hat: float = 0.0

    def __post_init__(self):
        check_integer(self.r, "r", minimum=0)
        check_integer(self.m, "m", minimum=1)
        object.__setattr__(self, "xi", complex(self.xi))
        if not self.xi.real > 0:
            raise ValueError(f"Re xi must be positive, got {self.xi}")
        check_positive(self.b, "b")

    @property
    def psi(self) -> float:
        return cmath.phase(self.xi)

    @property
    def is_fano(self) -> bool:
        return self.r < self.m

    @property
    def even_case(self) -> bool:
        """r + 2 even, the parity under which the monotonicity argument runs."""
        return self.r % 2 == 0

    def with_theta(self, theta):
        return replace(self, theta_hat=float(theta))


class PolyP:
    """Coefficients of P, lowest degree first (the constant term is 0)."""

    def __init__(self, xi: complex, m: int, r: int):
        self.xi = complex(xi)
        self.m = check_integer(m, "m", minimum=1)
        self.r = check_integer(r, "r", minimum=0)
        coeffs = np.zeros(m + r + 2, dtype=complex)
        for j in range(m + 1):
            k = j + r + 1
            coeffs[k] = comb(m, j) * self.xi ** (m - j) / k
        self.coefficients = coeffs
        self._deriv = np.array([k * coeffs[k] for k in range(1, len(coeffs))])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)

    def derivative(self, z):
        return np.polynomial.polynomial.polyval(z, self._deriv)

    def level_functions(self, theta_hat: float):
        """Scalar F(x, y) = Im(e^{-i theta} P) and its gradient."""
        rot = cmath.exp(-1j * theta_hat)
        c = [complex(v) for v in self.coefficients]
        d = [complex(v) for v in self._deriv]

        def horner(cs, z):
            acc = 0j
            for v in reversed(cs):
                acc = acc * z + v
            return acc

        def func(x, y):
            return (rot * horner(c, complex(x, y))).imag

        def grad(x, y):
            g = rot * horner(d, complex(x, y))
            return g.imag, g.real

        return func, grad


def poly_P(xi: complex, m: int, r: int) -> PolyP:
    return PolyP(xi, m, r)


def vertical_branch_thetas(m: int, r: int, psi: float):
    """Phases theta = m psi + (r + 1) pi/2 mod pi, as representatives in (-pi, pi].

    The first entry is the representative in [0, pi), the default choice.
    """
    t = math.fmod(m * psi + (r + 1) * math.pi / 2, math.pi)
    if t < 0:
        t += math.pi
    if t >= math.pi:
        t -= math.pi
    return (t, t - math.pi) if t > 0 else (0.0, math.pi)


def select_theta(params: BundleParams) -> BundleParams:
    return params.with_theta(vertical_branch_thetas(params.m, params.r, params.psi)[0])


def rescale_to_unit(params: BundleParams) -> BundleParams:
    """Substitute z = xi_1 z~: xi becomes 1 + i eta and the interval [0, b / xi_1]."""
    x1 = params.xi.real
    return replace(params, xi=complex(1.0, params.xi.imag / x1), b=params.b / x1)


def rescale_from_unit(unit: BundleParams, xi1: float) -> BundleParams:
    return replace(unit, xi=complex(xi1, unit.xi.imag * xi1), b=unit.b * xi1)


def _vertical_seeds(func, grad, delta):
    """Points of the level near (0, +-delta) found by Newton in x."""
    seeds = []
    for y in (delta, -delta):
        x = 0.0
        for _ in range(60):
            gx = grad(x, y)[0]
            if gx == 0:
                break
            step = func(x, y) / gx
            x -= step
            if abs(step) < 1e-17:
                break
        seeds.append((x, y))
    return seeds


@dataclass
class VerticalBranch:
    upper: np.ndarray
    lower: np.ndarray
    q: float
    q_prime: float
    params: BundleParams

    def profiles(self):
        """Graphs over [0, b] of the two halves, each with a vertical end at 0."""
        out = []
        for half in (self.upper, self.lower):
            pts = half[np.argsort(half[:, 0])]
            keep = np.concatenate([[True], np.diff(pts[:, 0]) > 0])
            pts = pts[keep]
            out.append(MomentumProfile(pts[:, 0], pts[:, 1], vertical_lo=True))
        return tuple(out)


def trace_vertical_branch(params: BundleParams, window=None, config: Optional[TraceConfig] = None):
    """Trace the branch through 0 with vertical tangent up to the line x = b."""
    poly = PolyP(params.xi, params.m, params.r)
    func, grad = poly.level_functions(params.theta_hat)
    b = params.b
    if window is None:
        span = 10.0 * max(b, abs(params.xi), 1.0)
        window = (-b, b, -span, span)
    cfg = config or TraceConfig()
    cfg = TraceConfig(**{**cfg.__dict__, "on_singular": "stop", "singular_tol": 1e-13})
    if cfg.max_step is None:
        cfg.max_step = b / 200.0
    delta = b * 1e-3
    halves = []
    for sx, sy in _vertical_seeds(func, grad, delta):
        if abs(sx) > 10 * delta:
            raise BranchEscapesWindow("no vertical branch through 0 for this phase")
        branch = trace_curve(func, grad, (sx, sy), window, cfg)
        pts = branch.points

        def on_side(e):
            return abs(e[0] - b) <= 1e-9 * max(1.0, b) and e[1] * sy > 0

        # for r = 0 the origin is regular and one trace reaches x = b twice
        if on_side(pts[-1]):
            far = pts
        elif on_side(pts[0]):
            far = pts[::-1]
        else:
            raise BranchEscapesWindow(f"branch from {(sx, sy)} leaves the window before x = b")
        # keep the part running from the seed towards x = b
        k = int(np.argmin(np.hypot(far[:, 0] - sx, far[:, 1] - sy)))
        part = far[k:]
        # a regular origin may leave a near-origin point on the other side
        lead = 0
        while lead < len(part) - 1 and part[lead, 1] * sy <= 0:
            lead += 1
        part = np.vstack([[0.0, 0.0], part[lead:]])
        halves.append(part)
    up, lo = halves
    q_up = up[-1, 1]
    q_lo = lo[-1, 1]
    if q_up < q_lo:
        up, lo = lo, up
        q_up, q_lo = q_lo, q_up
    return VerticalBranch(up, lo, float(q_up), float(q_lo), params)


@dataclass(frozen=True)
class BoundaryReport:
    q: float
    q_prime: float
    q_over_xi2: object
    q_over_q_prime: object


def boundary_intersections(params: BundleParams, max_denominator: int = 10**4, window=None):
    """(q, q') where the vertical branch meets x = b, with a commensurability report."""
    vb = trace_vertical_branch(params, window)
    q, qp = vb.q, vb.q_prime
    r1 = nearest_rational(q / params.xi.imag, max_denominator) if params.xi.imag != 0 else None
    r2 = nearest_rational(q / qp, max_denominator) if qp != 0 else None
    return q, qp, BoundaryReport(q, qp, r1, r2)


def bundle_charge_arg(params: BundleParams, qL: float) -> float:
    """arg P(b + i qL); the positive volume factor of the charge is omitted."""
    poly = PolyP(params.xi, params.m, params.r)
    return cmath.phase(complex(poly(complex(params.b, qL))))


def arg_derivative_xi1(params: BundleParams, qL: float, h: float = 1e-6) -> float:
    """Central difference of xi_1 -> arg P(b + i qL) at fixed xi_2."""
    z = complex(params.b, qL)
    x1, x2 = params.xi.real, params.xi.imag
    hp = PolyP(complex(x1 + h, x2), params.m, params.r)(z)
    hm = PolyP(complex(x1 - h, x2), params.m, params.r)(z)
    return cmath.phase(complex(hp) / complex(hm)) / (2 * h)


def leading_order_derivative(params: BundleParams, qL: float) -> float:
    """xi_1-derivative of m arg(xi) + (r + 1) arg(b + i qL), i.e. -m xi_2 / |xi|^2."""
    return -params.m * params.xi.imag / abs(params.xi) ** 2


def arg_monotonicity(params: BundleParams, qL: float, h: float = 1e-6, zero_tol: float = 1e-12) -> int:
    """Sign of the xi_1-derivative of arg P(b + i qL)."""
    d = arg_derivative_xi1(params, qL, h)
    if abs(d) <= zero_tol:
        return 0
    return 1 if d > 0 else -1


SMALL_B_RATIO = 0.05
NONGENERIC_TOL = 1e-3


def in_smallness_window(params: BundleParams, ratio: float = SMALL_B_RATIO) -> bool:
    """b <= ratio |xi|, the default window for the monotonicity checks."""
    return params.b <= ratio * abs(params.xi)


def vertical_angle(params: BundleParams) -> float:
    return params.m * params.psi + (params.r + 1) * math.pi / 2


def nongeneric_distance(params: BundleParams) -> float:
    """Distance from m psi + (r + 1) pi/2 to the nearest odd multiple of pi."""
    t = vertical_angle(params) - math.pi
    return abs(t - 2 * math.pi * round(t / (2 * math.pi)))


def near_nongeneric(params: BundleParams, tol: float = NONGENERIC_TOL) -> bool:
    return nongeneric_distance(params) < tol


def negative_case(params: BundleParams) -> bool:
    """Whether m psi + (r + 1) pi/2 lies in (-pi, 0) modulo 2 pi."""
    t = math.fmod(vertical_angle(params), 2 * math.pi)
    if t < 0:
        t += 2 * math.pi
    return math.pi < t < 2 * math.pi


@dataclass(frozen=True)
class MonotonicityRecord:
    q: float
    q_prime: float
    sign_q: int
    sign_q_prime: int
    d_q: float
    d_q_prime: float
    leading_q: float
    leading_q_prime: float

    @property
    def plus_minus_pattern(self) -> bool:
        return self.sign_q == 1 and self.sign_q_prime == -1


def monotonicity_record(params: BundleParams, h: float = 1e-6) -> MonotonicityRecord:
    q, qp, _ = boundary_intersections(params)
    return MonotonicityRecord(
        q=q,
        q_prime=qp,
        sign_q=arg_monotonicity(params, q, h),
        sign_q_prime=arg_monotonicity(params, qp, h),
        d_q=arg_derivative_xi1(params, q, h),
        d_q_prime=arg_derivative_xi1(params, qp, h),
        leading_q=leading_order_derivative(params, q),
        leading_q_prime=leading_order_derivative(params, qp),
    )


def lifted_angle_bundle(profile: MomentumProfile, params: BundleParams, x: float) -> float:
    """m arctan((xi_2 + f)/(xi_1 + x)) + r arctan(f/x) + arctan f'.

    At a vertical end sitting at the origin the middle term takes its limit
    r * (+-pi/2), with the sign of f next to the end.
    """
    x = float(x)
    if not profile.x_lo <= x <= profile.x_hi:
        raise OutOfDomain(f"x={x} outside [{profile.x_lo}, {profile.x_hi}]")
    f = float(profile(x))
    slope = float(np.interp(x, profile.x, profile.tangent_angles()))
    x1, x2 = params.xi.real, params.xi.imag
    first = math.atan((x2 + f) / (x1 + x))
    if x == 0.0:
        side = profile.y[1] if x == profile.x_lo else profile.y[-2]
        middle = math.copysign(math.pi / 2, side) if f == 0.0 else math.copysign(math.pi / 2, f)
    else:
        middle = math.atan(f / x)
    return params.m * first + params.r * middle + slope
