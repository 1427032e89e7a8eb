"""Closed-form construction data for multi-sections on the blowup of P^n.

For phase ``theta_hat`` and branch index ``m`` the level
Im(e^{-i theta} z^n) = c_m has a vertical tangent over x = 1 at height q_m,
and a_m is the unique positive x with F(a_m, 0) = 0.  The second boundary
point of the component through (a_m, 0) is (a_m, a_m p).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import csvio
from .errors import DegenerateAngle, DegenerateP, NoRoot, NonRealRoot, NotKahler
from .levelset import HarmonicLevelSet, TraceConfig, trace_component
from .rational import nearest_rational
from .validation import check_dimension, check_finite, check_integer, check_open_interval

ANGLE_TOL = 1e-12


def _branch_angle(n, theta_hat, m):
    return (theta_hat - math.pi / 2 + m * math.pi) / (n - 1)


def _check_branch(n, m):
    check_integer(m, "m")
    if not 1 - n <= m <= n - 2:
        raise ValueError(f"branch index m={m} outside [{1 - n}, {n - 2}]")


def solve_critical_data(n: int, theta_hat: float, m: int = 0):
    """Level c_m and height q_m of the vertical tangent over x = 1."""
    n = check_dimension(n)
    theta_hat = check_open_interval(theta_hat, -math.pi, math.pi, "theta_hat")
    _check_branch(n, m)
    psi = _branch_angle(n, theta_hat, m)
    cos_psi = math.cos(psi)
    if abs(cos_psi) < ANGLE_TOL:
        raise DegenerateAngle(f"cos({psi}) vanishes; level blows up")
    c = (-1) ** (m + 1) * cos_psi ** (1 - n)
    return c, math.tan(psi)


def solve_kahler_param(n: int, theta_hat: float, m: int = 0) -> float:
    """a_m = (-c_m / sin theta)^(1/n), required to exceed 1."""
    c, _ = solve_critical_data(n, theta_hat, m)
    s = math.sin(theta_hat)
    if s == 0.0:
        raise NonRealRoot("sin(theta_hat) vanishes")
    ratio = -c / s
    if ratio <= 0:
        raise NonRealRoot(f"-c/sin(theta) = {ratio} is not positive")
    a = ratio ** (1.0 / n)
    if a <= 1.0 + 1e-14:
        raise NotKahler(f"a = {a!r} <= 1 for theta_hat={theta_hat}, m={m}")
    return a


def _reduce_phase(t):
    t = math.fmod(t, math.pi)
    if t <= 0:
        t += math.pi
    return t


def theta_from_p(n: int, p: float) -> float:
    """arg(1 - (1 + ip)^n) reduced to (0, pi)."""
    n = check_dimension(n)
    p = check_finite(p, "p")
    if p == 0.0:
        raise DegenerateP("p = 0 gives an undefined argument")
    bound = math.tan(math.pi / n) if n > 2 else math.inf
    if abs(p) >= bound:
        raise ValueError(f"|p| must be below tan(pi/n) = {bound}")
    return _reduce_phase(cmath.phase(1 - (1 + 1j * p) ** n))


def p_from_theta(n: int, theta_hat: float) -> float:
    """Inverse of ``theta_from_p``, by bracketing in phi = arctan p."""
    n = check_dimension(n)
    theta_hat = check_open_interval(theta_hat, 0.0, math.pi, "theta_hat")
    if abs(theta_hat - math.pi / 2) < ANGLE_TOL:
        raise NoRoot("theta_hat = pi/2 is not attained for p != 0")
    half = math.pi / n if n > 2 else math.pi / 2
    # theta(phi) is monotone on each side of phi = 0 (decreasing on both)
    if theta_hat < math.pi / 2:
        lo, hi = -half * (1 - 1e-15), -1e-300
    else:
        lo, hi = 1e-300, half * (1 - 1e-15)

    def g(phi):
        return theta_from_p(n, math.tan(phi)) - theta_hat

    try:
        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0:
            raise NoRoot(f"no p with theta_from_p = {theta_hat}")
        phi = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except ValueError as exc:
        raise NoRoot(str(exc)) from exc
    p = math.tan(phi)
    if abs(theta_from_p(n, p) - theta_hat) > 1e-9:
        raise NoRoot(f"bisection did not converge for theta_hat={theta_hat}")
    return p


def choose_branch(n: int, theta_hat: float) -> int:
    """m = 0 if a_0 > 1, else the smallest |m| with a_m > 1 (ties to negative m)."""
    order = sorted(range(1 - n, n - 1), key=lambda m: (abs(m), m))
    for m in order:
        try:
            solve_kahler_param(n, theta_hat, m)
            return m
        except (NotKahler, NonRealRoot, DegenerateAngle):
            continue
    raise NotKahler(f"no branch gives a Kahler class for theta_hat={theta_hat}")


@dataclass(frozen=True)
class ConstructionParams:
    n: int
    m_branch: int
    theta_hat: float
    c: float
    q: float
    a: float
    p: float

    @property
    def ap(self) -> float:
        return self.a * self.p

    @property
    def ratio(self) -> float:
        """a p / q, the quantity whose rationality decides admissibility."""
        return self.ap / self.q

    @property
    def level_set(self) -> HarmonicLevelSet:
        return HarmonicLevelSet(self.n, self.theta_hat, self.c)

    def residuals(self):
        """The four defining identities, each of which should vanish."""
        rot = cmath.exp(-1j * self.theta_hat)
        n = self.n
        return (
            (rot * self.a**n).imag - self.c,
            (rot * (1 + 1j * self.q) ** n).imag - self.c,
            (n * rot * (1 + 1j * self.q) ** (n - 1)).real,
            (rot * (self.a * (1 + 1j * self.p)) ** n).imag - self.c,
        )


def construct(n: int, theta_hat: float, m: Optional[int] = None) -> ConstructionParams:
    """Solve the construction for a phase in (0, pi) minus pi/2."""
    n = check_dimension(n)
    theta_hat = check_open_interval(theta_hat, 0.0, math.pi, "theta_hat")
    if abs(theta_hat - math.pi / 2) < ANGLE_TOL:
        raise NotKahler("theta_hat = pi/2 gives a = 1, which is not Kahler")
    if m is None:
        m = choose_branch(n, theta_hat)
    c, q = solve_critical_data(n, theta_hat, m)
    a = solve_kahler_param(n, theta_hat, m)
    p = p_from_theta(n, theta_hat)
    return ConstructionParams(n=n, m_branch=m, theta_hat=theta_hat, c=c, q=q, a=a, p=p)


def construct_from_p(n: int, p: float, m: Optional[int] = None) -> ConstructionParams:
    n = check_dimension(n)
    theta = theta_from_p(n, p)
    params = construct(n, theta, m)
    return ConstructionParams(**{**params.__dict__, "p": float(p)})


def solve_for_ratio(n: int, ratio: float, sign: int = -1) -> ConstructionParams:
    """Parameters whose a p / q equals ``ratio`` on the side sign(p) = ``sign``.

    The ratio runs over (2, inf) on each side of p = 0, so ``ratio`` must
    exceed 2.  Used to produce admissible parameter sets.
    """
    n = check_dimension(n)
    if ratio <= 2:
        raise NoRoot(f"a p / q only takes values above 2, got {ratio}")
    half = math.pi / n if n > 2 else math.pi / 2

    def g(phi):
        return construct_from_p(n, math.tan(phi)).ratio - ratio

    inner = sign * half * 1e-6
    outer = sign * half * (1 - 1e-3)
    while g(outer) < 0:
        outer = sign * half - (sign * half - outer) * 0.1
        if abs(abs(outer) - half) < 1e-14:
            raise NoRoot(f"ratio {ratio} not reached")
    while g(inner) > 0:
        inner *= 0.1
        if abs(inner) < 1e-300:
            raise NoRoot(f"ratio {ratio} not reached")
    phi = brentq(g, inner, outer, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    return construct_from_p(n, math.tan(phi))


def verify_same_component(
    params: ConstructionParams, other=None, window=None, config: Optional[TraceConfig] = None
) -> bool:
    """Whether (a, 0) and ``other`` (default (a, a p)) lie on one traced component."""
    level = params.level_set
    a = params.a
    target = (a, params.ap) if other is None else tuple(map(float, other))
    if window is None:
        ymax = 2.0 * max(abs(params.ap), abs(params.q), abs(target[1]), 1.0)
        xmax = max(a, target[0]) + 1.0
        window = (min(0.5, target[0] - 0.5), xmax, -ymax, ymax)
    branch = trace_component(level, (a, 0.0), window, config)
    # chord error of the polyline is far below this; other components are
    # separated by a distance of order one
    return branch.distance_to(target) <= 0.05 * branch.max_step


@dataclass(frozen=True)
class AdmissibleScaling:
    k: float
    kq: int
    kap: int
    denominator_bound: int
    ratio: Fraction = field(default=Fraction(0))


def find_admissible_k(
    params: ConstructionParams, max_denominator: int = 10**6, tol: float = 1e-9
) -> Optional[AdmissibleScaling]:
    """Smallest k > 0 making k q and k a p integers, if a p / q is rational."""
    frac = nearest_rational(params.ratio, max_denominator, tol)
    if frac is None:
        return None
    s = frac.denominator
    r = frac.numerator
    sign = 1 if params.q > 0 else -1
    k = s / abs(params.q)
    return AdmissibleScaling(
        k=k, kq=sign * s, kap=sign * r, denominator_bound=int(max_denominator), ratio=frac
    )


@dataclass
class ScanRow:
    p: float
    theta: float
    a: float
    q: float
    ratio: float
    rational: Optional[Fraction]
    k: Optional[float]


@dataclass
class ScanReport:
    n: int
    rows: list
    diverges_at_edges: bool
    limit_near_zero: float
    vanishes_near_zero: bool

    CSV_HEADER = ("p", "theta", "a", "q", "ratio", "rational_num", "rational_den", "admissible_k")

    def to_csv(self, stream):
        out = []
        for r in self.rows:
            num = r.rational.numerator if r.rational is not None else ""
            den = r.rational.denominator if r.rational is not None else ""
            out.append((r.p, r.theta, r.a, r.q, r.ratio, num, den, "" if r.k is None else r.k))
        csvio.write_rows(stream, self.CSV_HEADER, out)


def rationality_scan(n: int, p_grid: Sequence[float], max_denominator: int = 10**6) -> ScanReport:
    """Tabulate a p / q over ``p_grid`` and check its edge behaviour.

    ``diverges_at_edges`` is true when the ratio increases monotonically over
    the outer tenth of the grid on each side.  ``limit_near_zero`` is the
    ratio at the grid point closest to p = 0.
    """
    rows = []
    for p in sorted(float(v) for v in p_grid if v != 0):
        params = construct_from_p(n, p)
        adm = find_admissible_k(params, max_denominator)
        rows.append(
            ScanRow(
                p=p,
                theta=params.theta_hat,
                a=params.a,
                q=params.q,
                ratio=params.ratio,
                rational=None if adm is None else adm.ratio,
                k=None if adm is None else adm.k,
            )
        )
    neg = [r for r in rows if r.p < 0]
    pos = [r for r in rows if r.p > 0]
    ok = True
    for side, outward in ((neg, False), (pos, True)):
        if len(side) < 2:
            continue
        cnt = max(2, len(side) // 10)
        vals = np.array([r.ratio for r in side])
        edge = vals[-cnt:] if outward else vals[:cnt][::-1]
        ok = ok and bool(np.all(np.diff(edge) > 0))
    nearest = min(rows, key=lambda r: abs(r.p)) if rows else None
    limit = nearest.ratio if nearest else float("nan")
    return ScanReport(
        n=n,
        rows=rows,
        diverges_at_edges=ok,
        limit_near_zero=limit,
        vanishes_near_zero=bool(abs(limit) < 1e-3),
    )
