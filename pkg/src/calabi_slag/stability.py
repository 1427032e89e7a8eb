"""Intersection numbers, central charges and the stability wall at b = 1.

Classes on Bl_p P^n are written h H + e E.  Top products only see
H^n = 1 and E^n = (-1)^(n-1); mixed monomials vanish.  The central charge
of a line bundle with c1 = h H + e E against w = a H - b E is

    Z = (a + i h)^n - (b - i e)^n.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from . import csvio
from .construction import ConstructionParams
from .errors import ArityMismatch, OutOfRegime, WallDivision
from .validation import check_dimension, check_finite, check_integer

WALL_TOL = 1e-10
DEFAULT_EPS = 0.05


@dataclass(frozen=True)
class DivisorClass:
    h: float = 0
    e: float = 0

    def __add__(self, other):
        return DivisorClass(self.h + other.h, self.e + other.e)

    def __sub__(self, other):
        return DivisorClass(self.h - other.h, self.e - other.e)

    def __neg__(self):
        return DivisorClass(-self.h, -self.e)

    def __mul__(self, k):
        return DivisorClass(k * self.h, k * self.e)

    __rmul__ = __mul__


H = DivisorClass(1, 0)
E = DivisorClass(0, 1)


@dataclass(frozen=True)
class KahlerClassBlowup:
    """The class a H - b E; Kahler exactly when a > b > 0."""

    a: float
    b: float

    def __post_init__(self):
        check_finite(self.a, "a")
        check_finite(self.b, "b")
        if not self.a > self.b > 0:
            raise ValueError(f"need a > b > 0, got a={self.a}, b={self.b}")

    @property
    def divisor(self) -> DivisorClass:
        return DivisorClass(self.a, -self.b)

    def scaled(self, k):
        return KahlerClassBlowup(k * self.a, k * self.b)


def intersection_product(n: int, classes: Sequence[DivisorClass]):
    """Top intersection of ``n`` divisor classes."""
    n = check_dimension(n)
    classes = list(classes)
    if len(classes) != n:
        raise ArityMismatch(f"need exactly {n} classes, got {len(classes)}")
    ph = 1
    pe = 1
    for d in classes:
        ph = ph * d.h
        pe = pe * d.e
    return ph + (-1) ** (n - 1) * pe


def _charge(n, a, b, h, e):
    return (a + 1j * h) ** n - (b - 1j * e) ** n


def central_charge(n: int, kahler: KahlerClassBlowup, L: DivisorClass) -> complex:
    n = check_dimension(n)
    return _charge(n, kahler.a, kahler.b, float(L.h), float(L.e))


def z_slope(Z: complex, tol: float = 1e-13) -> float:
    """Im Z / Re Z; a charge whose real part is negligible raises WallDivision."""
    Z = complex(Z)
    if abs(Z.real) <= tol * abs(Z) or Z == 0:
        raise WallDivision(f"charge {Z} is (almost) purely imaginary")
    return Z.imag / Z.real


def line_bundles(params: ConstructionParams, k: float = 1.0):
    """c1 of L1 = O(-k a p H + k q E) and L2 = O(k q E)."""
    return DivisorClass(-k * params.ap, k * params.q), DivisorClass(0.0, k * params.q)


def charge_b_derivative_at_wall(n: int, q: float) -> complex:
    """d/db Z at b = 1, which depends only on the E-coefficient q."""
    return -n * (1 - 1j * q) ** (n - 1)


def _slope_derivative(Z, dZ):
    return (dZ.imag * Z.real - dZ.real * Z.imag) / Z.real**2


def slope_derivative_at_wall(params: ConstructionParams):
    """(d/db lambda(L1), d/db lambda(L2)) at b = 1, in closed form."""
    n = params.n
    L1, L2 = line_bundles(params)
    dZ = charge_b_derivative_at_wall(n, params.q)
    out = []
    for L in (L1, L2):
        Z = _charge(n, params.a, 1.0, L.h, L.e)
        out.append(_slope_derivative(Z, dZ))
    return tuple(out)


def slope_derivative_fd(params: ConstructionParams, step: float = 1e-6, rtol: float = 1e-9, max_halvings: int = 30):
    """Richardson-extrapolated central differences of lambda in b at b = 1.

    Near theta = pi/2 a pole of lambda sits very close to the wall, so the
    step is halved until two successive estimates agree to ``rtol``; once
    round-off makes them drift apart again the best pair so far is used.
    """
    n = params.n

    def slope(L, b):
        Z = _charge(n, params.a, b, L.h, L.e)
        return Z.imag / Z.real

    def richardson(L, h):
        d1 = (slope(L, 1 + h) - slope(L, 1 - h)) / (2 * h)
        d2 = (slope(L, 1 + 2 * h) - slope(L, 1 - 2 * h)) / (4 * h)
        return (4 * d1 - d2) / 3

    out = []
    for L in line_bundles(params):
        h = step
        prev = richardson(L, h)
        best, best_gap = prev, math.inf
        for _ in range(max_halvings):
            h /= 2
            cur = richardson(L, h)
            gap = abs(cur - prev)
            if gap < best_gap:
                best, best_gap = cur, gap
            elif gap > 4 * best_gap:
                break
            if gap <= rtol * abs(cur):
                break
            prev = cur
        out.append(best)
    return tuple(out)


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    WALL = "Wall"

    def __str__(self):
        return self.value


def slopes_at(params: ConstructionParams, b: float):
    L1, L2 = line_bundles(params)
    kahler = KahlerClassBlowup(params.a, b)
    Z1 = central_charge(params.n, kahler, L1)
    Z2 = central_charge(params.n, kahler, L2)
    return Z1, Z2, z_slope(Z1), z_slope(Z2)


def classify_locus(
    params: ConstructionParams, b: float, eps: float = DEFAULT_EPS, wall_tol: float = WALL_TOL
) -> Verdict:
    """Stable / unstable / wall verdict from the slope inequality near b = 1.

    For p < 0 the multi-section is stable when lambda(L1) < lambda(L2); for
    p > 0 the roles of the two bundles are exchanged.
    """
    b = check_finite(b, "b")
    if abs(b - 1.0) >= eps:
        raise OutOfRegime(f"|b - 1| = {abs(b - 1.0)} is outside the window {eps}")
    _, _, lam1, lam2 = slopes_at(params, b)
    if abs(lam1 - lam2) < wall_tol:
        return Verdict.WALL
    lower, upper = (lam1, lam2) if params.p < 0 else (lam2, lam1)
    return Verdict.STABLE if lower < upper else Verdict.UNSTABLE


def phase_verdict(params: ConstructionParams, b: float, wall_tol: float = WALL_TOL) -> Verdict:
    """Same verdict read off from phases: compare arg Z of the sub with arg -Z of the other.

    For p < 0 this compares arg Z(L1) with arg Z(L2[1]) = arg(-Z(L2)).
    """
    Z1, Z2, _, _ = slopes_at(params, b)
    if params.p < 0:
        sub, quot = Z1, -Z2
    else:
        sub, quot = Z2, -Z1
    a1 = cmath.phase(sub)
    a2 = cmath.phase(quot)
    if abs(a1 - a2) < wall_tol:
        return Verdict.WALL
    return Verdict.STABLE if a1 < a2 else Verdict.UNSTABLE


WALL_SCAN_HEADER = ("b", "ReZ1", "ImZ1", "ReZ2", "ImZ2", "lambda1", "lambda2", "verdict")
BRIDGELAND_HEADER = ("ReZG1", "ImZG1", "ReZG2", "ImZG2", "ordering")


def wall_scan(params: ConstructionParams, bs: Iterable[float], eps=DEFAULT_EPS, bridgeland=False):
    """Rows of a b-scan; with ``bridgeland`` (n = 3 only) the modified charges are appended."""
    rows = []
    data = None
    for b in bs:
        Z1, Z2, lam1, lam2 = slopes_at(params, b)
        verdict = classify_locus(params, b, eps)
        row = [b, Z1.real, Z1.imag, Z2.real, Z2.imag, lam1, lam2, str(verdict)]
        if bridgeland:
            data = bridgeland_data3(params.a, b)
            L1, L2 = line_bundles(params)
            G1 = bridgeland_charge_n3(params, L1, data, b)
            G2 = bridgeland_charge_n3(params, L2, data, b)
            ordering = n3_phase_ordering(params, b).holds
            row += [G1.real, G1.imag, G2.real, G2.imag, ordering]
        rows.append(row)
    return rows


def write_wall_scan(stream, rows, bridgeland=False):
    header = WALL_SCAN_HEADER + (BRIDGELAND_HEADER if bridgeland else ())
    csvio.write_rows(stream, header, rows)


# ------------------------------------------------------------- surrogate


def chern_pairing(n: int, kahler: KahlerClassBlowup, L: DivisorClass) -> complex:
    """Integral of exp(-i w) ch(L), expanded term by term to degree n."""
    n = check_dimension(n)
    w = kahler.divisor
    total = 0j
    for j in range(n + 1):
        top = intersection_product(n, [w] * j + [L] * (n - j))
        total += (-1j) ** j / factorial(j) / factorial(n - j) * top
    return total


def surrogate_charge(n: int, kahler: KahlerClassBlowup, L: DivisorClass) -> complex:
    """-e^{i(n-2)pi/2} n! times the Chern pairing.

    This equals ``central_charge``; its argument stands in for the phase of
    the oscillatory period as the scaling k grows.
    """
    return -cmath.exp(1j * (n - 2) * math.pi / 2) * factorial(n) * chern_pairing(n, kahler, L)


# ---------------------------------------------------------------- n = 2


@dataclass(frozen=True)
class HeartMembership:
    deg1: float
    deg2: float
    shifts: dict


def heart_membership_n2(params: ConstructionParams, b: float) -> HeartMembership:
    """Degrees L_i . w and the shift putting each bundle in the tilted heart."""
    if params.n != 2:
        raise ValueError("heart membership is only decided for n = 2")
    w = KahlerClassBlowup(params.a, b).divisor
    L1, L2 = line_bundles(params)
    d1 = intersection_product(2, [L1, w])
    d2 = intersection_product(2, [L2, w])
    shifts = {"L1": 0 if d1 > 0 else 1, "L2": 0 if d2 > 0 else 1}
    return HeartMembership(d1, d2, shifts)


# ---------------------------------------------------------------- n = 3

C0 = 10 * math.sqrt(30) / 1323 - 3 / 98


@dataclass(frozen=True)
class BridgelandData3:
    C0: float
    gamma_dot_H: float
    gamma_dot_E: float


def bridgeland_data3(a: float, b: float = 1.0) -> BridgelandData3:
    """Pairings of Gamma = (H^2 + E^2)/6 + C0 w^2 with H and E."""
    return BridgelandData3(C0=C0, gamma_dot_H=1 / 6 + C0 * a * a, gamma_dot_E=1 / 6 + C0 * b * b)


def bridgeland_charge_n3(
    params: ConstructionParams, L: DivisorClass, data: BridgelandData3, b: float = 1.0, shift: int = 0
) -> complex:
    """Z(L) + Gamma . ch1(L), negated for each shift."""
    if params.n != 3:
        raise ValueError("the modified charge is defined for n = 3")
    Z = _charge(3, params.a, b, L.h, L.e) + L.h * data.gamma_dot_H + L.e * data.gamma_dot_E
    return Z * (-1) ** shift


@dataclass(frozen=True)
class PhaseOrdering:
    upper: complex
    lower: complex
    holds: bool


def n3_phase_ordering(params: ConstructionParams, b: float = 1.0) -> PhaseOrdering:
    """Whether the shifted quotient charge sits above the sub charge in the upper half plane.

    For p < 0 the pair is (Z(L2[1]), Z(L1)); for p > 0 it is (Z(L1[1]), Z(L2)).
    """
    data = bridgeland_data3(params.a, b)
    L1, L2 = line_bundles(params)
    if params.p < 0:
        up = bridgeland_charge_n3(params, L2, data, b, shift=1)
        lo = bridgeland_charge_n3(params, L1, data, b)
    else:
        up = bridgeland_charge_n3(params, L1, data, b, shift=1)
        lo = bridgeland_charge_n3(params, L2, data, b)
    holds = up.imag > 0 and lo.imag > 0 and cmath.phase(up) > cmath.phase(lo)
    return PhaseOrdering(up, lo, holds)


def n3_ordering_window(thetas: Iterable[float]):
    """Evaluate the n = 3 ordering on a grid of phases; returns [(theta, holds)]."""
    from .construction import construct

    out = []
    for t in thetas:
        out.append((float(t), n3_phase_ordering(construct(3, float(t))).holds))
    return out


# -------------------------------------------------------------- morphisms


def hom_dimension(n: int, d: int) -> int:
    """dim H^0(P^n, O(d))."""
    n = check_dimension(n, minimum=1)
    d = check_integer(d, "d")
    return comb(n + d, n) if d >= 0 else 0


def hom_degree(params: ConstructionParams, kap: int) -> int:
    """H-degree difference between the bundles; -k a p for p < 0, k a p for p > 0."""
    return -kap if params.p < 0 else kap
