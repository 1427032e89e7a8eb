"""Rational reconstruction of floating point ratios."""

from fractions import Fraction


def nearest_rational(x, max_denominator=10**6, tol=1e-9, stability=1e-4):
    """Best rational approximation of ``x`` if ``x`` plausibly is rational.

    ``Fraction.limit_denominator`` returns the best approximation with
    bounded denominator (a continued-fraction convergent or semiconvergent).
    The candidate r/s is accepted when it is within ``tol`` of ``x`` and
    ``s**2 * |x - r/s| <= stability``.  The second test rejects irrationals
    whose convergents happen to fall inside ``tol`` once ``s`` is large,
    since for those ``s**2 * |x - r/s|`` stays of order one.

    Returns a ``Fraction`` or ``None``.
    """
    exact = Fraction(float(x))
    cand = exact.limit_denominator(int(max_denominator))
    # exact arithmetic: a large-denominator convergent may round to x itself
    err = abs(exact - cand)
    if err > tol:
        return None
    if cand.denominator ** 2 * err > stability:
        return None
    return cand
