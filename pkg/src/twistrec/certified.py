"""Rigorous enclosures of points of [0, 1] (or the real line, for IFS hulls).

A point is carried as an integer interval ``[lo, hi]`` at scale ``2**-prec``;
the true value lies in ``[lo / 2**prec, hi / 2**prec]``.  Integer endpoints
make every rounding step explicit (floor on the way down, ceil on the way up),
so enclosure soundness does not rest on a floating-point rounding mode.
"""

from dataclasses import dataclass
from fractions import Fraction

import mpmath


def floor_div(a, b):
    return a // b


def ceil_div(a, b):
    return -((-a) // b)


def ceil_shift(a, s):
    """ceil(a / 2**s) for s >= 0."""
    return -((-a) >> s)


@dataclass(frozen=True)
class CertifiedPoint:
    lo: int
    hi: int
    prec_bits: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("empty enclosure")

    @classmethod
    def exact(cls, value, prec):
        """Tightest enclosure of a rational (or int/float/str) value."""
        q = Fraction(value)
        v = q * (1 << prec)
        return cls(floor_div(v.numerator, v.denominator), ceil_div(v.numerator, v.denominator), prec)

    @classmethod
    def from_mpf(cls, x, prec, slack=2):
        """Enclosure of an mpmath value assumed accurate to well below 2**-prec."""
        m = mpmath.mpf(x) * (1 << prec)
        c = int(mpmath.floor(m))
        return cls(c - slack, c + 1 + slack, prec)

    @property
    def scale(self):
        return 1 << self.prec_bits

    @property
    def mid(self):
        return Fraction(self.lo + self.hi, 2 << self.prec_bits)

    @property
    def rad(self):
        return Fraction(self.hi - self.lo, 2 << self.prec_bits)

    @property
    def width_ulps(self):
        return self.hi - self.lo

    def lower(self):
        return Fraction(self.lo, self.scale)

    def upper(self):
        return Fraction(self.hi, self.scale)

    def __float__(self):
        return (self.lo + self.hi) / 2.0 / float(self.scale) if self.prec_bits < 1000 \
            else float(self.mid)

    def to_prec(self, prec):
        """Re-express at another scale (outward rounding when coarsening)."""
        if prec == self.prec_bits:
            return self
        if prec > self.prec_bits:
            s = prec - self.prec_bits
            return CertifiedPoint(self.lo << s, self.hi << s, prec)
        s = self.prec_bits - prec
        return CertifiedPoint(self.lo >> s, ceil_shift(self.hi, s), prec)

    def contains(self, value):
        q = Fraction(value)
        return self.lower() <= q <= self.upper()

    def overlaps(self, other):
        p = max(self.prec_bits, other.prec_bits)
        a, b = self.to_prec(p), other.to_prec(p)
        return a.lo <= b.hi and b.lo <= a.hi


def interval_distance(alo, ahi, blo, bhi):
    """Enclosure [dlo, dhi] of |a - b| for a in [alo, ahi], b in [blo, bhi] (same scale)."""
    dlo = max(0, alo - bhi, blo - ahi)
    dhi = max(ahi - blo, bhi - alo)
    return dlo, dhi


def circle_distance(alo, ahi, blo, bhi, one):
    """Enclosure of the distance on R/Z; ``one`` is 1 at the working scale (even)."""
    tlo, thi = alo - bhi, ahi - blo
    half = one // 2
    if thi - tlo >= one:
        return 0, half
    k = tlo // one
    tlo -= k * one
    thi -= k * one

    def norm(t):
        t %= one
        return min(t, one - t)

    lo = min(norm(tlo), norm(thi))
    hi = max(norm(tlo), norm(thi))
    if tlo == 0 or thi >= one:
        lo = 0
    if tlo <= half <= thi or tlo <= one + half <= thi:
        hi = half
    return lo, hi
