"""Exact arithmetic in Q(beta) for a real algebraic number beta.

Used for the beta of a beta-transformation and for rotation angles.

Elements are coefficient tuples over the power basis 1, beta, ..., beta^(d-1)
with ``Fraction`` entries, reduced modulo the minimal polynomial.  Equality and
zero tests are exact; order comparisons and floors are decided from rigorous
integer enclosures of beta, refined until the answer is certain (a nonzero
algebraic number always separates from zero eventually).
"""

from fractions import Fraction
from functools import lru_cache

import mpmath


def _floor_frac(q):
    return q.numerator // q.denominator


def _ceil_frac(q):
    return -((-q.numerator) // q.denominator)


class AlgebraicReal:
    """A real root of a monic rational polynomial, isolated in ``[lo, hi]``.

    ``poly`` lists coefficients from the constant term up, leading term last.
    The polynomial is assumed irreducible over Q (all presets are).
    """

    def __init__(self, poly, lo, hi, name=None):
        poly = [Fraction(c) for c in poly]
        lead = poly[-1]
        if lead == 0:
            raise ValueError("leading coefficient must be nonzero")
        self.poly = tuple(c / lead for c in poly)
        self.degree = len(self.poly) - 1
        self.lo = Fraction(lo)
        self.hi = Fraction(hi)
        self.name = name or self._default_name()
        if self.degree < 1:
            raise ValueError("polynomial must have degree >= 1")
        if self.degree == 1:
            self.lo = self.hi = -self.poly[0]
        elif self._sign_at(self.lo) * self._sign_at(self.hi) >= 0:
            raise ValueError("isolating interval does not bracket a simple root")

    @classmethod
    def rational(cls, q):
        q = Fraction(q)
        return cls([-q, 1], q, q, name=str(q) if q.denominator != 1 else str(q.numerator))

    @classmethod
    def from_poly(cls, poly, approx, name=None):
        """Root of ``poly`` nearest to the float ``approx``."""
        with mpmath.workprec(200):
            coeffs = [mpmath.mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else mpmath.mpf(c)
                      for c in reversed([Fraction(c) for c in poly])]
            root = mpmath.findroot(lambda x: mpmath.polyval(coeffs, x), mpmath.mpf(approx))
        eps = Fraction(1, 1 << 150)
        mid = Fraction(int(mpmath.floor(root * (1 << 160))), 1 << 160)
        return cls(poly, mid - eps, mid + eps, name=name)

    def _default_name(self):
        return "root(" + ",".join(str(c) for c in self.poly) + ")"

    def __repr__(self):
        return f"AlgebraicReal({self.name})"

    def __eq__(self, other):
        return isinstance(other, AlgebraicReal) and self.poly == other.poly and \
            self.lo <= other.hi and other.lo <= self.hi

    def __hash__(self):
        return hash(self.poly)

    def __reduce__(self):
        return (_rebuild, (self.poly, self.lo, self.hi, self.name))

    @property
    def is_rational(self):
        return self.degree == 1

    @property
    def is_integer(self):
        return self.degree == 1 and self.lo.denominator == 1

    def _sign_at(self, x):
        v = Fraction(0)
        for c in reversed(self.poly):
            v = v * x + c
        return (v > 0) - (v < 0)

    # -- enclosures of beta itself ---------------------------------------

    @lru_cache(maxsize=64)
    def bounds(self, prec):
        """Integers (B_lo, B_hi) with B_lo <= beta * 2**prec <= B_hi and B_hi - B_lo <= 1."""
        scale = 1 << prec
        if self.degree == 1:
            v = self.lo * scale
            return _floor_frac(v), _ceil_frac(v)
        lo, hi = self.lo, self.hi
        s_lo = self._sign_at(lo)
        with mpmath.workprec(prec + 40):
            coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(self.poly)]
            mid = (mpmath.mpf(lo.numerator) / lo.denominator + mpmath.mpf(hi.numerator) / hi.denominator) / 2
            try:
                root = mpmath.findroot(lambda x: mpmath.polyval(coeffs, x), mid)
                guess = int(mpmath.floor(root * scale))
            except (ValueError, ZeroDivisionError):
                guess = _floor_frac(mid * scale)
        for width in (1, 4, 64, 1 << 20):
            a, b = guess - width + 1, guess + width
            fa, fb = Fraction(a, scale), Fraction(b, scale)
            if fa >= lo and fb <= hi and self._sign_at(fa) == s_lo and self._sign_at(fb) == -s_lo:
                break
        else:
            a, b = _floor_frac(lo * scale), _ceil_frac(hi * scale)
        # bisect down to adjacent integers
        while b - a > 1:
            c = (a + b) // 2
            sc = self._sign_at(Fraction(c, scale))
            if sc == 0:
                return c, c
            if sc == s_lo:
                a = c
            else:
                b = c
        return a, b

    def mpf(self, prec=113):
        lo, hi = self.bounds(prec + 8)
        with mpmath.workprec(prec):
            return +(mpmath.mpf(lo) / (1 << (prec + 8)))

    def __float__(self):
        lo, _ = self.bounds(80)
        return lo / float(1 << 80)

    # -- field elements ----------------------------------------------------

    def element(self, value):
        """Embed a rational number."""
        return (Fraction(value),) + (Fraction(0),) * (self.degree - 1)

    @property
    def one(self):
        return self.element(1)

    @property
    def zero(self):
        return self.element(0)

    @property
    def gen(self):
        if self.degree == 1:
            return (self.lo,)
        return (Fraction(0), Fraction(1)) + (Fraction(0),) * (self.degree - 2)

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def scale(self, a, q):
        q = Fraction(q)
        return tuple(x * q for x in a)

    def mul(self, a, b):
        d = self.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        # reduce using beta^d = -sum poly[k] beta^k
        for k in range(2 * d - 2, d - 1, -1):
            c = prod[k]
            if c:
                prod[k] = Fraction(0)
                for j in range(d):
                    prod[k - d + j] -= c * self.poly[j]
        return tuple(prod[:d])

    def power(self, a, n):
        result = self.one
        base = a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def inverse(self, a):
        """Multiplicative inverse by solving the linear system of multiplication by a."""
        d = self.degree
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero")
        if d == 1:
            return (1 / a[0],)
        cols = []
        basis = [tuple(Fraction(int(i == k)) for i in range(d)) for k in range(d)]
        for e in basis:
            cols.append(self.mul(a, e))
        # solve M y = 1 where M[:, k] = cols[k]
        m = [[cols[k][r] for k in range(d)] + [Fraction(int(r == 0))] for r in range(d)]
        for c in range(d):
            piv = next(r for r in range(c, d) if m[r][c] != 0)
            m[c], m[piv] = m[piv], m[c]
            pv = m[c][c]
            m[c] = [v / pv for v in m[c]]
            for r in range(d):
                if r != c and m[r][c] != 0:
                    f = m[r][c]
                    m[r] = [v - f * w for v, w in zip(m[r], m[c])]
        return tuple(m[r][d] for r in range(d))

    def is_zero(self, a):
        return not any(a)

    def elem_bounds(self, a, prec):
        """Integers (lo, hi) with lo <= value(a) * 2**prec <= hi."""
        if self.degree == 1:
            v = a[0] * (1 << prec)
            return _floor_frac(v), _ceil_frac(v)
        extra = 16 + max((abs(c.numerator).bit_length() + c.denominator.bit_length() for c in a), default=0)
        q = prec + extra
        blo, bhi = self.bounds(q)
        scale = 1 << q
        lo = hi = 0
        plo, phi = scale, scale  # beta^0 at scale q
        for k, c in enumerate(a):
            if k:
                plo = (plo * blo) >> q
                phi = -((-phi * bhi) >> q)
            if c > 0:
                lo += _floor_frac(c * plo)
                hi += _ceil_frac(c * phi)
            elif c < 0:
                lo += _floor_frac(c * phi)
                hi += _ceil_frac(c * plo)
        shift = q - prec
        return lo >> shift, -((-hi) >> shift)

    def sign(self, a):
        if self.is_zero(a):
            return 0
        prec = 64
        while True:
            lo, hi = self.elem_bounds(a, prec)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            prec *= 2

    def compare(self, a, b):
        return self.sign(self.sub(a, b))

    def floor(self, a):
        if all(c == 0 for c in a[1:]):
            return _floor_frac(a[0])
        prec = 64
        while True:
            lo, hi = self.elem_bounds(a, prec)
            if lo >> prec == hi >> prec and hi & ((1 << prec) - 1):
                return lo >> prec
            prec *= 2

    def to_mpf(self, a, prec=113):
        lo, hi = self.elem_bounds(a, prec + 8)
        with mpmath.workprec(prec):
            return +(mpmath.mpf(lo) / (1 << (prec + 8)))

    def to_float(self, a):
        lo, _ = self.elem_bounds(a, 80)
        return lo / float(1 << 80)


def _rebuild(poly, lo, hi, name):
    return AlgebraicReal(poly, lo, hi, name)


GOLDEN = AlgebraicReal([-1, -1, 1], Fraction(3, 2), Fraction(17, 10), name="golden")
TRIBONACCI = AlgebraicReal([-1, -1, -1, 1], Fraction(18, 10), Fraction(19, 10), name="tribonacci")


def quadratic(k, l):
    """Positive root of beta^2 - k beta - l = 0."""
    disc = k * k + 4 * l
    approx = (k + disc ** 0.5) / 2
    return AlgebraicReal([-l, -k, 1], Fraction(approx) - Fraction(1, 1000), Fraction(approx) + Fraction(1, 1000),
                         name=f"quad:{k},{l}")
GOLDEN_ALPHA = AlgebraicReal([-1, 1, 1], Fraction(6, 10), Fraction(65, 100), name="golden")
