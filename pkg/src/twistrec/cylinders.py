"""Cylinders of order m, expansion constants K_J, and the beta-numeration layer.

Beta cylinders are handled by an exact state machine over Q(beta).  If the
cylinder J has order m and T^m J = [0, s), then digit i can follow iff
i < beta*s, and the child's state is min(1, beta*s - i).  The cylinder has
Lebesgue length s * beta^-m, so it is full exactly when s = 1.  Because
states are field elements, fullness is decided exactly and never needs a
tolerance.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
import math
import warnings

import mpmath

from .algebraic import AlgebraicReal
from .errors import ExplosionGuard, PrecisionExhausted, Unsupported

DEFAULT_CAP = 2_000_000
GAUSS_DIGIT_CAP = 50


@dataclass(frozen=True)
class CylinderWord:
    digits: tuple

    @property
    def order(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __len__(self):
        return len(self.digits)

    def extend(self, *more):
        return CylinderWord(self.digits + tuple(more))


@dataclass(frozen=True)
class CylinderGeom:
    """Realized cylinder [left, right).

    Endpoints are exact ``Fraction`` values when the system allows that
    (rational beta, IFS, Gauss); otherwise they are 128-bit ``mpf`` values.
    ``is_full`` is ``None`` for systems other than beta-maps.
    """

    left: object
    right: object
    k_j: object
    is_full: object = None
    mu: object = None

    @property
    def length(self):
        return self.right - self.left


# -- Parry coding ------------------------------------------------------------------

@dataclass(frozen=True)
class ParryCoding:
    """Greedy digits of 1 and the modified sequence used for admissibility.

    ``m_xi`` is the position of the last nonzero digit when the expansion of 1
    is finite, else ``None``.  ``status`` is one of ``eventually_zero``,
    ``not_eventually_zero``, ``unknown``.
    """

    xi: tuple
    m_xi: object
    status: str
    beta_name: str = ""

    def star(self, n):
        """First n digits of the modified sequence."""
        if self.m_xi is None:
            if len(self.xi) < n:
                raise ValueError(f"only {len(self.xi)} digits of xi available")
            return self.xi[:n]
        m = self.m_xi
        out = []
        for k in range(1, n + 1):
            r = k % m
            out.append(self.xi[m - 1] - 1 if r == 0 else self.xi[r - 1])
        return tuple(out)

    @property
    def xi_star(self):
        return self.star(len(self.xi))


def remainders_of_one(beta, n):
    """Exact greedy digits and remainders of 1: returns (digits, remainders).

    remainders[0] = 1 and remainders[k] = T^k(1) in the greedy sense
    (remainders[k] = beta*remainders[k-1] - digit_k); stops early at 0.
    """
    F = beta
    r = F.one
    digits, rems = [], [r]
    for _ in range(n):
        br = F.mul(F.gen, r)
        d = F.floor(br)
        r = F.sub(br, F.element(d))
        digits.append(d)
        rems.append(r)
        if F.is_zero(r):
            break
    return digits, rems


def _rational_non_integer(beta):
    return beta.is_rational and not beta.is_integer


def parry_digits(beta, n, budget=None):
    """Greedy expansion of 1 in base beta, with certified eventual-zero status."""
    if not isinstance(beta, AlgebraicReal):
        beta = AlgebraicReal.rational(beta)
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta.is_integer:
        # greedy digit of 1 is beta itself; full shift on beta symbols
        b = int(beta.lo)
        return ParryCoding(xi=(b,) + (0,) * (n - 1), m_xi=1, status="eventually_zero", beta_name=beta.name)
    budget = max(n, budget or 4 * n + 64)
    F = beta
    r = F.one
    digits = []
    seen = {r: 0}
    status = None
    m_xi = None
    k = 0
    while k < budget:
        br = F.mul(F.gen, r)
        d = F.floor(br)
        r = F.sub(br, F.element(d))
        digits.append(d)
        k += 1
        if F.is_zero(r):
            status, m_xi = "eventually_zero", k
            break
        if r in seen:
            status = "not_eventually_zero"
            # the remainder sequence is periodic from here on
            start = seen[r]
            period = digits[start:k]
            while len(digits) < n:
                digits.extend(period)
            break
        seen[r] = k
        if k >= n and _rational_non_integer(F):
            # p/q in lowest terms with q > 1: T^k(1) has denominator exactly q^k, never 0
            status = "not_eventually_zero"
            break
    if status is None:
        status = "unknown"
        warnings.warn(f"eventual-zero status of the expansion of 1 in base {F.name} not certified "
                      f"within {budget} digits; treating it as infinite", RuntimeWarning)
    if status == "eventually_zero":
        xi = tuple(digits) + (0,) * max(0, n - len(digits))
    else:
        xi = tuple(digits[:max(n, len(digits))])
    return ParryCoding(xi=xi[:max(n, m_xi or 0)], m_xi=m_xi, status=status, beta_name=F.name)


def is_admissible(word, parry):
    """Every suffix, extended by zeros, is strictly below the modified sequence."""
    w = tuple(word)
    m = len(w)
    if m == 0:
        return True
    star = parry.star(m)
    for j in range(m):
        suffix = w[j:]
        pref = star[:len(suffix)]
        if suffix > pref:
            return False
        # equality is fine: the modified sequence is never eventually zero
    return True


# -- beta state machine ----------------------------------------------------------------

class BetaMachine:
    """Transitions of the exact cylinder state machine for one beta."""

    def __init__(self, beta):
        self.F = beta
        self._trans = {}
        self.binv = beta.inverse(beta.gen)
        self._pows = [beta.one]

    def binv_pow(self, k):
        while len(self._pows) <= k:
            self._pows.append(self.F.mul(self._pows[-1], self.binv))
        return self._pows[k]

    def transitions(self, s):
        """List of (digit, next_state) for state s."""
        t = self._trans.get(s)
        if t is not None:
            return t
        F = self.F
        bs = F.mul(F.gen, s)
        fl = F.floor(bs)
        top = fl - 1 if F.is_zero(F.sub(bs, F.element(fl))) else fl
        t = []
        for i in range(top + 1):
            nxt = F.sub(bs, F.element(i))
            if F.compare(nxt, F.one) >= 0:
                nxt = F.one
            t.append((i, nxt))
        self._trans[s] = t
        return t

    def state_after(self, word):
        """State after reading ``word``, or None if the cylinder is empty."""
        s = self.F.one
        for d in word:
            for i, nxt in self.transitions(s):
                if i == d:
                    s = nxt
                    break
            else:
                return None
        return s


@lru_cache(maxsize=32)
def beta_machine(beta):
    return BetaMachine(beta)


def _beta_value(F, a):
    if F.is_rational:
        return a[0]
    return F.to_mpf(a, 128)


def _beta_geom(F, machine, left, s, m):
    bpow = machine.binv_pow(m)
    length = F.mul(s, bpow)
    right = F.add(left, length)
    if F.is_rational:
        k_j = F.lo ** m
    else:
        with mpmath.workprec(128):
            k_j = F.mpf(128) ** m
    return CylinderGeom(left=_beta_value(F, left), right=_beta_value(F, right), k_j=k_j,
                        is_full=(s == F.one))


def beta_cylinder(sys, word):
    """Geometry of a beta cylinder, or None if it is empty."""
    F = sys.param
    mach = beta_machine(F)
    s = F.one
    left = F.zero
    for k, d in enumerate(word, start=1):
        for i, nxt in mach.transitions(s):
            if i == d:
                s = nxt
                break
        else:
            return None
        if d:
            left = F.add(left, F.scale(mach.binv_pow(k), d))
    return _beta_geom(F, mach, left, s, len(word))


def count_cylinders(sys, m):
    """Number of nonempty cylinders of order m (beta-maps: dynamic programming over states)."""
    if sys.kind == "beta":
        mach = beta_machine(sys.param)
        counts = {sys.param.one: 1}
        for _ in range(m):
            nxt = {}
            for s, c in counts.items():
                for _, t in mach.transitions(s):
                    nxt[t] = nxt.get(t, 0) + c
            counts = nxt
        return sum(counts.values())
    if sys.kind == "ifs":
        return len(sys.maps) ** m
    if sys.kind == "rotation":
        return m + 1
    raise Unsupported("Gauss has infinitely many cylinders of each order")


def _guard(count, cap):
    if count > cap:
        raise ExplosionGuard(f"enumeration of {count} cylinders exceeds cap {cap}")


# -- Gauss -------------------------------------------------------------------------------

def gauss_convergents(word):
    """(p_{m-1}, q_{m-1}, p_m, q_m) for the continued fraction [0; a_1, ..., a_m]."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in word:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    return p0, q0, p1, q1


def gauss_measure(a, b):
    """Gauss measure of [a, b] as an mpf (closed form log2((1+b)/(1+a)))."""
    with mpmath.workprec(128):
        if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
            r = Fraction(1 + b) / (1 + a)
            return mpmath.log(mpmath.mpf(r.numerator) / r.denominator, 2)
        return mpmath.log((1 + mpmath.mpf(b)) / (1 + mpmath.mpf(a)), 2)


def gauss_cylinder(word):
    pm1, qm1, pm, qm = gauss_convergents(word)
    a = Fraction(pm, qm)
    b = Fraction(pm + pm1, qm + qm1)
    left, right = min(a, b), max(a, b)
    return CylinderGeom(left=left, right=right, k_j=qm * qm, mu=gauss_measure(left, right))


def gauss_tail_mass(digit_cap):
    """Gauss measure of {x : first digit > digit_cap}."""
    return float(gauss_measure(0, Fraction(1, digit_cap + 1)))


# -- IFS ----------------------------------------------------------------------------------

def ifs_weights(sys):
    """Measure weights r_i^delta; exact Fractions when all ratios agree."""
    ratios = [r for r, _ in sys.maps]
    if all(r == ratios[0] for r in ratios):
        return tuple(Fraction(1, len(ratios)) for _ in ratios)
    with mpmath.workprec(128):
        d = sys.delta
        return tuple((mpmath.mpf(r.numerator) / r.denominator) ** d for r in ratios)


def ifs_cylinder(sys, word, weights=None):
    weights = weights or ifs_weights(sys)
    h0, h1 = sys.hull
    a, b = h0, h1
    ratio = Fraction(1)
    mu = 1
    for i in reversed(word):
        r, t = sys.maps[i]
        a, b = r * a + t, r * b + t
    for i in word:
        ratio *= sys.maps[i][0]
        mu = mu * weights[i]
    return CylinderGeom(left=a, right=b, k_j=1 / ratio, mu=mu)


# -- rotation -------------------------------------------------------------------------------

def rotation_cylinders(sys, m):
    """Order-m cylinders of a rotation: gaps between the preimages of the branch boundary."""
    with mpmath.workprec(160):
        a = sys.param.mpf(160)
        cuts = sorted({mpmath.mpf(0)} | {mpmath.frac(1 - (k + 1) * a) for k in range(m)})
        cuts.append(mpmath.mpf(1))
        out = []
        for lo, hi in zip(cuts, cuts[1:]):
            x = (lo + hi) / 2
            word = []
            for _ in range(m):
                word.append(0 if x + a < 1 else 1)
                x = mpmath.frac(x + a)
            out.append((CylinderWord(tuple(word)), CylinderGeom(left=lo, right=hi, k_j=1)))
    out.sort(key=lambda wg: wg[0].digits)
    return out


# -- enumeration -----------------------------------------------------------------------------

def cylinders_of_order(sys, m, cap=DEFAULT_CAP, digit_cap=GAUSS_DIGIT_CAP):
    """Yield (CylinderWord, CylinderGeom) in lexicographic word order."""
    if m < 1:
        raise ValueError("order must be >= 1")
    if sys.kind == "beta":
        _guard(count_cylinders(sys, m), cap)
        F = sys.param
        mach = beta_machine(F)

        def walk(prefix, left, s):
            k = len(prefix)
            if k == m:
                yield CylinderWord(tuple(prefix)), _beta_geom(F, mach, left, s, m)
                return
            step = mach.binv_pow(k + 1)
            for i, nxt in mach.transitions(s):
                child = F.add(left, F.scale(step, i)) if i else left
                prefix.append(i)
                yield from walk(prefix, child, nxt)
                prefix.pop()

        yield from walk([], F.zero, F.one)
    elif sys.kind == "ifs":
        _guard(len(sys.maps) ** m, cap)
        weights = ifs_weights(sys)
        for word in product(range(len(sys.maps)), repeat=m):
            yield CylinderWord(word), ifs_cylinder(sys, word, weights)
    elif sys.kind == "gauss":
        _guard(digit_cap ** m, cap)
        for word in product(range(1, digit_cap + 1), repeat=m):
            yield CylinderWord(word), gauss_cylinder(word)
    else:
        _guard(m + 1, cap)
        yield from rotation_cylinders(sys, m)


def full_subcylinder(sys, word):
    """Extend ``word`` by zeros until the cylinder is full (beta-maps)."""
    if sys.kind != "beta":
        raise Unsupported("full subcylinders are defined for beta-maps only")
    F = sys.param
    mach = beta_machine(F)
    s = mach.state_after(tuple(word))
    if s is None:
        raise ValueError("empty cylinder")
    digits = list(word)
    limit = 10_000
    while s != F.one:
        if len(digits) - len(word) > limit:
            raise PrecisionExhausted("no full subcylinder found within the search limit")
        s = dict(mach.transitions(s))[0]
        digits.append(0)
    return CylinderWord(tuple(digits))


def kj_sum(sys, m, cap=DEFAULT_CAP, digit_cap=GAUSS_DIGIT_CAP):
    """Sum over cylinders of order m of K_J^-delta.

    Exact (``Fraction``) for integer beta and equal-ratio IFS; for Gauss the
    value is an upper bracket including a tail bound for digits above the cap.
    """
    if sys.kind == "beta":
        F = sys.param
        n = count_cylinders(sys, m)
        if F.is_rational:
            return n / F.lo ** m
        with mpmath.workprec(128):
            return n * F.mpf(128) ** (-m)
    if sys.kind == "ifs":
        _guard(len(sys.maps) ** m, cap)
        weights = ifs_weights(sys)
        # the sum factorizes: (sum_i r_i^delta)^m
        total = 0
        for word in product(range(len(sys.maps)), repeat=m):
            w = 1
            for i in word:
                w = w * weights[i]
            total += w
        return total
    if sys.kind == "gauss":
        _guard(digit_cap ** m, cap)
        s = Fraction(0)
        for word in product(range(1, digit_cap + 1), repeat=m):
            q = gauss_convergents(word)[3]
            s += Fraction(1, q * q)
        tail = 4 * m * math.log1p(1 / (digit_cap + 1))
        return float(s) + tail
    return float(m + 1)


def min_kj(sys, m, digit_cap=GAUSS_DIGIT_CAP):
    """Minimum of K_J over cylinders of order m."""
    if sys.kind == "beta":
        F = sys.param
        return F.lo ** m if F.is_rational else float(F) ** m
    if sys.kind == "ifs":
        return 1 / max(r for r, _ in sys.maps) ** m
    if sys.kind == "gauss":
        # q_m is minimized by the all-ones word: q_m = Fibonacci(m+1)
        return gauss_convergents((1,) * m)[3] ** 2
    return 1
