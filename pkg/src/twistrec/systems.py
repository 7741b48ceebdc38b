"""Dynamical systems: beta-maps, the Gauss map, similarity IFS expanders, rotations.

All orbit arithmetic runs on integer enclosures (see ``certified``).  A
``Kernel`` bundles the per-precision constants of a system so the inner loop
only touches Python ints.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
import math

import mpmath

from .algebraic import AlgebraicReal, GOLDEN, GOLDEN_ALPHA, TRIBONACCI, quadratic
from .certified import CertifiedPoint, ceil_div, ceil_shift
from .errors import BranchStraddle, DigitOverflow, ConfigError

GAUSS_DIGIT_CAP = 1 << 53
GUARD_BITS = 64
GAUSS_START_BITS = 256


@dataclass(frozen=True)
class SystemSpec:
    """A supported system.

    ``kind`` is one of ``"beta"``, ``"gauss"``, ``"ifs"``, ``"rotation"``.
    ``param`` is the beta (beta-maps) or the angle (rotations) as an
    ``AlgebraicReal``; ``maps`` holds the IFS similarities as (ratio, translation).
    """

    kind: str
    param: AlgebraicReal = None
    maps: tuple = ()
    name: str = ""
    digit_cap: int = GAUSS_DIGIT_CAP

    def __post_init__(self):
        if self.kind not in ("beta", "gauss", "ifs", "rotation"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == "beta" and not (self.param is not None and self.param.compare(self.param.gen, self.param.one) > 0):
            raise ValueError("beta must exceed 1")
        if self.kind == "ifs":
            if len(self.maps) < 2:
                raise ValueError("an IFS needs at least two maps")
            for r, _ in self.maps:
                if not 0 < r < 1:
                    raise ValueError("IFS ratios must lie in (0, 1)")
            _check_osc(self.maps, self.hull)

    def __str__(self):
        return self.name or self.kind

    # -- basic data ------------------------------------------------------

    @property
    def beta(self):
        if self.kind != "beta":
            raise AttributeError("not a beta-map")
        return self.param

    @property
    def alpha(self):
        if self.kind != "rotation":
            raise AttributeError("not a rotation")
        return self.param

    @cached_property
    def delta(self):
        """Ahlfors dimension: 1 for interval systems, the similarity dimension for an IFS."""
        if self.kind != "ifs":
            return Fraction(1)
        ratios = [r for r, _ in self.maps]
        with mpmath.workprec(128):
            rs = [mpmath.mpf(r.numerator) / r.denominator for r in ratios]
            if all(r == ratios[0] for r in ratios):
                return mpmath.log(len(rs)) / mpmath.log(1 / rs[0])
            f = lambda d: mpmath.fsum(r ** d for r in rs) - 1
            return mpmath.findroot(f, (mpmath.mpf("1e-6"), mpmath.mpf(1)), solver="anderson")

    @property
    def delta_float(self):
        return float(self.delta)

    @property
    def branch_count(self):
        """Number of branches; ``None`` stands for countably infinite (Gauss)."""
        if self.kind == "beta":
            b = self.param
            return b.floor(b.gen) + (0 if b.is_integer else 1)
        if self.kind == "gauss":
            return None
        if self.kind == "ifs":
            return len(self.maps)
        return 2

    @cached_property
    def hull(self):
        """Convex hull of the phase space as a pair of Fractions."""
        if self.kind != "ifs":
            return Fraction(0), Fraction(1)
        fixed = [t / (1 - r) for r, t in self.maps]
        return min(fixed), max(fixed)

    @property
    def diam(self):
        a, b = self.hull
        return b - a if self.kind != "rotation" else Fraction(1, 2)

    @property
    def is_circle(self):
        return self.kind == "rotation"

    @cached_property
    def ifs_cells(self):
        """Sorted level-one cells [a_i, b_i) of an IFS with their map index."""
        h0, h1 = self.hull
        cells = [(t + r * h0, t + r * h1, i) for i, (r, t) in enumerate(self.maps)]
        return tuple(sorted(cells))

    @property
    def max_expansion(self):
        """Upper bound on the per-step expansion factor (float; Gauss is unbounded)."""
        if self.kind == "beta":
            return float(self.param)
        if self.kind == "ifs":
            return float(1 / min(r for r, _ in self.maps))
        if self.kind == "rotation":
            return 1.0
        return math.inf

    def branch_expansion(self, i):
        """Bounds (lo, hi) on |T'| over branch ``i``."""
        if self.kind == "beta":
            b = float(self.param)
            return b, b
        if self.kind == "gauss":
            return float(i * i), float((i + 1) ** 2)
        if self.kind == "ifs":
            r = self.maps[i][0]
            return float(1 / r), float(1 / r)
        return 1.0, 1.0


def _check_osc(maps, hull):
    """Open set condition with U the interior of the hull: images pairwise disjoint."""
    h0, h1 = hull
    images = sorted((t + r * h0, t + r * h1) for r, t in maps)
    for (a0, b0), (a1, b1) in zip(images, images[1:]):
        if a1 < b0:
            raise ValueError("IFS images of the hull interior overlap; open set condition witness fails")


# -- presets ----------------------------------------------------------------

def beta_system(beta, name=None):
    if not isinstance(beta, AlgebraicReal):
        beta = AlgebraicReal.rational(beta)
    return SystemSpec("beta", param=beta, name=name or f"beta:{beta.name}")


def gauss_system():
    return SystemSpec("gauss", name="gauss")


def ifs_system(maps, name=None):
    maps = tuple((Fraction(r), Fraction(t)) for r, t in maps)
    return SystemSpec("ifs", maps=maps, name=name or "ifs:" + ";".join(f"{r},{t}" for r, t in maps))


def rotation_system(alpha, name=None):
    if not isinstance(alpha, AlgebraicReal):
        alpha = AlgebraicReal.rational(alpha)
    return SystemSpec("rotation", param=alpha, name=name or f"rotation:{alpha.name}")


CANTOR3 = ((Fraction(1, 3), Fraction(0)), (Fraction(1, 3), Fraction(2, 3)))


def parse_system(text):
    """Build a system from a preset id such as ``beta:golden`` or ``ifs:cantor3``."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    try:
        if kind == "gauss" and not arg:
            return gauss_system()
        if kind == "beta":
            if arg == "golden":
                return beta_system(GOLDEN, name=text)
            if arg == "tribonacci":
                return beta_system(TRIBONACCI, name=text)
            if arg.startswith("quad:"):
                k, l = (int(v) for v in arg[5:].split(","))
                return beta_system(quadratic(k, l), name=text)
            return beta_system(Fraction(arg), name=text)
        if kind == "ifs":
            if arg == "cantor3":
                return ifs_system(CANTOR3, name=text)
            maps = []
            for part in arg.split(";"):
                r, t = part.split(",")
                maps.append((Fraction(r), Fraction(t)))
            return ifs_system(maps, name=text)
        if kind == "rotation":
            if arg == "golden":
                return rotation_system(GOLDEN_ALPHA, name=text)
            a = Fraction(arg)
            if not 0 < a < 1:
                raise ValueError("rotation angle must lie in (0, 1)")
            return rotation_system(a, name=text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError("system", f"cannot parse {text!r}: {exc}") from exc
    raise ConfigError("system", f"unknown system id {text!r}")


# -- precision policy ----------------------------------------------------------

def required_precision(sys, n):
    """Working precision (bits) for an n-step orbit under the precision policy."""
    if sys.kind == "gauss":
        return GAUSS_START_BITS
    if sys.kind == "rotation":
        return GUARD_BITS + max(1, n).bit_length() + 2
    lam = sys.max_expansion
    return math.ceil(n * math.log2(lam)) + GUARD_BITS


# -- kernels -------------------------------------------------------------------

class Kernel:
    """Per-(system, precision) stepping on integer enclosures [lo, hi] at scale 2**-prec."""

    def __init__(self, sys, prec):
        self.sys = sys
        self.prec = prec
        self.one = 1 << prec

    def step(self, lo, hi):
        raise NotImplementedError

    def branch(self, lo, hi):
        return self.step(lo, hi)[0]


class BetaKernel(Kernel):
    def __init__(self, sys, prec):
        super().__init__(sys, prec)
        self.blo, self.bhi = sys.param.bounds(prec)
        self.exact = self.blo == self.bhi
        self.int_beta = self.blo >> prec if self.exact and not self.blo & (self.one - 1) else None

    def step(self, lo, hi):
        one, p = self.one, self.prec
        if lo < 0 or hi >= one:
            raise BranchStraddle("enclosure leaves [0, 1)")
        if self.int_beta is not None:
            plo, phi = self.int_beta * lo, self.int_beta * hi
        else:
            plo = (self.blo * lo) >> p
            phi = ceil_shift(self.bhi * hi, p)
        d = plo >> p
        if phi >> p != d:
            raise BranchStraddle()
        off = d << p
        return d, plo - off, phi - off

    def power_step(self, lo, hi, n):
        """T^n by one multiply-reduce; only for integer beta."""
        one, p = self.one, self.prec
        if lo < 0 or hi >= one:
            raise BranchStraddle("enclosure leaves [0, 1)")
        m = self.int_beta ** n
        plo, phi = m * lo, m * hi
        k = plo >> p
        if phi >> p != k:
            raise BranchStraddle()
        off = k << p
        return plo - off, phi - off


class GaussKernel(Kernel):
    def __init__(self, sys, prec):
        super().__init__(sys, prec)
        self.sq = 1 << (2 * prec)
        self.cap = sys.digit_cap

    def step(self, lo, hi):
        one, p = self.one, self.prec
        if lo <= 0 or hi > one:
            raise BranchStraddle("enclosure leaves (0, 1]")
        ilo = self.sq // hi
        ihi = ceil_div(self.sq, lo)
        d = ilo >> p
        if ihi >> p != d:
            raise BranchStraddle()
        if d > self.cap:
            raise DigitOverflow(f"Gauss digit exceeds cap {self.cap}")
        off = d << p
        return d, ilo - off, ihi - off


class IfsKernel(Kernel):
    def __init__(self, sys, prec):
        super().__init__(sys, prec)
        one = self.one
        self.cells = [(a * one, b * one, i) for a, b, i in sys.ifs_cells]
        self.inv = [(1 / r, t * one) for r, t in sys.maps]

    def _cell(self, lo, hi):
        for a, b, i in self.cells:
            if lo >= a and hi < b:
                return i
            if hi >= a and lo < b:
                break
        raise BranchStraddle("enclosure not inside a single IFS cell")

    def step(self, lo, hi):
        i = self._cell(lo, hi)
        s, t = self.inv[i]
        a = (lo - t) * s
        b = (hi - t) * s
        return i, a.numerator // a.denominator, ceil_div(b.numerator, b.denominator)


class RotationKernel(Kernel):
    def __init__(self, sys, prec):
        super().__init__(sys, prec)
        self.alo, self.ahi = sys.param.bounds(prec)

    def step(self, lo, hi):
        one = self.one
        if lo < 0 or hi >= one:
            raise BranchStraddle("enclosure leaves [0, 1)")
        plo, phi = lo + self.alo, hi + self.ahi
        if phi < one:
            return 0, plo, phi
        if plo >= one:
            return 1, plo - one, phi - one
        raise BranchStraddle()

    def shift(self, lo, hi, n):
        """Enclosure of x + n*alpha mod 1 by one multiply-reduce (no accumulation)."""
        one = self.one
        plo, phi = lo + n * self.alo, hi + n * self.ahi
        k = plo // one
        if phi - k * one >= one:
            # the enclosure wraps past 0; keep it contiguous on the lifted line
            return plo - k * one, phi - k * one
        return plo - k * one, phi - k * one


@lru_cache(maxsize=256)
def kernel(sys, prec):
    cls = {"beta": BetaKernel, "gauss": GaussKernel, "ifs": IfsKernel, "rotation": RotationKernel}[sys.kind]
    return cls(sys, prec)


# -- public operations ------------------------------------------------------------

def apply(sys, x):
    """One application of T to a certified point."""
    k = kernel(sys, x.prec_bits)
    _, lo, hi = k.step(x.lo, x.hi)
    return CertifiedPoint(lo, hi, x.prec_bits)


def branch_index(sys, x):
    """Index of the half-open branch cell containing the point."""
    return kernel(sys, x.prec_bits).branch(x.lo, x.hi)


def iter_orbit(sys, x, n):
    """Yield ``(k, i_k, lo, hi)`` for k = 1..n: the branch of T^(k-1) x and an enclosure of T^k x."""
    k = kernel(sys, x.prec_bits)
    lo, hi = x.lo, x.hi
    if sys.kind == "rotation":
        x0lo, x0hi = lo, hi
        for step in range(1, n + 1):
            try:
                d, _, _ = k.step(lo, hi)
            except BranchStraddle as exc:
                raise BranchStraddle(str(exc).split(" (step")[0], step=step) from None
            lo, hi = k.shift(x0lo, x0hi, step)
            yield step, d, lo, hi
        return
    step_fn = k.step
    for step in range(1, n + 1):
        try:
            d, lo, hi = step_fn(lo, hi)
        except BranchStraddle as exc:
            raise type(exc)(str(exc).split(" (step")[0], step=step) from None
        yield step, d, lo, hi


def orbit(sys, x, n):
    """List of (branch index, CertifiedPoint) for T^1 x .. T^n x."""
    if n < 0:
        raise ValueError("n must be >= 0")
    p = x.prec_bits
    return [(d, CertifiedPoint(lo, hi, p)) for _, d, lo, hi in iter_orbit(sys, x, n)]


def iterate(sys, x, n):
    """Enclosure of T^n x, with single-step fast paths for integer beta and rotations."""
    if n == 0:
        return x
    k = kernel(sys, x.prec_bits)
    if sys.kind == "beta" and k.int_beta is not None:
        try:
            lo, hi = k.power_step(x.lo, x.hi, n)
        except BranchStraddle as exc:
            raise BranchStraddle(str(exc), step=n) from None
        return CertifiedPoint(lo, hi, x.prec_bits)
    if sys.kind == "rotation":
        lo, hi = k.shift(x.lo, x.hi, n)
        return CertifiedPoint(lo, hi, x.prec_bits)
    lo = hi = None
    for _, _, lo, hi in iter_orbit(sys, x, n):
        pass
    return CertifiedPoint(lo, hi, x.prec_bits)
