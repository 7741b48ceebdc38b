"""Twist functions f with certified evaluation and Lipschitz bookkeeping."""

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
import math

from .algebraic import AlgebraicReal, GOLDEN_ALPHA
from .certified import CertifiedPoint, ceil_div, circle_distance, interval_distance
from .errors import BranchStraddle, ConfigError, PieceStraddle
from .rng import uniform_int
from .systems import apply

SQRT_PIECES = 48


@dataclass(frozen=True)
class TwistSpec:
    """A twist ``f``.

    Families: ``identity``; ``constant`` (value ``y``, a Fraction or an
    AlgebraicReal); ``affine`` (f(x) = a x + b, clipped to [0, 1] or reduced
    mod 1 when ``mod1``); ``sqrt``; ``piecewise`` (``pieces`` is a tuple of
    (lo, hi, TwistSpec) on half-open [lo, hi)).
    """

    family: str
    y: object = None
    a: Fraction = Fraction(1)
    b: Fraction = Fraction(0)
    mod1: bool = False
    pieces: tuple = ()

    def __post_init__(self):
        if self.family not in ("identity", "constant", "affine", "sqrt", "piecewise"):
            raise ValueError(f"unknown twist family {self.family!r}")
        if self.family == "piecewise":
            ps = sorted(self.pieces, key=lambda p: p[0])
            for (a0, b0, _), (a1, b1, _) in zip(ps, ps[1:]):
                if a1 < b0:
                    raise ValueError("piecewise twist pieces overlap")

    def __str__(self):
        if self.family == "constant":
            return f"const:{self.y.name if isinstance(self.y, AlgebraicReal) else self.y}"
        if self.family == "affine":
            return f"affine:{self.a},{self.b}" + (",mod1" if self.mod1 else "")
        return self.family

    @property
    def lipschitz_p(self):
        """Global Lipschitz constant (``inf`` for sqrt, sup over pieces for piecewise)."""
        if self.family == "identity":
            return 1.0
        if self.family == "constant":
            return 0.0
        if self.family == "affine":
            return float(abs(self.a))
        if self.family == "sqrt":
            return math.inf
        return max(p for _, _, p in self.piece_table())

    def piece_table(self):
        """List of (lo, hi, p) with per-piece Lipschitz constants."""
        if self.family == "sqrt":
            out = []
            for k in range(SQRT_PIECES):
                lo, hi = Fraction(1, 2 ** (k + 1)), Fraction(1, 2 ** k)
                # sup of 1/(2 sqrt x) on the closed piece
                out.append((lo, hi, 2 ** ((k + 1) / 2) / 2))
            return sorted(out)
        if self.family == "affine" and self.mod1:
            if self.a == 0:
                return [(Fraction(0), Fraction(1), 0.0)]
            v0, v1 = sorted((self.b, self.a + self.b))
            cuts = sorted({Fraction(0), Fraction(1)} |
                          {(k - self.b) / self.a for k in range(math.floor(v0), math.ceil(v1) + 1)
                           if 0 < (k - self.b) / self.a < 1})
            return [(lo, hi, float(abs(self.a))) for lo, hi in zip(cuts, cuts[1:])]
        if self.family == "piecewise":
            return [(lo, hi, g.lipschitz_p) for lo, hi, g in sorted(self.pieces, key=lambda p: p[0])]
        return [(Fraction(0), Fraction(1), self.lipschitz_p)]


def identity():
    return TwistSpec("identity")


def constant(y):
    if not isinstance(y, AlgebraicReal):
        y = Fraction(y)
    return TwistSpec("constant", y=y)


def affine(a, b, mod1=False):
    return TwistSpec("affine", a=Fraction(a), b=Fraction(b), mod1=mod1)


def sqrt_twist():
    return TwistSpec("sqrt")


def piecewise(pieces):
    return TwistSpec("piecewise", pieces=tuple((Fraction(lo), Fraction(hi), g) for lo, hi, g in pieces))


def parse_twist(text):
    """Parse ``identity``, ``const:y``, ``affine:a,b[,mod1]`` or ``sqrt``."""
    fam, _, arg = text.strip().partition(":")
    try:
        if fam in ("identity", "id") and not arg:
            return identity()
        if fam in ("const", "constant"):
            if arg == "golden":
                return constant(GOLDEN_ALPHA)
            return constant(Fraction(arg))
        if fam == "affine":
            parts = arg.split(",")
            mod1 = parts[-1].strip() == "mod1"
            if mod1:
                parts = parts[:-1]
            if len(parts) == 2:
                return affine(Fraction(parts[0]), Fraction(parts[1]), mod1)
        if fam == "sqrt" and not arg:
            return sqrt_twist()
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError("f", f"cannot parse {text!r}: {exc}") from exc
    raise ConfigError("f", f"cannot parse {text!r}; expected identity | const:y | affine:a,b[,mod1] | sqrt")


# -- evaluation ------------------------------------------------------------------------

def constant_bounds(y, prec):
    if isinstance(y, AlgebraicReal):
        return y.bounds(prec)
    v = y * (1 << prec)
    return v.numerator // v.denominator, ceil_div(v.numerator, v.denominator)


def eval_bounds(f, lo, hi, prec):
    """Integer enclosure of f over [lo, hi] at scale 2**-prec."""
    fam = f.family
    if fam == "identity":
        return lo, hi
    if fam == "constant":
        return constant_bounds(f.y, prec)
    one = 1 << prec
    if fam == "affine":
        a, b = f.a, f.b
        an, ad = a.numerator, a.denominator
        bn, bd = b.numerator, b.denominator
        x0, x1 = (lo, hi) if a >= 0 else (hi, lo)
        vlo = (an * x0 * bd + bn * one * ad) // (ad * bd)
        vhi = ceil_div(an * x1 * bd + bn * one * ad, ad * bd)
        if f.mod1:
            k = vlo >> prec
            if vhi >= (k + 1) << prec:
                raise PieceStraddle("affine twist enclosure crosses a wrap point")
            return vlo - (k << prec), vhi - (k << prec)
        return min(max(vlo, 0), one), min(max(vhi, 0), one)
    if fam == "sqrt":
        if lo < 0:
            raise PieceStraddle("sqrt evaluated below 0")
        slo = isqrt(lo << prec)
        n = hi << prec
        shi = isqrt(n)
        if shi * shi < n:
            shi += 1
        return slo, shi
    for plo, phi, g in f.pieces:
        a = plo * one
        b = phi * one
        if lo >= a and hi < b:
            return eval_bounds(g, lo, hi, prec)
        if hi >= a and lo < b:
            break
    raise PieceStraddle("enclosure is not inside a single piece")


def eval_twist(f, x):
    lo, hi = eval_bounds(f, x.lo, x.hi, x.prec_bits)
    return CertifiedPoint(lo, hi, x.prec_bits)


# -- commutation -----------------------------------------------------------------------

def _fixed_point_exact(sys, y):
    """Exact test of T(y) == y where possible; None when no exact path applies."""
    if sys.kind == "rotation":
        return False  # x + alpha = x mod 1 needs alpha rational
    if isinstance(y, Fraction):
        if sys.kind == "gauss":
            if y <= 0:
                return None
            t = 1 / y
            return t - (t.numerator // t.denominator) == y
        if sys.kind == "ifs":
            for r, t in sys.maps:
                if (y - t) / r == y and t + r * sys.hull[0] <= y < t + r * sys.hull[1]:
                    return True
            return None
        F = sys.param
        e = F.element(y)
        be = F.mul(F.gen, e)
        return F.sub(be, F.element(F.floor(be))) == e
    # algebraic y: exact only inside its own field
    if sys.kind == "gauss":
        F = y
        inv = F.inverse(F.gen)
        return F.sub(inv, F.element(F.floor(inv))) == F.gen
    if sys.kind == "beta" and sys.param.poly == y.poly:
        F = y
        be = F.mul(F.gen, F.gen)
        return F.sub(be, F.element(F.floor(be))) == F.gen
    return None


def commutation_report(f, sys, trials=64, seed=0, prec=192):
    """(verdict, note) with verdict in {yes, no, inconclusive}."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if f.family == "identity" or (f.family == "affine" and f.a == 1 and f.b == 0):
        return "yes", "identity commutes with every map"
    if f.family == "constant":
        fixed = _fixed_point_exact(sys, f.y)
        if fixed is True:
            return "yes", "constant twist at a fixed point of T"
        if fixed is False:
            return "no", "constant twist at a non-fixed point: T(f(x)) = T(y) != y = f(T(x))"
    if sys.kind == "rotation" and f.family == "affine" and f.a == 1 and f.mod1:
        return "yes", "translations of the circle commute"
    # look for a certified witness
    one = 1 << prec
    circle = sys.kind == "rotation"
    h0, h1 = sys.hull
    for i in range(trials):
        u = uniform_int(seed, 99, i, prec)
        lo = (h0 * one).__floor__() + (u * (h1 - h0)).__floor__()
        x = CertifiedPoint(lo, lo + 2, prec)
        try:
            tx = apply(sys, x)
            ftx = eval_twist(f, tx)
            fx = eval_twist(f, x)
            tfx = apply(sys, fx)
        except (BranchStraddle, PieceStraddle):
            continue
        if circle:
            dlo, _ = circle_distance(tfx.lo, tfx.hi, ftx.lo, ftx.hi, one)
        else:
            dlo, _ = interval_distance(tfx.lo, tfx.hi, ftx.lo, ftx.hi)
        if dlo > 0:
            return "no", f"witness x = {float(x):.6g}: T(f(x)) = {float(tfx):.6g}, f(T(x)) = {float(ftx):.6g}"
    return "inconclusive", "no certified witness found"


def commutes_with(f, sys, trials=64, seed=0):
    return commutation_report(f, sys, trials, seed)[0]
