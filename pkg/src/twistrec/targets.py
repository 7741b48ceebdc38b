"""Target-rate functions psi and the convergence class of sum psi(n)^delta."""

from dataclasses import dataclass
from fractions import Fraction
import math

import mpmath
import numpy as np

from .errors import ConfigError

FAMILIES = ("power", "power_log", "constant", "table")
_EQ_TOL = mpmath.mpf(10) ** -30


@dataclass(frozen=True)
class PsiSpec:
    """psi(n) for n >= 1.

    power: c n^-s.  power_log: c n^-s log(n+1)^-t.  constant: c.
    table: explicit values psi(1..len) with the last value held for larger n.
    """

    family: str
    c: Fraction = Fraction(1)
    s: Fraction = Fraction(0)
    t: Fraction = Fraction(0)
    values: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown psi family {self.family!r}")
        if self.family == "table":
            if not self.values or any(v <= 0 for v in self.values):
                raise ValueError("table values must be positive")
        elif self.c <= 0:
            raise ValueError("psi constant must be positive")
        if self.family in ("power", "power_log") and self.s < 0:
            raise ValueError("exponent s must be nonnegative")

    def __str__(self):
        if self.family == "power":
            return f"power:{self.c},{self.s}"
        if self.family == "power_log":
            return f"power_log:{self.c},{self.s},{self.t}"
        if self.family == "constant":
            return f"constant:{self.c}"
        return "table:" + ",".join(str(v) for v in self.values)

    @property
    def monotone(self):
        if self.family == "table":
            return all(a >= b for a, b in zip(self.values, self.values[1:]))
        return self.family != "power_log" or self.t >= 0

    @property
    def tends_to_zero(self):
        if self.family in ("constant", "table"):
            return False
        return self.s > 0 or (self.s == 0 and self.family == "power_log" and self.t > 0)

    @property
    def is_exact(self):
        """psi(n) is rational for every n."""
        return self.family in ("constant", "table") or (self.family == "power" and self.s.denominator == 1)


def power(c, s):
    return PsiSpec("power", c=Fraction(c), s=Fraction(s))


def power_log(c, s, t):
    return PsiSpec("power_log", c=Fraction(c), s=Fraction(s), t=Fraction(t))


def constant(eps):
    return PsiSpec("constant", c=Fraction(eps))


def table(values):
    return PsiSpec("table", values=tuple(Fraction(v) for v in values))


def parse_psi(text):
    """Parse ``power:c,s``, ``power_log:c,s,t``, ``constant:eps`` or ``table:v1,v2,...``."""
    fam, _, arg = text.strip().partition(":")
    try:
        vals = [Fraction(v) for v in arg.split(",")] if arg else []
        if fam == "power" and len(vals) == 2:
            return power(*vals)
        if fam == "power_log" and len(vals) == 3:
            return power_log(*vals)
        if fam in ("constant", "const") and len(vals) == 1:
            return constant(vals[0])
        if fam == "table" and vals:
            return table(vals)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError("psi", f"cannot parse {text!r}: {exc}") from exc
    raise ConfigError("psi", f"cannot parse {text!r}; expected power:c,s | power_log:c,s,t | constant:eps | table:v1,...")


def _fmpf(q):
    return mpmath.mpf(q.numerator) / q.denominator


def eval_exact(psi, n):
    """psi(n) as a Fraction when it is rational, else None."""
    if psi.family == "constant":
        return psi.c
    if psi.family == "table":
        return psi.values[min(n, len(psi.values)) - 1]
    if psi.family == "power" and psi.s.denominator == 1:
        return psi.c / Fraction(n) ** int(psi.s)
    return None


def eval_psi(psi, n, prec=113):
    """psi(n) as an mpf at ``prec`` bits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = eval_exact(psi, n)
    with mpmath.workprec(prec):
        if q is not None:
            return _fmpf(q)
        v = _fmpf(psi.c) * mpmath.power(n, -_fmpf(psi.s))
        if psi.family == "power_log":
            v *= mpmath.power(mpmath.log(n + 1), -_fmpf(psi.t))
        return +v


def eval(psi, n):
    """psi(n) as a float."""
    return float(eval_psi(psi, n))


def psi_bounds(psi, n, prec):
    """Integers (lo, hi) with lo <= psi(n) * 2**prec <= hi."""
    q = eval_exact(psi, n)
    if q is not None:
        v = q * (1 << prec)
        return v.numerator // v.denominator, -((-v.numerator) // v.denominator)
    iv = mpmath.iv
    old = iv.prec
    try:
        iv.prec = prec + 32
        v = iv.mpf(psi.c.numerator) / psi.c.denominator
        s = iv.mpf(psi.s.numerator) / psi.s.denominator
        v = v * iv.exp(-s * iv.log(n))
        if psi.family == "power_log":
            t = iv.mpf(psi.t.numerator) / psi.t.denominator
            v = v * iv.exp(-t * iv.log(iv.log(n + 1)))
        v = v * (iv.mpf(2) ** prec)
        return int(mpmath.floor(v.a)), int(mpmath.ceil(v.b))
    finally:
        iv.prec = old


def psi_array(psi, N):
    """Float array of psi(1..N)."""
    n = np.arange(1, N + 1, dtype=float)
    if psi.family == "constant":
        return np.full(N, float(psi.c))
    if psi.family == "table":
        vals = np.array([float(v) for v in psi.values])
        idx = np.minimum(np.arange(N), len(vals) - 1)
        return vals[idx]
    v = float(psi.c) * n ** (-float(psi.s))
    if psi.family == "power_log":
        v = v * np.log(n + 1) ** (-float(psi.t))
    return v


def series_partial(psi, delta, N):
    """Sum over n <= N of psi(n)^delta."""
    d = float(delta)
    vals = psi_array(psi, N) ** d
    return math.fsum(vals.tolist())


def series_class(psi, delta):
    """``convergent``, ``divergent`` or ``unknown`` for sum psi(n)^delta."""
    if psi.family == "constant":
        return "divergent"
    if psi.family == "table":
        return "unknown"
    with mpmath.workprec(128):
        d = mpmath.mpf(delta) if not isinstance(delta, Fraction) else _fmpf(delta)
        sd = _fmpf(psi.s) * d
        if abs(sd - 1) < _EQ_TOL:
            if psi.family == "power":
                return "divergent"
            return "divergent" if _fmpf(psi.t) * d <= 1 + _EQ_TOL else "convergent"
        return "divergent" if sd < 1 else "convergent"
