"""Invariant measures: sampling, ball measures, densities, and proportion estimates."""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from statistics import NormalDist
import math

import mpmath

from .certified import CertifiedPoint, ceil_div, floor_div
from .cylinders import gauss_measure, ifs_weights, remainders_of_one
from .errors import DegenerateBall, Unsupported
from .rng import random_bits, uniform_float, uniform_int

DEFAULT_PREC = 128
DECISION_BITS = 256
MAX_ATTEMPTS = 10_000


# -- estimates -----------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureEstimate:
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    indeterminate_count: int = 0
    hits: int = 0


def z_value(confidence=0.95):
    return NormalDist().inv_cdf(0.5 + confidence / 2)


def wilson_interval(k, n, confidence=0.95):
    """Wilson score interval for k successes in n trials."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = z_value(confidence)
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def proportion_estimate(hits, n, seed, indeterminate=0, confidence=0.95):
    """Estimate with indeterminates counted as misses in the mean and as hits in ci_high."""
    mean = hits / n
    low, _ = wilson_interval(hits, n, confidence)
    _, high = wilson_interval(hits + indeterminate, n, confidence)
    stderr = math.sqrt(mean * (1 - mean) / n)
    return MeasureEstimate(mean=mean, stderr=stderr, ci_low=min(low, mean), ci_high=max(high, mean),
                           n_samples=n, seed=seed, indeterminate_count=indeterminate, hits=hits)


@dataclass(frozen=True)
class BallMeasureBracket:
    low: float
    high: float
    method: str

    def contains(self, v, slack=0.0):
        return self.low - slack <= v <= self.high + slack

    @property
    def mid(self):
        return (self.low + self.high) / 2


# -- Renyi-Parry data ------------------------------------------------------------------

class RenyiData:
    """Unnormalized density h(x) = sum_k beta^-k [x < T^k(1)] and its normalizer."""

    def __init__(self, beta, tol=1e-17):
        self.beta = beta
        b = float(beta)
        K = math.ceil(math.log(b / (b - 1) / tol) / math.log(b)) + 1
        _, rems = remainders_of_one(beta, K)
        self.terminates = beta.is_zero(rems[-1])
        with mpmath.workprec(160):
            binv = 1 / beta.mpf(160)
            self.levels = []
            self.weights = []
            self.bounds = []
            for k, s in enumerate(rems):
                if beta.is_zero(s):
                    break
                self.levels.append(beta.to_mpf(s, 160))
                self.weights.append(binv ** k)
                self.bounds.append(beta.elem_bounds(s, DECISION_BITS))
            K = len(rems) - 1
            self.tail = mpmath.mpf(0) if self.terminates else binv ** (K + 1) / (1 - binv)
            self.normalizer = mpmath.fsum(w * s for w, s in zip(self.weights, self.levels))
            self.hmax = mpmath.fsum(self.weights) + self.tail
            self.float_weights = [float(w) for w in self.weights]
            self.float_hmax = float(self.hmax)

    def h(self, x):
        return mpmath.fsum(w for w, s in zip(self.weights, self.levels) if x < s)

    def integral(self, a, b):
        """(sum, tail) with sum = integral of h over [a, b] ∩ [0, 1] from the retained terms."""
        a, b = max(a, 0), min(b, 1)
        if b <= a:
            return mpmath.mpf(0), mpmath.mpf(0)
        total = mpmath.fsum(w * (min(b, s) - min(a, s)) for w, s in zip(self.weights, self.levels))
        return total, self.tail * (b - a)


@lru_cache(maxsize=32)
def renyi(beta):
    return RenyiData(beta)


def renyi_normalizer(sys):
    """Integral of the unnormalized Renyi series (reported with beta-map results)."""
    if sys.kind != "beta":
        raise Unsupported("Renyi normalizer is defined for beta-maps only")
    if sys.param.is_integer:
        return 1.0
    return float(renyi(sys.param).normalizer)


# -- density --------------------------------------------------------------------------------

def density(sys, x):
    """Normalized invariant density with respect to Lebesgue measure."""
    if sys.kind == "gauss":
        x = mpmath.mpf(x) if not isinstance(x, Fraction) else mpmath.mpf(x.numerator) / x.denominator
        return float(1 / (mpmath.log(2) * (1 + x)))
    if sys.kind == "rotation":
        return 1.0
    if sys.kind == "ifs":
        raise Unsupported("a self-similar measure has no density with respect to Lebesgue")
    if sys.param.is_integer:
        return 1.0
    R = renyi(sys.param)
    with mpmath.workprec(160):
        xv = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)
        return float(R.h(xv) / R.normalizer)


# -- ball measures ----------------------------------------------------------------------------

def _mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def interval_measure(sys, a, b, depth=None):
    """Bracket for mu([a, b] ∩ X)."""
    if sys.kind == "ifs":
        return _ifs_interval(sys, Fraction(a), Fraction(b), depth)
    if sys.kind == "rotation":
        w = min(Fraction(b) - Fraction(a), Fraction(1))
        w = float(max(w, 0))
        return BallMeasureBracket(w, w, "closed_form")
    with mpmath.workprec(160):
        a, b = _mpf(a), _mpf(b)
        lo, hi = max(a, 0), min(b, 1)
        if hi <= lo:
            return BallMeasureBracket(0.0, 0.0, "closed_form")
        if sys.kind == "gauss":
            v = mpmath.log((1 + hi) / (1 + lo), 2)
            eps = mpmath.mpf(2) ** -120
            return BallMeasureBracket(float(v - eps), float(v + eps), "closed_form")
        if sys.param.is_integer:
            v = hi - lo
            return BallMeasureBracket(float(v), float(v), "closed_form")
        R = renyi(sys.param)
        s, t = R.integral(lo, hi)
        eps = mpmath.mpf(2) ** -120
        low = s / (R.normalizer + R.tail) - eps
        high = (s + t) / R.normalizer + eps
        method = "closed_form" if R.terminates else "truncated_series"
        return BallMeasureBracket(float(max(low, 0)), float(min(high, 1)), method)


def _ifs_interval(sys, a, b, depth):
    """Cylinder cover: cylinders inside [a, b] count in both bounds, boundary ones in the upper only."""
    weights = ifs_weights(sys)
    r_max = max(r for r, _ in sys.maps)
    if depth is None:
        half = (b - a) / 2
        target = half / 10
        depth = 1
        diam = sys.diam
        while r_max ** depth * diam >= target and depth < 60:
            depth += 1
    low = high = 0
    h0, h1 = sys.hull
    # each entry is the affine map x -> R x + T of a word, its weight and length
    stack = [(Fraction(1), Fraction(0), 1, 0)]
    while stack:
        R, T, w, d = stack.pop()
        lo, hi = R * h0 + T, R * h1 + T
        if hi < a or lo > b:
            continue
        if a <= lo and hi <= b:
            low += w
            high += w
            continue
        if d >= depth:
            high += w
            continue
        for (r, t), wi in zip(sys.maps, weights):
            stack.append((R * r, R * t + T, w * wi, d + 1))
    return BallMeasureBracket(float(low), float(min(high, 1)), "cylinder_cover")


def ball_measure(sys, center, r, depth=None):
    """Bracket for mu(B(center, r) ∩ X)."""
    if not r > 0:
        raise DegenerateBall(f"radius must be positive, got {r}")
    if sys.kind == "rotation":
        w = min(2 * Fraction(r), Fraction(1))
        return BallMeasureBracket(float(w), float(w), "closed_form")
    c, r = Fraction(center), Fraction(r)
    return interval_measure(sys, c - r, c + r, depth)


# -- sampling ---------------------------------------------------------------------------------

def _ifs_digit_count(sys, prec):
    r_max = max(r for r, _ in sys.maps)
    return math.ceil((prec + 4) / -math.log2(float(r_max))) + 2


def _ifs_thresholds(sys):
    weights = ifs_weights(sys)
    acc, cum = 0.0, []
    for w in weights[:-1]:
        acc += float(w)
        cum.append(int(acc * 2 ** 64))
    return cum


@lru_cache(maxsize=32)
def _ifs_tables(sys):
    return _ifs_thresholds(sys), [(r.numerator, r.denominator, t) for r, t in sys.maps]


def ifs_word(sys, seed, index, ndigits, stream=0, attempt=0):
    """I.i.d. digits with probabilities r_i^delta, one 64-bit slice per digit (prefix-stable)."""
    cum, _ = _ifs_tables(sys)
    bits = random_bits(seed, stream, index, 64 * ndigits, attempt, lane=2)
    word = []
    for k in range(ndigits):
        u = (bits >> (64 * (ndigits - 1 - k))) & 0xFFFFFFFFFFFFFFFF
        i = 0
        while i < len(cum) and u >= cum[i]:
            i += 1
        word.append(i)
    return word


def ifs_point(sys, word, prec):
    """Enclosure of theta_word(hull) at scale 2**-prec."""
    _, maps = _ifs_tables(sys)
    one = 1 << prec
    h0, h1 = sys.hull
    lo = floor_div(h0.numerator * one, h0.denominator)
    hi = ceil_div(h1.numerator * one, h1.denominator)
    for i in reversed(word):
        p, q, t = maps[i]
        tn, td = t.numerator, t.denominator
        lo = floor_div(p * lo * td + tn * one * q, q * td)
        hi = ceil_div(p * hi * td + tn * one * q, q * td)
    return CertifiedPoint(lo, hi, prec)


def _beta_attempt(sys, seed, index, stream):
    """First attempt whose uniform draw is accepted by the Renyi rejection step."""
    R = renyi(sys.param)
    for attempt in range(MAX_ATTEMPTS):
        U = uniform_int(seed, stream, index, DECISION_BITS, attempt, lane=0)
        h = 0.0
        ok = True
        for (slo, shi), w in zip(R.bounds, R.float_weights):
            if U + 1 <= slo:
                h += w
            elif U < shi:
                ok = False
                break
        if not ok:
            continue
        v = uniform_float(seed, stream, index, attempt, lane=1) * R.float_hmax
        if abs(v - h) < 1e-12:
            continue
        if v < h:
            return attempt
    raise RuntimeError("rejection sampler did not accept")


_attempt_cache = {}


def sample(sys, seed, index, prec=None, stream=0):
    """Draw point ``index`` of ``stream`` from the invariant measure.

    Deterministic in (seed, stream, index); the bits are prefix-stable, so a
    call with larger ``prec`` encloses the same underlying point.
    """
    prec = prec or DEFAULT_PREC
    kind = sys.kind
    if kind == "rotation" or (kind == "beta" and sys.param.is_integer):
        for attempt in range(MAX_ATTEMPTS):
            U = uniform_int(seed, stream, index, prec, attempt)
            if U + 1 < (1 << prec):
                return CertifiedPoint(U, U + 1, prec)
        raise RuntimeError("sampler exhausted attempts")
    if kind == "beta":
        key = (sys, seed, stream, index)
        attempt = _attempt_cache.get(key)
        if attempt is None:
            attempt = _beta_attempt(sys, seed, index, stream)
            if len(_attempt_cache) > 1 << 20:
                _attempt_cache.clear()
            _attempt_cache[key] = attempt
        U = uniform_int(seed, stream, index, prec, attempt, lane=0)
        if U + 1 >= 1 << prec:
            return CertifiedPoint(U, (1 << prec) - 1, prec)
        return CertifiedPoint(U, U + 1, prec)
    if kind == "gauss":
        return _gauss_sample(seed, index, prec, stream)
    word = ifs_word(sys, seed, index, _ifs_digit_count(sys, prec), stream)
    return ifs_point(sys, word, prec)


def _gauss_sample(seed, index, prec, stream):
    one = 1 << prec
    iv = mpmath.iv
    for attempt in range(MAX_ATTEMPTS):
        U = uniform_int(seed, stream, index, prec, attempt)
        if U == 0:
            continue
        old = iv.prec
        try:
            iv.prec = prec + 32
            scale = iv.mpf(2) ** prec
            xlo = iv.mpf(2) ** (iv.mpf(U) / scale) - 1
            xhi = iv.mpf(2) ** (iv.mpf(U + 1) / scale) - 1
            lo = int(mpmath.floor(xlo.a * one))
            hi = int(mpmath.ceil(xhi.b * one))
        finally:
            iv.prec = old
        lo, hi = max(lo, 1), min(hi, one)
        return CertifiedPoint(lo, hi, prec)
    raise RuntimeError("sampler exhausted attempts")


def sample_float(sys, seed, index, stream=0):
    """Convenience: a sampled point as a double."""
    return float(sample(sys, seed, index, 64, stream))
