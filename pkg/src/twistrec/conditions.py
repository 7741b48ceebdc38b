"""Numerical checks of the standing assumptions and the pseudo-Markov property.

Every sup-type constant obtained from a finite grid or from sampling is a
lower bound for the true constant and is tagged with its method.  Closed
forms are used wherever they are known.
"""

from fractions import Fraction
import math

import mpmath
import numpy as np

from .cylinders import (gauss_convergents, ifs_weights, kj_sum, min_kj, count_cylinders,
                        GAUSS_DIGIT_CAP)
from .errors import BranchStraddle
from .measures import ball_measure, interval_measure, sample
from .rng import uniform_int
from .systems import iterate


def zero_one_applicable(sys):
    """(applicable, reason) for the conditions behind the zero-one laws."""
    if sys.kind == "rotation":
        return False, "distortion, expansion and mixing conditions fail: rotations are isometries (K_J = 1) and not mixing"
    return True, ""


def mixing_closed_form(sys, n):
    """Closed-form mixing coefficient a_n when one is known, else None.

    IFS: 4 r_max^(n delta).  Integer beta b: 4 b^-n, from the same
    cylinder-counting argument.
    """
    if sys.kind == "ifs":
        r_max = max(r for r, _ in sys.maps)
        return 4 * float(r_max) ** (n * float(sys.delta))
    if sys.kind == "beta" and sys.param.is_integer:
        return float(4 * Fraction(1, int(sys.param.lo) ** n))
    return None


# -- Ahlfors regularity ----------------------------------------------------------------

def _default_radii(sys):
    r0 = float(sys.diam) / 10
    return [r0 * 10 ** (-k / 4) for k in range(13)]


def check_ahlfors(sys, centers=None, radii=None, seed=0, n_centers=48):
    """Empirical (eta1, eta2, r0) for mu(B(x, r)) against (2r)^delta.

    Balls are kept inside the phase space (interval systems) or centred on the
    attractor (IFS).  ``eta1_r``/``eta2_r`` give the same constants against
    r^delta.
    """
    radii = [Fraction(r) for r in (radii or _default_radii(sys))]
    r0 = float(max(radii))
    d = float(sys.delta)
    lows, highs = [], []
    for r in radii:
        if centers is not None:
            cs = [Fraction(c) for c in centers]
        elif sys.kind == "ifs":
            cs = [Fraction(sample(sys, seed, i, 64).lo, 1 << 64) for i in range(n_centers)]
            cs += list(sys.hull)
        else:
            lo, hi = r, 1 - r
            cs = [lo + (hi - lo) * Fraction(k, n_centers) for k in range(n_centers + 1)]
        for c in cs:
            if sys.kind not in ("ifs", "rotation") and not (r <= c <= 1 - r):
                continue
            br = ball_measure(sys, c, r)
            scale = float(2 * r) ** d
            lows.append(br.low / scale)
            highs.append(br.high / scale)
    eta1, eta2 = min(lows), max(highs)
    return {
        "eta1": eta1, "eta2": eta2, "r0": r0,
        "eta1_r": eta1 * 2 ** d, "eta2_r": eta2 * 2 ** d,
        "normalization": "(2r)^delta",
        "balls": len(lows), "method": "grid_estimate",
    }


# -- mixing -------------------------------------------------------------------------------

def _fm(q):
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def _clip(a, b, lo=Fraction(0), hi=Fraction(1)):
    return max(a, lo), min(b, hi)


def _default_balls(sys):
    if sys.kind == "ifs":
        cs = sorted({Fraction(0), Fraction(1, 4), Fraction(2, 3), Fraction(3, 4), Fraction(1), Fraction(1, 3)}
                    if sys.hull == (0, 1) else {sys.hull[0], sys.hull[1], sum(sys.hull) / 2})
        rs = [Fraction(1, 3), Fraction(1, 9), Fraction(1, 27), Fraction(1, 10), Fraction(1, 20)]
    else:
        cs = [Fraction(k, 20) for k in (2, 5, 6, 10, 14, 18)]
        rs = [Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)]
    return [(c, r) for c in cs for r in rs]


def _int_beta_joint(b, E, F, n):
    """Leb(E ∩ T^-n F) for x -> b x mod 1, E and F intervals in [0, 1]."""
    B = b ** n
    f0, f1 = F

    def g(t):
        u = t * B
        k = u.numerator // u.denominator
        frac = u - k
        return (k * (f1 - f0) + min(max(frac - f0, 0), f1 - f0)) / B
    return g(E[1]) - g(E[0])


def _ifs_joint(sys, E, F, n, depth):
    """Bracket of mu(E ∩ T^-n F) as the sum over words w of p_w mu(theta_w^-1(E) ∩ F).

    A word whose whole cylinder lies in E contributes p_w mu(F), so only the
    words whose cylinder meets the boundary of E are descended to length n.
    """
    weights = ifs_weights(sys)
    bF = interval_measure(sys, F[0], F[1], depth=depth)
    h0, h1 = sys.hull
    low = high = 0.0
    stack = [(Fraction(1), Fraction(0), 1, 0)]
    while stack:
        R, T, w, d = stack.pop()
        lo, hi = R * h0 + T, R * h1 + T
        if hi < E[0] or lo > E[1]:
            continue
        if E[0] <= lo and hi <= E[1]:
            low += float(w) * bF.low
            high += float(w) * bF.high
            continue
        if d == n:
            a, b = (E[0] - T) / R, (E[1] - T) / R
            a, b = max(a, F[0]), min(b, F[1])
            if b > a:
                br = interval_measure(sys, a, b, depth=depth)
                low += float(w) * br.low
                high += float(w) * br.high
            continue
        for (r, t), wi in zip(sys.maps, weights):
            stack.append((R * r, R * t + T, w * wi, d + 1))
    return low, high


def estimate_mixing(sys, n, ball_grid=None, samples=20000, seed=0):
    """Grid estimate of a_n = max |mu(E ∩ T^-n F) - mu(E) mu(F)| / mu(F).

    Exact for integer beta, a certified lower bound from brackets for IFS,
    exact arc arithmetic for rotations, Monte Carlo (less 3 sigma) otherwise.
    """
    balls = ball_grid or _default_balls(sys)
    closed = mixing_closed_form(sys, n)
    best = 0.0
    worst_pair = None
    if sys.kind == "beta" and sys.param.is_integer:
        b = int(sys.param.lo)
        method = "exact"
        for ce, re in balls:
            E = _clip(ce - re, ce + re)
            for cf, rf in balls:
                F = _clip(cf - rf, cf + rf)
                muE, muF = E[1] - E[0], F[1] - F[0]
                v = abs(_int_beta_joint(b, E, F, n) - muE * muF) / muF
                if v > best:
                    best, worst_pair = float(v), ((ce, re), (cf, rf))
    elif sys.kind == "ifs":
        method = "cylinder_bracket"
        for ce, re in balls:
            E = (ce - re, ce + re)
            depth = max(16, n + 8)
            bE = ball_measure(sys, ce, re, depth=depth)
            for cf, rf in balls:
                F = (cf - rf, cf + rf)
                bF = ball_measure(sys, cf, rf, depth=depth)
                if bF.low <= 0:
                    continue
                jl, jh = _ifs_joint(sys, E, F, n, depth)
                pl, ph = bE.low * bF.low, bE.high * bF.high
                # smallest |joint - product| consistent with the brackets
                gap = max(0.0, jl - ph, pl - jh)
                v = gap / bF.high
                if v > best:
                    best, worst_pair = v, ((ce, re), (cf, rf))
    elif sys.kind == "rotation":
        method = "exact_arcs"
        with mpmath.workprec(128):
            shift = mpmath.frac(n * sys.param.mpf(128))
            for ce, re in balls:
                for cf, rf in balls:
                    e0, e1 = _fm(ce - re), _fm(ce + re)
                    # T^-n F = F - n alpha; overlap of arcs on R/Z
                    f0 = _fm(cf - rf) - shift
                    f1 = _fm(cf + rf) - shift
                    ov = mpmath.mpf(0)
                    for k in (-2, -1, 0, 1, 2):
                        ov += max(mpmath.mpf(0), min(e1, f1 + k) - max(e0, f0 + k))
                    muE, muF = e1 - e0, f1 - f0
                    v = float(abs(ov - muE * muF) / muF)
                    if v > best:
                        best, worst_pair = v, ((ce, re), (cf, rf))
    else:
        method = "monte_carlo"
        prec = 256 if sys.kind == "gauss" else None
        xs, ys = [], []
        for i in range(samples):
            x = sample(sys, seed, i, max(prec or 0, 4 * n + 128))
            try:
                y = iterate(sys, x, n)
            except BranchStraddle:
                continue
            xs.append(float(x))
            ys.append(float(y))
        xs, ys = np.array(xs), np.array(ys)
        N = len(xs)
        for ce, re in balls:
            E = _clip(ce - re, ce + re)
            inE = (xs >= float(E[0])) & (xs < float(E[1]))
            muE = interval_measure(sys, *E).mid
            for cf, rf in balls:
                F = _clip(cf - rf, cf + rf)
                muF = interval_measure(sys, *F).mid
                p = float(np.mean(inE & (ys >= float(F[0])) & (ys < float(F[1]))))
                sigma = math.sqrt(max(p * (1 - p), 1.0 / N) / N)
                v = max(0.0, abs(p - muE * muF) - 3 * sigma) / muF
                if v > best:
                    best, worst_pair = v, ((ce, re), (cf, rf))
    return {"n": n, "a_n": best, "method": method, "closed_form": closed,
            "lower_bound": True, "worst_pair": [[float(v) for v in p] for p in worst_pair] if worst_pair else None}


# -- distortion, expansion, conformality ---------------------------------------------------

def _gauss_cylinder_maps(word):
    """Forward map t -> x on the cylinder (t = T^m x) and its inverse, exact."""
    pm1, qm1, pm, qm = gauss_convergents(word)

    def fwd(t):
        return (pm + pm1 * t) / (qm + qm1 * t)

    def inv(x):
        return (pm - qm * x) / (qm1 * x - pm1)
    return fwd, inv, qm


def _random_word(seed, i, m, cap):
    return tuple(1 + uniform_int(seed, 7, i, 32, lane=k) % cap for k in range(m))


def _random_t(seed, i, lane):
    return Fraction(1 + uniform_int(seed, 8, i, 30, lane=lane), (1 << 30) + 2)


def check_distortion(sys, m, samples=2000, seed=0, digit_cap=8):
    """K1 estimate; exactly 1 for piecewise-linear systems."""
    if sys.kind in ("beta", "ifs", "rotation"):
        return {"K1": 1, "method": "closed_form"}
    worst = Fraction(1)
    for i in range(samples):
        word = _random_word(seed, i, m, digit_cap)
        fwd, _, _ = _gauss_cylinder_maps(word)
        t = sorted({_random_t(seed, i, k) for k in range(3)})
        if len(t) < 3:
            continue
        x = [fwd(v) for v in t]
        q = [abs(t[a] - t[b]) / abs(x[a] - x[b]) for a, b in ((0, 1), (0, 2), (1, 2))]
        for a in range(3):
            for b in range(3):
                worst = max(worst, q[a] / q[b])
    return {"K1": float(worst), "method": "grid_estimate"}


def check_conformality(sys, m, samples=2000, seed=0, digit_cap=8):
    """K2 estimate from images of balls inside cylinders; exactly 1 for piecewise-linear systems."""
    if sys.kind in ("beta", "ifs", "rotation"):
        return {"K2": 1, "method": "closed_form"}
    worst = Fraction(1)
    for i in range(samples):
        word = _random_word(seed, i, m, digit_cap)
        fwd, inv, qm = _gauss_cylinder_maps(word)
        kj = qm * qm
        ts = sorted({_random_t(seed, i, k) for k in range(3)})
        if len(ts) < 3:
            continue
        xs = sorted(fwd(v) for v in ts)
        x = xs[1]
        r = min(x - xs[0], xs[2] - x) * Fraction(1 + uniform_int(seed, 9, i, 20), (1 << 20) + 1)
        tx = inv(x)
        a, b = abs(inv(x - r) - tx), abs(inv(x + r) - tx)
        worst = max(worst, kj * r / min(a, b), max(a, b) / (kj * r))
    return {"K2": float(worst), "method": "grid_estimate"}


def check_expanding(sys, m_range):
    """(m, min K_J) for each m; min K_J must grow without bound."""
    return [(m, min_kj(sys, m)) for m in m_range]


def check_kj_sum(sys, m_range, digit_cap=GAUSS_DIGIT_CAP):
    rows = []
    for m in m_range:
        cap = digit_cap if sys.kind != "gauss" or m <= 2 else 12
        rows.append((m, kj_sum(sys, m, digit_cap=cap)))
    return rows


# -- pseudo-Markov -------------------------------------------------------------------------------

def _beta_partition(F):
    """Branch intervals (i/beta, (i+1)/beta) and the last (floor(beta)/beta, 1) as exact elements."""
    binv = F.inverse(F.gen)
    fb = F.floor(F.gen)
    cells = []
    for i in range(fb):
        cells.append((F.scale(binv, i), F.scale(binv, i + 1)))
    last = F.scale(binv, fb)
    if F.compare(last, F.one) < 0:
        cells.append((last, F.one))
    return cells


def check_pseudo_markov(sys):
    """(holds, tau, witness): exhaustive interval check of the pseudo-Markov bullets."""
    if sys.kind in ("gauss", "ifs"):
        # every branch maps onto the whole space (Gauss: 1/x - i on (1/(i+1), 1/i))
        spot = True
        if sys.kind == "gauss":
            for i in (1, 2, 3, 7, 50):
                eps = Fraction(1, 10 ** 12)
                lo_img = 1 / (Fraction(1, i) - eps) - i
                hi_img = 1 / (Fraction(1, i + 1) + eps) - i
                spot &= lo_img < Fraction(1, 10 ** 6) and hi_img > 1 - Fraction(1, 10 ** 6)
        return {"holds": spot, "tau": 1.0, "witness": None, "method": "closed_form"}
    if sys.kind == "rotation":
        a = sys.param
        # X_0 = [0, 1 - alpha), X_1 = [1 - alpha, 1); T X_0 = [alpha, 1), T X_1 = [0, alpha)
        one_minus = a.sub(a.one, a.gen)
        cells = [(a.zero, one_minus), (one_minus, a.one)]
        images = [(a.gen, a.one), (a.zero, a.gen)]
        F = a
    else:
        F = sys.param
        cells = _beta_partition(F)
        # T X_i = (0, 1) for full branches and (0, beta - floor(beta)) for the last one
        images = []
        for lo, hi in cells:
            right = F.sub(F.mul(F.gen, hi), F.element(F.floor(F.mul(F.gen, lo))))
            images.append((F.zero, right if F.compare(right, F.one) < 0 else F.one))
    witness = None
    for i, (ilo, ihi) in enumerate(images):
        for j, (jlo, jhi) in enumerate(cells):
            meets = F.compare(jlo, ihi) < 0 and F.compare(ilo, jhi) < 0
            inside = F.compare(ilo, jlo) <= 0 and F.compare(jhi, ihi) <= 0
            if meets and not inside and witness is None:
                witness = (i, j)
    tau = min(interval_measure(sys, F.to_float(lo), F.to_float(hi)).low if sys.kind != "rotation"
              else F.to_float(hi) - F.to_float(lo) for lo, hi in images)
    return {"holds": witness is None, "tau": tau, "witness": witness, "method": "exhaustive"}


# -- full report ------------------------------------------------------------------------------

def condition_report(sys, m_max=8, mixing_ns=(1, 2, 4, 8), seed=0, ahlfors_radii=None):
    """All condition checks as a JSON-ready dict."""
    ms = list(range(1, m_max + 1))
    if sys.kind == "gauss":
        ms = ms[:3]
    expanding = check_expanding(sys, ms)
    kjs = check_kj_sum(sys, ms)
    mixing = [estimate_mixing(sys, n, seed=seed) for n in mixing_ns]
    pm = check_pseudo_markov(sys)
    applicable, why = zero_one_applicable(sys)
    flags = []
    if all(float(k) <= 1 for _, k in expanding):
        flags.append("expansion condition fails: min K_J does not grow")
    if not applicable:
        flags.append(why)
    return {
        "system": str(sys),
        "delta": float(sys.delta),
        "ahlfors": check_ahlfors(sys, radii=ahlfors_radii, seed=seed),
        "mixing": mixing,
        "distortion_K1": check_distortion(sys, min(3, m_max), seed=seed),
        "expanding_minKJ": [[m, float(k)] for m, k in expanding],
        "kj_sum_sup": max(float(v) for _, v in kjs),
        "kj_sum": [[m, float(v)] for m, v in kjs],
        "conformality_K2": check_conformality(sys, min(3, m_max), seed=seed),
        "pseudo_markov": {**pm, "witness": list(pm["witness"]) if pm["witness"] else None},
        "flags": flags,
    }
