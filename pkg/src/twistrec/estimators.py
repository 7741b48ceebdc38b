"""Certified hit tests for A_n = {x : d(T^n x, f(x)) < psi(n)} and Monte Carlo estimators.

Every sampled point carries one orbit that is reused for all requested n
(common random numbers).  A decision at one precision is certified, so it
never changes when the precision is raised.  Only undecided times are
retried at doubled precision, up to a cap.  Past the cap they are reported
as indeterminate.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

from .algebraic import AlgebraicReal
from .certified import CertifiedPoint, circle_distance
from .conditions import mixing_closed_form, zero_one_applicable
from .errors import BranchStraddle, IndeterminateExcess, PieceStraddle, ZeroDenominator
from .measures import proportion_estimate, renyi_normalizer, sample
from .systems import kernel, required_precision
from .targets import eval as psi_eval, psi_bounds, series_class, series_partial
from .twists import eval_bounds

HIT, MISS, INDET = 1, 0, -1
CODE_NAMES = {HIT: "hit", MISS: "miss", INDET: "indeterminate"}
GAUSS_MIN_BITS = 256
INDET_LIMIT = 0.01


# -- precision -----------------------------------------------------------------------

def start_precision(sys, n):
    """Initial working precision for decisions up to time n."""
    if sys.kind == "gauss":
        # Lyapunov exponent pi^2/(6 log 2) nats, about 3.42 bits per step
        return max(GAUSS_MIN_BITS, 4 * n + 64)
    return required_precision(sys, n)


def default_max_precision(start):
    return 4 * start


@lru_cache(maxsize=1 << 16)
def _psi_bounds(psi, n, prec):
    return psi_bounds(psi, n, prec)


# -- single-precision pass ---------------------------------------------------------------

def _decide_pass(sys, f, psi, x, ns, prec):
    """Decisions for sorted ``ns`` from one orbit of x at ``prec``; None = undecided."""
    out = {}
    try:
        flo, fhi = eval_bounds(f, x.lo, x.hi, prec)
    except PieceStraddle:
        return out
    one = 1 << prec
    nmax = ns[-1]
    want = set(ns)
    k = kernel(sys, prec)
    if sys.kind == "rotation":
        x0lo, x0hi = x.lo, x.hi
        for n in ns:
            lo, hi = k.shift(x0lo, x0hi, n)
            dlo, dhi = circle_distance(lo, hi, flo, fhi, one)
            plo, phi = _psi_bounds(psi, n, prec)
            if dhi < plo:
                out[n] = HIT
            elif dlo >= phi:
                out[n] = MISS
        return out
    lo, hi = x.lo, x.hi
    step = k.step
    for n in range(1, nmax + 1):
        try:
            _, lo, hi = step(lo, hi)
        except BranchStraddle:
            break
        if n in want:
            dlo = max(0, lo - fhi, flo - hi)
            dhi = max(hi - flo, fhi - lo)
            plo, phi = _psi_bounds(psi, n, prec)
            if dhi < plo:
                out[n] = HIT
            elif dlo >= phi:
                out[n] = MISS
    return out


def classify(sys, f, psi, point_at, ns, prec=None, max_prec=None):
    """Codes (HIT/MISS/INDET) for each n in ``ns``.

    ``point_at(p)`` returns the enclosure of the same underlying point at p bits.
    """
    ns = sorted(set(ns))
    if not ns:
        return {}
    if ns[0] < 1:
        raise ValueError("n must be >= 1")
    p = prec or start_precision(sys, ns[-1])
    cap = max(max_prec or default_max_precision(p), p)
    results = {}
    pending = ns
    while True:
        dec = _decide_pass(sys, f, psi, point_at(p), pending, p)
        results.update(dec)
        pending = [n for n in pending if n not in dec]
        if not pending or p >= cap:
            break
        p = min(2 * p, cap)
    for n in pending:
        results[n] = INDET
    return results


def _point_source(x):
    if isinstance(x, CertifiedPoint):
        return (lambda p: x if p <= x.prec_bits else x.to_prec(p)), x.prec_bits
    if isinstance(x, AlgebraicReal):
        return (lambda p: CertifiedPoint(*x.bounds(p), p)), None
    q = Fraction(x)
    return (lambda p: CertifiedPoint.exact(q, p)), None


def hit_test(sys, f, psi, x, n, prec=None, max_prec=None):
    """``hit``, ``miss`` or ``indeterminate`` for d(T^n x, f(x)) < psi(n).

    ``x`` may be a CertifiedPoint (decided at its own precision), or an exact
    rational / AlgebraicReal, which is re-enclosed at escalating precision.
    """
    src, fixed = _point_source(x)
    if fixed is not None:
        prec, max_prec = fixed, fixed
    code = classify(sys, f, psi, src, [n], prec, max_prec)[n]
    return CODE_NAMES[code]


def sample_codes(sys, f, psi, seed, index, ns, stream=0, prec=None, max_prec=None):
    """Codes for the sampled point ``index``."""
    return classify(sys, f, psi, lambda p: sample(sys, seed, index, p, stream), ns, prec, max_prec)


# -- sharded evaluation ------------------------------------------------------------------

def _chunk_task(args):
    sys, f, psi, seed, stream, ns, prec, max_prec, start, stop = args
    rows = []
    for i in range(start, stop):
        c = sample_codes(sys, f, psi, seed, i, ns, stream, prec, max_prec)
        rows.append([c[n] for n in ns])
    return rows


def code_matrix(sys, f, psi, ns, samples, seed, stream=0, workers=1, prec=None, max_prec=None):
    """int8 matrix of codes, shape (samples, len(ns)), rows in index order.

    Points are split into contiguous index chunks; because every point is a
    pure function of (seed, stream, index), the matrix does not depend on
    ``workers``.
    """
    ns = sorted(set(ns))
    workers = max(1, int(workers or 1))
    if workers == 1:
        rows = _chunk_task((sys, f, psi, seed, stream, ns, prec, max_prec, 0, samples))
    else:
        nchunks = workers * 4
        bounds = [samples * k // nchunks for k in range(nchunks + 1)]
        tasks = [(sys, f, psi, seed, stream, ns, prec, max_prec, a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_chunk_task, tasks):
                rows.extend(part)
    return ns, np.array(rows, dtype=np.int8).reshape(samples, len(ns))


# -- estimates ----------------------------------------------------------------------------

def _estimate_from_column(col, seed, confidence, check=True):
    n = len(col)
    hits = int(np.count_nonzero(col == HIT))
    indet = int(np.count_nonzero(col == INDET))
    if check and n and indet / n > INDET_LIMIT:
        raise IndeterminateExcess(indet / n, INDET_LIMIT)
    return proportion_estimate(hits, n, seed, indet, confidence)


def estimate_mu_An_sweep(sys, f, psi, ns, samples, seed, confidence=0.95, workers=1, check=True, **kw):
    """Dict n -> MeasureEstimate, all n estimated from the same sample points."""
    if samples < 100:
        raise ValueError("samples must be >= 100")
    ns, M = code_matrix(sys, f, psi, ns, samples, seed, workers=workers, **kw)
    return {n: _estimate_from_column(M[:, j], seed, confidence, check) for j, n in enumerate(ns)}


def estimate_mu_An(sys, f, psi, n, samples, seed, confidence=0.95, workers=1, **kw):
    return estimate_mu_An_sweep(sys, f, psi, [n], samples, seed, confidence, workers, **kw)[n]


@dataclass(frozen=True)
class QuasiIndependenceReport:
    m: int
    n: int
    est_joint: object
    marg_m: object
    marg_n: object
    bound_value: float
    ratio: float
    a_source: str


def a_sequence(sys, a_fn=None):
    """Callable k -> a_k and the name of its source."""
    cf = mixing_closed_form(sys, 1)
    if cf is not None:
        return (lambda k: mixing_closed_form(sys, k)), "closed_form"
    if a_fn is not None:
        return a_fn, "user"
    from .conditions import estimate_mixing
    cache = {}

    def est(k):
        if k not in cache:
            cache[k] = estimate_mixing(sys, k)["a_n"]
        return cache[k]
    return est, "conditions_estimate"


def quasi_bound(sys, psi, m, n, a_k):
    d = float(sys.delta)
    pm, pn = psi_eval(psi, m) ** d, psi_eval(psi, n) ** d
    return pm * pn + a_k(n - m) * pn + a_k(n) * pm


def _joint_column(cm, cn):
    both_hit = (cm == HIT) & (cn == HIT)
    any_miss = (cm == MISS) | (cn == MISS)
    joint = np.where(both_hit, HIT, np.where(any_miss, MISS, INDET))
    return joint.astype(np.int8)


def pairwise_grid(sys, f, psi, pairs, samples, seed, confidence=0.95, workers=1, a_fn=None, check=True, **kw):
    """QuasiIndependenceReports for each (m, n), sharing one orbit per point."""
    pairs = [(int(m), int(n)) for m, n in pairs]
    for m, n in pairs:
        if not n > m >= 1:
            raise ValueError("pairs need n > m >= 1")
    if samples < 100:
        raise ValueError("samples must be >= 100")
    ns = sorted({k for p in pairs for k in p})
    ns, M = code_matrix(sys, f, psi, ns, samples, seed, workers=workers, **kw)
    col = {n: M[:, j] for j, n in enumerate(ns)}
    a_k, source = a_sequence(sys, a_fn)
    out = []
    for m, n in pairs:
        joint = _estimate_from_column(_joint_column(col[m], col[n]), seed, confidence, check)
        mm = _estimate_from_column(col[m], seed, confidence, check)
        mn = _estimate_from_column(col[n], seed, confidence, check)
        bound = quasi_bound(sys, psi, m, n, a_k)
        out.append(QuasiIndependenceReport(m, n, joint, mm, mn, bound, joint.mean / bound, source))
    return out


def estimate_pairwise(sys, f, psi, m, n, samples, seed, **kw):
    return pairwise_grid(sys, f, psi, [(m, n)], samples, seed, **kw)[0]


# -- hit statistics and verdicts --------------------------------------------------------------

@dataclass(frozen=True)
class HitRecord:
    point_index: int
    hit_times: tuple
    indeterminate_times: tuple
    horizon: int

    @property
    def count(self):
        return len(self.hit_times)


@dataclass(frozen=True)
class HitStatistics:
    records: tuple
    N: int
    samples: int
    seed: int
    mean_S_N: float
    tail_fraction: float
    tail_fraction_high: float
    sum_mu_hat: float
    sum_psi_delta: float
    indeterminate_count: int


def hit_statistics(sys, f, psi, N, samples, seed, workers=1, **kw):
    if N < 2:
        raise ValueError("N must be >= 2")
    ns, M = code_matrix(sys, f, psi, range(1, N + 1), samples, seed, workers=workers, **kw)
    records = []
    half = N // 2
    tail = M[:, half:]
    tail_hit = np.any(tail == HIT, axis=1)
    tail_open = np.any(tail == INDET, axis=1)
    for i in range(samples):
        row = M[i]
        records.append(HitRecord(i, tuple(int(n) for n in np.nonzero(row == HIT)[0] + 1),
                                 tuple(int(n) for n in np.nonzero(row == INDET)[0] + 1), N))
    total_hits = int(np.count_nonzero(M == HIT))
    return HitStatistics(
        records=tuple(records), N=N, samples=samples, seed=seed,
        mean_S_N=total_hits / samples,
        tail_fraction=float(np.mean(tail_hit)),
        tail_fraction_high=float(np.mean(tail_hit | tail_open)),
        sum_mu_hat=total_hits / samples,
        sum_psi_delta=series_partial(psi, sys.delta, N),
        indeterminate_count=int(np.count_nonzero(M == INDET)),
    )


@dataclass(frozen=True)
class Verdict:
    cls: str
    evidence: dict = field(default_factory=dict)


def verdict(sys, f, psi, N, samples, seed, theta_full=0.9, theta_null=0.1, workers=1, stats=None, **kw):
    """Combine the series class of sum psi(n)^delta with the tail-window hit fraction."""
    series = series_class(psi, sys.delta)
    stats = stats or hit_statistics(sys, f, psi, N, samples, seed, workers=workers, **kw)
    tail = stats.tail_fraction
    applicable, why = zero_one_applicable(sys)
    flags = []
    if not applicable:
        flags.append(why + "; zero-one law not applicable")
    if not psi.tends_to_zero:
        flags.append("psi does not tend to 0")
    if not psi.monotone:
        flags.append("psi is not monotone")
    if stats.tail_fraction_high != tail:
        flags.append("indeterminate tests in the tail window")
    if not applicable:
        # no series criterion to consult: report the observed tail behaviour
        cls = "empirically_full" if tail >= theta_full else "empirically_null" if tail <= theta_null else "inconclusive"
    elif series == "divergent" and tail >= theta_full:
        cls = "empirically_full"
    elif series == "convergent" and stats.tail_fraction_high <= theta_null:
        cls = "empirically_null"
    else:
        cls = "inconclusive"
    evidence = {
        "class": cls,
        "series_class": series,
        "tail_fraction": tail,
        "tail_fraction_high": stats.tail_fraction_high,
        "tail_window": [N // 2 + 1, N],
        "sums": {"psi_delta": stats.sum_psi_delta, "mu_hat": stats.sum_mu_hat, "mean_S_N": stats.mean_S_N},
        "thresholds": {"full": theta_full, "null": theta_null},
        "flags": flags,
        "applicable": applicable,
        "delta": float(sys.delta),
        "N": N,
        "samples": samples,
        "seed": seed,
        "indeterminate_count": stats.indeterminate_count,
    }
    if sys.kind == "beta":
        evidence["renyi_normalizer"] = renyi_normalizer(sys)
    return Verdict(cls, evidence)


# -- inclusion checks and measure bounds -------------------------------------------------------

def corridor(eta1, eta2, delta, p, sum_psi_delta, sum_a):
    """Lower and upper bounds on sum mu(A_n) from the per-n measure bounds on A_n.

    ``eta1``/``eta2`` are Ahlfors constants for mu(B(x, r)) against r^delta.
    """
    d = float(delta)
    lower = eta1 ** 2 / eta2 * 10 ** -d * sum_psi_delta - (p / 5) ** d * sum_a
    upper = eta2 / eta1 * 1.5 ** d * (eta2 * 5 ** d * sum_psi_delta + (2 * p) ** d * sum_a)
    return lower, upper


def cluster_radius(psi_m, k_j, p):
    """Predicted radius 2 psi(m) / (K_J - p) of J ∩ A_m (diagnostic only)."""
    if k_j <= p:
        raise ValueError("K_J must exceed p")
    return 2 * psi_m / (k_j - p)


def sandwich_check(sys, f, psi, x0, r, n, samples, seed, prec=None):
    """Set-wise check of the inclusions for E = f^-1 B(x0, r) with r < psi(n).

    Returns counts (in_E, inner, outer_violations, inner_violations): an inner
    violation is a point of E with d(T^n x, x0) < psi(n) - r that is not a
    hit; an outer violation is a hit in E with d(T^n x, x0) >= psi(n) + r.
    """
    x0 = Fraction(x0)
    r = Fraction(r)
    p = prec or start_precision(sys, n)
    one = 1 << p
    x0lo, x0hi = CertifiedPoint.exact(x0, p).lo, CertifiedPoint.exact(x0, p).hi
    rlo = (r * one).__floor__()
    psi_lo, psi_hi = _psi_bounds(psi, n, p)
    in_E = inner = outer_bad = inner_bad = 0
    k = kernel(sys, p)
    for i in range(samples):
        x = sample(sys, seed, i, p)
        try:
            flo, fhi = eval_bounds(f, x.lo, x.hi, p)
            lo, hi = x.lo, x.hi
            for _ in range(n):
                _, lo, hi = k.step(lo, hi)
        except (BranchStraddle, PieceStraddle):
            continue
        # certified membership in E: |f(x) - x0| < r
        if max(fhi - x0lo, x0hi - flo) >= rlo:
            continue
        in_E += 1
        code = classify(sys, f, psi, lambda q: sample(sys, seed, i, q), [n], p)[n]
        dlo = max(0, lo - x0hi, x0lo - hi)
        dhi = max(hi - x0lo, x0hi - lo)
        r_hi = -((-r * one).__floor__())
        if dhi + r_hi < psi_lo:
            inner += 1
            if code != HIT:
                inner_bad += 1
        if code == HIT and dlo >= psi_hi + r_hi:
            outer_bad += 1
    return in_E, inner, outer_bad, inner_bad


def chung_erdos_bound(mu_vec, joint):
    """max over N of (sum_{n<=N} mu_n)^2 / sum_{n,m<=N} joint[n][m]."""
    mu = np.asarray(mu_vec, dtype=float)
    J = np.asarray(joint, dtype=float)
    if J.shape != (len(mu), len(mu)):
        raise ValueError("joint must be a square matrix matching mu_vec")
    if not np.allclose(J, J.T):
        raise ValueError("joint must be symmetric")
    if not np.allclose(np.diag(J), mu):
        raise ValueError("joint diagonal must equal mu_vec")
    num = np.cumsum(mu) ** 2
    den = np.cumsum(np.cumsum(J, axis=0), axis=1).diagonal()
    ok = den > 0
    if not ok.any():
        raise ZeroDenominator("all joint entries are zero")
    return float(np.max(num[ok] / den[ok]))


def posmeas_bound(s1, s2):
    """s1^2 / (2 s2), returned unclamped."""
    if not (s1 > 0 and s2 > 0):
        raise ValueError("s1 and s2 must be positive")
    return s1 * s1 / (2 * s2)
