"""Acceptance checks, one per criterion.

Each check prints a single ``CRITERION k: PASS|FAIL`` line with the measured
numbers, then asserts.  Run directly with ``python3 tests/test_acceptance.py``
for the summary lines alone, or through pytest.
"""

from collections import defaultdict
from fractions import Fraction
import math
import os
import tempfile
import time

import mpmath
import numpy as np

from twistrec import cli, conditions as cd, cylinders as cy, estimators as es, oracle, targets, twists
from twistrec.algebraic import GOLDEN_ALPHA
from twistrec.measures import wilson_interval
from twistrec.systems import parse_system

Z3 = 0.9973002039367398  # two-sided confidence of +-3 sigma

# regression pins for the quasi-independence ratio; first run gave 4.935 and 1.038.
# For beta:2 the ratio sits near 4 since mu(A_n) is about 2 psi(n); the rest is sampling noise.
RATIO_PIN = {"beta:2": 6.0, "ifs:cantor3": 1.5}


def report(k, ok, detail):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line, flush=True)
    return ok, line


# -- 1 ---------------------------------------------------------------------------------------

def check_1():
    t0 = time.time()
    b2 = parse_system("beta:2")
    psi = targets.power(Fraction(1, 100), 1)
    ns = [5, 10, 15]
    est = es.estimate_mu_An_sweep(b2, twists.identity(), psi, ns, 100_000, 1)
    parts, ok = [], True
    for n in ns:
        exact = oracle.An_measure(b2, twists.identity(), psi, n)
        lo, hi = wilson_interval(est[n].hits, est[n].n_samples, Z3)
        inside = lo <= float(exact) <= hi
        ok &= inside
        parts.append(f"n={n} mc={est[n].mean:.6f} exact={float(exact):.6f} 3sd=[{lo:.6f},{hi:.6f}]")
    dt = time.time() - t0
    ok &= dt < 30
    return report(1, ok, "; ".join(parts) + f"; runtime={dt:.1f}s (<30s)")


# -- 2 ---------------------------------------------------------------------------------------

def check_2():
    b2 = parse_system("beta:2")
    r = Fraction(1, 20)
    ns = list(range(5, 21))
    est = es.estimate_mu_An_sweep(b2, twists.constant(Fraction(3, 10)), targets.constant(r), ns, 100_000, 2)
    worst, ok = 0.0, True
    for n in ns:
        lo, hi = wilson_interval(est[n].hits, est[n].n_samples, Z3)
        ok &= lo <= 2 * r <= hi
        sd = math.sqrt(0.1 * 0.9 / 100_000)
        worst = max(worst, abs(est[n].mean - 0.1) / sd)
    return report(2, ok, f"f=const(0.3), r=0.05, n=5..20: max |mean-2r| = {worst:.2f} sd (limit 3)")


# -- 3 ---------------------------------------------------------------------------------------

def check_3():
    t0 = time.time()
    g = parse_system("beta:golden")
    f = twists.affine(1, Fraction(3, 10), True)
    N = 2 ** 12
    div = es.hit_statistics(g, f, targets.power(Fraction(1, 2), 1), N, 1000, 3)
    conv = es.hit_statistics(g, f, targets.power(1, Fraction(3, 2)), N, 1000, 3)
    dt = time.time() - t0
    ok_div = div.tail_fraction >= 0.90
    ok_conv = conv.tail_fraction_high <= 0.05
    ok = ok_div and ok_conv and dt < 300
    return report(3, ok, f"power(0.5,1) tail fraction={div.tail_fraction:.3f} (need >=0.90, "
                         f"{'ok' if ok_div else 'fails'}); power(1,1.5) tail fraction={conv.tail_fraction_high:.3f} "
                         f"(need <=0.05, {'ok' if ok_conv else 'fails'}); runtime={dt:.0f}s (<300s)")


# -- 4 ---------------------------------------------------------------------------------------

def check_4():
    b2 = parse_system("beta:2")
    psi = targets.power(Fraction(1, 4), 1)
    N = 2 ** 10
    st = es.hit_statistics(b2, twists.identity(), psi, N, 2000, 4)
    target = 2 * targets.series_partial(psi, 1, N)
    rel = abs(st.sum_mu_hat - target) / target
    return report(4, rel <= 0.25, f"sum mu_hat(A_n)={st.sum_mu_hat:.4f} vs 2 sum psi={target:.4f}, "
                                  f"relative gap {rel:.3f} (limit 0.25)")


# -- 5 ---------------------------------------------------------------------------------------

def check_5():
    psi = targets.power(Fraction(1, 4), Fraction(1, 2))
    pairs = [(m, n) for m in range(10, 41) for n in range(m + 1, 41)]
    parts, ok = [], True
    for name in ("beta:2", "ifs:cantor3"):
        sys_ = parse_system(name)
        reps = es.pairwise_grid(sys_, twists.identity(), psi, pairs, 20_000, 5)
        top = max(r.ratio for r in reps)
        by_gap = defaultdict(float)
        for r in reps:
            by_gap[r.n - r.m] = max(by_gap[r.n - r.m], r.ratio)
        # no growth with n - m: the widest gaps stay under the pin as well
        tail = max(by_gap[d] for d in range(20, 31))
        good = top <= RATIO_PIN[name] and tail <= RATIO_PIN[name]
        ok &= good
        parts.append(f"{name}: max ratio={top:.3f} (pin {RATIO_PIN[name]}), max over n-m>=20={tail:.3f}")
    b2 = parse_system("beta:2")
    f = twists.constant(Fraction(1, 2))
    dy = targets.table([Fraction(1, 8)] * 5 + [Fraction(1, 16)] * 7)
    mm, mn = oracle.An_measure(b2, f, dy, 5), oracle.An_measure(b2, f, dy, 12)
    joint = oracle.joint_measure(b2, f, dy, 5, 12)
    exact = joint == mm * mn
    ok &= exact
    parts.append(f"dyadic oracle joint={joint} = {mm}*{mn}: {exact}")
    return report(5, ok, "; ".join(parts))


# -- 6 ---------------------------------------------------------------------------------------

def _fib(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def check_6():
    g = parse_system("beta:golden")
    beta = g.param
    parry = cy.parry_digits(beta, 40)
    counts_ok = sum_ok = True
    worst_sum = 0.0
    for m in range(1, 21):
        cyl = list(cy.cylinders_of_order(g, m))
        counts_ok &= len(cyl) == _fib(m + 2)
        with mpmath.workprec(160):
            total = mpmath.fsum(mpmath.mpf(c.right) - mpmath.mpf(c.left) for _, c in cyl)
        worst_sum = max(worst_sum, abs(float(total) - 1))
        if m <= 14:
            words = np.array(np.meshgrid(*[[0, 1]] * m, indexing="ij")).reshape(m, -1).T
            adm = sum(1 for w in words if cy.is_admissible(tuple(int(d) for d in w), parry))
            counts_ok &= adm == _fib(m + 2)
    sum_ok = worst_sum <= 1e-12
    prop_ok = full_ok = True
    checked = 0
    with mpmath.workprec(160):
        b = beta.mpf(160)
    for m in range(1, 13):
        for w, geom in cy.cylinders_of_order(g, m):
            with mpmath.workprec(160):
                lj = mpmath.mpf(geom.right) - mpmath.mpf(geom.left)
                full_len = b ** (-m)
                # fullness: exact flag against the realized length
                if geom.is_full:
                    full_ok &= abs(lj - full_len) < full_len * mpmath.mpf(2) ** -100
                else:
                    full_ok &= lj < full_len * (1 - mpmath.mpf(2) ** -60)
                iw = cy.full_subcylinder(g, w.digits)
                ig = cy.beta_cylinder(g, iw.digits)
                li = mpmath.mpf(ig.right) - mpmath.mpf(ig.left)
                prop_ok &= (iw.digits[:m] == w.digits and ig.is_full
                            and mpmath.mpf(ig.left) >= mpmath.mpf(geom.left) - mpmath.mpf(2) ** -120
                            and mpmath.mpf(ig.right) <= mpmath.mpf(geom.right) + mpmath.mpf(2) ** -120
                            and li >= lj / b * (1 - mpmath.mpf(2) ** -100))
            checked += 1
    ok = counts_ok and sum_ok and prop_ok and full_ok
    return report(6, ok, f"Fibonacci counts m<=20: {counts_ok}; max |sum Leb - 1|={worst_sum:.1e}; "
                         f"full subcylinder with Leb(I)>=Leb(J)/beta for all {checked} J (m<=12): {prop_ok}; "
                         f"fullness exact: {full_ok}")


# -- 7 ---------------------------------------------------------------------------------------

def check_7():
    parts, ok = [], True
    for name in ("beta:2", "beta:3", "beta:golden", "beta:tribonacci", "gauss"):
        pm = cd.check_pseudo_markov(parse_system(name))
        ok &= pm["holds"]
        parts.append(f"{name} holds={pm['holds']}" + (f" witness={tuple(pm['witness'])}" if pm["witness"] else ""))
    pm = cd.check_pseudo_markov(parse_system("beta:1.9"))
    good = pm["holds"] is False and pm["witness"] is not None
    ok &= good
    parts.append(f"beta:1.9 holds={pm['holds']} witness={tuple(pm['witness']) if pm['witness'] else None}")
    c = parse_system("ifs:cantor3")
    kj = all(cy.kj_sum(c, m) == 1 for m in range(1, 11))
    ok &= kj
    parts.append(f"cantor3 sum K_J^-delta == 1 for m<=10: {kj}")
    mix = [(n, cd.estimate_mixing(c, n)["a_n"]) for n in (1, 2, 4, 8, 10)]
    mix_ok = all(a <= 4 * 2.0 ** -n for n, a in mix)
    ok &= mix_ok
    parts.append("cantor3 a_n<=4*2^-n: " + ", ".join(f"n={n}:{a:.2e}" for n, a in mix))
    gauss = parse_system("gauss")
    e1, e2 = 1 / (2 * math.log(2)), 1 / math.log(2)
    rows = []
    for r in (1e-2, 1e-3, 1e-4):
        a = cd.check_ahlfors(gauss, radii=[r])
        rows.append((r, a["eta1"], a["eta2"]))
    _, g1, g2 = rows[-1]
    ah_ok = abs(g1 - e1) / e1 <= 0.05 and abs(g2 - e2) / e2 <= 0.05
    ok &= ah_ok
    parts.append("gauss eta1/eta2 by radius: " + ", ".join(f"{r:g}:{x:.4f}/{y:.4f}" for r, x, y in rows)
                 + f" -> within 5%: {ah_ok}")
    return report(7, ok, "; ".join(parts))


# -- 8 ---------------------------------------------------------------------------------------

def check_8():
    rot = parse_system("rotation:golden")
    psi = targets.power(Fraction(1, 5), 1)
    N = 2 ** 14
    # all partial quotients of alpha are 1, so ||n alpha|| > 1/(3n) > 0.2/n for every n
    prefix = 0
    st = es.hit_statistics(rot, twists.identity(), psi, N, 48, 8)
    hits = {r.hit_times for r in st.records}
    identical = len(hits) == 1
    beyond = max((n for r in st.records for n in r.hit_times), default=0)
    a = float(GOLDEN_ALPHA)
    float_min = min(n * abs(n * a - round(n * a)) for n in range(1, N + 1))
    rep = cd.condition_report(rot, m_max=4, mixing_ns=(1, 2))
    flagged = any("expansion condition fails" in f for f in rep["flags"])
    v = es.verdict(rot, twists.identity(), psi, N, 48, 8, stats=st)
    nonapp = any("zero-one law not applicable" in f for f in v.evidence["flags"])
    ok = beyond <= prefix and identical and flagged and nonapp
    return report(8, ok, f"last hit time={beyond} (prefix {prefix}); min n*||n alpha|| over n<=2^14 = {float_min:.4f} "
                         f"> 0.2; records identical: {identical}; expansion failure flagged: {flagged}; "
                         f"verdict={v.cls} with non-applicability flag: {nonapp}")


# -- 9 ---------------------------------------------------------------------------------------

def check_9():
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in (1, 4, 8):
            d = os.path.join(tmp, str(k))
            rc = cli.main(["measure", "--system", "beta:golden", "--f", "affine:1,0.3,mod1", "--psi", "power:0.5,1",
                           "--samples", "3000", "--seed", "9", "--threads", str(k), "--out", d,
                           "--set", "measure.ns=1,8,64,256"])
            with open(os.path.join(d, "measure.csv"), "rb") as fh:
                outs.append((rc, fh.read()))
    same = all(o == outs[0] for o in outs) and outs[0][0] == 0
    flips = decided = 0
    for name, f, psi, ns in (("beta:golden", twists.affine(1, Fraction(3, 10), True), targets.power(Fraction(1, 2), 1),
                              list(range(1, 129))),
                             ("gauss", twists.identity(), targets.power(Fraction(1, 2), 1), list(range(1, 33)))):
        s = parse_system(name)
        p = es.start_precision(s, ns[-1])
        _, a = es.code_matrix(s, f, psi, ns, 500, 19, prec=p, max_prec=p)
        _, b = es.code_matrix(s, f, psi, ns, 500, 19, prec=2 * p, max_prec=2 * p)
        both = (a != es.INDET) & (b != es.INDET)
        flips += int(np.count_nonzero(a[both] != b[both]))
        decided += int(np.count_nonzero(a != es.INDET))
    ok = same and flips == 0
    return report(9, ok, f"measure.csv identical for 1/4/8 workers: {same}; hit/miss flips under doubled "
                         f"precision: {flips} of {decided} decided tests (1000 points)")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9]


def test_criterion_1(capsys):
    with capsys.disabled():
        ok, _ = check_1()
    assert ok


def test_criterion_2(capsys):
    with capsys.disabled():
        ok, _ = check_2()
    assert ok


def test_criterion_3(capsys):
    with capsys.disabled():
        ok, _ = check_3()
    assert ok


def test_criterion_4(capsys):
    with capsys.disabled():
        ok, _ = check_4()
    assert ok


def test_criterion_5(capsys):
    with capsys.disabled():
        ok, _ = check_5()
    assert ok


def test_criterion_6(capsys):
    with capsys.disabled():
        ok, _ = check_6()
    assert ok


def test_criterion_7(capsys):
    with capsys.disabled():
        ok, _ = check_7()
    assert ok


def test_criterion_8(capsys):
    with capsys.disabled():
        ok, _ = check_8()
    assert ok


def test_criterion_9(capsys):
    with capsys.disabled():
        ok, _ = check_9()
    assert ok


if __name__ == "__main__":
    results = [chk()[0] for chk in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
