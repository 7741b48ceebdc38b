from fractions import Fraction
import math

import numpy as np
import pytest

from twistrec import estimators as es, oracle, targets, twists
from twistrec.algebraic import GOLDEN_ALPHA
from twistrec.errors import IndeterminateExcess, Unsupported, ZeroDenominator
from twistrec.measures import wilson_interval
from twistrec.systems import parse_system

Z3 = 0.9973002039367398    # two-sided confidence of +-3 sigma


@pytest.fixture(scope="module")
def b2():
    return parse_system("beta:2")


# -- exact oracle ------------------------------------------------------------------------

def _clipped_fixed_point_sum(B, psi):
    # A_n for f = id: neighbourhoods of k/(B-1) of radius psi/(B-1), kept inside branch k
    total = Fraction(0)
    for k in range(B):
        c, w = Fraction(k, B - 1), psi / (B - 1)
        lo, hi = max(c - w, Fraction(k, B), Fraction(0)), min(c + w, Fraction(k + 1, B), Fraction(1))
        total += max(hi - lo, 0)
    return total


@pytest.mark.parametrize("n", [1, 3, 5, 8, 10])
def test_oracle_identity_matches_fixed_point_formula(b2, n):
    psi = targets.power(Fraction(1, 100), 1)
    assert oracle.An_measure(b2, twists.identity(), psi, n) == _clipped_fixed_point_sum(2 ** n, Fraction(1, 100 * n))


def test_oracle_frozen_value(b2):
    v = oracle.An_measure(b2, twists.identity(), targets.power(Fraction(1, 100), 1), 10)
    assert v == Fraction(43647, 21824000)
    assert abs(float(v) - 0.002) < 1e-7


def test_oracle_constant_target_is_ball(b2):
    f = twists.constant(Fraction(3, 10))
    for n in (1, 4, 9):
        assert oracle.An_measure(b2, f, targets.constant(Fraction(1, 20)), n) == Fraction(1, 10)
    # clipped at the endpoint
    assert oracle.An_measure(b2, twists.constant(0), targets.constant(Fraction(1, 20)), 6) == Fraction(1, 20)


def test_oracle_dyadic_independence(b2):
    f = twists.constant(Fraction(1, 2))
    psi = targets.table([Fraction(1, 8)] * 5 + [Fraction(1, 16)] * 7)
    m5 = oracle.An_measure(b2, f, psi, 5)
    m12 = oracle.An_measure(b2, f, psi, 12)
    assert (m5, m12) == (Fraction(1, 4), Fraction(1, 8))
    assert oracle.joint_measure(b2, f, psi, 5, 12) == m5 * m12


def test_oracle_rejects_unsupported():
    with pytest.raises(Unsupported):
        oracle.An_measure(parse_system("beta:golden"), twists.identity(), targets.power(1, 1), 3)
    with pytest.raises(Unsupported):
        oracle.An_measure(parse_system("beta:2"), twists.sqrt_twist(), targets.power(1, 1), 3)


def test_affine_pieces_reproduce_twist():
    f = twists.affine(3, Fraction(-1, 2), True)
    for lo, hi, a, c in oracle.affine_pieces(f):
        x = (lo + hi) / 2
        v = 3 * x - Fraction(1, 2)
        assert a * x + c == v - math.floor(v)


# -- hit tests ---------------------------------------------------------------------------

def test_hit_test_examples(b2):
    assert es.hit_test(b2, twists.identity(), targets.constant(Fraction(1, 10)), Fraction(1, 3), 2) == "hit"
    rot = parse_system("rotation:golden")
    assert es.hit_test(rot, twists.identity(), targets.power(Fraction(1, 5), 1), Fraction(1, 10), 1) == "miss"
    gauss = parse_system("gauss")
    f = twists.constant(GOLDEN_ALPHA)
    for n in (1, 7, 60):
        assert es.hit_test(gauss, f, targets.power(Fraction(1, 10 ** 6), 1), GOLDEN_ALPHA, n) == "hit"


def test_hit_test_boundary_is_indeterminate_not_wrong(b2):
    # T x = 2/3 for x = 1/3, so d(Tx, x) = 1/3 exactly: psi = 1/3 is a miss, never a hit
    r = es.hit_test(b2, twists.identity(), targets.constant(Fraction(1, 3)), Fraction(1, 3), 1)
    assert r in ("miss", "indeterminate")


def test_classify_is_stable_under_precision(b2):
    sys = parse_system("beta:golden")
    f = twists.affine(1, Fraction(3, 10), True)
    psi = targets.power(Fraction(1, 2), 1)
    ns = list(range(1, 65))
    _, a = es.code_matrix(sys, f, psi, ns, 300, 9)
    _, b = es.code_matrix(sys, f, psi, ns, 300, 9, prec=2 * es.start_precision(sys, 64))
    decided = (a != es.INDET) & (b != es.INDET)
    assert np.array_equal(a[decided], b[decided])


# -- estimates -----------------------------------------------------------------------------

@pytest.mark.parametrize("f", [twists.identity(), twists.constant(Fraction(3, 10)),
                               twists.affine(1, Fraction(3, 10), True)])
def test_mc_agrees_with_oracle(b2, f):
    psi = targets.power(Fraction(1, 20), 1)
    ns = [3, 7, 12]
    est = es.estimate_mu_An_sweep(b2, f, psi, ns, 20000, 17)
    for n in ns:
        exact = float(oracle.An_measure(b2, f, psi, n))
        lo, hi = wilson_interval(est[n].hits, est[n].n_samples, Z3)
        assert lo <= exact <= hi, (n, est[n].mean, exact)


def test_everything_hits_when_psi_exceeds_diameter(b2):
    e = es.estimate_mu_An(b2, twists.identity(), targets.constant(2), 5, 500, 1)
    assert e.mean == 1
    r = es.estimate_pairwise(b2, twists.identity(), targets.constant(2), 2, 5, 500, 1)
    assert r.est_joint.mean == 1 == r.marg_m.mean * r.marg_n.mean


def test_samples_precondition(b2):
    with pytest.raises(ValueError):
        es.estimate_mu_An(b2, twists.identity(), targets.constant(1), 5, 50, 1)


def test_indeterminate_excess_is_raised():
    col = np.array([es.INDET] * 5 + [es.MISS] * 95, dtype=np.int8)
    with pytest.raises(IndeterminateExcess):
        es._estimate_from_column(col, 0, 0.95)
    e = es._estimate_from_column(np.array([es.INDET] + [es.HIT] * 10 + [es.MISS] * 189, dtype=np.int8), 0, 0.95)
    assert e.indeterminate_count == 1 and e.hits == 10
    assert e.ci_high >= wilson_interval(10, 200)[1]


def test_pairwise_cantor_uses_closed_form():
    c = parse_system("ifs:cantor3")
    psi = targets.power(Fraction(1, 4), Fraction(1, 2))
    r = es.estimate_pairwise(c, twists.identity(), psi, 5, 15, 400, 3)
    assert r.a_source == "closed_form"
    d = float(c.delta)
    pm, pn = targets.eval(psi, 5) ** d, targets.eval(psi, 15) ** d
    expected = pm * pn + 4 * 2.0 ** -10 * pn + 4 * 2.0 ** -15 * pm
    assert abs(r.bound_value - expected) < 1e-15
    assert r.ratio == r.est_joint.mean / r.bound_value


def test_workers_do_not_change_results(b2):
    sys = parse_system("beta:golden")
    f = twists.affine(1, Fraction(3, 10), True)
    psi = targets.power(Fraction(1, 2), 1)
    _, a = es.code_matrix(sys, f, psi, range(1, 33), 301, 4, workers=1)
    _, b = es.code_matrix(sys, f, psi, range(1, 33), 301, 4, workers=3)
    assert np.array_equal(a, b)


# -- hit statistics and verdicts ---------------------------------------------------------------

def test_rotation_records_identical():
    rot = parse_system("rotation:golden")
    st = es.hit_statistics(rot, twists.identity(), targets.power(Fraction(1, 2), 1), 512, 30, 2)
    times = {r.hit_times for r in st.records}
    assert len(times) == 1
    # x-free oracle: n ||n alpha|| < 1/2
    a = float(GOLDEN_ALPHA)
    ref = tuple(n for n in range(1, 513) if abs(n * a - round(n * a)) < 0.5 / n)
    assert times.pop() == ref


def test_hit_statistics_convergent_tail(b2):
    st = es.hit_statistics(b2, twists.identity(), targets.power(1, 2), 2 ** 12, 300, 5)
    assert st.tail_fraction <= 0.01
    assert all(set(r.hit_times).isdisjoint(r.indeterminate_times) for r in st.records)
    assert all(1 <= n <= 2 ** 12 for r in st.records for n in r.hit_times)


def test_verdict_flags_rotation():
    rot = parse_system("rotation:golden")
    v = es.verdict(rot, twists.identity(), targets.power(Fraction(1, 5), 1), 1024, 20, 0)
    assert v.cls == "empirically_null"
    assert v.evidence["series_class"] == "divergent"
    assert any("zero-one law not applicable" in f for f in v.evidence["flags"])


def test_verdict_null_for_convergent_series():
    g = parse_system("beta:golden")
    v = es.verdict(g, twists.affine(1, Fraction(3, 10), True), targets.power(1, Fraction(3, 2)), 1024, 200, 0)
    assert v.cls == "empirically_null"
    assert set(v.evidence) >= {"class", "tail_fraction", "sums", "thresholds", "flags"}


# -- bounds ----------------------------------------------------------------------------------

def test_chung_erdos_examples():
    assert abs(es.chung_erdos_bound([0.5, 0.5], [[0.5, 0.25], [0.25, 0.5]]) - 2 / 3) < 1e-15
    p = 0.3
    J = np.full((6, 6), p)
    assert abs(es.chung_erdos_bound([p] * 6, J) - p) < 1e-15
    q = 0.1
    J = np.full((100, 100), q * q)
    np.fill_diagonal(J, q)
    assert abs(es.chung_erdos_bound([q] * 100, J) - 100 / 109) < 1e-12
    with pytest.raises(ZeroDenominator):
        es.chung_erdos_bound([0, 0], [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        es.chung_erdos_bound([0.5, 0.5], [[0.5, 0.1], [0.2, 0.5]])


def test_posmeas_examples():
    assert es.posmeas_bound(1, 1) == 0.5
    assert es.posmeas_bound(2, 1) == 2
    assert es.posmeas_bound(0.5, 0.125) == 1.0
    with pytest.raises(ValueError):
        es.posmeas_bound(0, 1)


def test_corridor_and_radius():
    lo, hi = es.corridor(2, 2, 1, 1, 10.0, 0.0)
    assert abs(lo - 2 * 0.1 * 10) < 1e-12 and abs(hi - 1.5 * 2 * 5 * 10) < 1e-12
    assert es.cluster_radius(0.01, 8, 1) == 0.02 / 7
    with pytest.raises(ValueError):
        es.cluster_radius(0.01, 1, 1)


def test_sandwich_inclusions(b2):
    psi = targets.constant(Fraction(1, 10))
    in_e, inner, outer_bad, inner_bad = es.sandwich_check(
        b2, twists.affine(1, Fraction(3, 10), True), psi, Fraction(1, 2), Fraction(1, 50), 6, 4000, 8)
    assert in_e > 0 and inner > 0
    assert outer_bad == 0 and inner_bad == 0
