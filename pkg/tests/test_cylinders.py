from fractions import Fraction
from itertools import product
import math

import pytest

from twistrec.algebraic import GOLDEN, TRIBONACCI
from twistrec.cylinders import (beta_cylinder, count_cylinders, cylinders_of_order, full_subcylinder,
                                gauss_tail_mass, is_admissible, kj_sum, min_kj, parry_digits)
from twistrec.errors import ExplosionGuard
from twistrec.systems import parse_system

PHI = (1 + 5 ** .5) / 2


def fib(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def test_beta2_order3_dyadic():
    cyl = list(cylinders_of_order(parse_system("beta:2"), 3))
    assert len(cyl) == 8
    assert [w.digits for w, _ in cyl] == sorted(product((0, 1), repeat=3))
    for k, (_, g) in enumerate(cyl):
        assert (Fraction(g.left), Fraction(g.right)) == (Fraction(k, 8), Fraction(k + 1, 8))
        assert g.is_full and g.k_j == 8


def test_golden_counts_are_fibonacci():
    g = parse_system("beta:golden")
    assert len(list(cylinders_of_order(g, 5))) == 13
    assert [count_cylinders(g, m) for m in range(1, 15)] == [fib(m + 2) for m in range(1, 15)]


def test_cantor_order2():
    cyl = list(cylinders_of_order(parse_system("ifs:cantor3"), 2))
    assert len(cyl) == 4
    assert all(g.mu == Fraction(1, 4) and g.k_j == 9 for _, g in cyl)


def test_parry_codings():
    p = parry_digits(GOLDEN, 8)
    assert p.xi[:4] == (1, 1, 0, 0) and p.m_xi == 2 and p.status == "eventually_zero"
    assert p.star(8) == (1, 0, 1, 0, 1, 0, 1, 0)
    t = parry_digits(TRIBONACCI, 9)
    assert t.xi[:4] == (1, 1, 1, 0) and t.m_xi == 3
    assert t.star(9) == (1, 1, 0, 1, 1, 0, 1, 1, 0)
    s = parry_digits(parse_system("beta:1.9").param, 12)
    assert s.status == "not_eventually_zero"


def test_admissibility_examples():
    gp = parry_digits(GOLDEN, 16)
    assert not is_admissible((1, 1), gp)
    assert is_admissible((1, 0, 1), gp)
    assert all(is_admissible((0,) * k, gp) for k in range(1, 12))
    bp = parry_digits(parse_system("beta:2").param, 8)
    assert all(is_admissible(w, bp) for w in product((0, 1), repeat=6))


@pytest.mark.parametrize("name", ["beta:golden", "beta:tribonacci", "beta:1.9", "beta:quad:2,1"])
def test_admissibility_iff_nonempty(name):
    sys = parse_system(name)
    parry = parry_digits(sys.param, 40)
    nb = sys.branch_count
    m_max = 14 if name == "beta:golden" else 9
    for m in range(1, m_max + 1, 4 if m_max > 9 else 2):
        for w in product(range(nb), repeat=m):
            assert is_admissible(w, parry) == (beta_cylinder(sys, w) is not None), w


@pytest.mark.parametrize("name", ["beta:golden", "beta:tribonacci", "beta:1.9", "beta:2.5"])
def test_partition_and_nesting(name):
    sys = parse_system(name)
    for m in range(1, 8):
        cyl = list(cylinders_of_order(sys, m))
        total = math.fsum(float(g.right - g.left) for _, g in cyl)
        assert abs(total - 1) < 1e-12
        for (_, a), (_, b) in zip(cyl, cyl[1:]):
            assert abs(float(a.right) - float(b.left)) < 1e-15
        if m > 1:
            parents = {w.digits: g for w, g in cylinders_of_order(sys, m - 1)}
            for w, g in cyl:
                p = parents[w.digits[:-1]]
                assert float(p.left) - 1e-15 <= float(g.left) and float(g.right) <= float(p.right) + 1e-15


@pytest.mark.parametrize("name", ["beta:golden", "beta:tribonacci", "beta:1.9"])
def test_fullness_matches_length(name):
    sys = parse_system(name)
    b = float(sys.param)
    for m in range(1, 9):
        for _, g in cylinders_of_order(sys, m):
            length = float(g.right) - float(g.left)
            if g.is_full:
                assert abs(length - b ** -m) < 1e-14
            else:
                assert length < b ** -m * (1 - 1e-9)


def test_full_subcylinder_examples():
    b2 = parse_system("beta:2")
    assert full_subcylinder(b2, (1, 0, 1)).digits == (1, 0, 1)
    g = parse_system("beta:golden")
    assert full_subcylinder(g, (1,)).digits == (1, 0)
    geom = beta_cylinder(g, (1, 0))
    assert abs(float(geom.right) - float(geom.left) - PHI ** -2) < 1e-15
    assert full_subcylinder(g, (0,)).digits == (0,)


def test_kj_sums():
    assert kj_sum(parse_system("ifs:cantor3"), 6) == 1
    assert kj_sum(parse_system("beta:2"), 10) == 1
    v = float(kj_sum(parse_system("beta:golden"), 10))
    assert abs(v - fib(12) * PHI ** -10) < 1e-12
    assert abs(v - 1.1708) < 1e-3


def test_min_kj_growth():
    for name, base in (("beta:2", 2.0), ("beta:golden", PHI), ("ifs:cantor3", 3.0)):
        sys = parse_system(name)
        prev = 0
        for m in range(1, 21):
            k = float(min_kj(sys, m))
            assert abs(k - base ** m) <= 1e-9 * base ** m
            assert k > prev
            prev = k
    rot = parse_system("rotation:golden")
    assert all(float(min_kj(rot, m)) == 1 for m in range(1, 6))


def test_cylinder_diameter_bound():
    # diam(J) <= K1 diam(X) / K_J with K1 = 1 for piecewise-linear maps
    for name in ("beta:golden", "beta:2", "ifs:cantor3"):
        sys = parse_system(name)
        for m in (3, 6):
            for _, g in cylinders_of_order(sys, m):
                assert float(g.right) - float(g.left) <= float(sys.diam) / float(g.k_j) + 1e-15


def test_gauss_cylinders_and_tail():
    g = parse_system("gauss")
    cyl = list(cylinders_of_order(g, 1, digit_cap=50))
    total = sum(float(c.mu) for _, c in cyl)
    assert abs(total + gauss_tail_mass(50) - 1) < 1e-12
    assert abs(gauss_tail_mass(50) - math.log2(1 + 1 / 51)) < 1e-15
    for w, c in cylinders_of_order(g, 2, digit_cap=6):
        # |(T^2)'(x)| = 1/(x T(x))^2 must be at least K_J on the cylinder
        for t in (Fraction(1, 100), Fraction(1, 2), Fraction(99, 100)):
            x = c.left + t * (c.right - c.left)
            tx = 1 / x - math.floor(1 / x)
            assert 1 / (x * tx) ** 2 >= c.k_j


def test_explosion_guard():
    with pytest.raises(ExplosionGuard):
        list(cylinders_of_order(parse_system("beta:2"), 30, cap=1000))
