"""Exact A_n for x -> b x mod 1 (integer b) and piecewise-affine twists.

On the branch [k/B, (k+1)/B) with B = b^n we have T^n x = B x - k, and on
each affine piece f(x) = a x + c.  The condition |T^n x - f(x)| < psi then
becomes the linear inequality |(B - a) x - (k + c)| < psi.  Each branch is
solved with Fractions, so Leb(A_n) is exact.
"""

from fractions import Fraction
import math

from .algebraic import AlgebraicReal
from .errors import Unsupported
from .targets import eval_exact


def affine_pieces(f, lo=Fraction(0), hi=Fraction(1)):
    """List of (lo, hi, a, c) with f(x) = a x + c on [lo, hi)."""
    fam = f.family
    if fam == "identity":
        return [(lo, hi, Fraction(1), Fraction(0))]
    if fam == "constant":
        if isinstance(f.y, AlgebraicReal):
            raise Unsupported("the exact oracle needs a rational constant")
        return [(lo, hi, Fraction(0), f.y)]
    if fam == "affine":
        a, b = f.a, f.b
        if f.mod1:
            out = []
            for plo, phi, _ in f.piece_table():
                plo, phi = max(plo, lo), min(phi, hi)
                if phi <= plo:
                    continue
                j = math.floor(a * (plo + phi) / 2 + b)
                out.append((plo, phi, a, b - j))
            return out
        # clipped to [0, 1]
        if a == 0:
            return [(lo, hi, Fraction(0), min(max(b, Fraction(0)), Fraction(1)))]
        cuts = sorted({lo, hi} | {x for x in ((0 - b) / a, (1 - b) / a) if lo < x < hi})
        out = []
        for plo, phi in zip(cuts, cuts[1:]):
            v = a * (plo + phi) / 2 + b
            if v < 0:
                out.append((plo, phi, Fraction(0), Fraction(0)))
            elif v > 1:
                out.append((plo, phi, Fraction(0), Fraction(1)))
            else:
                out.append((plo, phi, a, b))
        return out
    if fam == "piecewise":
        out = []
        for plo, phi, g in sorted(f.pieces, key=lambda p: p[0]):
            plo, phi = max(plo, lo), min(phi, hi)
            if phi > plo:
                out.extend(affine_pieces(g, plo, phi))
        return out
    raise Unsupported(f"no exact oracle for twist family {fam!r}")


def _branch_solutions(B, k, pieces, psi):
    cell_lo, cell_hi = Fraction(k, B), Fraction(k + 1, B)
    out = []
    for plo, phi, a, c in pieces:
        lo, hi = max(cell_lo, plo), min(cell_hi, phi)
        if hi <= lo:
            continue
        slope = B - a
        if slope == 0:
            if abs(k + c) < psi:
                out.append((lo, hi))
            continue
        u, v = (k + c - psi) / slope, (k + c + psi) / slope
        if slope < 0:
            u, v = v, u
        u, v = max(u, lo), min(v, hi)
        if v > u:
            out.append((u, v))
    return out


def An_intervals(b, f, psi_n, n):
    """Sorted disjoint intervals whose union is A_n (up to endpoints)."""
    B = b ** n
    pieces = affine_pieces(f)
    psi_n = Fraction(psi_n)
    out = []
    for k in range(B):
        out.extend(_branch_solutions(B, k, pieces, psi_n))
    out.sort()
    return out


def An_branch_table(b, f, psi_n, n):
    """Rows (branch k, lo, hi, length) of the exact solve."""
    B = b ** n
    pieces = affine_pieces(f)
    rows = []
    for k in range(B):
        for lo, hi in _branch_solutions(B, k, pieces, Fraction(psi_n)):
            rows.append((k, lo, hi, hi - lo))
    return rows


def leb(intervals):
    return sum((hi - lo for lo, hi in intervals), Fraction(0))


def intersect(xs, ys):
    """Intersection of two sorted disjoint interval lists."""
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        lo = max(xs[i][0], ys[j][0])
        hi = min(xs[i][1], ys[j][1])
        if hi > lo:
            out.append((lo, hi))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _psi_exact(psi, n):
    v = eval_exact(psi, n)
    if v is None:
        raise Unsupported("the exact oracle needs rational psi(n)")
    return v


def _base(sys):
    if sys.kind != "beta" or not sys.param.is_integer:
        raise Unsupported("the exact oracle covers integer beta only")
    return int(sys.param.lo)


def An_measure(sys, f, psi, n):
    """Exact Leb(A_n) = mu(A_n) for an integer beta-map."""
    return leb(An_intervals(_base(sys), f, _psi_exact(psi, n), n))


def joint_measure(sys, f, psi, m, n):
    """Exact mu(A_m ∩ A_n)."""
    b = _base(sys)
    return leb(intersect(An_intervals(b, f, _psi_exact(psi, m), m),
                         An_intervals(b, f, _psi_exact(psi, n), n)))
