from __future__ import annotations

import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sympy_charpoly_coeffs
from wmlab.linalg import Matrix
from wmlab.poly import PolynomialQ, char_poly, ext_gcd, factor_over_q, gcd, min_poly, rational_roots

T = PolynomialQ.x()

polys = st.lists(st.integers(-5, 5), min_size=1, max_size=6).map(PolynomialQ)
square = st.integers(0, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=n, max_size=n)
    .map(lambda rows, n=n: Matrix(rows, rows=n, cols=n)))


def test_parse_and_print():
    p = PolynomialQ.parse("T^2 - 3*T + 5")
    assert p == PolynomialQ([5, -3, 1])
    assert PolynomialQ.parse("x**2") == T * T
    assert PolynomialQ.parse(str(p)) == p


def test_division_and_evaluation():
    a = (T - 1) * (T - 2) + 3
    q, r = divmod(a, T - 1)
    assert q * (T - 1) + r == a
    assert r == PolynomialQ([3])
    assert a(Fraction(1)) == 3
    A = Matrix([[1, 1], [0, 1]])
    assert ((T - 1) ** 2)(A).is_zero()
    with pytest.raises(ZeroDivisionError):
        divmod(a, PolynomialQ([]))


def test_rational_roots():
    assert rational_roots(PolynomialQ([-4, 0, 1])) == [-2, 2]
    assert rational_roots(PolynomialQ([1, 0, 1])) == []
    assert rational_roots(PolynomialQ([-1, 2])) == [Fraction(1, 2)]


def test_factor_over_q_sorted():
    f = factor_over_q((T - 2) * (T - 1) ** 2 * (T * T + 1))
    assert f == [(T - 1, 2), (T - 2, 1), (T * T + 1, 1)]


@settings(max_examples=150, deadline=None)
@given(polys, polys)
def test_ext_gcd_bezout(a, b):
    if a.is_zero() and b.is_zero():
        return
    g, s, t = ext_gcd(a, b)
    assert s * a + t * b == g
    assert g.divides(a) and g.divides(b)
    assert g == gcd(b, a)
    sym = sympy.gcd(a.to_sympy(), b.to_sympy())
    assert PolynomialQ.from_sympy(sympy.Poly(sym, sympy.Symbol("T"))).monic() == g


@settings(max_examples=150, deadline=None)
@given(square)
def test_char_poly_matches_sympy(A):
    cp = char_poly(A)
    assert list(cp.coeffs) == [Fraction(int(c.p), int(c.q)) for c in sympy_charpoly_coeffs(A)]
    assert cp.degree == A.rows and cp.lead == 1


@settings(max_examples=150, deadline=None)
@given(square)
def test_min_poly_divides_char_poly_and_kills(A):
    mp, cp = min_poly(A), char_poly(A)
    assert mp.divides(cp)
    assert mp(A).is_zero()
    for f, _ in factor_over_q(cp):
        assert f.divides(mp)


def test_equal_degrees_mean_cyclic():
    rng = random.Random(0)
    cyclic = 0
    for _ in range(60):
        n = rng.randint(1, 5)
        A = Matrix([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        if min_poly(A).degree != n:
            continue
        found = False
        for _ in range(30):
            v = Matrix([[rng.randint(-3, 3)] for _ in range(n)])
            cols = [v]
            for _ in range(n - 1):
                cols.append(A @ cols[-1])
            if Matrix.hstack(cols).rank() == n:
                found = True
                break
        assert found
        cyclic += 1
    assert cyclic > 10


def test_char_poly_multiplicative_on_blocks():
    rng = random.Random(1)
    for _ in range(40):
        a, b = rng.randint(0, 4), rng.randint(0, 4)
        A = Matrix([[rng.randint(-3, 3) for _ in range(a)] for _ in range(a)], rows=a, cols=a)
        B = Matrix([[rng.randint(-3, 3) for _ in range(b)] for _ in range(b)], rows=b, cols=b)
        assert char_poly(Matrix.block_diag([A, B])) == char_poly(A) * char_poly(B)


def test_identity_and_zero_char_polys():
    assert char_poly(Matrix.identity(2)) == (T - 1) ** 2
    assert char_poly(Matrix.zeros(3, 3)) == T ** 3
    assert char_poly(Matrix.zeros(0, 0)) == PolynomialQ([1])
