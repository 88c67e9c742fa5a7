"""Univariate polynomials over Q and the matrix polynomials built from them."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .linalg import Matrix, Subspace, to_fraction

__all__ = ["PolynomialQ", "char_poly", "min_poly", "ext_gcd", "factor_over_q", "rational_roots", "factor_key"]


class PolynomialQ:
    """Dense polynomial with Fraction coefficients, lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def x(cls) -> "PolynomialQ":
        return cls([0, 1])

    @classmethod
    def constant(cls, c) -> "PolynomialQ":
        return cls([c])

    @classmethod
    def from_roots(cls, roots: Iterable) -> "PolynomialQ":
        p = cls([1])
        for r in roots:
            p = p * cls([-to_fraction(r), 1])
        return p

    @classmethod
    def parse(cls, text: str) -> "PolynomialQ":
        """Parse an expression in T (or x) such as ``T^2 - 3*T + 5``."""
        import sympy

        T = sympy.Symbol("T")
        expr = sympy.sympify(text.replace("^", "**"), locals={"T": T, "x": T})
        poly = sympy.Poly(sympy.expand(expr), T, domain="QQ")
        return cls.from_sympy(poly)

    @classmethod
    def from_sympy(cls, poly) -> "PolynomialQ":
        cs = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
        return cls(cs)

    def to_sympy(self):
        import sympy

        T = sympy.Symbol("T")
        return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(self.coeffs)] or [0],
                          T, domain="QQ")

    # basic structure -------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def monic(self) -> "PolynomialQ":
        if self.is_zero():
            return self
        l = self.lead
        return PolynomialQ(c / l for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolynomialQ):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"PolynomialQ({self})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("T" if k == 1 else f"T^{k}")
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for s, b in terms[1:]:
            out += f" {s} {b}"
        return out

    # arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "PolynomialQ":
        return other if isinstance(other, PolynomialQ) else PolynomialQ([other])

    def __add__(self, other):
        o = self._coerce(other)
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = o.coeffs + (Fraction(0),) * (n - len(o.coeffs))
        return PolynomialQ(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return PolynomialQ(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if self.is_zero() or o.is_zero():
            return PolynomialQ()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    out[i + j] += a * b
        return PolynomialQ(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out, base = PolynomialQ([1]), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __divmod__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        q = [Fraction(0)] * max(0, len(r) - len(o.coeffs) + 1)
        lo = o.lead
        while len(r) >= len(o.coeffs) and any(r):
            shift = len(r) - len(o.coeffs)
            f = r[-1] / lo
            q[shift] = f
            for k, c in enumerate(o.coeffs):
                r[shift + k] -= f * c
            r.pop()
            while r and r[-1] == 0:
                r.pop()
        return PolynomialQ(q), PolynomialQ(r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def divides(self, other: "PolynomialQ") -> bool:
        return (other % self).is_zero()

    def __call__(self, x):
        """Evaluate at a scalar or a square Matrix (Horner)."""
        if isinstance(x, Matrix):
            n = x.rows
            acc = Matrix.zeros(n, n)
            for c in reversed(self.coeffs):
                acc = acc @ x + Matrix.scalar(n, c)
            return acc
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "PolynomialQ":
        return PolynomialQ(k * c for k, c in enumerate(self.coeffs) if k)

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coeffs]


def ext_gcd(a: PolynomialQ, b: PolynomialQ) -> tuple[PolynomialQ, PolynomialQ, PolynomialQ]:
    """(g, s, t) with s a + t b = g and g monic (or zero)."""
    r0, r1 = a, b
    s0, s1 = PolynomialQ([1]), PolynomialQ()
    t0, t1 = PolynomialQ(), PolynomialQ([1])
    while not r1.is_zero():
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    l = r0.lead
    return r0.monic(), s0 * (1 / l), t0 * (1 / l)


def gcd(a: PolynomialQ, b: PolynomialQ) -> PolynomialQ:
    return ext_gcd(a, b)[0]


def char_poly(A: Matrix) -> PolynomialQ:
    """det(T - A) by reduction to upper Hessenberg form."""
    n = A.rows
    if A.cols != n:
        raise ValueError("characteristic polynomial needs a square matrix")
    H = [list(r) for r in A.tolist()]
    for m in range(1, n - 1):
        piv = next((i for i in range(m, n) if H[i][m - 1] != 0), None)
        if piv is None:
            continue
        if piv != m:
            H[m], H[piv] = H[piv], H[m]
            for r in H:
                r[m], r[piv] = r[piv], r[m]
        for i in range(m + 1, n):
            f = H[i][m - 1] / H[m][m - 1]
            if f:
                for k in range(n):
                    H[i][k] -= f * H[m][k]
                for r in H:
                    r[m] += f * r[i]
    # p_k = det(T - H[:k, :k]) via the Hessenberg recurrence
    p = [PolynomialQ([1])]
    for k in range(1, n + 1):
        pk = PolynomialQ([-H[k - 1][k - 1], 1]) * p[k - 1]
        prod = Fraction(1)
        for i in range(1, k):
            prod *= H[k - i][k - i - 1]
            h = H[k - i - 1][k - 1]
            if prod == 0:
                break
            pk = pk - p[k - i - 1] * (prod * h)
        p.append(pk)
    return p[n]


def min_poly(A: Matrix) -> PolynomialQ:
    """Minimal polynomial: first linear dependency among I, A, A^2, ..."""
    n = A.rows
    if n == 0:
        return PolynomialQ([1])
    powers = [Matrix.identity(n)]
    vecs = [sum((list(r) for r in powers[0].tolist()), [])]
    while True:
        nxt = powers[-1] @ A
        v = sum((list(r) for r in nxt.tolist()), [])
        basis = Matrix.from_columns(vecs, rows=n * n)
        sol = basis.solve(Matrix.from_columns([v], rows=n * n))
        if sol is not None:
            return PolynomialQ([-sol[i, 0] for i in range(len(vecs))] + [1])
        powers.append(nxt)
        vecs.append(v)


def rational_roots(p: PolynomialQ) -> list[Fraction]:
    """Rational roots via the rational root theorem on a clearing-denominator integer form."""
    import math

    if p.degree < 1:
        return []
    den = 1
    for c in p.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in p.coeffs]
    while ints and ints[0] == 0:
        ints = ints[1:]
    roots = {Fraction(0)} if len(ints) < len(p.coeffs) else set()
    if len(ints) <= 1:
        return sorted(roots)
    a0, an = abs(ints[0]), abs(ints[-1])

    def divisors(x):
        return [d for d in range(1, x + 1) if x % d == 0]

    for num in divisors(a0):
        for dd in divisors(an):
            for s in (1, -1):
                r = Fraction(s * num, dd)
                if p(r) == 0:
                    roots.add(r)
    return sorted(roots)


def factor_over_q(p: PolynomialQ) -> list[tuple[PolynomialQ, int]]:
    """Monic irreducible factors with multiplicity, sorted by (degree, coefficients)."""
    if p.degree < 1:
        return []
    _, facs = p.to_sympy().factor_list()
    out = [(PolynomialQ.from_sympy(f).monic(), int(m)) for f, m in facs]
    return sorted(out, key=lambda fm: factor_key(fm[0]))


def factor_key(p: PolynomialQ) -> tuple:
    """Canonical order: degree, then coefficient sizes from the top down, then signs."""
    top_down = tuple(reversed(p.coeffs))
    return (p.degree, tuple(abs(c) for c in top_down), top_down)


def restrict_to(A: Matrix, sub: Subspace) -> Matrix:
    """Matrix of A on an A-stable subspace in the subspace's canonical basis."""
    if sub.dim == 0:
        return Matrix.zeros(0, 0)
    X = sub.coordinates(A @ sub.basis)
    if X is None:
        raise ValueError("subspace is not stable under the operator")
    return X

