"""Exact rational matrices, canonical subspaces and bilinear forms.

Every quantity is a :class:`fractions.Fraction`; there are no tolerances.
Subspaces keep their basis in reduced column-echelon form, so two subspaces
are equal exactly when their stored bases are equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from . import _backend
from .errors import DimensionMismatch

__all__ = [
    "Matrix",
    "Subspace",
    "BilinearForm",
    "RREF",
    "rref",
    "kernel_basis",
    "intersect",
    "quotient",
    "preimage",
    "form_nondegenerate_on",
    "to_fraction",
]


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floating-point entries are not accepted")
    return Fraction(x)


def _int_rows(data) -> tuple[list[list[int]], int]:
    """Scale rows to integers with one common denominator."""
    den = lcm(*{v.denominator for row in data for v in row}) if data else 1
    if den == 1:
        return [[v.numerator for v in row] for row in data], 1
    return [[v.numerator * (den // v.denominator) for v in row] for row in data], den


class Matrix:
    """Immutable dense matrix over the rationals."""

    __slots__ = ("rows", "cols", "_data", "_hash")

    def __init__(self, entries: Iterable[Iterable] = (), rows: int | None = None, cols: int | None = None):
        data = tuple(tuple(to_fraction(v) for v in row) for row in entries)
        r = len(data) if rows is None else rows
        if cols is None:
            c = len(data[0]) if data else 0
        else:
            c = cols
        if len(data) != r or any(len(row) != c for row in data):
            raise DimensionMismatch(f"ragged or mis-sized matrix data for shape {r}x{c}")
        self.rows = r
        self.cols = c
        self._data = data
        self._hash = None

    @classmethod
    def _raw(cls, data: tuple, rows: int, cols: int) -> "Matrix":
        m = object.__new__(cls)
        m.rows = rows
        m.cols = cols
        m._data = data
        m._hash = None
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        z = Fraction(0)
        return cls._raw(tuple((z,) * cols for _ in range(rows)), rows, cols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        one, z = Fraction(1), Fraction(0)
        return cls._raw(tuple(tuple(one if i == j else z for j in range(n)) for i in range(n)), n, n)

    @classmethod
    def scalar(cls, n: int, c) -> "Matrix":
        c = to_fraction(c)
        z = Fraction(0)
        return cls._raw(tuple(tuple(c if i == j else z for j in range(n)) for i in range(n)), n, n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int | None = None) -> "Matrix":
        columns = [tuple(to_fraction(v) for v in c) for c in columns]
        if rows is None:
            if not columns:
                raise DimensionMismatch("row count needed for an empty column list")
            rows = len(columns[0])
        if any(len(c) != rows for c in columns):
            raise DimensionMismatch("columns of unequal length")
        return cls._raw(tuple(tuple(c[i] for c in columns) for i in range(rows)), rows, len(columns))

    @classmethod
    def diagonal(cls, values: Sequence) -> "Matrix":
        n = len(values)
        z = Fraction(0)
        vals = [to_fraction(v) for v in values]
        return cls._raw(tuple(tuple(vals[i] if i == j else z for j in range(n)) for i in range(n)), n, n)

    @classmethod
    def block_diag(cls, blocks: Sequence["Matrix"]) -> "Matrix":
        r = sum(b.rows for b in blocks)
        c = sum(b.cols for b in blocks)
        out = [[Fraction(0)] * c for _ in range(r)]
        i0 = j0 = 0
        for b in blocks:
            for i in range(b.rows):
                out[i0 + i][j0 : j0 + b.cols] = b._data[i]
            i0 += b.rows
            j0 += b.cols
        return cls._raw(tuple(map(tuple, out)), r, c)

    @staticmethod
    def hstack(blocks: Sequence["Matrix"], rows: int | None = None) -> "Matrix":
        if not blocks:
            return Matrix.zeros(rows or 0, 0)
        r = blocks[0].rows
        if any(b.rows != r for b in blocks):
            raise DimensionMismatch("hstack row mismatch")
        data = tuple(tuple(v for b in blocks for v in b._data[i]) for i in range(r))
        return Matrix._raw(data, r, sum(b.cols for b in blocks))

    @staticmethod
    def vstack(blocks: Sequence["Matrix"], cols: int | None = None) -> "Matrix":
        if not blocks:
            return Matrix.zeros(0, cols or 0)
        c = blocks[0].cols
        if any(b.cols != c for b in blocks):
            raise DimensionMismatch("vstack column mismatch")
        data = tuple(row for b in blocks for row in b._data)
        return Matrix._raw(data, sum(b.rows for b in blocks), c)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, key):
        i, j = key
        return self._data[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self._data[i]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self._data)

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self._data]

    def select_columns(self, idx: Sequence[int]) -> "Matrix":
        return Matrix._raw(tuple(tuple(row[j] for j in idx) for row in self._data), self.rows, len(idx))

    def select_rows(self, idx: Sequence[int]) -> "Matrix":
        return Matrix._raw(tuple(self._data[i] for i in idx), len(idx), self.cols)

    @property
    def T(self) -> "Matrix":
        return Matrix._raw(tuple(zip(*self._data)) if self.rows else tuple(() for _ in range(self.cols)),
                           self.cols, self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and self._data == other._data

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self._data))
        return self._hash

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(v) for v in row) for row in self._data)
        return f"Matrix({self.rows}x{self.cols}: [{body}])"

    def is_zero(self) -> bool:
        return not any(v for row in self._data for v in row)

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add {self.shape} and {other.shape}")
        return Matrix._raw(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self._data, other._data)),
                           self.rows, self.cols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot subtract {other.shape} from {self.shape}")
        return Matrix._raw(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self._data, other._data)),
                           self.rows, self.cols)

    def __neg__(self) -> "Matrix":
        return Matrix._raw(tuple(tuple(-a for a in r) for r in self._data), self.rows, self.cols)

    def scale(self, c) -> "Matrix":
        c = to_fraction(c)
        return Matrix._raw(tuple(tuple(c * a for a in r) for r in self._data), self.rows, self.cols)

    def __mul__(self, c) -> "Matrix":
        if isinstance(c, Matrix):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        if self.rows == 0 or other.cols == 0 or self.cols == 0:
            return Matrix.zeros(self.rows, other.cols)
        a, da = _int_rows(self._data)
        b, db = _int_rows(other._data)
        prod = _backend.matmul(a, b, self.cols, other.cols)
        d = da * db
        if d == 1:
            data = tuple(tuple(Fraction(v) for v in r) for r in prod)
        else:
            data = tuple(tuple(Fraction(v, d) for v in r) for r in prod)
        return Matrix._raw(data, self.rows, other.cols)

    def apply(self, vec: Sequence) -> tuple[Fraction, ...]:
        if len(vec) != self.cols:
            raise DimensionMismatch("vector length mismatch")
        v = [to_fraction(x) for x in vec]
        return tuple(sum((a * b for a, b in zip(row, v) if a and b), Fraction(0)) for row in self._data)

    def power(self, k: int) -> "Matrix":
        if self.rows != self.cols:
            raise DimensionMismatch("power of a non-square matrix")
        result = Matrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def trace(self) -> Fraction:
        if self.rows != self.cols:
            raise DimensionMismatch("trace of a non-square matrix")
        return sum((self._data[i][i] for i in range(self.rows)), Fraction(0))

    def rank(self) -> int:
        return rref(self).rank

    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def inverse(self) -> "Matrix":
        n = self.rows
        if n != self.cols:
            raise DimensionMismatch("inverse of a non-square matrix")
        aug = Matrix.hstack([self, Matrix.identity(n)])
        red = rref(aug)
        if red.pivots[:n] != list(range(n)) or red.rank < n:
            raise ZeroDivisionError("matrix is singular")
        return red.reduced.select_rows(range(n)).select_columns(range(n, 2 * n))

    def solve(self, rhs: "Matrix") -> "Matrix | None":
        """One solution X of self @ X = rhs, or None when inconsistent."""
        if rhs.rows != self.rows:
            raise DimensionMismatch("right-hand side row mismatch")
        aug = Matrix.hstack([self, rhs])
        red = rref(aug)
        n = self.cols
        if any(p >= n for p in red.pivots):
            return None
        out = [[Fraction(0)] * rhs.cols for _ in range(n)]
        for r, p in enumerate(red.pivots):
            out[p] = list(red.reduced.row(r)[n:])
        return Matrix._raw(tuple(map(tuple, out)), n, rhs.cols)


@dataclass(frozen=True)
class RREF:
    reduced: Matrix
    rank: int
    pivots: list
    image: "Subspace"


def _rref_rows(data, ncols) -> tuple[list[tuple[Fraction, ...]], list[int]]:
    ints, _ = _int_rows(data)
    rows, pivots = _backend.echelon_int(ints, ncols)
    out = []
    for row, p in zip(rows, pivots):
        piv = row[p]
        out.append(tuple(Fraction(v, piv) for v in row))
    return out, pivots


def rref(m: Matrix) -> RREF:
    """Reduced row echelon form, rank, pivot columns and column space of ``m``."""
    rows, pivots = _rref_rows(m._data, m.cols)
    z = (Fraction(0),) * m.cols
    full = rows + [z] * (m.rows - len(rows))
    reduced = Matrix._raw(tuple(full), m.rows, m.cols)
    return RREF(reduced, len(pivots), list(pivots), Subspace.span(m))


class Subspace:
    """A subspace of Q^n stored by its reduced column-echelon basis."""

    __slots__ = ("ambient_dim", "basis", "pivots", "_hash")

    def __init__(self, ambient_dim: int, basis: Matrix, pivots: Sequence[int]):
        self.ambient_dim = ambient_dim
        self.basis = basis
        self.pivots = tuple(pivots)
        self._hash = None

    @classmethod
    def span(cls, m: Matrix) -> "Subspace":
        """Column space of ``m``."""
        n = m.rows
        if m.cols == 0 or n == 0:
            return cls.zero(n)
        rows, pivots = _rref_rows(m.T._data, n)
        basis = Matrix._raw(tuple(zip(*rows)) if rows else tuple(() for _ in range(n)), n, len(rows))
        return cls(n, basis, pivots)

    @classmethod
    def from_vectors(cls, ambient_dim: int, vectors: Iterable[Sequence]) -> "Subspace":
        vecs = list(vectors)
        if not vecs:
            return cls.zero(ambient_dim)
        return cls.span(Matrix.from_columns(vecs, rows=ambient_dim))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, Matrix.zeros(n, 0), ())

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, Matrix.identity(n), range(n))

    @property
    def dim(self) -> int:
        return self.basis.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.basis == other.basis

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ambient_dim, self.basis))
        return self._hash

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim} in Q^{self.ambient_dim})"

    def _check(self, other: "Subspace") -> None:
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(f"ambient mismatch {self.ambient_dim} vs {other.ambient_dim}")

    def coordinates(self, vectors: Matrix) -> Matrix | None:
        """Coordinates of the columns of ``vectors`` in the canonical basis, or None if some
        column lies outside the subspace."""
        if vectors.rows != self.ambient_dim:
            raise DimensionMismatch("vector length does not match the ambient space")
        coords = vectors.select_rows(self.pivots)
        if self.basis @ coords != vectors:
            return None
        return coords

    def contains(self, vec: Sequence) -> bool:
        return self.coordinates(Matrix.from_columns([vec], rows=self.ambient_dim)) is not None

    def contains_subspace(self, other: "Subspace") -> bool:
        self._check(other)
        if other.dim > self.dim:
            return False
        return self.coordinates(other.basis) is not None

    __ge__ = contains_subspace

    def __le__(self, other: "Subspace") -> bool:
        return other.contains_subspace(self)

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace.span(Matrix.hstack([self.basis, other.basis]))

    def __and__(self, other: "Subspace") -> "Subspace":
        return intersect(self, other)

    def image(self, m: Matrix) -> "Subspace":
        if m.cols != self.ambient_dim:
            raise DimensionMismatch("map source does not match the ambient space")
        return Subspace.span(m @ self.basis)


def kernel_basis(m: Matrix) -> Subspace:
    """Null space of ``m`` in canonical form."""
    n = m.cols
    red = rref(m)
    free = [j for j in range(n) if j not in set(red.pivots)]
    if not free:
        return Subspace.zero(n)
    vecs = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for r, p in enumerate(red.pivots):
            v[p] = -red.reduced[r, f]
        vecs.append(v)
    return Subspace.from_vectors(n, vecs)


def intersect(u: Subspace, v: Subspace) -> Subspace:
    """Largest subspace contained in both ``u`` and ``v``."""
    u._check(v)
    if u.dim == 0 or v.dim == 0:
        return Subspace.zero(u.ambient_dim)
    ker = kernel_basis(Matrix.hstack([u.basis, -v.basis]))
    if ker.dim == 0:
        return Subspace.zero(u.ambient_dim)
    xu = ker.basis.select_rows(range(u.dim))
    return Subspace.span(u.basis @ xu)


def quotient(ambient_dim: int, w: Subspace) -> tuple[Matrix, int]:
    """Projection Q^n -> Q^n / w in complement-of-pivot coordinates.

    The quotient is identified with the coordinates outside the pivot rows of
    ``w``'s canonical basis, so the returned projection has kernel exactly ``w``.
    """
    if w.ambient_dim != ambient_dim:
        raise DimensionMismatch(f"ambient mismatch {ambient_dim} vs {w.ambient_dim}")
    keep = [i for i in range(ambient_dim) if i not in set(w.pivots)]
    ident = Matrix.identity(ambient_dim)
    if w.dim == 0:
        return ident, ambient_dim
    # v - B * v[pivots] vanishes on the pivot rows
    reducer = ident - w.basis @ ident.select_rows(w.pivots)
    return reducer.select_rows(keep), len(keep)


def preimage(m: Matrix, w: Subspace) -> Subspace:
    """{x : m x in w}."""
    if m.rows != w.ambient_dim:
        raise DimensionMismatch("target of the map does not match the subspace")
    proj, qdim = quotient(w.ambient_dim, w)
    if qdim == 0:
        return Subspace.full(m.cols)
    return kernel_basis(proj @ m)


class BilinearForm:
    """(x, y) -> x^T gram y on Q^left x Q^right."""

    __slots__ = ("gram",)

    def __init__(self, gram: Matrix):
        self.gram = gram

    @property
    def left_dim(self) -> int:
        return self.gram.rows

    @property
    def right_dim(self) -> int:
        return self.gram.cols

    def __call__(self, x: Sequence, y: Sequence) -> Fraction:
        return sum((a * b for a, b in zip(x, self.gram.apply(y))), Fraction(0))

    def restrict(self, u: Subspace, v: Subspace) -> Matrix:
        if u.ambient_dim != self.left_dim or v.ambient_dim != self.right_dim:
            raise DimensionMismatch("subspaces do not match the sides of the form")
        return u.basis.T @ self.gram @ v.basis

    def __eq__(self, other) -> bool:
        return isinstance(other, BilinearForm) and self.gram == other.gram

    def __repr__(self) -> str:
        return f"BilinearForm({self.gram!r})"


def form_nondegenerate_on(form: BilinearForm, u: Subspace, v: Subspace) -> bool:
    """True iff the restricted Gram matrix is square and of full rank."""
    g = form.restrict(u, v)
    if u.dim != v.dim:
        return False
    return g.rank() == u.dim
