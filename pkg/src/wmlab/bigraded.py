"""Bigraded modules with commuting N, L and a differential of bidegree (1, 1).

Index convention: ``M[(i, j)]`` is M_i^j; N lowers i by 2, L raises j by 2 and
d sends (i, j) to (i - 1, j + 1). Columns C_c = Ker N^{c+1} inside M_c carry the
components gamma_c : C_c -> C_{c-1} and rho_c : C_c -> C_{c+1} of d.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import DecompositionFailed, HypothesisFailed, NotLefschetzType, NotNilpotent
from .graded import (
    GradedLModule,
    GradedMorphism,
    GradedPairing,
    image_filtration,
    is_one_symmetric_sub,
    primitive_decomposition,
    prop16_check,
    star,
)
from .linalg import BilinearForm, Matrix, Subspace, form_nondegenerate_on, intersect, kernel_basis, quotient

Slot = tuple[int, int]

__all__ = [
    "BigradedNLModule",
    "DifferentialStructure",
    "ColumnComplex",
    "CohomologyResult",
    "FiltrationOnSpace",
    "E1",
    "n_primitive_columns",
    "extract_gamma_rho",
    "cohomology",
    "check_N_bijectivity",
    "check_L_bijectivity",
    "dtilde",
    "criterion_2_2",
    "monodromy_filtration",
    "wm_verdict",
    "thm02_hypotheses",
    "rz_hypothesis",
    "thm03_procedure",
]


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class BigradedNLModule:
    dims: Mapping[Slot, int]
    N_maps: Mapping[Slot, Matrix] = field(default_factory=dict)
    L_maps: Mapping[Slot, Matrix] = field(default_factory=dict)

    def __post_init__(self):
        dims = {(int(i), int(j)): int(v) for (i, j), v in self.dims.items() if v}
        object.__setattr__(self, "dims", dims)
        nm, lm = {}, {}
        for (i, j), m in self.N_maps.items():
            exp = (dims.get((i - 2, j), 0), dims.get((i, j), 0))
            if m.shape != exp:
                raise NotLefschetzType(f"N at {(i, j)} has shape {m.shape}, expected {exp}", axis="N", index=(i, j))
            if exp[0] and exp[1]:
                nm[(i, j)] = m
        for (i, j), m in self.L_maps.items():
            exp = (dims.get((i, j + 2), 0), dims.get((i, j), 0))
            if m.shape != exp:
                raise NotLefschetzType(f"L at {(i, j)} has shape {m.shape}, expected {exp}", axis="L", index=(i, j))
            if exp[0] and exp[1]:
                lm[(i, j)] = m
        object.__setattr__(self, "N_maps", nm)
        object.__setattr__(self, "L_maps", lm)
        object.__setattr__(self, "_cache", {})

    def dim(self, i: int, j: int) -> int:
        return self.dims.get((i, j), 0)

    @property
    def slots(self) -> list[Slot]:
        return sorted(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def N(self, i: int, j: int) -> Matrix:
        m = self.N_maps.get((i, j))
        return m if m is not None else Matrix.zeros(self.dim(i - 2, j), self.dim(i, j))

    def L(self, i: int, j: int) -> Matrix:
        m = self.L_maps.get((i, j))
        return m if m is not None else Matrix.zeros(self.dim(i, j + 2), self.dim(i, j))

    def N_power(self, i: int, j: int, k: int) -> Matrix:
        key = ("N", i, j, k)
        if key not in self._cache:
            self._cache[key] = (Matrix.identity(self.dim(i, j)) if k == 0
                                else self.N(i - 2 * k + 2, j) @ self.N_power(i, j, k - 1))
        return self._cache[key]

    def L_power(self, i: int, j: int, k: int) -> Matrix:
        key = ("L", i, j, k)
        if key not in self._cache:
            self._cache[key] = (Matrix.identity(self.dim(i, j)) if k == 0
                                else self.L(i, j + 2 * k - 2) @ self.L_power(i, j, k - 1))
        return self._cache[key]

    def i_span(self) -> int:
        return max((abs(i) for i, _ in self.dims), default=0)

    def j_span(self) -> int:
        return max((abs(j) for _, j in self.dims), default=0)

    def violations(self) -> list[tuple[str, Slot]]:
        """Failures of NL = LN and of the two Lefschetz bijectivity conditions."""
        out = []
        for (i, j) in self.slots:
            if self.N(i, j + 2) @ self.L(i, j) != self.L(i - 2, j) @ self.N(i, j):
                out.append(("NL=LN", (i, j)))
        I, J = self.i_span(), self.j_span()
        for i in range(1, I + 1):
            for j in range(-J, J + 1):
                a, b = self.dim(i, j), self.dim(-i, j)
                if a != b or (a and self.N_power(i, j, i).rank() != a):
                    out.append(("N-Lefschetz", (i, j)))
        for j in range(1, J + 1):
            for i in range(-I, I + 1):
                a, b = self.dim(i, -j), self.dim(i, j)
                if a != b or (a and self.L_power(i, -j, j).rank() != a):
                    out.append(("L-Lefschetz", (i, j)))
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            kind, slot = bad[0]
            axis = "N" if kind.startswith("N-") else ("L" if kind.startswith("L-") else "NL")
            raise NotLefschetzType(f"{kind} fails at {slot}", axis=axis, index=slot)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BigradedNLModule):
            return NotImplemented
        return (self.dims == other.dims
                and all(self.N(*s) == other.N(*s) and self.L(*s) == other.L(*s) for s in self.dims))


@dataclass(frozen=True, eq=False)
class DifferentialStructure:
    module: BigradedNLModule
    d_maps: Mapping[Slot, Matrix]

    def __post_init__(self):
        M = self.module
        dm = {}
        for (i, j), m in self.d_maps.items():
            exp = (M.dim(i - 1, j + 1), M.dim(i, j))
            if m.shape != exp:
                raise DecompositionFailed(f"d at {(i, j)} has shape {m.shape}, expected {exp}", slot=(i, j))
            if exp[0] and exp[1]:
                dm[(i, j)] = m
        object.__setattr__(self, "d_maps", dm)

    def d(self, i: int, j: int) -> Matrix:
        m = self.d_maps.get((i, j))
        return m if m is not None else Matrix.zeros(self.module.dim(i - 1, j + 1), self.module.dim(i, j))

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.d_maps.values())

    def violations(self) -> list[tuple[str, Slot]]:
        M = self.module
        out = []
        for (i, j) in M.slots:
            if not (self.d(i - 1, j + 1) @ self.d(i, j)).is_zero():
                out.append(("d^2=0", (i, j)))
            if self.d(i - 2, j) @ M.N(i, j) != M.N(i - 1, j + 1) @ self.d(i, j):
                out.append(("dN=Nd", (i, j)))
            if self.d(i, j + 2) @ M.L(i, j) != M.L(i - 1, j + 1) @ self.d(i, j):
                out.append(("dL=Ld", (i, j)))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, DifferentialStructure):
            return NotImplemented
        return self.module == other.module and all(self.d(*s) == other.d(*s) for s in self.module.dims)


@dataclass(eq=False)
class ColumnComplex:
    basis: dict            # (c, j) -> Matrix, columns spanning C_c^j inside M_c^j
    L: dict                # (c, j) -> C_c^{j+2} x C_c^j
    decomp: dict           # (i, j) -> (Matrix B, [(c, a, start, size)])
    gamma: dict = field(default_factory=dict)   # (c, j) -> C_{c-1}^{j+1} x C_c^j
    rho: dict = field(default_factory=dict)     # (c, j) -> C_{c+1}^{j+1} x C_c^j
    _mods: dict = field(default_factory=dict)

    @property
    def C_dims(self) -> dict:
        return {k: v.cols for k, v in self.basis.items() if v.cols}

    def dim(self, c: int, j: int) -> int:
        b = self.basis.get((c, j))
        return b.cols if b is not None else 0

    @property
    def columns(self) -> list[int]:
        return sorted({c for (c, _j), b in self.basis.items() if b.cols})

    def dim_any(self, c: int) -> bool:
        return any(self.dim(c, j) for (cc, j) in self.basis if cc == c)

    @property
    def top(self) -> int:
        return max(self.columns, default=-1)

    def g(self, c: int, j: int) -> Matrix:
        m = self.gamma.get((c, j))
        return m if m is not None else Matrix.zeros(self.dim(c - 1, j + 1), self.dim(c, j))

    def r(self, c: int, j: int) -> Matrix:
        m = self.rho.get((c, j))
        return m if m is not None else Matrix.zeros(self.dim(c + 1, j + 1), self.dim(c, j))

    def Lc(self, c: int, j: int) -> Matrix:
        m = self.L.get((c, j))
        return m if m is not None else Matrix.zeros(self.dim(c, j + 2), self.dim(c, j))

    def column_module(self, c: int) -> GradedLModule:
        if c not in self._mods:
            js = [j for (cc, j) in self.basis if cc == c]
            dims = {j: self.dim(c, j) for j in js}
            self._mods[c] = GradedLModule(dims, {j: self.Lc(c, j) for j in js if self.dim(c, j + 2)})
        return self._mods[c]

    def gamma_morphism(self, c: int) -> GradedMorphism:
        src, tgt = self.column_module(c), self.column_module(c - 1)
        return GradedMorphism(src, tgt, 1, {j: self.g(c, j) for j in src.degrees})

    def rho_morphism(self, c: int) -> GradedMorphism:
        src, tgt = self.column_module(c), self.column_module(c + 1)
        return GradedMorphism(src, tgt, 1, {j: self.r(c, j) for j in src.degrees})

    def split(self, i: int, j: int, vec: Matrix) -> dict[tuple[int, int], Matrix]:
        """Coordinates of columns of ``vec`` (in M_i^j) along the blocks N^a C_c."""
        B, blocks = self.decomp[(i, j)]
        coords = B.inverse() @ vec
        return {(c, a): coords.select_rows(range(st, st + sz)) for c, a, st, sz in blocks}


@dataclass(eq=False)
class CohomologyResult:
    module: BigradedNLModule
    Z: dict
    B: dict
    reps: dict
    proj: dict
    H_dims: dict

    def dim(self, i: int, j: int) -> int:
        return self.H_dims.get((i, j), 0)

    def classes(self, slot: Slot, vectors: Matrix) -> Matrix:
        """Class coordinates of cycles (columns of ``vectors``) in the rep basis."""
        P = self.proj[slot]
        Q = P @ self.reps[slot]
        X = Q.solve(P @ vectors)
        if X is None:
            raise ValueError(f"vectors at {slot} are not cycles")
        return X

    def induced(self, src: Slot, dst: Slot, op: Matrix) -> Matrix:
        if not self.dim(*src):
            return Matrix.zeros(self.dim(*dst), 0)
        if not self.dim(*dst):
            return Matrix.zeros(0, self.dim(*src))
        return self.classes(dst, op @ self.reps[src])

    def induced_N_power(self, i: int, j: int, k: int) -> Matrix:
        return self.induced((i, j), (i - 2 * k, j), self.module.N_power(i, j, k))

    def induced_L_power(self, i: int, j: int, k: int) -> Matrix:
        return self.induced((i, j), (i, j + 2 * k), self.module.L_power(i, j, k))


@dataclass(frozen=True)
class FiltrationOnSpace:
    ambient_dim: int
    steps: dict
    lo: int
    hi: int

    def step(self, k: int) -> Subspace:
        if k < self.lo:
            return Subspace.zero(self.ambient_dim)
        if k >= self.hi:
            return Subspace.full(self.ambient_dim)
        return self.steps[k]

    def graded_dims(self) -> dict[int, int]:
        return {k: self.step(k).dim - self.step(k - 1).dim
                for k in range(self.lo, self.hi + 1) if self.step(k).dim - self.step(k - 1).dim}


# ---------------------------------------------------------------------------
# columns


def n_primitive_columns(M: BigradedNLModule) -> ColumnComplex:
    M.validate()
    basis, Lc = {}, {}
    for (i, j) in M.slots:
        if i >= 0:
            basis[(i, j)] = kernel_basis(M.N_power(i, j, i + 1)).basis
    for (c, j), b in basis.items():
        b2 = basis.get((c, j + 2))
        if b2 is None or not b.cols or not b2.cols:
            continue
        X = b2.solve(M.L(c, j) @ b)
        if X is None:
            raise NotLefschetzType(f"L does not preserve C_{c} at degree {j}", axis="L", index=(c, j))
        Lc[(c, j)] = X
    decomp = {}
    for (i, j) in M.slots:
        parts, blocks, start = [], [], 0
        a = max(0, -i)
        while True:
            c = i + 2 * a
            if c > M.i_span():
                break
            b = basis.get((c, j))
            if b is not None and b.cols:
                parts.append(M.N_power(c, j, a) @ b)
                blocks.append((c, a, start, b.cols))
                start += b.cols
            a += 1
        B = Matrix.hstack(parts) if parts else Matrix.zeros(M.dim(i, j), 0)
        if B.cols != M.dim(i, j) or B.rank() != M.dim(i, j):
            raise NotLefschetzType(f"N-Lefschetz decomposition fails at {(i, j)}", axis="N", index=(i, j))
        decomp[(i, j)] = (B, blocks)
    return ColumnComplex(basis, Lc, decomp)


def extract_gamma_rho(M: BigradedNLModule, d: DifferentialStructure,
                      cols: ColumnComplex | None = None) -> ColumnComplex:
    if cols is None:
        cols = n_primitive_columns(M)
    for kind, slot in d.violations():
        if kind in ("dN=Nd", "dL=Ld", "d^2=0"):
            raise DecompositionFailed(f"{kind} fails at {slot}", slot=slot)
    gamma, rho = {}, {}
    for (c, j), b in cols.basis.items():
        if not b.cols:
            continue
        tgt = (c - 1, j + 1)
        if not M.dim(*tgt):
            continue
        parts = cols.split(*tgt, d.d(c, j) @ b)
        for (cc, a), blk in parts.items():
            if (cc, a) == (c - 1, 0):
                gamma[(c, j)] = blk
            elif (cc, a) == (c + 1, 1):
                rho[(c, j)] = blk
            elif not blk.is_zero():
                raise DecompositionFailed(f"d of C_{c}^{j} has a component in copy {a} of C_{cc}",
                                          slot=(c, 0, j))
    cols.gamma, cols.rho = gamma, rho
    # copies a >= 1: d(N^a x) = N^a gamma x + N^{a+1} rho x
    for (c, j), b in cols.basis.items():
        for a in range(1, c + 1):
            i = c - 2 * a
            if not M.dim(i - 1, j + 1):
                continue
            lhs = d.d(i, j) @ M.N_power(c, j, a) @ b
            rhs = Matrix.zeros(M.dim(i - 1, j + 1), b.cols)
            if a <= c - 1 and cols.dim(c - 1, j + 1):
                rhs = rhs + M.N_power(c - 1, j + 1, a) @ cols.basis[(c - 1, j + 1)] @ cols.g(c, j)
            if cols.dim(c + 1, j + 1):
                rhs = rhs + M.N_power(c + 1, j + 1, a + 1) @ cols.basis[(c + 1, j + 1)] @ cols.r(c, j)
            if lhs != rhs:
                raise DecompositionFailed(f"d on copy {a} of C_{c}^{j} does not split", slot=(i, a, j))
    for (c, j) in cols.basis:
        if not cols.dim(c, j):
            continue
        if not (cols.r(c + 1, j + 1) @ cols.r(c, j)).is_zero():
            raise DecompositionFailed(f"rho^2 != 0 on C_{c}^{j}", slot=(c, 0, j))
        if c >= 2 and not (cols.g(c - 1, j + 1) @ cols.g(c, j)).is_zero():
            raise DecompositionFailed(f"gamma^2 != 0 on C_{c}^{j}", slot=(c, 0, j))
        if c >= 1:
            anti = cols.g(c + 1, j + 1) @ cols.r(c, j) + cols.r(c - 1, j + 1) @ cols.g(c, j)
            if not anti.is_zero():
                raise DecompositionFailed(f"gamma rho + rho gamma != 0 on C_{c}^{j}", slot=(c, 0, j))
    return cols


# ---------------------------------------------------------------------------
# cohomology


def cohomology(M: BigradedNLModule, d: DifferentialStructure) -> CohomologyResult:
    Z, B, reps, proj, H = {}, {}, {}, {}, {}
    for (i, j) in M.slots:
        z = kernel_basis(d.d(i, j))
        b = Subspace.span(d.d(i + 1, j - 1)) if M.dim(i + 1, j - 1) else Subspace.zero(M.dim(i, j))
        if not z.contains_subspace(b):
            raise ValueError(f"d^2 != 0 at {(i, j)}")
        P, _ = quotient(M.dim(i, j), b)
        chosen, cur = [], b
        for col in z.basis.columns():
            if not cur.contains(col):
                chosen.append(col)
                cur = cur + Subspace.from_vectors(M.dim(i, j), [col])
        Z[(i, j)], B[(i, j)], proj[(i, j)] = z, b, P
        reps[(i, j)] = Matrix.from_columns(chosen, rows=M.dim(i, j)) if chosen else Matrix.zeros(M.dim(i, j), 0)
        if chosen:
            H[(i, j)] = len(chosen)
    res = CohomologyResult(M, Z, B, reps, proj, H)
    for (i, j) in M.slots:
        for op, tgt in ((M.N(i, j), (i - 2, j)), (M.L(i, j), (i, j + 2))):
            if not M.dim(*tgt):
                continue
            if not Z[tgt].contains_subspace(Subspace.span(op @ Z[(i, j)].basis)):
                raise ValueError(f"operator does not preserve cycles at {(i, j)}")
            if not B[tgt].contains_subspace(Subspace.span(op @ B[(i, j)].basis)):
                raise ValueError(f"operator does not preserve boundaries at {(i, j)}")
    return res


def euler_by_antidiagonal(dims: Mapping[Slot, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for (i, j), v in dims.items():
        out[i + j] = out.get(i + j, 0) + (-1) ** (i % 2) * v
    return {s: v for s, v in out.items() if v}


def N_power_rank(H: CohomologyResult, i: int, j: int) -> int:
    return H.induced_N_power(i, j, i).rank()


def N_injective(H: CohomologyResult, i: int, j: int) -> bool:
    return N_power_rank(H, i, j) == H.dim(i, j)


def N_surjective(H: CohomologyResult, i: int, j: int) -> bool:
    return N_power_rank(H, i, j) == H.dim(-i, j)


def check_N_bijectivity(H: CohomologyResult, i: int, j: int) -> bool:
    if i <= 0:
        raise ValueError("i must be positive")
    return H.dim(i, j) == H.dim(-i, j) and N_injective(H, i, j)


def check_L_bijectivity(H: CohomologyResult) -> dict[Slot, bool]:
    """(i, j) -> bijectivity of L^j : H_i^{-j} -> H_i^j, for j > 0 with some nonzero side."""
    out = {}
    M = H.module
    for i in range(-M.i_span(), M.i_span() + 1):
        for j in range(1, M.j_span() + 1):
            a, b = H.dim(i, -j), H.dim(i, j)
            if not a and not b:
                continue
            out[(i, j)] = a == b and H.induced_L_power(i, -j, j).rank() == a
    return out


# ---------------------------------------------------------------------------
# analysis bundle


class E1:
    """Module, differential and everything derived from them, computed once."""

    def __init__(self, M: BigradedNLModule, d: DifferentialStructure):
        self.M = M
        self.d = d
        self.cols = extract_gamma_rho(M, d)
        self.H = cohomology(M, d)

    # column subspaces -------------------------------------------------
    def zero(self, c: int, j: int) -> Subspace:
        return Subspace.zero(self.cols.dim(c, j))

    def im_rho(self, c: int, j: int) -> Subspace:
        """Im rho_{c-1} inside C_c^j."""
        if c < 1 or not self.cols.dim(c, j):
            return self.zero(c, j)
        return Subspace.span(self.cols.r(c - 1, j - 1)) if self.cols.dim(c - 1, j - 1) else self.zero(c, j)

    def im_gamma(self, c: int, j: int) -> Subspace:
        """Im gamma_{c+1} inside C_c^j."""
        if not self.cols.dim(c, j) or not self.cols.dim(c + 1, j - 1):
            return self.zero(c, j)
        return Subspace.span(self.cols.g(c + 1, j - 1))

    def ker_rho(self, c: int, j: int) -> Subspace:
        return kernel_basis(self.cols.r(c, j))

    def ker_gamma(self, c: int, j: int) -> Subspace:
        return kernel_basis(self.cols.g(c, j))

    def im_gamma_rho(self, i: int, jt: int) -> Subspace:
        """(Im gamma_i rho_{i-1}) in C_{i-1}^{jt}."""
        if i < 1 or not self.cols.dim(i - 1, jt):
            return self.zero(i - 1, jt)
        return Subspace.span(self.cols.g(i, jt - 1) @ self.cols.r(i - 1, jt - 2))

    def im_rho_gamma(self, i: int, jt: int) -> Subspace:
        """(Im rho_{i-1} gamma_i) in C_i^{jt}."""
        if i < 1 or not self.cols.dim(i, jt):
            return self.zero(i, jt)
        return Subspace.span(self.cols.r(i - 1, jt - 1) @ self.cols.g(i, jt - 2))


def _e1(obj) -> E1:
    if isinstance(obj, E1):
        return obj
    e = getattr(obj, "e1", None)
    if e is not None:
        return e() if callable(e) else e
    raise TypeError("expected an E1 bundle or an instance")


def dtilde(E: E1, i: int, j: int) -> Matrix:
    """d o N^{-i} on Z_{-i}^j (canonical cycle basis) projected to C_{i-1}^{j+1}."""
    if i <= 0:
        raise ValueError("i must be positive")
    M, d, cols = E.M, E.d, E.cols
    Z = E.H.Z.get((-i, j), Subspace.zero(M.dim(-i, j)))
    tgt = cols.dim(i - 1, j + 1)
    if Z.dim == 0 or not M.dim(i, j):
        return Matrix.zeros(tgt, Z.dim)
    X = M.N_power(i, j, i).inverse() @ Z.basis
    Y = d.d(i, j) @ X
    if not M.dim(i - 1, j + 1):
        return Matrix.zeros(tgt, Z.dim)
    parts = cols.split(i - 1, j + 1, Y)
    return parts.get((i - 1, 0), Matrix.zeros(tgt, Z.dim))


def _dtilde_of(E: E1, i: int, j: int, sub: Subspace) -> Subspace:
    """d~ applied to a subspace of Z_{-i}^j given in M_{-i}^j coordinates."""
    Z = E.H.Z[(-i, j)]
    D = dtilde(E, i, j)
    coords = Z.coordinates(sub.basis)
    if coords is None:
        raise ValueError("subspace is not inside the cycles")
    return Subspace.span(D @ coords) if D.rows else Subspace.zero(0)


def dtilde_boundary_identity(E: E1, i: int, j: int) -> bool:
    """d~(B_{-i}^j) equals (Im gamma_i rho_{i-1})^{j+1}."""
    if not E.M.dim(-i, j):
        return E.im_gamma_rho(i, j + 1).dim == 0
    B = E.H.B[(-i, j)]
    return _dtilde_of(E, i, j, B) == E.im_gamma_rho(i, j + 1)


VARIANTS = ("i", "ii", "iii", "iv")


def criterion_2_2(E: E1, i: int, j: int, variant: str) -> tuple[bool, bool, bool]:
    """(applicable, criterion_true, direct_truth) for one variant of the N-surjectivity criteria."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    E = _e1(E)
    H = E.H
    same_dim = H.dim(i, j) == H.dim(-i, j)
    if variant == "i":
        applicable = True
        if E.M.dim(-i, j):
            lhs = _dtilde_of(E, i, j, E.H.Z[(-i, j)])
        else:
            lhs = E.zero(i - 1, j + 1)
        crit = lhs == E.im_gamma_rho(i, j + 1)
        return applicable, crit, N_surjective(H, i, j)
    if variant == "ii":
        applicable = N_surjective(H, i + 2, j)
        gk = E.zero(i - 1, j + 1)
        if E.cols.dim(i, j) and E.cols.dim(i - 1, j + 1):
            gk = E.ker_rho(i, j).image(E.cols.g(i, j))
        crit = gk == E.im_gamma_rho(i, j + 1)
        return applicable, crit, N_surjective(H, i, j)
    if variant == "iii":
        applicable = N_surjective(H, i + 2, j) and N_injective(H, i + 1, j + 1) \
            and H.dim(i + 1, j + 1) == H.dim(-i - 1, j + 1)
        lhs = intersect(E.ker_rho(i - 1, j + 1), E.im_gamma(i - 1, j + 1)) if E.cols.dim(i - 1, j + 1) \
            else E.zero(i - 1, j + 1)
        crit = lhs == E.im_gamma_rho(i, j + 1)
        return applicable, crit, N_surjective(H, i, j)
    # (iv): injectivity
    applicable = N_surjective(H, i + 1, j - 1) and same_dim
    lhs = intersect(E.ker_gamma(i, j), E.im_rho(i, j)) if E.cols.dim(i, j) else E.zero(i, j)
    crit = lhs == E.im_rho_gamma(i, j)
    return applicable, crit, N_injective(H, i, j)


def criterion_slots(E: E1) -> list[Slot]:
    I = max(E.M.i_span(), 0)
    J = E.M.j_span() + 1
    return [(i, j) for i in range(1, I + 2) for j in range(-J, J + 1)]


# ---------------------------------------------------------------------------
# monodromy filtration and the weight-monodromy verdict


def nilpotency_index(Nm: Matrix) -> int:
    """Smallest e with N^e = 0."""
    n = Nm.rows
    P = Matrix.identity(n)
    for e in range(0, n + 1):
        if P.is_zero():
            return e
        P = P @ Nm
    if P.is_zero():
        return n + 1
    raise NotNilpotent("operator is not nilpotent")


def monodromy_filtration(Nm: Matrix) -> FiltrationOnSpace:
    if Nm.rows != Nm.cols:
        raise NotNilpotent("operator must be square")
    n = Nm.rows
    e = nilpotency_index(Nm)
    if n == 0 or e <= 1:
        return FiltrationOnSpace(n, {}, 0, 0)
    m = e - 1
    pw = [Matrix.identity(n)]
    for _ in range(e):
        pw.append(pw[-1] @ Nm)
    ker = [kernel_basis(p).basis for p in pw]

    # W_k = sum_j Im N^j cap Ker N^{k+j+1}, and Im N^j cap Ker N^t = N^j(Ker N^{t+j})
    steps = {}
    for k in range(-m, m):
        parts = []
        for jj in range(max(0, -k), e):
            t = k + 2 * jj + 1
            if t >= e:
                # Ker is everything; later terms lie in Im N^jj already
                parts.append(pw[jj])
                break
            parts.append(pw[jj] @ ker[t])
        steps[k] = Subspace.span(Matrix.hstack(parts, rows=n))
    return FiltrationOnSpace(n, steps, -m, m)


def filtration_axioms_hold(Nm: Matrix, W: FiltrationOnSpace) -> bool:
    n = W.ambient_dim
    for k in range(W.lo - 1, W.hi + 2):
        if not W.step(k).contains_subspace(W.step(k - 1)):
            return False
        if not W.step(k - 2).contains_subspace(W.step(k).image(Nm)):
            return False
    Nk = Matrix.identity(n)
    for k in range(1, W.hi + 1):
        Nk = Nk @ Nm
        a = W.step(k).dim - W.step(k - 1).dim
        b = W.step(-k).dim - W.step(-k - 1).dim
        if a != b:
            return False
        if not a:
            continue
        # N^k : Gr_k -> Gr_{-k} is injective iff it adds a dimensions on top of W_{-k-1}
        low = W.step(-k - 1)
        if (W.step(k).image(Nk) + low).dim != low.dim + a:
            return False
    return True


def _slot_space(H: CohomologyResult, j: int) -> tuple[list[int], Matrix, dict]:
    """Induced N on V = sum_i H_i^j, basis ordered by i ascending."""
    M = H.module
    i_list = [i for i in range(-M.i_span(), M.i_span() + 1) if H.dim(i, j)]
    offs, tot = {}, 0
    for i in i_list:
        offs[i] = tot
        tot += H.dim(i, j)
    rows = [[Fraction(0)] * tot for _ in range(tot)]
    for i in i_list:
        if i - 2 in offs:
            A = H.induced((i, j), (i - 2, j), M.N(i, j))
            for r in range(A.rows):
                for c in range(A.cols):
                    rows[offs[i - 2] + r][offs[i] + c] = A[r, c]
    return i_list, Matrix(rows, rows=tot, cols=tot), offs


def wm_verdict(E: E1) -> tuple[bool, dict]:
    E = _e1(E)
    H = E.H
    M = E.M
    report: dict = {}
    lb = check_L_bijectivity(H)
    report["L_bijective"] = all(lb.values())
    report["L_failures"] = sorted([list(s) for s, ok in lb.items() if not ok])
    path_a, witness_a = True, None
    for i in range(1, M.i_span() + 1):
        for j in range(-M.j_span(), M.j_span() + 1):
            if not (H.dim(i, j) or H.dim(-i, j)):
                continue
            if not check_N_bijectivity(H, i, j):
                path_a = False
                if witness_a is None:
                    A = H.induced_N_power(i, j, i)
                    ker = kernel_basis(A)
                    if ker.dim:
                        vec = H.reps[(i, j)] @ ker.basis.select_columns([0])
                        witness_a = {"slot": [i, j], "kind": "killed_by_N^i",
                                     "class": [str(x) for x in vec.column(0)]}
                    else:
                        witness_a = {"slot": [i, j], "kind": "not_surjective",
                                     "dims": [H.dim(i, j), H.dim(-i, j)]}
    path_b, witness_b = True, None
    for j in sorted({jj for (_i, jj) in H.H_dims}):
        i_list, Nj, offs = _slot_space(H, j)
        W = monodromy_filtration(Nj)
        tot = Nj.rows
        for k in range(min(i_list) - 1, max(i_list) + 1):
            idx = [offs[i] + t for i in i_list if i <= k for t in range(H.dim(i, j))]
            G = Subspace.from_vectors(tot, [[1 if r == c else 0 for r in range(tot)] for c in idx])
            if W.step(k) != G:
                path_b = False
                if witness_b is None:
                    witness_b = {"j": j, "k": k, "weight_dim": G.dim, "monodromy_dim": W.step(k).dim}
                break
    report["path_a"] = path_a
    report["path_b"] = path_b
    report["paths_agree"] = path_a == path_b
    report["witness"] = witness_a or witness_b
    report["H_dims"] = {f"{i},{j}": v for (i, j), v in sorted(H.H_dims.items())}
    return path_a and path_b, report


# ---------------------------------------------------------------------------
# pairing hypotheses


def _column_pairing(inst, c: int) -> GradedPairing:
    prs = getattr(inst, "pairings", None)
    if not prs or c not in prs:
        raise HypothesisFailed(f"no pairing on column {c}", which="pairings")
    return prs[c]


def _primitive(E: E1, c: int, k: int) -> Subspace:
    """Ker L^{k+1} inside C_c^{-k}."""
    mod = E.cols.column_module(c)
    return kernel_basis(mod.L_power(-k, k + 1))


def thm02_hypotheses(inst) -> tuple[bool, bool, dict]:
    E = _e1(inst)
    hyp_r, hyp_g = True, True
    detail = {"rho": [], "gamma": []}
    for c in E.cols.columns:
        Phi = _column_pairing(inst, c)
        mod = E.cols.column_module(c)
        for j in mod.degrees:
            if j > 0:
                continue
            k = -j
            P = _primitive(E, c, k)
            if P.dim == 0:
                continue
            form = BilinearForm(Phi.gram(j) @ mod.L_power(j, k))
            for name, U in (("rho", intersect(E.im_rho(c, j), P)), ("gamma", intersect(E.im_gamma(c, j), P))):
                if U.dim == 0:
                    continue
                ok = form_nondegenerate_on(form, U, U)
                if not ok:
                    gram = form.restrict(U, U)
                    detail[name].append({"column": c, "j": j,
                                         "gram": [[str(x) for x in row] for row in gram.tolist()]})
                    if name == "rho":
                        hyp_r = False
                    else:
                        hyp_g = False
    return hyp_r, hyp_g, detail


def rz_hypothesis(inst) -> tuple[bool, dict]:
    E = _e1(inst)
    n = inst.n
    ok = True
    detail = {"failures": [], "primitive_sign_check": True}
    for c in E.cols.columns:
        Phi = _column_pairing(inst, c)
        mod = E.cols.column_module(c)
        data = primitive_decomposition(mod)
        s = star(mod, n - c, data)
        for j in mod.degrees:
            U = E.im_rho(c, j)
            psi = BilinearForm(Phi.gram(j) @ s.at(j))
            if U.dim and not form_nondegenerate_on(psi, U, U):
                ok = False
                detail["failures"].append({"column": c, "j": j,
                                           "gram": [[str(x) for x in r] for r in psi.restrict(U, U).tolist()]})
            if j <= 0 and j in data.primitives:
                k = -j
                Pb = data.primitives[j].basis
                i_c = (n - c) - k
                sign = -1 if (i_c * (i_c + 1) // 2) % 2 else 1
                lhs = Phi.gram(j) @ s.at(j) @ Pb
                rhs = (Phi.gram(j) @ mod.L_power(j, k) @ Pb).scale(sign)
                if lhs != rhs:
                    detail["primitive_sign_check"] = False
    return ok, detail


def _eps(inst, i: int) -> Fraction:
    eps = getattr(inst, "eps", None) or {}
    return Fraction(eps.get(i, 1))


def thm03_procedure(inst, assume_low_j_injectivity: bool = False) -> tuple[bool, list]:
    E = _e1(inst)
    H = E.H
    hyp_r, _, _ = thm02_hypotheses(inst)
    rz, _ = rz_hypothesis(inst)
    if not (hyp_r or rz):
        raise HypothesisFailed("neither the modified pairing nor the canonical pairing is nondegenerate on Im rho",
                               which="entry", step=None)
    trace = []
    verdict = True
    top = max(E.cols.top, 0)
    J = E.M.j_span()
    for i in range(top, 0, -1):
        step: dict = {"i": i}
        neg = all(N_injective(H, i, j) for j in range(-J - 1, 0))
        if assume_low_j_injectivity and not neg:
            bad = next(j for j in range(-J - 1, 0) if not N_injective(H, i, j))
            raise HypothesisFailed(f"assumed injectivity for j < 0 is false at {(i, bad)}",
                                   which="assume_low_j_injectivity", step=(i, bad))
        step["injective_j<0"] = neg
        step["j<0_source"] = "assumed, verified" if assume_low_j_injectivity else "computed"
        step["injective_j>0"] = all(N_injective(H, i, j) for j in range(1, J + 2))
        f = E.cols.rho_morphism(i - 1)
        g = E.cols.gamma_morphism(i)
        PhiM = _column_pairing(inst, i - 1) if E.cols.dim_any(i - 1) else None
        PhiN = _column_pairing(inst, i) if E.cols.dim_any(i) else None
        p16 = None
        if PhiM is not None and PhiN is not None:
            try:
                p16 = prop16_check(f, g, PhiM, PhiN, _eps(inst, i))
            except HypothesisFailed as exc:
                p16 = f"precondition: {exc.which}"
        step["prop16_j0"] = p16
        step["injective_j0"] = N_injective(H, i, 0)
        # 1-symmetry of Im gamma_i rho_{i-1} inside C_{i-1}
        if E.cols.dim_any(i - 1):
            mod = E.cols.column_module(i - 1)
            subs = {j: E.im_gamma_rho(i, j) for j in mod.degrees}
            step["im_gamma_rho_1_symmetric"] = is_one_symmetric_sub(mod, subs)
        else:
            step["im_gamma_rho_1_symmetric"] = True
        # rho_{i-1} injective on Im0 gamma_i
        if E.cols.dim_any(i) and E.cols.dim_any(i - 1):
            im0 = image_filtration(g).im0
            step["ker_rho_on_im0_gamma_zero"] = all(f.image_of(d_, s).dim == s.dim for d_, s in im0.items() if s.dim)
        else:
            step["ker_rho_on_im0_gamma_zero"] = True
        ok = (step["injective_j<0"] and step["injective_j>0"] and step["injective_j0"]
              and step["im_gamma_rho_1_symmetric"] and step["ker_rho_on_im0_gamma_zero"]
              and p16 is not False)
        step["ok"] = ok
        trace.append(step)
        if not ok:
            verdict = False
            break
    return verdict, trace
