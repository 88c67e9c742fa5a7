"""Graded modules with a degree-2 operator L, their morphisms and pairings.

Degrees are centered: a 0-symmetric module has L^j : M^{-j} -> M^{j} bijective.
The checks for the image filtration results return booleans computed by exact
linear algebra, so a ``False`` under satisfied hypotheses points at a bug.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import (
    DimensionMismatch,
    DualityViolated,
    HypothesisFailed,
    NotLefschetzType,
    NotLLinear,
    WrongDegree,
)
from .linalg import BilinearForm, Matrix, Subspace, intersect, kernel_basis, quotient

__all__ = [
    "GradedLModule",
    "GradedMorphism",
    "GradedPairing",
    "LefschetzData",
    "ImageFiltration",
    "check_symmetric",
    "primitive_decomposition",
    "image_filtration",
    "verify_lemma_1_2",
    "prop13_dimension_report",
    "lemma14_check",
    "prop15_decompose",
    "prop16_check",
    "star",
    "lambda_op",
    "modified_pairing",
    "trace_form",
    "adjoint",
    "SL2Model",
]


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class GradedLModule:
    dims: Mapping[int, int]
    L_maps: Mapping[int, Matrix] = field(default_factory=dict)

    def __post_init__(self):
        dims = {int(j): int(d) for j, d in self.dims.items() if d}
        if any(d < 0 for d in dims.values()):
            raise DimensionMismatch("negative dimension")
        lm = {}
        for j, m in self.L_maps.items():
            j = int(j)
            exp = (dims.get(j + 2, 0), dims.get(j, 0))
            if m.shape != exp:
                raise DimensionMismatch(f"L at degree {j} has shape {m.shape}, expected {exp}")
            if exp[0] and exp[1]:
                lm[j] = m
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "L_maps", lm)
        object.__setattr__(self, "_pow", {})

    def dim(self, j: int) -> int:
        return self.dims.get(j, 0)

    @property
    def degrees(self) -> list[int]:
        return sorted(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def L(self, j: int) -> Matrix:
        m = self.L_maps.get(j)
        if m is None:
            return Matrix.zeros(self.dim(j + 2), self.dim(j))
        return m

    def L_power(self, j: int, k: int) -> Matrix:
        """L^k : M^j -> M^{j+2k}."""
        key = (j, k)
        cache = self._pow
        if key not in cache:
            if k == 0:
                cache[key] = Matrix.identity(self.dim(j))
            else:
                cache[key] = self.L(j + 2 * k - 2) @ self.L_power(j, k - 1)
        return cache[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedLModule):
            return NotImplemented
        if self.dims != other.dims:
            return False
        return all(self.L(j) == other.L(j) for j in self.dims)

    def shifted(self, s: int) -> "GradedLModule":
        """Same data with degree j relabelled j - s."""
        return GradedLModule({j - s: d for j, d in self.dims.items()},
                             {j - s: m for j, m in self.L_maps.items()})

    @staticmethod
    def direct_sum(mods: list["GradedLModule"]) -> "GradedLModule":
        degs = sorted({j for m in mods for j in m.dims})
        dims = {j: sum(m.dim(j) for m in mods) for j in degs}
        lm = {j: Matrix.block_diag([m.L(j) for m in mods]) for j in degs}
        return GradedLModule(dims, lm)


@dataclass(frozen=True, eq=False)
class GradedMorphism:
    source: GradedLModule
    target: GradedLModule
    degree: int
    components: Mapping[int, Matrix]
    l_linear: bool = True

    def __post_init__(self):
        comps = {}
        for j, m in self.components.items():
            exp = (self.target.dim(j + self.degree), self.source.dim(j))
            if m.shape != exp:
                raise DimensionMismatch(f"component at degree {j} has shape {m.shape}, expected {exp}")
            if exp[0] and exp[1]:
                comps[int(j)] = m
        object.__setattr__(self, "components", comps)
        if self.l_linear:
            bad = self.l_linearity_defect()
            if bad is not None:
                raise NotLLinear(f"f L != L f starting at source degree {bad}")

    @classmethod
    def unchecked(cls, source, target, degree, components) -> "GradedMorphism":
        """A graded map that need not commute with L."""
        return cls(source, target, degree, components, l_linear=False)

    @classmethod
    def zero(cls, source, target, degree) -> "GradedMorphism":
        return cls(source, target, degree, {})

    def at(self, j: int) -> Matrix:
        m = self.components.get(j)
        if m is None:
            return Matrix.zeros(self.target.dim(j + self.degree), self.source.dim(j))
        return m

    def l_linearity_defect(self) -> int | None:
        for j in self.source.degrees:
            if self.at(j + 2) @ self.source.L(j) != self.target.L(j + self.degree) @ self.at(j):
                return j
        return None

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.components.values())

    def then(self, other: "GradedMorphism") -> "GradedMorphism":
        """other after self."""
        comps = {j: other.at(j + self.degree) @ self.at(j) for j in self.source.degrees}
        return GradedMorphism(self.source, other.target, self.degree + other.degree, comps,
                              l_linear=self.l_linear and other.l_linear)

    def image(self, j: int) -> Subspace:
        """(Im f) inside target degree j."""
        return Subspace.span(self.at(j - self.degree))

    def kernel(self, j: int) -> Subspace:
        return kernel_basis(self.at(j))

    def image_of(self, j: int, sub: Subspace) -> Subspace:
        """f applied to a subspace of source degree j."""
        return Subspace.span(self.at(j) @ sub.basis)


@dataclass(frozen=True, eq=False)
class GradedPairing:
    """Forms Phi^j : M^j x M^{-j} -> Q."""

    module: GradedLModule
    forms: Mapping[int, BilinearForm]
    check: bool = True

    def __post_init__(self):
        M = self.module
        forms = {}
        for j, f in self.forms.items():
            if not isinstance(f, BilinearForm):
                f = BilinearForm(f)
            exp = (M.dim(j), M.dim(-j))
            if f.gram.shape != exp:
                raise DimensionMismatch(f"form at degree {j} has shape {f.gram.shape}, expected {exp}")
            forms[int(j)] = f
        object.__setattr__(self, "forms", forms)
        if self.check:
            for j in M.degrees:
                g = self.gram(j)
                if g.rows != g.cols or g.rank() != g.rows:
                    raise DualityViolated(f"pairing degenerate at degree {j}", witness=j)
            for j in M.degrees:
                # Phi(Lx, y) = Phi(x, Ly) for x in M^j, y in M^{-j-2}
                lhs = M.L(j).T @ self.gram(j + 2)
                rhs = self.gram(j) @ M.L(-j - 2)
                if lhs != rhs:
                    raise DualityViolated(f"pairing not L-compatible at degree {j}", witness=j)

    def gram(self, j: int) -> Matrix:
        f = self.forms.get(j)
        if f is None:
            return Matrix.zeros(self.module.dim(j), self.module.dim(-j))
        return f.gram


@dataclass(frozen=True)
class LefschetzData:
    primitive_dims: dict
    primitives: dict
    embeddings: dict
    basis: dict
    blocks: dict

    def block_coordinates(self, deg: int, vectors: Matrix) -> Matrix:
        return self.basis[deg].inverse() @ vectors


@dataclass(frozen=True)
class ImageFiltration:
    image: dict
    im0: dict
    im1_dims: dict
    projections: dict
    im1_reps: dict


# ---------------------------------------------------------------------------
# symmetry and Lefschetz decomposition


def check_symmetric(M: GradedLModule, n: int) -> bool:
    """True iff L^j : M^{n-j} -> M^{n+j} is bijective for all j > 0."""
    if not M.dims:
        return True
    span = max(abs(d - n) for d in M.dims)
    for j in range(1, span + 1):
        a, b = M.dim(n - j), M.dim(n + j)
        if a != b:
            return False
        if a and M.L_power(n - j, j).rank() != a:
            return False
    return True


def _require_symmetric(M: GradedLModule, n: int = 0, what: str = "module") -> None:
    if not check_symmetric(M, n):
        raise NotLefschetzType(f"{what} is not {n}-symmetric")


def primitive_decomposition(M: GradedLModule) -> LefschetzData:
    _require_symmetric(M)
    prim, pdims, emb = {}, {}, {}
    cols: dict[int, list[Matrix]] = {}
    blocks: dict[int, list[tuple[int, int, int, int]]] = {}
    kmax = max((-j for j in M.dims if j <= 0), default=-1)
    for k in range(0, kmax + 1):
        if not M.dim(-k):
            continue
        P = kernel_basis(M.L_power(-k, k + 1))
        if P.dim == 0:
            continue
        prim[-k] = P
        pdims[-k] = P.dim
        for a in range(k + 1):
            deg = -k + 2 * a
            E = M.L_power(-k, a) @ P.basis
            emb[(a, -k)] = E
            start = sum(c.cols for c in cols.get(deg, []))
            cols.setdefault(deg, []).append(E)
            blocks.setdefault(deg, []).append((k, a, start, P.dim))
    basis = {}
    for deg in M.degrees:
        B = Matrix.hstack(cols.get(deg, []), rows=M.dim(deg)) if cols.get(deg) else Matrix.zeros(M.dim(deg), 0)
        if B.cols != M.dim(deg) or B.rank() != M.dim(deg):
            raise NotLefschetzType(f"Lefschetz blocks do not fill degree {deg}")
        basis[deg] = B
    return LefschetzData(pdims, prim, emb, basis, blocks)


def primitive_part(M: GradedLModule, j: int) -> Subspace:
    """Ker L^{-j+1} on M^j for j <= 0 (zero otherwise)."""
    if j > 0:
        return Subspace.zero(M.dim(j))
    return kernel_basis(M.L_power(j, -j + 1))


# ---------------------------------------------------------------------------
# image filtration


def _lefschetz_span(N: GradedLModule, pieces: dict[int, Subspace]) -> dict[int, Subspace]:
    """deg -> sum_i L^i(pieces[deg - 2i])."""
    out = {}
    for deg in N.degrees:
        acc = Subspace.zero(N.dim(deg))
        for src, sub in pieces.items():
            i2 = deg - src
            if i2 < 0 or i2 % 2 or sub.dim == 0:
                continue
            acc = acc + sub.image(N.L_power(src, i2 // 2))
        out[deg] = acc
    return out


def image_filtration(f: GradedMorphism) -> ImageFiltration:
    if f.degree != 1:
        raise WrongDegree(f"expected a degree-1 morphism, got degree {f.degree}")
    _require_symmetric(f.source, 0, "source")
    _require_symmetric(f.target, 0, "target")
    N = f.target
    image = {deg: f.image(deg) for deg in N.degrees}
    pieces = {}
    for deg in N.degrees:
        if deg <= 0:
            pieces[deg] = intersect(image[deg], primitive_part(N, deg))
    im0 = _lefschetz_span(N, pieces)
    projections, reps, im1 = {}, {}, {}
    for deg in N.degrees:
        P, _ = quotient(N.dim(deg), im0[deg])
        projections[deg] = P
        # representatives: a complement of im0 inside image
        chosen = []
        cur = im0[deg]
        for col in image[deg].basis.columns():
            if not cur.contains(col):
                chosen.append(col)
                cur = cur + Subspace.from_vectors(N.dim(deg), [col])
        reps[deg] = Matrix.from_columns(chosen, rows=N.dim(deg)) if chosen else Matrix.zeros(N.dim(deg), 0)
        im1[deg] = len(chosen)
    return ImageFiltration(image, im0, {d: v for d, v in im1.items() if v}, projections, reps)


def _induced_L_rank(N: GradedLModule, filt: ImageFiltration, src: int, k: int) -> int:
    reps = filt.im1_reps[src] if src in filt.im1_reps else Matrix.zeros(N.dim(src), 0)
    if reps.cols == 0:
        return 0
    dst = src + 2 * k
    if not N.dim(dst):
        return 0
    return (filt.projections[dst] @ N.L_power(src, k) @ reps).rank()


def is_one_symmetric_quotient(N: GradedLModule, filt: ImageFiltration) -> bool:
    degs = set(filt.im1_dims)
    span = max((abs(d - 1) for d in degs), default=0)
    for j in range(0, span):
        a, b = filt.im1_dims.get(-j, 0), filt.im1_dims.get(j + 2, 0)
        if a != b:
            return False
        if a and _induced_L_rank(N, filt, -j, j + 1) != a:
            return False
    return True


def verify_lemma_1_2(f: GradedMorphism) -> bool:
    """The quotient Im f / Im0 f is 1-symmetric."""
    filt = image_filtration(f)
    return is_one_symmetric_quotient(f.target, filt)


def is_one_symmetric_sub(N: GradedLModule, subs: dict[int, Subspace]) -> bool:
    """A graded L-stable subspace is 1-symmetric."""
    span = max((abs(d - 1) for d, s in subs.items() if s.dim), default=0)
    for j in range(1, span + 1):
        a = subs.get(1 - j, Subspace.zero(N.dim(1 - j)))
        b = subs.get(1 + j, Subspace.zero(N.dim(1 + j)))
        if a.dim != b.dim:
            return False
        if a.dim and a.image(N.L_power(1 - j, j)) != b:
            return False
    return True


# ---------------------------------------------------------------------------
# dual pairs


def _all_degrees(*mods: GradedLModule) -> list[int]:
    degs = sorted({j for m in mods for j in m.dims})
    if not degs:
        return []
    return list(range(degs[0] - 2, degs[-1] + 3))


def check_duality(f: GradedMorphism, g: GradedMorphism, Phi_M: GradedPairing, Phi_N: GradedPairing,
                  c) -> None:
    """Phi_N(f m, n) = c Phi_M(m, g n); raises with the first failing entry."""
    c = Fraction(c)
    if c == 0:
        raise DualityViolated("duality constant must be nonzero")
    if f.degree != 1 or g.degree != 1:
        raise WrongDegree("both maps must have degree 1")
    if f.source != g.target or f.target != g.source:
        raise DualityViolated("f and g do not run between the same modules")
    M = f.source
    for j in M.degrees:
        lhs = f.at(j).T @ Phi_N.gram(j + 1)
        rhs = (Phi_M.gram(j) @ g.at(-j - 1)).scale(c)
        if lhs != rhs:
            for a in range(lhs.rows):
                for b in range(lhs.cols):
                    if lhs[a, b] != rhs[a, b]:
                        raise DualityViolated(f"duality fails at degree {j} entry ({a},{b})",
                                              witness={"degree": j, "m": a, "n": b})


def adjoint(f: GradedMorphism, Phi_M: GradedPairing, Phi_N: GradedPairing, c=1) -> GradedMorphism:
    """The g with Phi_N(f m, n) = c Phi_M(m, g n)."""
    c = Fraction(c)
    M, N = f.source, f.target
    comps = {}
    for j in M.degrees:
        if not N.dim(-j - 1):
            continue
        comps[-j - 1] = Phi_M.gram(j).inverse() @ f.at(j).T @ Phi_N.gram(j + 1) * (1 / c)
    return GradedMorphism(N, M, f.degree, comps)


def prop13_dimension_report(f, g, Phi_M, Phi_N, c=1) -> dict:
    check_duality(f, g, Phi_M, Phi_N, c)
    ff, fg = image_filtration(f), image_filtration(g)
    rows = {}
    ok = True
    for j in _all_degrees(f.source, f.target):
        a = ff.im0.get(j, Subspace.zero(0)).dim
        b = fg.im1_dims.get(j + 1, 0)
        cc = fg.im0.get(j, Subspace.zero(0)).dim
        d = ff.im1_dims.get(j + 1, 0)
        if a or b or cc or d:
            rows[j] = {"a": a, "b": b, "c": cc, "d": d}
        ok = ok and a == b and cc == d
    return {"rows": rows, "verdict": ok}


def _ker_cap(g: GradedMorphism, subs: dict[int, Subspace]) -> dict[int, Subspace]:
    return {d: intersect(g.kernel(d), s) for d, s in subs.items()}


def lemma14_hypothesis(f, Phi_N) -> bool:
    N = f.target
    for deg in N.degrees:
        if deg > 0:
            continue
        j = -deg
        I = intersect(f.image(deg), primitive_part(N, deg))
        if I.dim == 0:
            continue
        mat = f.at(deg - 1).T @ Phi_N.gram(deg) @ N.L_power(deg, j) @ I.basis
        if mat.rank() != I.dim:
            return False
    return True


def lemma14_check(f, g, Phi_M, Phi_N, c=1) -> tuple[bool, bool]:
    check_duality(f, g, Phi_M, Phi_N, c)
    hyp = lemma14_hypothesis(f, Phi_N)
    im0 = image_filtration(f).im0
    concl = all(s.dim == 0 for s in _ker_cap(g, im0).values())
    return hyp, concl


def _f_of(f: GradedMorphism, subs: dict[int, Subspace]) -> dict[int, Subspace]:
    out = {d: Subspace.zero(f.target.dim(d)) for d in f.target.degrees}
    for d, s in subs.items():
        if s.dim and f.target.dim(d + 1):
            out[d + 1] = f.image_of(d, s)
    return out


def _injective_on(f: GradedMorphism, subs: dict[int, Subspace]) -> bool:
    return all(f.image_of(d, s).dim == s.dim for d, s in subs.items() if s.dim)


def _zero(m: GradedMorphism) -> bool:
    return m.is_zero()


def prop15_decompose(f, g, Phi_M, Phi_N, c=1) -> dict:
    check_duality(f, g, Phi_M, Phi_N, c)
    if not _zero(f.then(g).then(f)):
        raise HypothesisFailed("fgf is not zero", which="fgf=0")
    ff, fg = image_filtration(f), image_filtration(g)
    if not _injective_on(f, fg.im0):
        raise HypothesisFailed("f is not injective on Im0 g", which="f injective on Im0 g")
    if not _injective_on(g, ff.im0):
        raise HypothesisFailed("g is not injective on Im0 f", which="g injective on Im0 f")
    checks = {}
    f_im0g = _f_of(f, fg.im0)
    g_im0f = _f_of(g, ff.im0)
    fg_map = g.then(f)
    gf_map = f.then(g)
    im_fg = {d: fg_map.image(d) for d in f.target.degrees}
    im_gf = {d: gf_map.image(d) for d in f.source.degrees}
    iso_f = iso_g = True
    split_f = split_g = True
    eq_f = eq_g = True
    for d in f.target.degrees:
        s = f_im0g[d]
        iso_f &= s.dim == ff.im1_dims.get(d, 0) and intersect(s, ff.im0[d]).dim == 0
        split_f &= (ff.im0[d] + im_fg[d]) == ff.image[d] and intersect(ff.im0[d], im_fg[d]).dim == 0
        eq_f &= im_fg[d] == s and im_fg[d].dim == ff.im1_dims.get(d, 0)
    for d in f.source.degrees:
        s = g_im0f[d]
        iso_g &= s.dim == fg.im1_dims.get(d, 0) and intersect(s, fg.im0[d]).dim == 0
        split_g &= (fg.im0[d] + im_gf[d]) == fg.image[d] and intersect(fg.im0[d], im_gf[d]).dim == 0
        eq_g &= im_gf[d] == s and im_gf[d].dim == fg.im1_dims.get(d, 0)
    g_kills = all(g.image_of(d, s).dim == 0 for d, s in im_fg.items() if s.dim)
    f_kills = all(f.image_of(d, s).dim == 0 for d, s in im_gf.items() if s.dim)
    checks = {
        "isomorphisms": iso_f and iso_g,
        "splitting_f": split_f,
        "splitting_g": split_g,
        "im_fg_is_im1_f": eq_f,
        "im_gf_is_im1_g": eq_g,
        "g_zero_on_im1_f": g_kills,
        "f_zero_on_im1_g": f_kills,
    }
    return {
        "im0_f": {d: s for d, s in ff.im0.items() if s.dim},
        "im1_f": {d: s for d, s in im_fg.items() if s.dim},
        "im0_g": {d: s for d, s in fg.im0.items() if s.dim},
        "im1_g": {d: s for d, s in im_gf.items() if s.dim},
        "checks": checks,
        "verdict": all(checks.values()),
    }


def prop16_check(f, g, Phi_M, Phi_N, c=1) -> bool:
    check_duality(f, g, Phi_M, Phi_N, c)
    N = f.target
    im0 = image_filtration(f).im0
    if any(s.dim for s in _ker_cap(g, im0).values()):
        raise HypothesisFailed("Ker g meets Im0 f", which="Ker g cap Im0 f = 0")
    fg_map = g.then(f)
    im_fg = {d: fg_map.image(d) for d in N.degrees}
    if not is_one_symmetric_sub(N, im_fg):
        raise HypothesisFailed("Im fg is not 1-symmetric", which="Im fg 1-symmetric")
    if not _zero(g.then(f).then(g)):
        raise HypothesisFailed("gfg is not zero", which="gfg=0")
    kg = {d: intersect(g.kernel(d), f.image(d)) for d in N.degrees}
    for d in N.degrees:
        if d != 0 and kg[d] != im_fg[d]:
            raise HypothesisFailed(f"Ker g cap Im f differs from Im fg in degree {d}",
                                   which="(Ker g cap Im f)^j = (Im fg)^j for j != 0")
    return kg.get(0, Subspace.zero(0)) == im_fg.get(0, Subspace.zero(0))


# ---------------------------------------------------------------------------
# star, Lambda, modified pairing, trace form


def _block_operator(M: GradedLModule, data: LefschetzData, shift: int, rule) -> dict[int, Matrix]:
    """Matrices deg -> deg + shift sending Lefschetz block (k, a) to rule(k, a) = (a', sign) or None."""
    out = {}
    for deg in M.degrees:
        tgt = deg + shift
        if not M.dim(tgt):
            continue
        S = [[Fraction(0)] * M.dim(deg) for _ in range(M.dim(tgt))]
        starts_t = {(k, a): (st, sz) for k, a, st, sz in data.blocks.get(tgt, [])}
        for k, a, st, sz in data.blocks[deg]:
            r = rule(k, a)
            if r is None:
                continue
            a2, sign = r
            st2, sz2 = starts_t[(k, a2)]
            for t in range(sz):
                S[st2 + t][st + t] = Fraction(sign)
        out[deg] = data.basis[tgt] @ Matrix(S, rows=M.dim(tgt), cols=M.dim(deg)) @ data.basis[deg].inverse()
    return out


def star(M: GradedLModule, n: int, data: LefschetzData | None = None) -> "StarMap":
    """Block-wise involution L^a m -> (-1)^{i(i+1)/2} L^{k-a} m, i = n - k.

    ``n`` is the ambient dimension; a primitive of centered degree -k sits in
    cohomological degree n - k. The returned map sends M^j to M^{-j}.
    """
    if data is None:
        data = primitive_decomposition(M)
    mats = {}
    for deg in M.degrees:
        S = [[Fraction(0)] * M.dim(deg) for _ in range(M.dim(-deg))]
        starts_t = {(k, a): (st, sz) for k, a, st, sz in data.blocks.get(-deg, [])}
        for k, a, st, sz in data.blocks[deg]:
            i = n - k
            sign = -1 if (i * (i + 1) // 2) % 2 else 1
            st2, _ = starts_t[(k, k - a)]
            for t in range(sz):
                S[st2 + t][st + t] = Fraction(sign)
        mats[deg] = data.basis[-deg] @ Matrix(S, rows=M.dim(-deg), cols=M.dim(deg)) @ data.basis[deg].inverse()
    return StarMap(M, mats)


@dataclass(frozen=True, eq=False)
class StarMap:
    """Degree-reversing map: ``at(j)`` is M^j -> M^{-j}."""

    module: GradedLModule
    maps: dict

    def at(self, j: int) -> Matrix:
        return self.maps.get(j, Matrix.zeros(self.module.dim(-j), self.module.dim(j)))

    def squared_is_identity(self) -> bool:
        return all(self.at(-j) @ self.at(j) == Matrix.identity(self.module.dim(j)) for j in self.module.degrees)


def lambda_op(M: GradedLModule, data: LefschetzData | None = None) -> GradedMorphism:
    if data is None:
        data = primitive_decomposition(M)
    comps = _block_operator(M, data, -2, lambda k, a: (a - 1, 1) if a > 0 else None)
    return GradedMorphism.unchecked(M, M, -2, comps)


def modified_pairing(M: GradedLModule, Phi: GradedPairing, n: int,
                     data: LefschetzData | None = None) -> dict[int, BilinearForm]:
    """(x, y) -> Phi(x, *y) on M^j x M^j."""
    s = star(M, n, data)
    return {j: BilinearForm(Phi.gram(j) @ s.at(j)) for j in M.degrees}


def trace_form(Gamma: GradedMorphism, M: GradedLModule, Phi: GradedPairing, n: int,
               data: LefschetzData | None = None) -> tuple[GradedMorphism, Fraction]:
    """Gamma' = * o (Phi-transpose of Gamma) o * and Tr(Gamma' o Gamma)."""
    if Gamma.degree != 0:
        raise WrongDegree("trace form needs a degree-0 map")
    s = star(M, n, data)
    comps = {}
    total = Fraction(0)
    for j in M.degrees:
        G = Phi.gram(j)
        # transpose at degree -j: Phi(Gamma x, y) = Phi(x, tGamma y), x in M^j
        t_minus = G.inverse() @ Gamma.at(j).T @ G
        comps[j] = s.at(-j) @ t_minus @ s.at(j)
        total += (comps[j] @ Gamma.at(j)).trace()
    return GradedMorphism.unchecked(M, M, 0, comps), total


# ---------------------------------------------------------------------------
# seeded constructions


def random_invertible(rng: random.Random, n: int, lo: int = -2, hi: int = 2) -> Matrix:
    """Random integer matrix of full rank; identity plus a random unipotent mix keeps entries small."""
    if n == 0:
        return Matrix.zeros(0, 0)
    while True:
        m = Matrix([[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)])
        if m.rank() == n:
            return m


class SL2Model:
    """A direct sum of strings V_k (primitive in degree -k, then L^a) in a
    randomly changed basis.

    ``mult[k]`` is the number of copies of V_k. The standard basis of degree
    ``d`` lists (k, a, s) with d = -k + 2a, ordered by k, then s.
    """

    def __init__(self, mult: Mapping[int, int], rng: random.Random | None = None, mix: bool = True):
        self.mult = {int(k): int(m) for k, m in mult.items() if m}
        self.index: dict[int, list[tuple[int, int, int]]] = {}
        for k in sorted(self.mult):
            for s in range(self.mult[k]):
                for a in range(k + 1):
                    self.index.setdefault(-k + 2 * a, []).append((k, a, s))
        for d in self.index:
            self.index[d].sort(key=lambda t: (t[0], t[2]))
        self.pos = {d: {t: i for i, t in enumerate(lst)} for d, lst in self.index.items()}
        self.T = {}
        for d in sorted(self.index):
            n = len(self.index[d])
            self.T[d] = random_invertible(rng, n) if (mix and rng is not None) else Matrix.identity(n)
        self._Tinv = {d: t.inverse() for d, t in self.T.items()}
        L = {}
        for d, lst in self.index.items():
            if d + 2 not in self.index:
                continue
            S = [[0] * len(lst) for _ in self.index[d + 2]]
            for col, (k, a, s) in enumerate(lst):
                if a < k:
                    S[self.pos[d + 2][(k, a + 1, s)]][col] = 1
            L[d] = self.T[d + 2] @ Matrix(S, rows=len(self.index[d + 2]), cols=len(lst)) @ self._Tinv[d]
        self.module = GradedLModule({d: len(v) for d, v in self.index.items()}, L)

    def dim(self, d: int) -> int:
        return len(self.index.get(d, ()))

    def to_module(self, d: int, std: Matrix) -> Matrix:
        """Standard coordinates -> module coordinates at degree d."""
        return self.T[d] @ std

    def from_module(self, d: int, vec: Matrix) -> Matrix:
        return self._Tinv[d] @ vec

    def primitive_vector(self, k: int, s: int) -> Matrix:
        return self.to_module(-k, self.std_unit(-k, (k, 0, s)))

    def std_unit(self, d: int, key) -> Matrix:
        v = [[0] for _ in self.index[d]]
        v[self.pos[d][key]][0] = 1
        return Matrix(v)

    def kernel_std_keys(self, d: int, power: int) -> list[tuple[int, int, int]]:
        """Standard basis keys at degree d killed by L^power."""
        return [t for t in self.index.get(d, ()) if t[1] + power > t[0]]

    def morphism_from_primitives(self, target: "SL2Model", degree: int,
                                 images: Mapping[tuple[int, int], Matrix]) -> GradedMorphism:
        """L-linear map fixed by primitive images, in target module coordinates.

        ``images[(k, s)]`` is a column in target degree -k + degree killed by L^{k+1}.
        """
        comps = {}
        std_images = {}
        for (k, s), v in images.items():
            std_images[(k, s)] = target.from_module(-k + degree, v)
        for d, lst in self.index.items():
            td = d + degree
            if td not in target.index:
                continue
            cols = []
            for (k, a, s) in lst:
                v = std_images.get((k, s))
                if v is None:
                    cols.append([0] * target.dim(td))
                    continue
                w = target.std_L_power(-k + degree, a, v)
                cols.append(list(w.column(0)))
            S = Matrix.from_columns(cols, rows=target.dim(td))
            comps[d] = target.T[td] @ S @ self._Tinv[d]
        return GradedMorphism(self.module, target.module, degree, comps)

    def std_L_power(self, d: int, a: int, v: Matrix) -> Matrix:
        out = [[0] for _ in self.index.get(d + 2 * a, ())]
        for row, (k, b, s) in enumerate(self.index.get(d, ())):
            x = v[row, 0]
            if x and b + a <= k:
                out[self.pos[d + 2 * a][(k, b + a, s)]][0] = x
        return Matrix(out, rows=len(out), cols=1)

    def random_morphism(self, rng: random.Random, target: "SL2Model", degree: int = 1,
                        density: float = 0.7) -> GradedMorphism:
        images = {}
        for k, m in self.mult.items():
            d = -k + degree
            if d not in target.index:
                continue
            keys = target.kernel_std_keys(d, k + 1)
            for s in range(m):
                v = [[0] for _ in target.index[d]]
                for key in keys:
                    if rng.random() < density:
                        v[target.pos[d][key]][0] = rng.randint(-3, 3)
                images[(k, s)] = target.to_module(d, Matrix(v))
        return self.morphism_from_primitives(target, degree, images)

    def pairing(self, Q: Mapping[int, Matrix]) -> GradedPairing:
        """Phi(L^a p_s, L^b p_t) = Q[k][s, t] when a + b = k, else 0."""
        forms = {}
        for d, lst in self.index.items():
            if -d not in self.index:
                continue
            rows = len(lst)
            cols = len(self.index[-d])
            G = [[Fraction(0)] * cols for _ in range(rows)]
            for r, (k, a, s) in enumerate(lst):
                for t in range(self.mult[k]):
                    c = self.pos[-d].get((k, k - a, t))
                    if c is not None:
                        G[r][c] = Q[k][s, t]
            Gs = Matrix(G, rows=rows, cols=cols)
            forms[d] = BilinearForm(self._Tinv[d].T @ Gs @ self._Tinv[-d])
        return GradedPairing(self.module, forms)

    def random_pairing(self, rng: random.Random) -> GradedPairing:
        return self.pairing({k: random_invertible(rng, m) for k, m in self.mult.items()})

    @staticmethod
    def random(rng: random.Random, max_k: int = 3, max_mult: int = 2, parity: int | None = None) -> "SL2Model":
        mult = {}
        for k in range(max_k + 1):
            if parity is not None and k % 2 != parity:
                continue
            m = rng.randint(0, max_mult)
            if m:
                mult[k] = m
        return SL2Model(mult, rng)


def hyperbolic(m: int) -> Matrix:
    """[[0, I], [I, 0]] of size 2m."""
    z, i = Matrix.zeros(m, m), Matrix.identity(m)
    return Matrix.vstack([Matrix.hstack([z, i]), Matrix.hstack([i, z])])


def dual_block_pair(rng: random.Random, a: int, extra_M: Mapping[int, int] | None = None,
                    extra_N: Mapping[int, int] | None = None, mirrored: bool = False):
    """A dual pair (f, g) with fgf = 0 and injectivity on both saturated images, plus padding strings.

    M contains two copies of V_a paired hyperbolically and N one copy of V_{a-1}.
    f sends the first primitive of V_a to the primitive of V_{a-1} and kills the
    second; g is the adjoint. With ``mirrored`` the roles of (M, f) and (N, g)
    are swapped, which makes Im fg nonzero.
    """
    if a < 1:
        raise ValueError("string length a must be positive")
    multM = {a: 2}
    multN = {a - 1: 1}
    for k, m in (extra_M or {}).items():
        multM[k] = multM.get(k, 0) + m
    for k, m in (extra_N or {}).items():
        multN[k] = multN.get(k, 0) + m
    SM, SN = SL2Model(multM, rng), SL2Model(multN, rng)
    if mirrored:
        # swapping sides needs symmetric forms to keep Phi_M(g n, m) = Phi_N(n, f m)
        def form(m):
            return Matrix.diagonal([rng.choice([-2, -1, 1, 2]) for _ in range(m)])
    else:
        def form(m):
            return random_invertible(rng, m)
    QM = {k: form(m) for k, m in multM.items()}
    QN = {k: form(m) for k, m in multN.items()}
    QM[a] = Matrix.block_diag([hyperbolic(1), form(multM[a] - 2)]) if multM[a] > 2 else hyperbolic(1)
    # the image primitive must pair nontrivially with itself only, or g kills it
    QN[a - 1] = Matrix.block_diag([Matrix([[1]]), form(multN[a - 1] - 1)])
    PhiM, PhiN = SM.pairing(QM), SN.pairing(QN)
    images = {(a, 0): SN.primitive_vector(a - 1, 0)}
    f = SM.morphism_from_primitives(SN, 1, images)
    g = adjoint(f, PhiM, PhiN, 1)
    if mirrored:
        return (g, f, PhiN, PhiM)
    return (f, g, PhiM, PhiN)


def direct_sum_pairs(pairs):
    """Direct sum of several (f, g, Phi_M, Phi_N) tuples."""
    Ms = [p[0].source for p in pairs]
    Ns = [p[0].target for p in pairs]
    M, N = GradedLModule.direct_sum(Ms), GradedLModule.direct_sum(Ns)

    def dsum_map(maps, src, tgt, deg):
        comps = {j: Matrix.block_diag([m.at(j) for m in maps]) for j in src.degrees}
        return GradedMorphism(src, tgt, deg, comps)

    def dsum_pair(ps, mod):
        return GradedPairing(mod, {j: BilinearForm(Matrix.block_diag([p.gram(j) for p in ps])) for j in mod.degrees})

    f = dsum_map([p[0] for p in pairs], M, N, 1)
    g = dsum_map([p[1] for p in pairs], N, M, 1)
    return f, g, dsum_pair([p[2] for p in pairs], M), dsum_pair([p[3] for p in pairs], N)


def isotropic_negative_control(rng: random.Random, a: int = 2):
    """M = V_a, N = V_{a-1} + V_{a-1} with a hyperbolic pairing, f onto an isotropic copy.

    The isotropy breaks the injectivity hypothesis.
    """
    SM, SN = SL2Model({a: 1}, rng), SL2Model({a - 1: 2}, rng)
    PhiM = SM.pairing({a: Matrix([[1]])})
    PhiN = SN.pairing({a - 1: hyperbolic(1)})
    f = SM.morphism_from_primitives(SN, 1, {(a, 0): SN.primitive_vector(a - 1, 0)})
    g = adjoint(f, PhiM, PhiN, 1)
    return f, g, PhiM, PhiN
