"""Build E1-shaped instances from stratum cohomology and transition maps.

Column c of an instance is the cohomology of the (c+1)-fold intersections,
recentred so that C_c^j sits in cohomological degree n - c + j. Generators
return stratum data; :func:`assemble` validates it and builds the bigraded
module with N, L and d.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .bigraded import E1, BigradedNLModule, DifferentialStructure
from .errors import NoRoom, ValidationFailed
from .graded import GradedPairing, primitive_decomposition, random_invertible
from .linalg import BilinearForm, Matrix, Subspace, intersect, kernel_basis

__all__ = [
    "StratumLevel",
    "StrataCohomology",
    "TransitionMaps",
    "RZInstance",
    "ColumnData",
    "validate",
    "assemble",
    "assemble_columns",
    "gen_curve_cycle",
    "gen_combinatorial",
    "gen_random_jordan",
    "perturb_break_pairing",
    "direct_sum",
    "transform",
]


# ---------------------------------------------------------------------------
# stratum data


@dataclass
class StratumLevel:
    """Cohomology of Y^(i): dims by degree, L : H^m -> H^{m+2}, pairing H^m x H^{top-m}."""

    dims: dict
    L: dict
    pairing: dict

    def dim(self, m: int) -> int:
        return self.dims.get(m, 0)

    def L_at(self, m: int) -> Matrix:
        x = self.L.get(m)
        return x if x is not None else Matrix.zeros(self.dim(m + 2), self.dim(m))

    def gram(self, m: int, top: int) -> Matrix:
        x = self.pairing.get(m)
        return x if x is not None else Matrix.zeros(self.dim(m), self.dim(top - m))


@dataclass
class StrataCohomology:
    n: int
    levels: dict              # i >= 1 -> StratumLevel

    def top(self, i: int) -> int:
        """Top cohomological degree of Y^(i)."""
        return 2 * (self.n - i + 1)

    def level(self, i: int) -> StratumLevel:
        return self.levels.get(i) or StratumLevel({}, {}, {})


@dataclass
class TransitionMaps:
    """rho[(i, m)] : H^m(Y^(i)) -> H^m(Y^(i+1)); gamma[(i, m)] : H^m(Y^(i+1)) -> H^{m+2}(Y^(i))."""

    rho: dict
    gamma: dict
    sign_twist: dict = field(default_factory=dict)   # i -> +1/-1 applied to rho out of level i
    eps: dict = field(default_factory=dict)          # i -> adjointness sign between levels i, i+1


@dataclass
class ColumnData:
    """Column-indexed form: dims[(c, j)], L[(c, j)], gram[(c, j)], rho[(c, j)], gamma[(c, j)]."""

    n: int
    dims: dict
    L: dict = field(default_factory=dict)
    gram: dict | None = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=dict)
    eps: dict = field(default_factory=dict)   # level i (rho_{i-1}, gamma_i) -> sign

    def dim(self, c: int, j: int) -> int:
        return self.dims.get((c, j), 0)

    @property
    def columns(self) -> list[int]:
        return sorted({c for (c, _j), v in self.dims.items() if v})

    def Lm(self, c, j):
        x = self.L.get((c, j))
        return x if x is not None else Matrix.zeros(self.dim(c, j + 2), self.dim(c, j))

    def Gm(self, c, j):
        x = self.gram.get((c, j)) if self.gram is not None else None
        return x if x is not None else Matrix.zeros(self.dim(c, j), self.dim(c, -j))

    def r(self, c, j):
        x = self.rho.get((c, j))
        return x if x is not None else Matrix.zeros(self.dim(c + 1, j + 1), self.dim(c, j))

    def g(self, c, j):
        x = self.gamma.get((c, j))
        return x if x is not None else Matrix.zeros(self.dim(c - 1, j + 1), self.dim(c, j))


def to_columns(strata: StrataCohomology, trans: TransitionMaps) -> ColumnData:
    n = strata.n
    dims, L, gram, rho, gamma = {}, {}, {}, {}, {}
    for i, lev in strata.levels.items():
        c = i - 1
        top = strata.top(i)
        for m, v in lev.dims.items():
            if v:
                dims[(c, m - (n - c))] = v
        for m in lev.dims:
            j = m - (n - c)
            L[(c, j)] = lev.L_at(m)
            gram[(c, j)] = lev.gram(m, top)
    for (i, m), x in trans.rho.items():
        c = i - 1
        t = trans.sign_twist.get(i, 1)
        rho[(c, m - (n - c))] = x.scale(t) if t != 1 else x
    for (i, m), x in trans.gamma.items():
        # source H^m(Y^(i+1)) is column i
        c = i
        gamma[(c, m - (n - c))] = x
    eps = {}
    for i in range(1, max(strata.levels, default=1) + 1):
        eps[i] = trans.eps.get(i, 1) * trans.sign_twist.get(i, 1)
    cd = ColumnData(n, {k: v for k, v in dims.items() if v}, L, gram, rho, gamma, eps)
    return cd


# ---------------------------------------------------------------------------
# validation


def _item(report, check, level, ok, detail=None):
    report["items"].append({"check": check, "level": level, "ok": bool(ok), "detail": detail})
    if not ok:
        report["ok"] = False


def validate_columns(cd: ColumnData, require_pairing: bool = True) -> dict:
    report = {"ok": True, "items": []}
    cols = cd.columns
    for c in cols:
        js = sorted(j for (cc, j) in cd.dims if cc == c)
        # shapes
        shape_ok = True
        for j in js + [j - 2 for j in js]:
            if cd.Lm(c, j).shape != (cd.dim(c, j + 2), cd.dim(c, j)):
                shape_ok = False
        # hard Lefschetz within the column
        hl = True
        span = max((abs(j) for j in js), default=0)
        for k in range(1, span + 1):
            a, b = cd.dim(c, -k), cd.dim(c, k)
            if a != b:
                hl = False
                continue
            if a:
                P = Matrix.identity(a)
                for t in range(k):
                    P = cd.Lm(c, -k + 2 * t) @ P
                if P.rank() != a:
                    hl = False
        _item(report, "hard_lefschetz", c + 1, shape_ok and hl)
        if cd.gram is None:
            continue
        nd = True
        for j in js:
            G = cd.Gm(c, j)
            if G.rows != G.cols or G.rank() != G.rows:
                nd = False
        _item(report, "pairing_nondegenerate", c + 1, nd)
        lc = all(cd.Lm(c, j).T @ cd.Gm(c, j + 2) == cd.Gm(c, j) @ cd.Lm(c, -j - 2) for j in js)
        _item(report, "pairing_L_compatible", c + 1, lc)
    for c in cols:
        js = sorted(j for (cc, j) in cd.dims if cc == c)
        rr = all((cd.r(c + 1, j + 1) @ cd.r(c, j)).is_zero() for j in js)
        gg = all((cd.g(c - 1, j + 1) @ cd.g(c, j)).is_zero() for j in js) if c >= 2 else True
        _item(report, "rho_squared_zero", c + 1, rr)
        _item(report, "gamma_squared_zero", c + 1, gg)
        if c >= 1:
            bad = None
            for j in js:
                if not (cd.g(c + 1, j + 1) @ cd.r(c, j) + cd.r(c - 1, j + 1) @ cd.g(c, j)).is_zero():
                    bad = j
                    break
            _item(report, "anticommutation", c + 1, bad is None, None if bad is None else {"column": c, "j": bad})
        # L-equivariance
        le = all(cd.r(c, j + 2) @ cd.Lm(c, j) == cd.Lm(c + 1, j + 1) @ cd.r(c, j) for j in js)
        le = le and all(cd.g(c, j + 2) @ cd.Lm(c, j) == cd.Lm(c - 1, j + 1) @ cd.g(c, j) for j in js)
        _item(report, "L_equivariance", c + 1, le)
    if cd.gram is not None:
        for c in cols:
            if c + 1 not in cols and not any(cd.r(c, j).rows for (cc, j) in cd.dims if cc == c):
                continue
            e = Fraction(cd.eps.get(c + 1, 1))
            ok = True
            for (cc, j) in list(cd.dims):
                if cc != c:
                    continue
                lhs = cd.r(c, j).T @ cd.Gm(c + 1, j + 1)
                rhs = (cd.Gm(c, j) @ cd.g(c + 1, -j - 1)).scale(e)
                if lhs != rhs:
                    ok = False
            _item(report, "adjointness", c + 1, ok, {"eps": int(e)})
    elif require_pairing:
        _item(report, "pairings_present", 0, False)
    return report


def validate(strata: StrataCohomology, trans: TransitionMaps) -> dict:
    """Itemized pass/fail report over all stratum and transition axioms."""
    try:
        cd = to_columns(strata, trans)
    except Exception as exc:  # malformed shapes surface as a single failed item
        return {"ok": False, "items": [{"check": "shapes", "level": None, "ok": False, "detail": str(exc)}]}
    return validate_columns(cd)


# ---------------------------------------------------------------------------
# instances


@dataclass(eq=False)
class RZInstance:
    module: BigradedNLModule
    differential: DifferentialStructure
    n: int
    pairings: dict | None            # column -> GradedPairing in canonical column coordinates
    eps: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    _e1: E1 | None = None

    def e1(self) -> E1:
        if self._e1 is None:
            self._e1 = E1(self.module, self.differential)
        return self._e1


def assemble_columns(cd: ColumnData, require_pairing: bool = True,
                     provenance: dict | None = None) -> RZInstance:
    rep = validate_columns(cd, require_pairing=require_pairing and cd.gram is not None)
    for it in rep["items"]:
        if not it["ok"]:
            raise ValidationFailed(f"{it['check']} fails at level {it['level']}", axiom=it["check"], level=it["level"])
    cols = cd.columns
    top = max(cols, default=-1)
    layout: dict = {}       # (i, j) -> list of (c, a, start, size)
    for (c, j), v in sorted(cd.dims.items()):
        for a in range(0, c + 1):
            layout.setdefault((c - 2 * a, j), []).append((c, a, v))
    offs: dict = {}
    dims = {}
    for slot, items in layout.items():
        items.sort(key=lambda t: (t[1], t[0]))
        pos = 0
        for c, a, v in items:
            offs[(slot, c, a)] = pos
            pos += v
        dims[slot] = pos

    def block(dst, src, entries):
        R = [[Fraction(0)] * dims.get(src, 0) for _ in range(dims.get(dst, 0))]
        for (r0, c0, m) in entries:
            for r in range(m.rows):
                for s in range(m.cols):
                    R[r0 + r][c0 + s] = m[r, s]
        return Matrix(R, rows=dims.get(dst, 0), cols=dims.get(src, 0))

    Nm, Lm, dm = {}, {}, {}
    for slot, items in layout.items():
        i, j = slot
        ents_N, ents_L, ents_d = [], [], []
        for c, a, v in items:
            o = offs[(slot, c, a)]
            if a + 1 <= c:
                ents_N.append((offs[((i - 2, j), c, a + 1)], o, Matrix.identity(v)))
            if cd.dim(c, j + 2):
                ents_L.append((offs[((i, j + 2), c, a)], o, cd.Lm(c, j)))
            if a <= c - 1 and cd.dim(c - 1, j + 1):
                ents_d.append((offs[((i - 1, j + 1), c - 1, a)], o, cd.g(c, j)))
            if cd.dim(c + 1, j + 1):
                ents_d.append((offs[((i - 1, j + 1), c + 1, a + 1)], o, cd.r(c, j)))
        if dims.get((i - 2, j)):
            Nm[slot] = block((i - 2, j), slot, ents_N)
        if dims.get((i, j + 2)):
            Lm[slot] = block((i, j + 2), slot, ents_L)
        if dims.get((i - 1, j + 1)):
            dm[slot] = block((i - 1, j + 1), slot, ents_d)
    M = BigradedNLModule(dims, Nm, Lm)
    d = DifferentialStructure(M, dm)
    M.validate()
    bad = d.violations()
    if bad:
        kind, slot = bad[0]
        raise ValidationFailed(f"{kind} fails on the assembled complex at {slot}", axiom=kind, level=slot)
    pairings = None
    inst = RZInstance(M, d, cd.n, None, dict(cd.eps), dict(provenance or {}))
    if cd.gram is not None and cols:
        E = inst.e1()
        pairings = {}
        for c in cols:
            mod = E.cols.column_module(c)
            forms = {j: BilinearForm(cd.Gm(c, j)) for j in mod.degrees}
            pairings[c] = GradedPairing(mod, forms)
        inst.pairings = pairings
    _ = top
    return inst


def assemble(strata: StrataCohomology, trans: TransitionMaps, provenance: dict | None = None) -> RZInstance:
    rep = validate(strata, trans)
    for it in rep["items"]:
        if not it["ok"]:
            raise ValidationFailed(f"{it['check']} fails at level {it['level']}", axiom=it["check"], level=it["level"])
    return assemble_columns(to_columns(strata, trans), provenance=provenance)


def instance_columns(inst: RZInstance) -> ColumnData:
    """Column data read back from an instance (canonical column coordinates)."""
    E = inst.e1()
    cols = E.cols
    dims = dict(cols.C_dims)
    gram = None
    if inst.pairings is not None:
        gram = {}
        for c, P in inst.pairings.items():
            for j in P.module.degrees:
                gram[(c, j)] = P.gram(j)
    return ColumnData(inst.n, dims, dict(cols.L), gram, dict(cols.rho), dict(cols.gamma), dict(inst.eps))


def direct_sum_columns(parts: Sequence[ColumnData]) -> ColumnData:
    n = max((p.n for p in parts), default=0)
    keys = sorted({k for p in parts for k in p.dims})
    dims = {k: sum(p.dim(*k) for p in parts) for k in keys}
    L = {k: Matrix.block_diag([p.Lm(*k) for p in parts]) for k in keys}
    have_gram = all(p.gram is not None for p in parts)
    gram = {k: Matrix.block_diag([p.Gm(*k) for p in parts]) for k in keys} if have_gram else None
    rho = {k: Matrix.block_diag([p.r(*k) for p in parts]) for k in keys}
    gamma = {k: Matrix.block_diag([p.g(*k) for p in parts]) for k in keys}
    eps = {}
    for p in parts:
        for lvl, e in p.eps.items():
            if lvl in eps and eps[lvl] != e and have_gram:
                raise ValidationFailed("summands disagree on the adjointness sign", axiom="adjointness", level=lvl)
            eps[lvl] = e
    return ColumnData(n, dims, L, gram, rho, gamma, eps)


def direct_sum(instances: Sequence[RZInstance]) -> RZInstance:
    cd = direct_sum_columns([instance_columns(x) for x in instances])
    prov = {"kind": "direct_sum", "parts": [x.provenance for x in instances]}
    return assemble_columns(cd, require_pairing=cd.gram is not None, provenance=prov)


def transform(inst: RZInstance, T: Mapping, provenance: dict | None = None) -> RZInstance:
    """Change of basis x -> T[(i, j)] x in every slot; pairings follow the new column bases."""
    M, d = inst.module, inst.differential
    Ti = {s: T[s].inverse() for s in M.slots}
    Nm = {s: T[(s[0] - 2, s[1])] @ M.N(*s) @ Ti[s] for s in M.slots if M.dim(s[0] - 2, s[1])}
    Lm = {s: T[(s[0], s[1] + 2)] @ M.L(*s) @ Ti[s] for s in M.slots if M.dim(s[0], s[1] + 2)}
    dm = {s: T[(s[0] - 1, s[1] + 1)] @ d.d(*s) @ Ti[s] for s in M.slots if M.dim(s[0] - 1, s[1] + 1)}
    M2 = BigradedNLModule(dict(M.dims), Nm, Lm)
    d2 = DifferentialStructure(M2, dm)
    out = RZInstance(M2, d2, inst.n, None, dict(inst.eps), dict(provenance or inst.provenance))
    if inst.pairings is not None:
        old_cols = inst.e1().cols
        new_cols = out.e1().cols
        pairings = {}
        K = {}
        for (c, j), b_new in new_cols.basis.items():
            if not b_new.cols:
                continue
            in_old = Ti[(c, j)] @ b_new
            K[(c, j)] = old_cols.basis[(c, j)].solve(in_old)
        for c, P in inst.pairings.items():
            mod = new_cols.column_module(c)
            forms = {j: BilinearForm(K[(c, j)].T @ P.gram(j) @ K[(c, -j)]) for j in mod.degrees}
            pairings[c] = GradedPairing(mod, forms)
        out.pairings = pairings
    return out


def random_transform(inst: RZInstance, rng: random.Random) -> RZInstance:
    T = {s: random_invertible(rng, inst.module.dim(*s)) for s in inst.module.slots}
    return transform(inst, T, inst.provenance)


# ---------------------------------------------------------------------------
# helpers for generators


def _mat(rows, r, c) -> Matrix:
    return Matrix(rows, rows=r, cols=c)


def _projective_level(dim: int, count: int) -> StratumLevel:
    """``count`` copies of the cohomology of projective ``dim``-space."""
    dims = {2 * a: count for a in range(dim + 1)}
    I = Matrix.identity(count)
    L = {2 * a: I for a in range(dim)}
    pairing = {2 * a: I for a in range(dim + 1)}
    return StratumLevel(dims, L, pairing)


def gamma_from_rho(strata: StrataCohomology, rho: Mapping, eps: Mapping | None = None) -> dict:
    """Gysin maps as exact adjoints: Phi(rho x, y) = eps * Phi(x, gamma y)."""
    eps = eps or {}
    gamma = {}
    for (i, m), R in rho.items():
        lo, hi = strata.level(i), strata.level(i + 1)
        top_lo, top_hi = strata.top(i), strata.top(i + 1)
        # y in H^{top_hi - m}(Y^(i+1)), gamma y in H^{top_hi - m + 2}(Y^(i)) = H^{top_lo - m}
        my = top_hi - m
        if not hi.dim(my) or not lo.dim(top_lo - m):
            continue
        G_lo = lo.gram(m, top_lo)          # H^m x H^{top_lo - m}
        G_hi = hi.gram(m, top_hi)          # H^m x H^{top_hi - m}
        e = Fraction(eps.get(i, 1))
        gamma[(i, my)] = (G_lo.inverse() @ R.T @ G_hi) * (1 / e)
    return gamma


def _symplectic(g: int) -> Matrix:
    if g == 0:
        return Matrix.zeros(0, 0)
    z, I = Matrix.zeros(g, g), Matrix.identity(g)
    return Matrix.vstack([Matrix.hstack([z, I]), Matrix.hstack([-I, z])])


def cycle_edges(r: int) -> list[tuple[int, int]]:
    if r == 2:
        return [(0, 1), (0, 1)]
    return sorted((min(v, (v + 1) % r), max(v, (v + 1) % r)) for v in range(r))


def gen_curve_cycle(r: int, genera: Sequence[int] | None = None) -> tuple[StrataCohomology, TransitionMaps]:
    """A cycle of r curves (dual graph an r-gon) meeting in r points."""
    if r < 2:
        raise ValueError("a cycle needs r >= 2 components (loops are not representable)")
    genera = list(genera) if genera is not None else [0] * r
    if len(genera) != r or any(g < 0 for g in genera):
        raise ValueError("genera must list r nonnegative counts")
    h1 = 2 * sum(genera)
    I = Matrix.identity(r)
    sym = Matrix.block_diag([_symplectic(g) for g in genera]) if h1 else Matrix.zeros(0, 0)
    curves = StratumLevel({0: r, 1: h1, 2: r}, {0: I}, {0: I, 1: sym, 2: I})
    points = StratumLevel({0: r}, {}, {0: I})
    strata = StrataCohomology(1, {1: curves, 2: points})
    edges = cycle_edges(r)
    R = [[0] * r for _ in edges]
    for e, (u, w) in enumerate(edges):
        R[e][u] += -1
        R[e][w] += 1
    rho = {(1, 0): _mat(R, r, r)}
    gamma = gamma_from_rho(strata, rho)
    return strata, TransitionMaps(rho, gamma, {}, {1: 1})


def curve_cycle_truth(r: int, genera: Sequence[int]) -> dict:
    hg = 2 * sum(genera)
    H = {(1, 0): 1, (0, -1): 1, (0, 1): 1, (-1, 0): 1}
    if hg:
        H[(0, 0)] = hg
    return {"H_dims": H, "wm": True, "L_bijective": True}


def _close_complex(simplices) -> list[tuple[int, ...]]:
    faces = set()
    for s in simplices:
        s = tuple(sorted(set(s)))
        for k in range(1, len(s) + 1):
            for f in itertools.combinations(s, k):
                faces.add(f)
    return sorted(faces, key=lambda f: (len(f), f))


def _incidence(lower, upper) -> Matrix:
    """Coboundary signs [sigma : tau] = (-1)^p when sigma = tau minus its p-th vertex."""
    pos = {s: k for k, s in enumerate(lower)}
    R = [[0] * len(lower) for _ in upper]
    for t, tau in enumerate(upper):
        for p in range(len(tau)):
            sigma = tau[:p] + tau[p + 1:]
            R[t][pos[sigma]] = (-1) ** p
    return _mat(R, len(upper), len(lower))


def gen_combinatorial(simplices: Sequence[Sequence[int]], n: int) -> tuple[StrataCohomology, TransitionMaps]:
    """Totally degenerate configuration with the given dual complex.

    Vertices are components, k-simplices are (k+1)-fold intersections.
    """
    faces = _close_complex(simplices)
    if not faces:
        raise ValueError("empty complex")
    dim = max(len(f) for f in faces) - 1
    if dim > n:
        raise ValueError(f"complex of dimension {dim} does not fit relative dimension {n}")
    by_level = {}
    for f in faces:
        by_level.setdefault(len(f), []).append(f)
    if n >= 3 and dim >= 1:
        raise ValueError("combinatorial strata with intersections are supported for n <= 2")
    if n == 2 and dim >= 1:
        return _surface_configuration(by_level)
    levels = {i: _projective_level(n - i + 1, len(by_level[i])) for i in by_level}
    strata = StrataCohomology(n, levels)
    rho = {}
    for i in by_level:
        if i + 1 not in by_level:
            continue
        R = _incidence(by_level[i], by_level[i + 1])
        for a in range(0, n - i + 1):
            rho[(i, 2 * a)] = R
    gamma = gamma_from_rho(strata, rho)
    return strata, TransitionMaps(rho, gamma, {}, {i: 1 for i in by_level})


def _surface_configuration(by_level) -> tuple[StrataCohomology, TransitionMaps]:
    """n = 2: surfaces with an abstract H^2 carrying the double-curve classes.

    H^2(Y_v) has basis h, f_e, g_e (e the edges at v) with h.h = 1, f_e.f_e' = I(e, e') - 1,
    f_e.g_e' = delta, g.g = 0; the double curve e has class l_e = h + f_e, so l_e.l_e' = I(e, e').
    I(e, e') = 1 when e, e' span a triangle, self-intersections satisfy the triple point formula.
    """
    verts = by_level[1]
    edges = by_level.get(2, [])
    tris = set(by_level.get(3, []))
    T = {e: sum(1 for t in tris if set(e) <= set(t)) for e in edges}
    ell = {}
    blocks_L0, blocks_L2, blocks_G = [], [], []
    vert_edges = {}
    for v in verts:
        es = [e for e in edges if v[0] in e]
        vert_edges[v] = es
        k = len(es)
        F = [[Fraction(0)] * k for _ in range(k)]
        for a, e in enumerate(es):
            for b, e2 in enumerate(es):
                if a == b:
                    s = -T[e] if v[0] == e[0] else 0
                    val = s
                else:
                    val = 1 if tuple(sorted(set(e) | set(e2))) in tris else 0
                F[a][b] = Fraction(val - 1)
        Fm = Matrix(F, rows=k, cols=k)
        I = Matrix.identity(k)
        Gq = Matrix.block_diag([Matrix([[1]]),
                                Matrix.vstack([Matrix.hstack([Fm, I]), Matrix.hstack([I, Matrix.zeros(k, k)])])])
        d2 = 1 + 2 * k
        blocks_G.append(Gq)
        blocks_L0.append(Matrix([[1]] + [[0]] * (d2 - 1)))
        blocks_L2.append(Matrix([[1] + [0] * (d2 - 1)]))
        for a, e in enumerate(es):
            vec = [Fraction(0)] * d2
            vec[0] = Fraction(1)
            vec[1 + a] = Fraction(1)
            ell[(v, e)] = vec
    nv = len(verts)
    G2 = Matrix.block_diag(blocks_G)
    one = Matrix.identity(nv)
    lev1 = StratumLevel({0: nv, 2: G2.rows, 4: nv},
                        {0: Matrix.block_diag(blocks_L0), 2: Matrix.block_diag(blocks_L2)},
                        {0: one, 2: G2, 4: one})
    ne = len(edges)
    lev2 = StratumLevel({0: ne, 2: ne}, {0: Matrix.identity(ne)}, {0: Matrix.identity(ne), 2: Matrix.identity(ne)})
    levels = {1: lev1, 2: lev2}
    if tris:
        levels[3] = StratumLevel({0: len(tris)}, {}, {0: Matrix.identity(len(tris))})
    strata = StrataCohomology(2, levels)
    inc01 = _incidence(verts, edges)
    rho = {(1, 0): inc01}
    # H^2 restriction: D -> [v:e] (D . l_e) pt
    offs, o = {}, 0
    for v in verts:
        offs[v] = o
        o += 1 + 2 * len(vert_edges[v])
    R2 = [[Fraction(0)] * G2.rows for _ in edges]
    vpos = {v: k for k, v in enumerate(verts)}
    for r_, e in enumerate(edges):
        for v in verts:
            sgn = inc01[r_, vpos[v]]
            if not sgn:
                continue
            Gv = blocks_G[vpos[v]]
            lv = Gv.apply(ell[(v, e)])
            for t in range(Gv.rows):
                R2[r_][offs[v] + t] = sgn * lv[t]
    rho[(1, 2)] = Matrix(R2, rows=ne, cols=G2.rows)
    if tris:
        tl = sorted(tris)
        rho[(2, 0)] = _incidence(edges, tl)
        levels[3] = StratumLevel({0: len(tl)}, {}, {0: Matrix.identity(len(tl))})
    gamma = gamma_from_rho(strata, rho)
    return strata, TransitionMaps(rho, gamma, {}, {1: 1, 2: 1})


# ---------------------------------------------------------------------------
# random instances with planted answers


def _string_block(k: int):
    """V_k: basis L^a u in degrees -k + 2a; returns dims, L, gram (Phi(L^a u, L^b u) = 1 iff a + b = k)."""
    dims = {-k + 2 * a: 1 for a in range(k + 1)}
    L = {-k + 2 * a: Matrix([[1]]) for a in range(k)}
    G = {-k + 2 * a: Matrix([[1]]) for a in range(k + 1)}
    return dims, L, G


def _block_S(c: int, k: int) -> tuple[ColumnData, dict]:
    dims, L, G = _string_block(k)
    cd = ColumnData(c + k, {(c, j): v for j, v in dims.items()},
                    {(c, j): m for j, m in L.items()}, {(c, j): m for j, m in G.items()})
    H = {(c - 2 * a, j): 1 for a in range(c + 1) for j in dims}
    return cd, {"H_dims": H, "wm": True, "L_bijective": True, "block": ["S", c, k]}


def _block_K() -> tuple[ColumnData, dict]:
    one = Matrix([[1]])
    cd = ColumnData(1, {(0, -1): 1, (0, 1): 1, (1, 0): 1},
                    {(0, -1): one}, {(0, -1): one, (0, 1): one, (1, 0): one},
                    {(0, -1): one}, {(1, 0): one}, {1: 1})
    return cd, {"H_dims": {}, "wm": True, "L_bijective": True, "block": ["K"]}


def _block_F(c: int, k: int) -> tuple[ColumnData, dict]:
    """rho_c : V_k onto V_{k-1}, gamma = 0; N and L bijectivity on H both fail."""
    one = Matrix([[1]])
    dims = {(c, -k + 2 * a): 1 for a in range(k + 1)}
    dims.update({(c + 1, -k + 1 + 2 * a): 1 for a in range(k)})
    L = {(c, -k + 2 * a): one for a in range(k)}
    L.update({(c + 1, -k + 1 + 2 * a): one for a in range(k - 1)})
    rho = {(c, -k + 2 * a): one for a in range(k)}
    cd = ColumnData(c + 1 + k, dims, L, None, rho, {}, {})
    H = {(c - 2 * a, k): 1 for a in range(c + 1)}
    H.update({(c + 1, -k + 1 + 2 * a): 1 for a in range(k)})
    return cd, {"H_dims": H, "wm": False, "L_bijective": False, "block": ["F", c, k]}


def _block_G(c: int, k: int) -> tuple[ColumnData, dict]:
    """gamma_{c+1} : V_{k-1} into L V_k, rho = 0; N fails to be surjective at i = c + 1."""
    one = Matrix([[1]])
    dims = {(c, -k + 2 * a): 1 for a in range(k + 1)}
    dims.update({(c + 1, -k + 1 + 2 * a): 1 for a in range(k)})
    L = {(c, -k + 2 * a): one for a in range(k)}
    L.update({(c + 1, -k + 1 + 2 * a): one for a in range(k - 1)})
    gamma = {(c + 1, -k + 1 + 2 * a): one for a in range(k)}
    cd = ColumnData(c + 1 + k, dims, L, None, {}, gamma, {})
    H = {(c - 2 * a, -k): 1 for a in range(c + 1)}
    H.update({(-c - 1, -k + 1 + 2 * a): 1 for a in range(k)})
    return cd, {"H_dims": H, "wm": False, "L_bijective": False, "block": ["G", c, k]}


def _block_curve(r: int, genera: Sequence[int]) -> tuple[ColumnData, dict]:
    s, t = gen_curve_cycle(r, genera)
    cd = to_columns(s, t)
    truth = curve_cycle_truth(r, genera)
    truth["block"] = ["curve", r, list(genera)]
    return cd, truth


def _reindex_n(cd: ColumnData, n: int) -> ColumnData:
    return ColumnData(n, cd.dims, cd.L, cd.gram, cd.rho, cd.gamma, cd.eps)


def gen_random_jordan(seed: int, max_blocks: int = 3, max_col: int = 2, max_k: int = 2,
                      allow_failure: bool = False, curves: bool = True, mix: bool = True) -> RZInstance:
    """Direct sum of planted blocks in a random basis; ``provenance['planted']`` stores the answer."""
    rng = random.Random(seed)
    parts, truths = [], []
    nblocks = rng.randint(1, max_blocks) if max_blocks > 0 else 0
    kinds = ["S", "S", "K"] + (["curve"] if curves else []) + (["F", "G"] if allow_failure else [])
    for _ in range(nblocks):
        kind = rng.choice(kinds)
        if kind == "S":
            cd, tr = _block_S(rng.randint(0, max_col), rng.randint(0, max_k))
        elif kind == "K":
            cd, tr = _block_K()
        elif kind == "curve":
            r = rng.randint(2, 4)
            gen = [rng.choice([0, 0, 1]) for _ in range(r)]
            cd, tr = _block_curve(r, gen)
        else:
            make = _block_F if kind == "F" else _block_G
            cd, tr = make(rng.randint(0, max(0, max_col - 1)), rng.randint(1, max(1, max_k)))
        parts.append(cd)
        truths.append(tr)
    if allow_failure and not any(t["block"][0] in ("F", "G") for t in truths) and rng.random() < 0.5:
        cd, tr = _block_F(0, 1)
        parts.append(cd)
        truths.append(tr)
    n = max([max((c + abs(j) for (c, j) in p.dims), default=0) for p in parts] + [0])
    parts = [_reindex_n(p, n) for p in parts]
    H: dict = {}
    for t in truths:
        for s, v in t["H_dims"].items():
            H[s] = H.get(s, 0) + v
    planted = {
        "H_dims": {f"{i},{j}": v for (i, j), v in sorted(H.items())},
        "wm": all(t["wm"] for t in truths),
        "L_bijective": all(t["L_bijective"] for t in truths),
        "blocks": [t["block"] for t in truths],
    }
    prov = {"generator": "random", "seed": seed, "params": {"max_blocks": max_blocks, "max_col": max_col,
                                                             "max_k": max_k, "allow_failure": allow_failure,
                                                             "curves": curves, "mix": mix},
            "planted": planted}
    if not parts:
        M = BigradedNLModule({})
        return RZInstance(M, DifferentialStructure(M, {}), 0, {}, {}, prov)
    cd = direct_sum_columns(parts)
    inst = assemble_columns(cd, require_pairing=cd.gram is not None, provenance=prov)
    if mix:
        inst = random_transform(inst, rng)
    return inst


# ---------------------------------------------------------------------------
# negative control


def perturb_break_pairing(inst: RZInstance, seed: int) -> RZInstance:
    """Replace one column pairing so that the canonical form on (Im rho) cap (primitive) degenerates."""
    if inst.pairings is None:
        raise NoRoom("instance carries no pairings")
    E = inst.e1()
    cand = []
    for c in E.cols.columns:
        mod = E.cols.column_module(c)
        for j in mod.degrees:
            if j > 0:
                continue
            k = -j
            P = kernel_basis(mod.L_power(j, k + 1))
            U = intersect(E.im_rho(c, j), P)
            if U.dim:
                cand.append((c, k, P, U))
    if not cand:
        raise NoRoom("no column has a nonzero intersection of Im rho with the primitive part")
    rng = random.Random(seed)
    c, k, P, U = cand[rng.randrange(len(cand))]
    mod = E.cols.column_module(c)
    data = primitive_decomposition(mod)
    Phi = inst.pairings[c]
    # Q_kk(p, p') = Phi(p, L^kk p') on each primitive block, in the canonical primitive bases
    Q = {}
    for jj, Pk in data.primitives.items():
        kk = -jj
        Q[kk] = Pk.basis.T @ Phi.gram(jj) @ mod.L_power(jj, kk) @ Pk.basis
    Pk = data.primitives[-k]
    # basis of the primitive block: U first, then a complement
    ucoords = Pk.coordinates(U.basis)
    cols_ = list(ucoords.columns())
    cur = Subspace.from_vectors(Pk.dim, cols_)
    for t in range(Pk.dim):
        e = [1 if s == t else 0 for s in range(Pk.dim)]
        if not cur.contains(e):
            cols_.append(e)
            cur = cur + Subspace.from_vectors(Pk.dim, [e])
    S = Matrix.from_columns(cols_, rows=Pk.dim)     # new basis in primitive coordinates
    s_dim, t_dim = U.dim, Pk.dim - U.dim
    Qn = [[Fraction(0)] * Pk.dim for _ in range(Pk.dim)]
    for a in range(Pk.dim):
        Qn[a][a] = Fraction(1)
    Qn[0][0] = Fraction(0)
    if t_dim:
        Qn[0][s_dim] = Qn[s_dim][0] = Fraction(1)
        Qn[s_dim][s_dim] = Fraction(rng.randint(-2, 2))
    Qs = Matrix(Qn, rows=Pk.dim, cols=Pk.dim)
    Si = S.inverse()
    Q[k] = Si.T @ Qs @ Si
    # rebuild the column pairing from the Q blocks through the Lefschetz basis
    forms = {}
    for deg in mod.degrees:
        B, Bm = data.basis[deg], data.basis[-deg]
        G = [[Fraction(0)] * mod.dim(-deg) for _ in range(mod.dim(deg))]
        starts = {(kk, a): (st, sz) for kk, a, st, sz in data.blocks[-deg]}
        for kk, a, st, sz in data.blocks[deg]:
            st2, _ = starts[(kk, kk - a)]
            for x in range(sz):
                for y in range(sz):
                    G[st + x][st2 + y] = Q[kk][x, y]
        Gl = Matrix(G, rows=mod.dim(deg), cols=mod.dim(-deg))
        forms[deg] = BilinearForm(B.inverse().T @ Gl @ Bm.inverse())
    new = dict(inst.pairings)
    new[c] = GradedPairing(mod, forms, check=bool(t_dim))
    prov = dict(inst.provenance)
    prov["perturbed"] = {"seed": seed, "column": c, "k": k, "globally_nondegenerate": bool(t_dim)}
    out = RZInstance(inst.module, inst.differential, inst.n, new, dict(inst.eps), prov)
    out._e1 = inst._e1
    return out
