"""Frobenius-type operators on E1 instances, factorizations and spectral idempotents.

An operator g is given slot-wise on M. In ``tate`` mode it satisfies
g d = d g, g N = q^{-1} N g and g L = q L g, which is what a Frobenius acting
with weight n + i + j on M_i^j looks like. In ``untwisted`` mode all three
relations are exact commutation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .bigraded import E1, BigradedNLModule, DifferentialStructure
from .degeneration import RZInstance, cycle_edges, gen_curve_cycle, assemble, direct_sum
from .errors import CommutationFailed, MinPolyMismatch, NotCoprime, ProductMismatch
from .linalg import Matrix, Subspace, intersect, kernel_basis, to_fraction
from .poly import PolynomialQ, char_poly, ext_gcd, factor_key, factor_over_q, min_poly, rational_roots, restrict_to

__all__ = [
    "FrobeniusOperator",
    "FactorClaim",
    "char_poly_on",
    "validate_factorization",
    "build_idempotents",
    "crt_polynomials",
    "min_poly_on_image",
    "multiplicity_one_report",
    "frobenius_from_columns",
    "planted_curve_frobenius",
    "companion",
    "planted_multiplicity_pair",
    "parse_selector",
    "operator_on",
]

MODES = ("tate", "untwisted")


def companion(p: PolynomialQ) -> Matrix:
    """Companion matrix of a monic polynomial (char poly equals p)."""
    p = p.monic()
    n = p.degree
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = Fraction(1)
    for i in range(n):
        rows[i][n - 1] = -p.coeffs[i]
    return Matrix(rows, rows=n, cols=n)


@dataclass(eq=False)
class FrobeniusOperator:
    module: BigradedNLModule
    blocks: Mapping            # (i, j) -> square Matrix on M_i^j
    q: Fraction = Fraction(1)
    mode: str = "tate"

    def __post_init__(self):
        self.q = to_fraction(self.q)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for s in self.module.slots:
            m = self.at(*s)
            if m.shape != (self.module.dim(*s),) * 2:
                raise ValueError(f"operator block at {s} has shape {m.shape}")

    def at(self, i: int, j: int) -> Matrix:
        m = self.blocks.get((i, j))
        return m if m is not None else Matrix.identity(self.module.dim(i, j))

    def _factors(self) -> tuple[Fraction, Fraction]:
        if self.mode == "tate":
            return 1 / self.q, self.q
        return Fraction(1), Fraction(1)

    def commutation_failures(self, d: DifferentialStructure | None = None) -> list[tuple[str, tuple]]:
        fN, fL = self._factors()
        M, out = self.module, []
        for (i, j) in M.slots:
            g = self.at(i, j)
            if M.dim(i - 2, j) and self.at(i - 2, j) @ M.N(i, j) != (M.N(i, j) @ g).scale(fN):
                out.append(("N", (i, j)))
            if M.dim(i, j + 2) and self.at(i, j + 2) @ M.L(i, j) != (M.L(i, j) @ g).scale(fL):
                out.append(("L", (i, j)))
            if d is not None and M.dim(i - 1, j + 1) and self.at(i - 1, j + 1) @ d.d(i, j) != d.d(i, j) @ g:
                out.append(("d", (i, j)))
        return out

    def require_commutation(self, d: DifferentialStructure | None = None) -> None:
        bad = self.commutation_failures(d)
        if bad:
            which, slot = bad[0]
            raise CommutationFailed(f"operator fails to commute with {which} at {slot}", which=which, slot=slot)

    # restrictions --------------------------------------------------------
    def on_column(self, E: E1, c: int, j: int) -> Matrix:
        b = E.cols.basis.get((c, j))
        if b is None or not b.cols:
            return Matrix.zeros(0, 0)
        X = b.solve(self.at(c, j) @ b)
        if X is None:
            raise CommutationFailed(f"operator does not preserve C_{c}^{j}", which="N", slot=(c, j))
        return X

    def on_cohomology(self, E: E1, i: int, j: int) -> Matrix:
        return E.H.induced((i, j), (i, j), self.at(i, j))

    def on_degree(self, E: E1, n: int, m: int) -> Matrix:
        """Block sum over i of the action on H_i^{m-n} (cohomology of degree m)."""
        j = m - n
        parts = [self.on_cohomology(E, i, jj) for (i, jj) in sorted(E.H.H_dims) if jj == j and E.H.dim(i, jj)]
        return Matrix.block_diag(parts) if parts else Matrix.zeros(0, 0)

    def total(self) -> Matrix:
        return Matrix.block_diag([self.at(*s) for s in self.module.slots])


def parse_selector(text: str) -> tuple:
    """``M:i,j``, ``C:c,j``, ``H:i,j``, ``deg:m`` or ``total``."""
    text = text.strip()
    if text == "total":
        return ("total",)
    kind, _, rest = text.partition(":")
    nums = tuple(int(x) for x in rest.split(",")) if rest else ()
    want = {"M": 2, "C": 2, "H": 2, "deg": 1}
    if kind not in want or len(nums) != want[kind]:
        raise ValueError(f"bad selector {text!r}")
    return (kind,) + nums


def operator_on(g: FrobeniusOperator, inst: RZInstance, selector) -> Matrix:
    sel = parse_selector(selector) if isinstance(selector, str) else tuple(selector)
    kind = sel[0]
    if kind == "total":
        return g.total()
    if kind == "M":
        return g.at(sel[1], sel[2])
    E = inst.e1()
    if kind == "C":
        return g.on_column(E, sel[1], sel[2])
    if kind == "H":
        return g.on_cohomology(E, sel[1], sel[2])
    return g.on_degree(E, inst.n, sel[1])


def char_poly_on(g: FrobeniusOperator, inst: RZInstance, selector) -> PolynomialQ:
    return char_poly(operator_on(g, inst, selector))


# ---------------------------------------------------------------------------
# factorizations


@dataclass
class FactorClaim:
    factor: PolynomialQ
    multiplicity: int = 1
    irreducible: bool = True


def _canonical(claims: Sequence[FactorClaim]) -> list[FactorClaim]:
    out = [FactorClaim(c.factor.monic(), int(c.multiplicity), c.irreducible) for c in claims]
    return sorted(out, key=lambda c: factor_key(c.factor))


def irreducible_over_q(p: PolynomialQ) -> bool | None:
    """True/False for degree <= 3 (rational root test); None when not decided here."""
    if p.degree <= 0:
        return False
    if p.degree == 1:
        return True
    if p.degree <= 3:
        return not rational_roots(p)
    return None


def validate_factorization(P: PolynomialQ, claims: Sequence[FactorClaim]) -> dict:
    claims = _canonical(claims)
    prod = PolynomialQ([1])
    for c in claims:
        if c.multiplicity < 1 or c.factor.degree < 1:
            raise ProductMismatch(f"factor {c.factor} with multiplicity {c.multiplicity} is not admissible")
        prod = prod * c.factor ** c.multiplicity
    if prod != P.monic():
        raise ProductMismatch(f"product of claimed factors {prod} differs from {P.monic()}")
    for a in range(len(claims)):
        for b in range(a + 1, len(claims)):
            g = ext_gcd(claims[a].factor, claims[b].factor)[0]
            if g.degree > 0:
                raise NotCoprime(f"factors {claims[a].factor} and {claims[b].factor} share {g}")
    factors, warnings = [], []
    for c in claims:
        verified = irreducible_over_q(c.factor)
        if verified is None:
            warnings.append(f"irreducibility of {c.factor} taken from the claim (degree {c.factor.degree})")
        elif c.irreducible and not verified:
            warnings.append(f"{c.factor} is claimed irreducible but has a rational root")
        factors.append({"factor": str(c.factor), "multiplicity": c.multiplicity,
                        "claimed_irreducible": c.irreducible, "verified_irreducible": verified})
    return {"product_ok": True, "coprime_ok": True, "factors": factors, "warnings": warnings}


def crt_polynomials(claims: Sequence[FactorClaim]) -> list[PolynomialQ]:
    """R_j with R_j = 1 mod P_j^{m_j} and R_j = 0 mod P_k^{m_k} (k != j), reduced mod the product."""
    claims = _canonical(claims)
    Qs = [c.factor ** c.multiplicity for c in claims]
    P = PolynomialQ([1])
    for Q in Qs:
        P = P * Q
    out = []
    for k, Qk in enumerate(Qs):
        rest = PolynomialQ([1])
        for t, Qt in enumerate(Qs):
            if t != k:
                rest = rest * Qt
        g, _s, t_ = ext_gcd(Qk, rest)
        if g.degree > 0:
            raise NotCoprime(f"{claims[k].factor} is not coprime to the other factors")
        out.append((t_ * rest) % P)
    return out


def build_idempotents(g: Matrix, claims: Sequence[FactorClaim], P: PolynomialQ | None = None
                      ) -> tuple[list[Matrix], dict]:
    """pi_j = R_j(g) with R_j = 1 mod P_j^{m_j} and 0 mod the other prime-power factors."""
    claims = _canonical(claims)
    if P is None:
        P = PolynomialQ([1])
        for c in claims:
            P = P * c.factor ** c.multiplicity
    report = validate_factorization(P, claims)
    n = g.rows
    if not P(g).is_zero():
        mp = min_poly(g)
        raise MinPolyMismatch(f"minimal polynomial {mp} does not divide {P.monic()}")
    pis = [R(g) for R in crt_polynomials(claims)]
    I = Matrix.identity(n)
    total = Matrix.zeros(n, n)
    for p in pis:
        total = total + p
    checks = {
        "sum_is_identity": total == I,
        "orthogonal_idempotents": all((pis[a] @ pis[b] == (pis[a] if a == b else Matrix.zeros(n, n)))
                                      for a in range(len(pis)) for b in range(len(pis))),
        "commute_with_operator": all(g @ p == p @ g for p in pis),
    }
    comps = []
    for c, p in zip(claims, pis):
        gi = restrict_to(g, Subspace.span(p))
        mp, cp = min_poly(gi), char_poly(gi)
        comps.append({"factor": str(c.factor), "multiplicity": c.multiplicity, "rank": p.rank(),
                      "char_poly": str(cp), "char_poly_is_power": cp == c.factor ** c.multiplicity,
                      "min_poly": str(mp), "min_poly_divides": mp.divides(c.factor ** c.multiplicity)})
    report.update({"checks": checks, "components": comps,
                   "ok": all(checks.values()) and all(x["min_poly_divides"] for x in comps)})
    return pis, report


def min_poly_on_image(g: Matrix, pi: Matrix) -> PolynomialQ:
    return min_poly(restrict_to(g, Subspace.span(pi)))


# ---------------------------------------------------------------------------
# multiplicity hypothesis on primitive cohomology


def multiplicity_one_report(inst: RZInstance, g: FrobeniusOperator) -> dict:
    """Irreducible factors of g on each primitive part P_c^{-k}, and whether they meet Im rho / Im gamma."""
    g.require_commutation(inst.differential)
    E = inst.e1()
    entries, ok, low = [], True, True
    for c in E.cols.columns:
        mod = E.cols.column_module(c)
        for j in mod.degrees:
            if j > 0:
                continue
            k = -j
            P = kernel_basis(mod.L_power(j, k + 1))
            if P.dim == 0:
                continue
            gc = g.on_column(E, c, j)
            cp = char_poly(restrict_to(gc, P))
            meets = {}
            for name, U in (("rho", E.im_rho(c, j)), ("gamma", E.im_gamma(c, j))):
                W = intersect(U, P)
                meets[name] = char_poly(restrict_to(gc, W)) if W.dim else PolynomialQ([1])
            for f, m in factor_over_q(cp):
                mr = f.divides(meets["rho"])
                mg = f.divides(meets["gamma"])
                if (mr or mg) and m > 1:
                    ok = False
                if (mr or mg) and f.degree > 2:
                    low = False
                entries.append({"column": c, "j": j, "factor": str(f), "multiplicity": m,
                                "meets_rho": mr, "meets_gamma": mg})
    return {"hypothesis": ok, "factor_degrees_at_most_2": low, "entries": entries}


# ---------------------------------------------------------------------------
# constructions


def frobenius_from_columns(inst: RZInstance, gcols: Mapping, q=1, mode: str = "tate") -> FrobeniusOperator:
    """Extend an action on the columns (canonical coordinates) to M through the N-decomposition.

    Copy a of C_c gets factor q^{-a} in tate mode.
    """
    E = inst.e1()
    q = to_fraction(q)
    blocks = {}
    for (i, j), (B, parts) in E.cols.decomp.items():
        if not B.cols:
            continue
        diag = []
        for c, a, _st, sz in parts:
            gc = gcols.get((c, j))
            if gc is None:
                gc = Matrix.identity(sz)
            diag.append(gc.scale(q ** (-a)) if mode == "tate" else gc)
        blocks[(i, j)] = B @ Matrix.block_diag(diag) @ B.inverse()
    return FrobeniusOperator(inst.module, blocks, q, mode)


def _perm_matrix(perm: Sequence[int]) -> Matrix:
    n = len(perm)
    rows = [[0] * n for _ in range(n)]
    for v, w in enumerate(perm):
        rows[w][v] = 1
    return Matrix(rows, rows=n, cols=n)


def edge_action(r: int, perm: Sequence[int]) -> Matrix:
    """Signed permutation tau on points with tau rho = rho sigma for the cycle incidence."""
    edges = cycle_edges(r)
    pos = {}
    for k, e in enumerate(edges):
        pos.setdefault(e, []).append(k)
    rows = [[0] * len(edges) for _ in edges]
    used = {}
    for k, (u, w) in enumerate(edges):
        a, b = perm[u], perm[w]
        key = (min(a, b), max(a, b))
        t = used.get(key, 0)
        used[key] = t + 1
        rows[pos[key][t]][k] = 1 if a < b else -1
    return Matrix(rows, rows=len(edges), cols=len(edges))


def planted_curve_frobenius(r: int, genera: Sequence[int] | None = None, q=4,
                            traces: Sequence[int] | None = None, rotate: bool = False
                            ) -> tuple[RZInstance, FrobeniusOperator, dict]:
    """Cycle of curves with a tate-mode operator.

    H^0 and H^2 of the components get sigma and q sigma (sigma a rotation when ``rotate``),
    H^1 of a genus-g component gets g blocks companion(T^2 - a T + q), the points get q tau.
    """
    genera = list(genera) if genera is not None else [0] * r
    q = to_fraction(q)
    if rotate and any(genera):
        raise ValueError("rotation is only planted for rational components")
    perm = [(v + 1) % r for v in range(r)] if rotate else list(range(r))
    strata, trans = gen_curve_cycle(r, genera)
    inst = assemble(strata, trans, provenance={"generator": "curve", "r": r, "genera": genera})
    traces = list(traces) if traces is not None else [1] * sum(genera)
    if len(traces) != sum(genera):
        raise ValueError("one trace per H^1 block is needed")
    sigma = _perm_matrix(perm)
    tau = edge_action(r, perm)
    rho = trans.rho[(1, 0)]
    if tau @ rho != rho @ sigma:
        raise CommutationFailed("edge action does not intertwine the incidence map", which="d")
    # H^1 basis per curve: x_1..x_g, y_1..y_g; block k acts on (x_k, y_k)
    h1 = 2 * sum(genera)
    G1 = [[Fraction(0)] * h1 for _ in range(h1)]
    off, t = 0, 0
    for gnum in genera:
        for k in range(gnum):
            A = companion(PolynomialQ([q, -traces[t], 1]))
            idx = (off + k, off + gnum + k)
            for a in range(2):
                for b in range(2):
                    G1[idx[a]][idx[b]] = A[a, b]
            t += 1
        off += 2 * gnum
    gcols = {(0, -1): sigma, (0, 1): sigma.scale(q), (1, 0): tau.scale(q)}
    if h1:
        gcols[(0, 0)] = Matrix(G1, rows=h1, cols=h1)
    E = inst.e1()
    # columns are in canonical coordinates; for assembled instances these equal stratum coordinates
    for key in list(gcols):
        b = E.cols.basis.get(key)
        if b is None or b != Matrix.identity(b.rows).select_columns(range(b.cols)):
            raise ValueError("unexpected column basis in assembled instance")
    g = frobenius_from_columns(inst, gcols, q, "tate")
    g.require_commutation(inst.differential)
    info = {"perm": perm, "q": str(q), "traces": traces}
    return inst, g, info


def planted_multiplicity_pair(q=4) -> tuple[tuple, tuple]:
    """(instance, operator) with the multiplicity hypothesis true, and a doubled copy where it fails."""
    one, g1, _ = planted_curve_frobenius(3, q=q, rotate=True)
    two = direct_sum([one, one])
    E1_, E2 = one.e1(), two.e1()
    gcols = {}
    for (c, j), b in E2.cols.basis.items():
        if not b.cols:
            continue
        gc = g1.on_column(E1_, c, j)
        gcols[(c, j)] = Matrix.block_diag([gc, gc])
    g2 = frobenius_from_columns(two, gcols, q, "tate")
    g2.require_commutation(two.differential)
    return (one, g1), (two, g2)
