"""The ``wm-lab/1`` instance document: JSON with exact scalars written as strings.

Every matrix is stored row-major as strings ``"p"`` or ``"p/q"``. Shapes are
never stored; they follow from the declared dims and are checked on parse.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Callable

from . import FORMAT
from .bigraded import BigradedNLModule, DifferentialStructure
from .degeneration import RZInstance, StrataCohomology, StratumLevel, TransitionMaps
from .errors import InstanceFormatError
from .frobenius import FactorClaim, FrobeniusOperator
from .graded import GradedLModule, GradedPairing
from .linalg import BilinearForm, Matrix
from .poly import PolynomialQ

KINDS = ("graded", "bigraded", "strata", "rz_instance", "frobenius")

__all__ = ["KINDS", "dumps", "loads", "fingerprint", "to_document", "from_document", "canonical_bytes",
           "FrobeniusDocument", "GradedDocument"]


# ---------------------------------------------------------------------------
# scalars, keys, matrices


def scalar(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_scalar(s, where: str) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise InstanceFormatError(f"scalar must be a string 'p' or 'p/q', got {s!r}", location=where)
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise InstanceFormatError(f"unparseable scalar {s!r}", location=where) from None


def enc_matrix(m: Matrix) -> list:
    return [[scalar(x) for x in row] for row in m.tolist()]


def dec_matrix(obj, rows: int, cols: int, where: str) -> Matrix:
    if not isinstance(obj, list):
        raise InstanceFormatError("matrix must be a list of rows", location=where)
    if len(obj) != rows:
        raise InstanceFormatError(f"expected {rows} rows, found {len(obj)}", location=where)
    data = []
    for r, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != cols:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise InstanceFormatError(f"row {r}: expected {cols} entries, found {got}", location=where)
        data.append([parse_scalar(x, f"{where}[{r}][{c}]") for c, x in enumerate(row)])
    return Matrix(data, rows=rows, cols=cols)


def k2(slot) -> str:
    return f"{slot[0]},{slot[1]}"


def parse_k2(s: str, where: str) -> tuple[int, int]:
    try:
        a, b = s.split(",")
        return int(a), int(b)
    except ValueError:
        raise InstanceFormatError(f"bad slot key {s!r}", location=where) from None


def parse_k1(s: str, where: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise InstanceFormatError(f"bad index key {s!r}", location=where) from None


def _get(obj: dict, key: str, where: str, kind=dict, default: Any = ...):
    if not isinstance(obj, dict):
        raise InstanceFormatError("expected an object", location=where)
    if key not in obj:
        if default is not ...:
            return default
        raise InstanceFormatError(f"missing field {key!r}", location=where)
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise InstanceFormatError(f"field {key!r} has the wrong type", location=f"{where}.{key}")
    return val


def _dims2(obj: dict, where: str) -> dict:
    out = {}
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise InstanceFormatError("dimension must be a nonnegative integer", location=f"{where}.{k}")
        if v:
            out[parse_k2(k, f"{where}.{k}")] = v
    return out


def _dims1(obj: dict, where: str) -> dict:
    out = {}
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise InstanceFormatError("dimension must be a nonnegative integer", location=f"{where}.{k}")
        if v:
            out[parse_k1(k, f"{where}.{k}")] = v
    return out


def _maps(obj: dict, where: str, keyparse: Callable, shape: Callable) -> dict:
    out = {}
    for k, v in obj.items():
        key = keyparse(k, f"{where}.{k}")
        r, c = shape(key)
        out[key] = dec_matrix(v, r, c, f"{where}.{k}")
    return out


# ---------------------------------------------------------------------------
# payload pieces


def _enc_module(M: BigradedNLModule) -> dict:
    return {
        "dims": {k2(s): M.dim(*s) for s in M.slots},
        "N": {k2(s): enc_matrix(M.N(*s)) for s in M.slots if M.dim(s[0] - 2, s[1])},
        "L": {k2(s): enc_matrix(M.L(*s)) for s in M.slots if M.dim(s[0], s[1] + 2)},
    }


def _dec_module(p: dict, where: str) -> BigradedNLModule:
    dims = _dims2(_get(p, "dims", where), f"{where}.dims")
    dim = lambda i, j: dims.get((i, j), 0)  # noqa: E731
    N = _maps(_get(p, "N", where, default={}), f"{where}.N", parse_k2, lambda s: (dim(s[0] - 2, s[1]), dim(*s)))
    L = _maps(_get(p, "L", where, default={}), f"{where}.L", parse_k2, lambda s: (dim(s[0], s[1] + 2), dim(*s)))
    return BigradedNLModule(dims, N, L)


def _enc_d(d: DifferentialStructure) -> dict:
    M = d.module
    return {k2(s): enc_matrix(d.d(*s)) for s in M.slots if M.dim(s[0] - 1, s[1] + 1)}


def _dec_d(M: BigradedNLModule, obj: dict, where: str) -> DifferentialStructure:
    dm = _maps(obj, where, parse_k2, lambda s: (M.dim(s[0] - 1, s[1] + 1), M.dim(*s)))
    return DifferentialStructure(M, dm)


def _enc_rz(inst: RZInstance) -> dict:
    p = _enc_module(inst.module)
    p["d"] = _enc_d(inst.differential)
    p["n"] = inst.n
    p["eps"] = {str(k): int(v) for k, v in sorted(inst.eps.items())}
    if inst.pairings is None:
        p["pairings"] = None
    else:
        p["pairings"] = {str(c): {str(j): enc_matrix(P.gram(j)) for j in P.module.degrees}
                         for c, P in sorted(inst.pairings.items())}
    p["provenance"] = inst.provenance
    return p


def _dec_rz(p: dict, where: str, check_pairings: bool = True) -> RZInstance:
    M = _dec_module(p, where)
    d = _dec_d(M, _get(p, "d", where, default={}), f"{where}.d")
    n = _get(p, "n", where, kind=int)
    eps = {parse_k1(k, f"{where}.eps"): int(v) for k, v in _get(p, "eps", where, default={}).items()}
    prov = _get(p, "provenance", where, default={})
    inst = RZInstance(M, d, n, None, eps, prov)
    raw = _get(p, "pairings", where, kind=None, default=None)
    if raw is not None:
        if not isinstance(raw, dict):
            raise InstanceFormatError("pairings must be an object or null", location=f"{where}.pairings")
        M.validate()
        E = inst.e1()
        pairings = {}
        for ck, forms in raw.items():
            c = parse_k1(ck, f"{where}.pairings")
            mod = E.cols.column_module(c)
            grams = _maps(forms, f"{where}.pairings.{ck}", parse_k1, lambda j: (mod.dim(j), mod.dim(-j)))
            fs = {j: BilinearForm(grams.get(j, Matrix.zeros(mod.dim(j), mod.dim(-j)))) for j in mod.degrees}
            pairings[c] = GradedPairing(mod, fs, check=check_pairings)
        inst.pairings = pairings
    return inst


def _enc_strata(s: StrataCohomology, t: TransitionMaps) -> dict:
    levels = {}
    for i, lev in sorted(s.levels.items()):
        top = s.top(i)
        levels[str(i)] = {
            "dims": {str(m): v for m, v in sorted(lev.dims.items())},
            "L": {str(m): enc_matrix(lev.L_at(m)) for m in sorted(lev.dims) if lev.dim(m) and lev.dim(m + 2)},
            "pairing": {str(m): enc_matrix(lev.gram(m, top)) for m in sorted(lev.dims) if lev.dim(m)},
        }
    return {
        "n": s.n,
        "levels": levels,
        "rho": {k2(k): enc_matrix(v) for k, v in sorted(t.rho.items())},
        "gamma": {k2(k): enc_matrix(v) for k, v in sorted(t.gamma.items())},
        "sign_twist": {str(k): int(v) for k, v in sorted(t.sign_twist.items())},
        "eps": {str(k): int(v) for k, v in sorted(t.eps.items())},
    }


def _dec_strata(p: dict, where: str) -> tuple[StrataCohomology, TransitionMaps]:
    n = _get(p, "n", where, kind=int)
    levels = {}
    for ik, lv in _get(p, "levels", where).items():
        i = parse_k1(ik, f"{where}.levels")
        w = f"{where}.levels.{ik}"
        dims = _dims1(_get(lv, "dims", w), f"{w}.dims")
        top = 2 * (n - i + 1)
        dm = lambda m, dims=dims: dims.get(m, 0)  # noqa: E731
        L = _maps(_get(lv, "L", w, default={}), f"{w}.L", parse_k1, lambda m, dm=dm: (dm(m + 2), dm(m)))
        P = _maps(_get(lv, "pairing", w, default={}), f"{w}.pairing", parse_k1,
                  lambda m, dm=dm, top=top: (dm(m), dm(top - m)))
        levels[i] = StratumLevel(dims, L, P)
    s = StrataCohomology(n, levels)
    rho = _maps(_get(p, "rho", where, default={}), f"{where}.rho", parse_k2,
                lambda k: (s.level(k[0] + 1).dim(k[1]), s.level(k[0]).dim(k[1])))
    gamma = _maps(_get(p, "gamma", where, default={}), f"{where}.gamma", parse_k2,
                  lambda k: (s.level(k[0]).dim(k[1] + 2), s.level(k[0] + 1).dim(k[1])))
    tw = {parse_k1(k, f"{where}.sign_twist"): int(v) for k, v in _get(p, "sign_twist", where, default={}).items()}
    eps = {parse_k1(k, f"{where}.eps"): int(v) for k, v in _get(p, "eps", where, default={}).items()}
    return s, TransitionMaps(rho, gamma, tw, eps)


class GradedDocument:
    """A graded L-module with an optional pairing and optional symmetry centre."""

    def __init__(self, module: GradedLModule, pairing: dict | None = None, n: int | None = None):
        self.module = module
        self.pairing = pairing
        self.n = n

    def __eq__(self, other):
        return (isinstance(other, GradedDocument) and self.module == other.module and self.n == other.n
                and self.pairing == other.pairing)


class FrobeniusDocument:
    def __init__(self, instance: RZInstance, operator: FrobeniusOperator, claims: dict | None = None):
        self.instance = instance
        self.operator = operator
        self.claims = claims or {}


def _enc_claims(claims: dict) -> dict:
    return {sel: [{"factor": c.factor.to_json(), "multiplicity": c.multiplicity,
                   "irreducible": c.irreducible} for c in cl]
            for sel, cl in sorted(claims.items())}


def _dec_claims(obj: dict, where: str) -> dict:
    out = {}
    for sel, items in obj.items():
        cl = []
        for k, it in enumerate(items):
            w = f"{where}.{sel}[{k}]"
            coeffs = [parse_scalar(x, w) for x in _get(it, "factor", w, kind=list)]
            cl.append(FactorClaim(PolynomialQ(coeffs), int(_get(it, "multiplicity", w, kind=int, default=1)),
                                  bool(_get(it, "irreducible", w, kind=bool, default=True))))
        out[sel] = cl
    return out


# ---------------------------------------------------------------------------
# documents


def to_document(obj) -> dict:
    if isinstance(obj, FrobeniusDocument):
        p = _enc_rz(obj.instance)
        g = obj.operator
        p["frobenius"] = {"q": scalar(g.q), "mode": g.mode,
                          "blocks": {k2(s): enc_matrix(g.at(*s)) for s in g.module.slots},
                          "claims": _enc_claims(obj.claims)}
        kind = "frobenius"
    elif isinstance(obj, RZInstance):
        p, kind = _enc_rz(obj), "rz_instance"
    elif isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], StrataCohomology):
        p, kind = _enc_strata(*obj), "strata"
    elif isinstance(obj, DifferentialStructure):
        p = _enc_module(obj.module)
        p["d"] = _enc_d(obj)
        kind = "bigraded"
    elif isinstance(obj, BigradedNLModule):
        p, kind = _enc_module(obj), "bigraded"
    elif isinstance(obj, GradedDocument):
        M = obj.module
        p = {"dims": {str(j): M.dim(j) for j in M.degrees},
             "L": {str(j): enc_matrix(M.L(j)) for j in M.degrees if M.dim(j + 2)},
             "pairing": None if obj.pairing is None else {str(j): enc_matrix(g) for j, g in sorted(obj.pairing.items())},
             "n": obj.n}
        kind = "graded"
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return {"format_version": FORMAT, "kind": kind, "payload": p}


def from_document(doc: dict, check_pairings: bool = True):
    if not isinstance(doc, dict):
        raise InstanceFormatError("document must be a JSON object", location="$")
    ver = _get(doc, "format_version", "$", kind=str)
    if ver != FORMAT:
        raise InstanceFormatError(f"unsupported format version {ver!r}", location="$.format_version")
    kind = _get(doc, "kind", "$", kind=str)
    if kind not in KINDS:
        raise InstanceFormatError(f"unknown kind {kind!r}", location="$.kind")
    p = _get(doc, "payload", "$")
    w = "$.payload"
    if kind == "graded":
        dims = _dims1(_get(p, "dims", w), f"{w}.dims")
        dm = lambda j: dims.get(j, 0)  # noqa: E731
        L = _maps(_get(p, "L", w, default={}), f"{w}.L", parse_k1, lambda j: (dm(j + 2), dm(j)))
        M = GradedLModule(dims, L)
        raw = _get(p, "pairing", w, kind=None, default=None)
        pairing = None if raw is None else _maps(raw, f"{w}.pairing", parse_k1, lambda j: (dm(j), dm(-j)))
        return GradedDocument(M, pairing, _get(p, "n", w, kind=None, default=None))
    if kind == "bigraded":
        M = _dec_module(p, w)
        if "d" in p:
            return _dec_d(M, _get(p, "d", w), f"{w}.d")
        return M
    if kind == "strata":
        return _dec_strata(p, w)
    inst = _dec_rz(p, w, check_pairings=check_pairings)
    if kind == "rz_instance":
        return inst
    fr = _get(p, "frobenius", w)
    wf = f"{w}.frobenius"
    M = inst.module
    blocks = _maps(_get(fr, "blocks", wf, default={}), f"{wf}.blocks", parse_k2, lambda s: (M.dim(*s), M.dim(*s)))
    mode = _get(fr, "mode", wf, kind=str, default="tate")
    if mode not in ("tate", "untwisted"):
        raise InstanceFormatError(f"unknown mode {mode!r}", location=f"{wf}.mode")
    g = FrobeniusOperator(M, blocks, parse_scalar(_get(fr, "q", wf, kind=str), f"{wf}.q"), mode)
    claims = _dec_claims(_get(fr, "claims", wf, default={}), f"{wf}.claims")
    return FrobeniusDocument(inst, g, claims)


def canonical_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def fingerprint(doc: dict) -> str:
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()


def dumps(obj) -> str:
    """Pretty, deterministic text for files (sorted keys, one-space indent)."""
    doc = obj if isinstance(obj, dict) else to_document(obj)
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=True) + "\n"


def parse_text(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"parse error: {exc.msg} at byte offset {exc.pos}",
                                  location=f"byte {exc.pos}") from None


def loads(text: str, check_pairings: bool = True):
    return from_document(parse_text(text), check_pairings=check_pairings)
