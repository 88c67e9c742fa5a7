"""``wm-lab`` command line: validate, check, generate and report.

Exit codes: 0 pass or valid, 1 checked and failed, 2 invalid input or inapplicable check.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from fractions import Fraction
from typing import Any, Sequence

from . import FORMAT, __version__
from .bigraded import (
    BigradedNLModule,
    DifferentialStructure,
    criterion_2_2,
    criterion_slots,
    rz_hypothesis,
    thm02_hypotheses,
    thm03_procedure,
    wm_verdict,
)
from .degeneration import (
    RZInstance,
    assemble,
    gen_combinatorial,
    gen_curve_cycle,
    gen_random_jordan,
    instance_columns,
    perturb_break_pairing,
    validate,
    validate_columns,
)
from .errors import (
    MinPolyMismatch,
    NotCoprime,
    ProductMismatch,
    WmLabError,
)
from .frobenius import FactorClaim, build_idempotents, multiplicity_one_report, operator_on, planted_curve_frobenius
from .graded import GradedPairing, check_symmetric
from .linalg import BilinearForm, Matrix, Subspace
from .poly import char_poly, factor_over_q
from .serialize import FrobeniusDocument, GradedDocument, dumps, fingerprint, from_document, parse_text

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
CHECKS = ("wm", "thm02", "thm03", "rz", "criterion22", "frobenius")
PRESETS = {
    "vertex": [[0]],
    "edge": [[0, 1]],
    "triangle": [[0, 1], [1, 2], [0, 2]],
    "simplex": [[0, 1, 2]],
    "tetrahedron": [list(t) for t in itertools.combinations(range(4), 3)],
}


# ---------------------------------------------------------------------------
# json-safe conversion


def jsonable(x: Any):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, Matrix):
        return [[jsonable(v) for v in row] for row in x.tolist()]
    if isinstance(x, Subspace):
        return {"ambient_dim": x.ambient_dim, "basis": jsonable(x.basis.T)}
    if isinstance(x, dict):
        out = {}
        for k, v in x.items():
            key = ",".join(str(t) for t in k) if isinstance(k, tuple) else str(k)
            out[key] = jsonable(v)
        return out
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return str(x)


class Report:
    def __init__(self, check: str, fp: str | None):
        self.check = check
        self.fp = fp
        self.verdict = "inapplicable"
        self.details: dict = {}
        self.witnesses: list = []
        self.timing: float | None = None
        self.message = ""

    def as_dict(self) -> dict:
        return {"format_version": FORMAT, "check": self.check, "verdict": self.verdict,
                "input_fingerprint": self.fp, "message": self.message,
                "details": jsonable(self.details), "witnesses": jsonable(self.witnesses),
                "timing": None if self.timing is None else round(self.timing, 6)}

    @property
    def code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(self.verdict, EXIT_INVALID)


def emit(rep: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "machine":
        out.write(json.dumps(rep, sort_keys=True, indent=1) + "\n")
        return
    lines = [f"check: {rep.get('check')}", f"verdict: {rep.get('verdict')}"]
    if rep.get("input_fingerprint"):
        lines.append(f"fingerprint: {rep['input_fingerprint']}")
    if rep.get("message"):
        lines.append(f"message: {rep['message']}")
    for k in sorted(rep.get("details") or {}):
        lines.append(f"  {k}: {json.dumps(rep['details'][k], sort_keys=True)}")
    for w in rep.get("witnesses") or []:
        lines.append(f"  witness: {json.dumps(w, sort_keys=True)}")
    if rep.get("timing") is not None:
        lines.append(f"timing: {rep['timing']}s")
    out.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# loading


def load_path(path: str):
    """(document dict, parsed object); raises WmLabError or OSError."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    doc = parse_text(text)
    return doc, from_document(doc, check_pairings=False)


def as_instance(obj) -> RZInstance | None:
    if isinstance(obj, FrobeniusDocument):
        return obj.instance
    if isinstance(obj, RZInstance):
        return obj
    if isinstance(obj, tuple):
        return assemble(*obj)
    if isinstance(obj, DifferentialStructure):
        top = max((i for i, _ in obj.module.slots), default=0)
        return RZInstance(obj.module, obj, max(top, 0), None)
    return None


# ---------------------------------------------------------------------------
# validate


def _first_failure(items: list) -> dict | None:
    return next((it for it in items if not it["ok"]), None)


def run_validate(obj) -> tuple[bool, list]:
    items: list = []

    def add(check, ok, detail=None):
        items.append({"check": check, "ok": bool(ok), "detail": detail})

    if isinstance(obj, GradedDocument):
        M = obj.module
        if obj.n is not None:
            add("symmetric", check_symmetric(M, obj.n), {"n": obj.n})
        if obj.pairing is not None:
            try:
                GradedPairing(M, {j: BilinearForm(g) for j, g in obj.pairing.items()})
                add("pairing", True)
            except WmLabError as exc:
                add("pairing", False, str(exc))
        if not items:
            add("shapes", True)
        return all(it["ok"] for it in items), items
    if isinstance(obj, BigradedNLModule):
        bad = obj.violations()
        add("module_axioms", not bad, bad[:1] or None)
        return not bad, items
    if isinstance(obj, tuple):
        rep = validate(*obj)
        return rep["ok"], [{"check": it["check"], "ok": it["ok"], "detail": {"level": it["level"], **(
            it["detail"] if isinstance(it["detail"], dict) else {"info": it["detail"]})}} for it in rep["items"]]
    if isinstance(obj, DifferentialStructure):
        bad = obj.module.violations()
        add("module_axioms", not bad, bad[:1] or None)
        if not bad:
            badd = obj.violations()
            add("differential_axioms", not badd, badd[:1] or None)
        return all(it["ok"] for it in items), items
    inst = as_instance(obj)
    ok, its = run_validate(inst.differential)
    items.extend(its)
    if not ok:
        return False, items
    try:
        E = inst.e1()
        add("decomposition", True)
    except WmLabError as exc:
        add("decomposition", False, str(exc))
        return False, items
    if inst.pairings is not None:
        missing = [c for c in E.cols.columns if c not in inst.pairings]
        add("pairings_cover_columns", not missing, {"missing": missing} if missing else None)
        for c, P in sorted(inst.pairings.items()):
            try:
                GradedPairing(P.module, {j: BilinearForm(P.gram(j)) for j in P.module.degrees})
                add("pairing", True, {"column": c})
            except WmLabError as exc:
                add("pairing", False, {"column": c, "error": str(exc)})
        if all(it["ok"] for it in items):
            rep = validate_columns(instance_columns(inst))
            for it in rep["items"]:
                if it["check"] == "adjointness":
                    add("adjointness", it["ok"], {"level": it["level"], "eps": it["detail"]["eps"]})
    if isinstance(obj, FrobeniusDocument):
        bad = obj.operator.commutation_failures(inst.differential)
        add("frobenius_commutation", not bad, bad[:1] or None)
    return all(it["ok"] for it in items), items


def cmd_validate(path: str, fmt: str = "text", timing: bool = False, out=None) -> int:
    t0 = time.perf_counter()
    rep = Report("validate", None)
    try:
        doc, obj = load_path(path)
        rep.fp = fingerprint(doc)
        rep.details["kind"] = doc["kind"]
        ok, items = run_validate(obj)
        rep.details["items"] = items
        rep.verdict = "pass" if ok else "invalid"
        bad = _first_failure(items)
        if bad:
            rep.message = f"first violation: {bad['check']} {json.dumps(jsonable(bad['detail']), sort_keys=True)}"
    except OSError as exc:
        rep.verdict, rep.message = "invalid", f"I/O error: {exc.strerror or exc}"
    except WmLabError as exc:
        rep.verdict = "invalid"
        loc = getattr(exc, "location", None)
        rep.message = f"{type(exc).__name__}: {exc}" + (f" (at {loc})" if loc else "")
    if timing:
        rep.timing = time.perf_counter() - t0
    emit(rep.as_dict(), fmt, out)
    return EXIT_PASS if rep.verdict == "pass" else EXIT_INVALID


# ---------------------------------------------------------------------------
# checks


def _check_wm(inst: RZInstance, rep: Report, flags) -> None:
    ok, r = wm_verdict(inst.e1())
    rep.details.update({k: r[k] for k in ("L_bijective", "path_a", "path_b", "paths_agree", "H_dims") if k in r})
    if r.get("witness") is not None:
        rep.witnesses.append(r["witness"])
    if r.get("L_failures"):
        rep.witnesses.append({"L_failures": r["L_failures"]})
    rep.verdict = "pass" if ok else "fail"


def _need_pairings(inst: RZInstance, rep: Report) -> bool:
    if inst.pairings is None:
        rep.verdict, rep.message = "inapplicable", "instance carries no pairings"
        return False
    return True


def _check_thm02(inst, rep, flags) -> None:
    if not _need_pairings(inst, rep):
        return
    hr, hg, det = thm02_hypotheses(inst)
    rep.details.update({"hyp_rho": hr, "hyp_gamma": hg})
    wm, _ = wm_verdict(inst.e1())
    rep.details["wm_verdict"] = wm
    rep.details["implication_holds"] = (not (hr and hg)) or wm
    for name in ("rho", "gamma"):
        for w in det[name]:
            rep.witnesses.append({"degenerate_gram": name, **w})
    rep.verdict = "pass" if hr and hg else "fail"
    if hr and hg and not wm:
        rep.message = "hypotheses hold but the weight-monodromy verdict is false"


def _check_rz(inst, rep, flags) -> None:
    if not _need_pairings(inst, rep):
        return
    ok, det = rz_hypothesis(inst)
    rep.details["primitive_sign_check"] = det["primitive_sign_check"]
    rep.witnesses.extend({"degenerate_modified_gram": True, **w} for w in det["failures"])
    rep.verdict = "pass" if ok else "fail"


def _check_thm03(inst, rep, flags) -> None:
    if not _need_pairings(inst, rep):
        return
    ok, trace = thm03_procedure(inst, assume_low_j_injectivity=flags.assume_low_j_injectivity)
    rep.details["trace"] = trace
    rep.details["assume_low_j_injectivity"] = bool(flags.assume_low_j_injectivity)
    rep.verdict = "pass" if ok else "fail"
    if not ok:
        rep.witnesses.append({"failed_step": trace[-1]["i"] if trace else None})


def _check_criterion22(inst, rep, flags) -> None:
    E = inst.e1()
    rows, agree, applicable = [], True, 0
    for (i, j) in criterion_slots(E):
        for v in ("i", "ii", "iii", "iv"):
            app, crit, direct = criterion_2_2(E, i, j, v)
            rows.append({"slot": [i, j], "variant": v, "applicable": app,
                         "criterion": crit if app else None, "direct": direct})
            if app:
                applicable += 1
                if crit != direct:
                    agree = False
                    rep.witnesses.append({"slot": [i, j], "variant": v, "criterion": crit, "direct": direct})
    rep.details["rows"] = rows
    rep.details["applicable_count"] = applicable
    rep.verdict = "pass" if agree else "fail"


def _check_frobenius(obj, inst, rep, flags) -> None:
    if not isinstance(obj, FrobeniusDocument):
        rep.verdict, rep.message = "inapplicable", "instance carries no Frobenius operator"
        return
    g = obj.operator
    bad = g.commutation_failures(inst.differential)
    if bad:
        rep.verdict = "inapplicable"
        rep.message = f"operator fails to commute with {bad[0][0]} at {bad[0][1]}"
        rep.witnesses.append({"which": bad[0][0], "slot": list(bad[0][1])})
        return
    claims = dict(obj.claims)
    if not claims:
        E = inst.e1()
        degs = sorted({inst.n + j for (i, j), v in E.H.H_dims.items() if v})
        for m in degs:
            P = char_poly(operator_on(g, inst, f"deg:{m}"))
            claims[f"deg:{m}"] = [FactorClaim(f, k) for f, k in factor_over_q(P)]
        rep.details["claims_source"] = "computed factorization"
    else:
        rep.details["claims_source"] = "document"
    ok = True
    per = {}
    for sel in sorted(claims):
        A = operator_on(g, inst, sel)
        P = char_poly(A)
        entry: dict = {"char_poly": str(P)}
        try:
            _pis, r = build_idempotents(A, claims[sel], P)
            entry.update({"ok": r["ok"], "checks": r["checks"], "components": r["components"],
                          "warnings": r["warnings"]})
            ok = ok and r["ok"]
        except (ProductMismatch, NotCoprime, MinPolyMismatch) as exc:
            entry.update({"ok": False, "error": f"{type(exc).__name__}: {exc}"})
            rep.witnesses.append({"selector": sel, "error": type(exc).__name__, "message": str(exc)})
            ok = False
        per[sel] = entry
    rep.details["selectors"] = per
    mr = multiplicity_one_report(inst, g)
    rep.details["multiplicity_one"] = {"hypothesis": mr["hypothesis"],
                                       "factor_degrees_at_most_2": mr["factor_degrees_at_most_2"]}
    rep.verdict = "pass" if ok else "fail"


def cmd_check(path: str, which: str, flags, fmt: str = "text", out=None) -> int:
    t0 = time.perf_counter()
    rep = Report(which, None)
    try:
        doc, obj = load_path(path)
        rep.fp = fingerprint(doc)
        inst = as_instance(obj)
        if inst is None:
            rep.message = f"a {doc['kind']} document cannot be checked with {which}"
        else:
            if which == "frobenius":
                _check_frobenius(obj, inst, rep, flags)
            else:
                {"wm": _check_wm, "thm02": _check_thm02, "thm03": _check_thm03,
                 "rz": _check_rz, "criterion22": _check_criterion22}[which](inst, rep, flags)
    except OSError as exc:
        rep.verdict, rep.message = "inapplicable", f"I/O error: {exc.strerror or exc}"
    except WmLabError as exc:
        rep.verdict = "inapplicable"
        extra = {k: getattr(exc, k) for k in ("which", "step", "location", "axiom", "level", "slot")
                 if getattr(exc, k, None) is not None}
        rep.message = f"{type(exc).__name__}: {exc}"
        if extra:
            rep.details["error"] = extra
    if getattr(flags, "timing", False):
        rep.timing = time.perf_counter() - t0
    emit(rep.as_dict(), fmt, out)
    return rep.code


# ---------------------------------------------------------------------------
# generate


def _parse_int_list(s: str | None) -> list[int] | None:
    if s is None or s == "":
        return None if s is None else []
    return [int(x) for x in s.split(",")]


def _parse_simplices(s: str) -> list[list[int]]:
    return [[int(v) for v in part.split(",")] for part in s.split(";") if part.strip()]


def generate_object(kind: str, a) -> Any:
    if kind == "curve":
        genera = _parse_int_list(a.genera)
        if a.frobenius:
            traces = _parse_int_list(a.traces)
            inst, g, info = planted_curve_frobenius(a.r, genera, Fraction(a.q), traces, a.rotate)
            inst.provenance.update({"seed": a.seed, "frobenius": info})
            return FrobeniusDocument(inst, g, {})
        s, t = gen_curve_cycle(a.r, genera)
        if a.strata:
            return (s, t)
        prov = {"generator": "curve", "r": a.r, "genera": genera or [0] * a.r, "seed": a.seed}
        return assemble(s, t, provenance=prov)
    if kind == "combinatorial":
        cx = PRESETS[a.preset] if a.simplices is None else _parse_simplices(a.simplices)
        s, t = gen_combinatorial(cx, a.n)
        if a.strata:
            return (s, t)
        prov = {"generator": "combinatorial", "simplices": cx, "n": a.n, "seed": a.seed}
        return assemble(s, t, provenance=prov)
    if kind == "random":
        return gen_random_jordan(a.seed, a.max_blocks, a.max_col, a.max_k, a.allow_failure,
                                 not a.no_curves, not a.no_mix)
    if kind == "negative":
        if a.input:
            _doc, obj = load_path(a.input)
            base = as_instance(obj)
            if base is None:
                raise ValueError("negative controls need an instance document")
        elif a.base == "random":
            base = gen_random_jordan(a.seed)
        elif a.base == "curve":
            base = assemble(*gen_curve_cycle(3), provenance={"generator": "curve", "r": 3, "genera": [0, 0, 0]})
        else:
            cx = PRESETS[a.base]
            base = assemble(*gen_combinatorial(cx, a.n),
                            provenance={"generator": "combinatorial", "simplices": cx, "n": a.n})
        return perturb_break_pairing(base, a.seed)
    raise ValueError(f"unknown generator {kind!r}")


def cmd_generate(kind: str, a, out=None) -> int:
    out = out or sys.stdout
    try:
        obj = generate_object(kind, a)
        text = dumps(obj)
    except (WmLabError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# report


def cmd_report(paths: Sequence[str], fmt: str = "text", out=None) -> int:
    out = out or sys.stdout
    seen: dict = {}
    skipped = []
    for p in paths:
        try:
            with open(p, "r", encoding="utf-8") as fh:
                r = json.load(fh)
            if not isinstance(r, dict) or "verdict" not in r or "check" not in r:
                raise ValueError("not a verdict report")
        except (OSError, ValueError) as exc:
            skipped.append({"path": p, "reason": str(exc)})
            continue
        key = (str(r.get("input_fingerprint")), str(r["check"]))
        seen.setdefault(key, r)
    reports = [seen[k] for k in sorted(seen)]
    counts = {"pass": 0, "fail": 0, "inapplicable": 0}
    for r in reports:
        v = r["verdict"] if r["verdict"] in counts else "inapplicable"
        counts[v] += 1
    summary = {"format_version": FORMAT, "counts": counts, "total": len(reports),
               "reports": [{"input_fingerprint": r.get("input_fingerprint"), "check": r["check"],
                            "verdict": r["verdict"]} for r in reports],
               "skipped": skipped}
    if fmt == "machine":
        out.write(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    else:
        lines = [f"{'fingerprint':<16} {'check':<12} verdict"]
        for r in summary["reports"]:
            fp = (r["input_fingerprint"] or "-")[:16]
            lines.append(f"{fp:<16} {r['check']:<12} {r['verdict']}")
        lines.append(f"pass {counts['pass']} / fail {counts['fail']} / inapplicable {counts['inapplicable']}")
        for s in skipped:
            lines.append(f"skipped: {s['path']} ({s['reason']})")
        out.write("\n".join(lines) + "\n")
    return EXIT_FAIL if counts["fail"] else EXIT_PASS


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--timing", action="store_true", help="include wall-clock timing in reports")

    p = argparse.ArgumentParser(prog="wm-lab", description="Exact checks on E1 instances of Lefschetz type.")
    p.add_argument("--version", action="version", version=f"wm-lab {__version__} ({FORMAT})")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="schema and axiom validation")
    v.add_argument("path")

    c = sub.add_parser("check", parents=[common], help="run one checker")
    c.add_argument("which", choices=CHECKS)
    c.add_argument("path")
    c.add_argument("--assume-low-j-injectivity", action="store_true",
                   help="treat injectivity of N for j < 0 as an assumption that must hold")

    g = sub.add_parser("generate", parents=[common], help="write a generated instance")
    g.add_argument("kind", choices=("curve", "combinatorial", "random", "negative"))
    g.add_argument("--out")
    g.add_argument("--r", type=int, default=3, help="number of curves in the cycle")
    g.add_argument("--genera", help="comma-separated genera")
    g.add_argument("--strata", action="store_true", help="write stratum data instead of the assembled instance")
    g.add_argument("--frobenius", action="store_true", help="attach a planted Frobenius operator (curve)")
    g.add_argument("--q", default="4")
    g.add_argument("--traces", help="comma-separated traces for the H^1 blocks")
    g.add_argument("--rotate", action="store_true", help="let the operator rotate the components")
    g.add_argument("--preset", choices=sorted(PRESETS), default="tetrahedron")
    g.add_argument("--simplices", help="maximal simplices, e.g. '0,1,2;1,2,3'")
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--max-blocks", type=int, default=3)
    g.add_argument("--max-col", type=int, default=2)
    g.add_argument("--max-k", type=int, default=2)
    g.add_argument("--allow-failure", action="store_true")
    g.add_argument("--no-curves", action="store_true")
    g.add_argument("--no-mix", action="store_true")
    g.add_argument("--base", choices=["curve", "random"] + sorted(PRESETS), default="tetrahedron")
    g.add_argument("--input", help="instance file to perturb (negative)")

    r = sub.add_parser("report", parents=[common], help="merge machine-format verdict reports")
    r.add_argument("paths", nargs="*")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.path, args.format, args.timing)
    if args.command == "check":
        return cmd_check(args.path, args.which, args, args.format)
    if args.command == "generate":
        return cmd_generate(args.kind, args)
    return cmd_report(args.paths, args.format)


if __name__ == "__main__":
    sys.exit(main())
