"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
from __future__ import annotations

import itertools
import json
import random
import time

import pytest

from oracles import brute_force_cohomology, jordan_weight_spans, random_jordan_nilpotent
from wmlab.bigraded import (
    criterion_2_2,
    criterion_slots,
    euler_by_antidiagonal,
    filtration_axioms_hold,
    monodromy_filtration,
    thm02_hypotheses,
    wm_verdict,
)
from wmlab.cli import main
from wmlab.degeneration import (
    assemble,
    gen_combinatorial,
    gen_curve_cycle,
    gen_random_jordan,
    perturb_break_pairing,
)
from wmlab.errors import HypothesisFailed, WmLabError
from wmlab.frobenius import (
    FactorClaim,
    build_idempotents,
    crt_polynomials,
    min_poly_on_image,
    operator_on,
    planted_curve_frobenius,
)
from wmlab.graded import (
    SL2Model,
    adjoint,
    dual_block_pair,
    isotropic_negative_control,
    lemma14_check,
    prop13_dimension_report,
    prop15_decompose,
    prop16_check,
    verify_lemma_1_2,
)
from wmlab.linalg import Subspace
from wmlab.poly import PolynomialQ, char_poly
from wmlab.serialize import dumps, fingerprint, loads, to_document

T = PolynomialQ.x()
VARIANTS = ("i", "ii", "iii", "iv")


def report(capsys, number: int, label: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {number} [{label}]: {'PASS' if ok else 'FAIL'} ({detail})")


def random_pair(rng: random.Random, max_dim: int = 30):
    """A degree-1 morphism between 0-symmetric modules of opposite parity, plus its adjoint."""
    while True:
        parity = rng.randint(0, 1)
        SM = SL2Model.random(rng, 3, 2, parity)
        SN = SL2Model.random(rng, 3, 2, 1 - parity)
        if SM.module.total_dim + SN.module.total_dim <= max_dim:
            break
    f = SM.random_morphism(rng, SN, 1)
    PhiM, PhiN = SM.random_pairing(rng), SN.random_pairing(rng)
    return f, adjoint(f, PhiM, PhiN, 1), PhiM, PhiN


def padded_dual_pair(rng: random.Random):
    a = rng.randint(1, 3)
    extra_M = {k: 1 for k in (rng.randint(0, 3),) if (k - a) % 2 == 0 and rng.random() < 0.5}
    extra_N = {k: 1 for k in (rng.randint(0, 2),) if (k - a + 1) % 2 == 0 and rng.random() < 0.5}
    return dual_block_pair(rng, a, extra_M, extra_N, mirrored=rng.random() < 0.5)


def genus_vectors(r: int, total: int = 3):
    return [list(g) for g in itertools.product(range(total + 1), repeat=r) if sum(g) <= total]


# --- 1 -----------------------------------------------------------------------------

def test_criterion_1_image_quotient_symmetry(capsys):
    rng = random.Random(101)
    t0 = time.perf_counter()
    bad = sum(not verify_lemma_1_2(random_pair(rng)[0]) for _ in range(300))
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 30
    report(capsys, 1, "image quotient is 1-symmetric", ok, f"300 morphisms, {bad} failures, {elapsed:.1f}s < 30s")
    assert ok


# --- 2 -----------------------------------------------------------------------------

def test_criterion_2_dual_pair_dimension_identities(capsys):
    rng = random.Random(102)
    t0 = time.perf_counter()
    bad = sum(not prop13_dimension_report(*random_pair(rng))["verdict"] for _ in range(200))
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 30
    report(capsys, 2, "dual pair dimension identities", ok, f"200 pairs, {bad} failures, {elapsed:.1f}s < 30s")
    assert ok


# --- 3 -----------------------------------------------------------------------------

def test_criterion_3_dual_pair_decompositions(capsys):
    rng = random.Random(103)
    counts = {"injectivity": 0, "decomposition": 0, "kernel": 0}
    failures = []

    # injectivity on the saturated image, on pairs whose hypothesis holds
    attempts = 0
    while counts["injectivity"] < 100 and attempts < 2000:
        attempts += 1
        f, g, PhiM, PhiN = random_pair(rng) if attempts % 2 else padded_dual_pair(rng)
        hyp, concl = lemma14_check(f, g, PhiM, PhiN)
        if hyp:
            counts["injectivity"] += 1
            if not concl:
                failures.append(("injectivity", attempts))

    for _ in range(100):
        f, g, PhiM, PhiN = padded_dual_pair(rng)
        try:
            if not prop15_decompose(f, g, PhiM, PhiN)["verdict"]:
                failures.append(("decomposition", counts["decomposition"]))
        except HypothesisFailed as exc:
            failures.append(("decomposition hypothesis", exc.which))
        counts["decomposition"] += 1

    attempts = 0
    while counts["kernel"] < 100 and attempts < 1000:
        attempts += 1
        f, g, PhiM, PhiN = dual_block_pair(rng, rng.randint(1, 3), mirrored=rng.random() < 0.5)
        try:
            verdict = prop16_check(f, g, PhiM, PhiN)
        except HypothesisFailed:
            continue
        counts["kernel"] += 1
        if not verdict:
            failures.append(("kernel", attempts))

    controls = []
    for seed in range(5):
        f, g, PhiM, PhiN = isotropic_negative_control(random.Random(seed), a=2 + seed % 2)
        hyp, _ = lemma14_check(f, g, PhiM, PhiN)
        refused = []
        for fn in (prop15_decompose, prop16_check):
            try:
                fn(f, g, PhiM, PhiN)
                refused.append(False)
            except HypothesisFailed:
                refused.append(True)
        controls.append(hyp is False and all(refused))

    ok = not failures and all(v == 100 for v in counts.values()) and all(controls)
    report(capsys, 3, "dual pair decompositions", ok,
           f"{counts}, failures {failures[:3]}, isotropic controls refused {sum(controls)}/5")
    assert ok


# --- 4 -----------------------------------------------------------------------------

def test_criterion_4_criteria_oracle(capsys, tetrahedron):
    instances = [("tetrahedron", tetrahedron)]
    for r in range(2, 7):
        instances.append((f"curve r={r}", assemble(*gen_curve_cycle(r))))
        instances.append((f"curve r={r} g=1", assemble(*gen_curve_cycle(r, [1] + [0] * (r - 1)))))
    instances += [(f"random {s}", gen_random_jordan(s, allow_failure=True)) for s in range(100)]
    applicable, mismatches, errors = 0, [], []
    for name, inst in instances:
        try:
            E = inst.e1()
            for (i, j) in criterion_slots(E):
                for v in VARIANTS:
                    app, crit, direct = criterion_2_2(E, i, j, v)
                    if app:
                        applicable += 1
                        if crit != direct:
                            mismatches.append((name, i, j, v))
        except WmLabError as exc:
            errors.append((name, type(exc).__name__))
    ok = not mismatches and not errors and applicable > 0
    report(capsys, 4, "criteria agree with direct bijectivity", ok,
           f"{len(instances)} instances, {applicable} applicable rows, {len(mismatches)} mismatches, "
           f"{len(errors)} exceptions")
    assert ok


# --- 5 -----------------------------------------------------------------------------

def test_criterion_5_curve_degenerations(capsys):
    t0 = time.perf_counter()
    count, wm_bad, gr_bad, euler_bad = 0, [], [], []
    for r in range(2, 7):
        for genera in genus_vectors(r):
            inst = assemble(*gen_curve_cycle(r, genera))
            E = inst.e1()
            count += 1
            if not wm_verdict(E)[0]:
                wm_bad.append(genera)
            if euler_by_antidiagonal(inst.module.dims) != euler_by_antidiagonal(E.H.H_dims):
                euler_bad.append(genera)
            if not any(genera):
                brute = brute_force_cohomology(inst.module, inst.differential)
                # H^1 weight 0 and weight 2 pieces
                if (brute.get((-1, 0), 0), brute.get((1, 0), 0)) != (1, 1) or brute != E.H.H_dims:
                    gr_bad.append(r)
    elapsed = time.perf_counter() - t0
    ok = not (wm_bad or gr_bad or euler_bad) and elapsed < 10
    report(capsys, 5, "curve degenerations", ok,
           f"{count} genus vectors, wm failures {wm_bad[:3]}, Gr0/Gr2 failures {gr_bad}, "
           f"Euler failures {euler_bad[:3]}, {elapsed:.1f}s < 10s")
    assert ok


# --- 6 -----------------------------------------------------------------------------

def thm02_candidates():
    for r in range(2, 7):
        for genera in genus_vectors(r, 2):
            yield assemble(*gen_curve_cycle(r, genera))
    for cx in ([[0]], [[0, 1, 2]], [[0, 1, 2], [1, 2, 3]]):
        yield assemble(*gen_combinatorial(cx, 2))
    for seed in itertools.count():
        yield gen_random_jordan(seed)


def test_criterion_6_hypotheses_imply_wm(capsys, tetrahedron):
    both, counterexamples, scanned = 0, [], 0
    for inst in thm02_candidates():
        scanned += 1
        if inst.pairings is None:
            continue
        hr, hg, _ = thm02_hypotheses(inst)
        if hr and hg:
            both += 1
            if not wm_verdict(inst)[0]:
                counterexamples.append(inst.provenance.get("generator"))
        if both >= 100 or scanned > 2000:
            break
    control = perturb_break_pairing(tetrahedron, 0)
    hr, hg, _ = thm02_hypotheses(control)
    control_ok = not (hr and hg)
    ok = both >= 100 and not counterexamples and control_ok
    report(capsys, 6, "hypotheses imply weight-monodromy", ok,
           f"{both} instances with both hypotheses, {len(counterexamples)} counterexamples, "
           f"perturbed control hyp=({hr}, {hg})")
    assert ok


# --- 7 -----------------------------------------------------------------------------

def test_criterion_7_monodromy_filtration(capsys):
    rng = random.Random(107)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(200):
        Nm, P, sizes = random_jordan_nilpotent(rng, 20)
        W = monodromy_filtration(Nm)
        if not filtration_axioms_hold(Nm, W):
            bad += 1
            continue
        if any(W.step(k) != Subspace.span(span) for k, span in jordan_weight_spans(P, sizes).items()):
            bad += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    report(capsys, 7, "monodromy filtration matches Jordan form", ok,
           f"200 nilpotents, {bad} failures, {elapsed:.1f}s < 10s")
    assert ok


# --- 8 -----------------------------------------------------------------------------

def planted_frobenius_case(rng: random.Random):
    q = rng.choice([2, 3, 4, 5, 7])
    r = rng.randint(2, 4)
    genera = [0] * r
    for _ in range(rng.randint(0, 3)):
        genera[rng.randrange(r)] += 1
    bound = int((4 * q) ** 0.5)
    traces = [rng.randint(-bound, bound) for _ in range(sum(genera))]
    traces = [a if a * a < 4 * q else 0 for a in traces]
    inst, g, _ = planted_curve_frobenius(r, genera, q=q, traces=traces)
    quads: dict = {}
    for a in traces:
        f = T * T - a * T + q
        quads[f] = quads.get(f, 0) + 1
    expected = {"deg:0": {T - 1: 1}, "deg:2": {T - q: 1},
                "deg:1": {T - 1: 1, T - q: 1, **quads}}
    return inst, g, expected


def test_criterion_8_frobenius_idempotents(capsys):
    rng = random.Random(108)
    failures = []
    for case in range(50):
        inst, g, expected = planted_frobenius_case(rng)
        if g.commutation_failures(inst.differential):
            failures.append((case, "commutation"))
            continue
        for sel, factors in expected.items():
            A = operator_on(g, inst, sel)
            P = PolynomialQ([1])
            for f, m in factors.items():
                P = P * f ** m
            if char_poly(A) != P:
                failures.append((case, sel, "planted char poly"))
                continue
            claims = [FactorClaim(f, m) for f, m in factors.items()]
            pis, rep = build_idempotents(A, claims, P)
            if not (rep["ok"] and all(rep["checks"].values())):
                failures.append((case, sel, "idempotent checks"))
            for comp, pi in zip(rep["components"], pis):
                f = PolynomialQ.parse(comp["factor"])
                m = factors[f]
                if comp["char_poly"] != str(f ** m) or comp["rank"] != f.degree * m:
                    failures.append((case, sel, "char poly on image"))
                if m == 1 and min_poly_on_image(A, pi) != f:
                    failures.append((case, sel, "min poly"))
            Rs = crt_polynomials(claims)
            for R, comp, pi in zip(Rs, rep["components"], pis):
                f = PolynomialQ.parse(comp["factor"])
                for h, m in factors.items():
                    want = PolynomialQ([1 if h == f else 0])
                    if R % (h ** m) != want % (h ** m):
                        failures.append((case, sel, "CRT congruence"))
                if R(A) != pi:
                    failures.append((case, sel, "CRT evaluation"))
    ok = not failures
    report(capsys, 8, "Frobenius idempotents", ok, f"50 planted instances, failures {failures[:3]}")
    assert ok


# --- 9 -----------------------------------------------------------------------------

GENERATE_ARGS = [
    ["generate", "curve", "--r", "3", "--seed", "7"],
    ["generate", "curve", "--r", "3", "--genera", "1,0,2", "--strata"],
    ["generate", "curve", "--r", "2", "--genera", "1,0", "--traces", "1", "--frobenius"],
    ["generate", "combinatorial", "--preset", "tetrahedron"],
    ["generate", "random", "--seed", "4", "--allow-failure"],
    ["generate", "negative", "--base", "tetrahedron", "--seed", "1"],
]
CHECKS = ("wm", "thm02", "thm03", "rz", "criterion22", "frobenius")


def run(capsys, argv) -> tuple[int, str]:
    code = main(argv)
    return code, capsys.readouterr().out


def test_criterion_9_determinism_and_round_trips(capsys, tmp_path):
    problems = []
    files = []
    for k, argv in enumerate(GENERATE_ARGS):
        first, second = run(capsys, argv), run(capsys, argv)
        if first != second or first[0] != 0:
            problems.append(("generate", argv[1]))
            continue
        path = tmp_path / f"fixture{k}.json"
        path.write_text(first[1])
        files.append(path)
    reports = []
    for path in files:
        for which in CHECKS:
            argv = ["check", which, str(path), "--format", "machine"]
            first, second = run(capsys, argv), run(capsys, argv)
            if first != second:
                problems.append(("check", which, path.name))
            rp = tmp_path / f"{path.stem}_{which}.report.json"
            rp.write_text(first[1])
            reports.append(str(rp))
        for argv in (["validate", str(path)], ["validate", str(path), "--format", "machine"]):
            if run(capsys, argv) != run(capsys, argv):
                problems.append(("validate", path.name))
    for fmt in ("text", "machine"):
        argv = ["report", *reports, "--format", fmt]
        if run(capsys, argv) != run(capsys, argv):
            problems.append(("report", fmt))
    for path in files:
        text = path.read_text()
        obj = loads(text)
        if dumps(obj) != text or fingerprint(to_document(obj)) != fingerprint(json.loads(text)):
            problems.append(("round trip", path.name))
    ok = not problems
    report(capsys, 9, "determinism and round trips", ok,
           f"{len(files)} fixtures, {len(reports)} reports, problems {problems[:3]}")
    assert ok


@pytest.fixture(autouse=True)
def _fresh_output(capsys):
    capsys.readouterr()
    yield
