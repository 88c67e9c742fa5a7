from __future__ import annotations

import random

import pytest

from oracles import brute_force_cohomology, jordan_weight_spans, random_jordan_nilpotent
from wmlab.bigraded import (
    E1,
    BigradedNLModule,
    DifferentialStructure,
    check_L_bijectivity,
    check_N_bijectivity,
    cohomology,
    criterion_2_2,
    criterion_slots,
    dtilde,
    dtilde_boundary_identity,
    euler_by_antidiagonal,
    extract_gamma_rho,
    filtration_axioms_hold,
    monodromy_filtration,
    n_primitive_columns,
    rz_hypothesis,
    thm02_hypotheses,
    thm03_procedure,
    wm_verdict,
)
from wmlab.degeneration import (
    assemble,
    gen_combinatorial,
    gen_curve_cycle,
    gen_random_jordan,
    perturb_break_pairing,
    to_columns,
)
from wmlab.errors import DecompositionFailed, HypothesisFailed, NotNilpotent
from wmlab.linalg import Matrix, Subspace

VARIANTS = ("i", "ii", "iii", "iv")


def one():
    return Matrix([[1]])


def n_string():
    """M_1^0 -> M_{-1}^0 with N the identity."""
    return BigradedNLModule({(1, 0): 1, (-1, 0): 1}, {(1, 0): one()})


def full_strings():
    """Sum of an N-string of length 3 and an L-string of length 2, d = 0."""
    dims = {(2, 0): 1, (0, 0): 1, (-2, 0): 1, (0, -1): 1, (0, 1): 1}
    M = BigradedNLModule(dims, {(2, 0): one(), (0, 0): one()}, {(0, -1): one()})
    return M, DifferentialStructure(M, {})


def random_instances(count: int, **kw):
    return [gen_random_jordan(s, **kw) for s in range(count)]


# --- columns and the decomposition d = d' + d'' -----------------------------

def test_columns_of_single_string():
    cols = n_primitive_columns(n_string())
    assert cols.dim(1, 0) == 1
    assert cols.dim(0, 0) == 0


def test_columns_of_N_zero_module():
    M = BigradedNLModule({(0, 0): 2})
    assert n_primitive_columns(M).dim(0, 0) == 2


def test_columns_match_strata(curve3):
    cd = to_columns(*gen_curve_cycle(3, [0, 0, 0]))
    assert curve3.e1().cols.C_dims == cd.dims


def test_gamma_rho_recovered_exactly():
    strata, trans = gen_curve_cycle(3, [0, 1, 0])
    cd = to_columns(strata, trans)
    E = assemble(strata, trans).e1()
    assert set(cd.rho) == set(E.cols.rho)
    assert all(cd.rho[k] == E.cols.rho[k] for k in cd.rho)
    assert set(cd.gamma) == set(E.cols.gamma)
    assert all(cd.gamma[k] == E.cols.gamma[k] for k in cd.gamma)


def test_zero_differential_gives_zero_gamma_rho():
    M, d = full_strings()
    cols = extract_gamma_rho(M, d)
    assert all(m.is_zero() for m in cols.gamma.values())
    assert all(m.is_zero() for m in cols.rho.values())


def test_noncommuting_differential_rejected():
    for seed in range(30):
        inst = gen_random_jordan(seed, max_blocks=3)
        M, d = inst.module, inst.differential
        for (i, j) in M.slots:
            tgt = M.dim(i - 1, j + 1)
            if not tgt or not M.dim(i - 3, j + 1):
                continue
            bump = [[0] * M.dim(i, j) for _ in range(tgt)]
            bump[0][0] = 1
            maps = dict(d.d_maps)
            maps[(i, j)] = d.d(i, j) + Matrix(bump, rows=tgt, cols=M.dim(i, j))
            bad = DifferentialStructure(M, maps)
            if any(kind == "dN=Nd" for kind, _ in bad.violations()):
                with pytest.raises(DecompositionFailed):
                    extract_gamma_rho(M, bad)
                return
    pytest.fail("no slot produced an N-commutation violation")


def test_column_isomorphisms_between_copies():
    for inst in random_instances(20):
        M = inst.module
        cols = inst.e1().cols
        for (c, j), b in cols.basis.items():
            if not b.cols:
                continue
            for a in range(0, c + 1):
                # N^{c-2a} carries copy a of C_c (in M_{c-2a}) onto copy c-a (in M_{2a-c})
                src = M.N_power(c, j, a) @ b
                i = c - 2 * a
                if i <= 0:
                    continue
                img = M.N_power(i, j, i) @ src
                assert Subspace.span(img) == Subspace.span(M.N_power(c, j, c - a) @ b)
                assert img.rank() == b.cols


# --- cohomology ----------------------------------------------------------------

def test_zero_differential_cohomology_is_module():
    M, d = full_strings()
    assert cohomology(M, d).H_dims == M.dims


def test_curve_cycle_table(curve3):
    H = curve3.e1().H.H_dims
    assert H == {(0, -1): 1, (0, 1): 1, (1, 0): 1, (-1, 0): 1}
    assert H.get((0, 0), 0) == 0 and H.get((1, -1), 0) == 0


def test_curve_cycle_matches_brute_force(curve3):
    assert brute_force_cohomology(curve3.module, curve3.differential) == curve3.e1().H.H_dims


def test_random_instances_match_planted_truth():
    for inst in random_instances(40, allow_failure=True):
        planted = {tuple(int(x) for x in k.split(",")): v for k, v in inst.provenance["planted"]["H_dims"].items()}
        assert inst.e1().H.H_dims == planted


def test_euler_characteristic_per_antidiagonal():
    for inst in random_instances(40, allow_failure=True) + [assemble(*gen_curve_cycle(4, [1, 0, 2, 0]))]:
        assert euler_by_antidiagonal(inst.module.dims) == euler_by_antidiagonal(inst.e1().H.H_dims)


# --- bijectivity checks ------------------------------------------------------------

def test_N_bijectivity_examples(curve3):
    H = curve3.e1().H
    assert check_N_bijectivity(H, 1, 0)
    assert check_N_bijectivity(H, 3, 5)
    with pytest.raises(ValueError):
        check_N_bijectivity(H, 0, 0)


def test_N_bijectivity_fails_on_planted_defect():
    for seed in range(200):
        inst = gen_random_jordan(seed, allow_failure=True)
        blocks = inst.provenance["planted"]["blocks"]
        if any(b[0] == "G" for b in blocks):
            H = inst.e1().H
            M = inst.module
            bad = [(i, j) for i in range(1, M.i_span() + 1) for j in range(-M.j_span(), M.j_span() + 1)
                   if (H.dim(i, j) or H.dim(-i, j)) and not check_N_bijectivity(H, i, j)]
            assert bad
            return
    pytest.fail("no planted N-defect found")


def test_L_bijectivity_examples(curve3):
    M, d = full_strings()
    assert all(check_L_bijectivity(cohomology(M, d)).values())
    assert all(check_L_bijectivity(curve3.e1().H).values())
    for r, genera in ((2, [1, 0]), (4, [0, 2, 0, 1])):
        assert all(check_L_bijectivity(assemble(*gen_curve_cycle(r, genera)).e1().H).values())


def test_L_bijectivity_fails_on_planted_defect():
    found = 0
    for inst in random_instances(40, allow_failure=True):
        planted = inst.provenance["planted"]["L_bijective"]
        assert all(check_L_bijectivity(inst.e1().H).values()) == planted
        found += not planted
    assert found


# --- d-tilde -------------------------------------------------------------------------

def test_dtilde_zero_differential():
    M, d = full_strings()
    E = E1(M, d)
    assert dtilde(E, 2, 0).is_zero()


def test_dtilde_curve_cycle(curve3):
    E = curve3.e1()
    D = dtilde(E, 1, 0)
    assert D.rank() == 2
    assert Subspace.span(D) == E.im_gamma_rho(1, 1)
    assert dtilde(E, 1, -1).rank() == 0


def test_dtilde_boundary_identity_sweep():
    for inst in random_instances(40, allow_failure=True):
        E = inst.e1()
        for (i, j) in criterion_slots(E):
            assert dtilde_boundary_identity(E, i, j), (i, j)


# --- criteria ---------------------------------------------------------------------------

def test_criteria_zero_differential():
    M, d = full_strings()
    E = E1(M, d)
    for (i, j) in criterion_slots(E):
        for v in VARIANTS:
            app, crit, direct = criterion_2_2(E, i, j, v)
            assert app and crit == direct


def test_criteria_curve_cycles_exhaustive():
    for r, genera in ((2, [0, 0]), (3, [0, 0, 0]), (3, [1, 0, 2]), (5, [0, 1, 0, 0, 1])):
        E = assemble(*gen_curve_cycle(r, genera)).e1()
        for (i, j) in criterion_slots(E):
            for v in VARIANTS:
                app, crit, direct = criterion_2_2(E, i, j, v)
                if app:
                    assert crit == direct, (r, i, j, v)


def test_criteria_random_sweep():
    applicable_false = 0
    for inst in random_instances(100, allow_failure=True):
        E = inst.e1()
        for (i, j) in criterion_slots(E):
            for v in VARIANTS:
                app, crit, direct = criterion_2_2(E, i, j, v)
                if app:
                    assert crit == direct, (i, j, v)
                    applicable_false += not direct
    assert applicable_false > 0


def test_unknown_variant():
    M, d = full_strings()
    with pytest.raises(ValueError):
        criterion_2_2(E1(M, d), 1, 0, "v")


# --- monodromy filtration --------------------------------------------------------------

def test_monodromy_of_zero():
    W = monodromy_filtration(Matrix.zeros(3, 3))
    assert W.step(-1).dim == 0 and W.step(0).dim == 3


def test_monodromy_of_jordan_pair():
    Nm = Matrix([[0, 1], [0, 0]])
    W = monodromy_filtration(Nm)
    assert W.step(-1) == Subspace.span(Nm)
    assert W.step(-2).dim == 0 and W.step(1).dim == 2
    assert W.graded_dims() == {-1: 1, 1: 1}


def test_monodromy_matches_jordan_oracle():
    rng = random.Random(5)
    for _ in range(40):
        Nm, P, sizes = random_jordan_nilpotent(rng, 12)
        W = monodromy_filtration(Nm)
        assert filtration_axioms_hold(Nm, W)
        for k, span in jordan_weight_spans(P, sizes).items():
            assert W.step(k) == Subspace.span(span), (sizes, k)


def test_monodromy_rejects_non_nilpotent():
    with pytest.raises(NotNilpotent):
        monodromy_filtration(Matrix.identity(2))


# --- verdicts -------------------------------------------------------------------------

def test_wm_zero_differential():
    M, d = full_strings()
    ok, rep = wm_verdict(E1(M, d))
    assert ok and rep["paths_agree"]


@pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
def test_wm_curve_cycles(r):
    rng = random.Random(r)
    genera = [rng.randint(0, 2) for _ in range(r)]
    ok, rep = wm_verdict(assemble(*gen_curve_cycle(r, genera)))
    assert ok and rep["paths_agree"]


def test_wm_planted_failure_has_witness():
    for inst in random_instances(40, allow_failure=True):
        ok, rep = wm_verdict(inst)
        assert rep["paths_agree"]
        assert ok == inst.provenance["planted"]["wm"]
        if not ok:
            assert rep["witness"] is not None


def test_gram_hypotheses_vacuous_and_curve(curve3):
    vertex = assemble(*gen_combinatorial([[0]], 2))
    assert thm02_hypotheses(vertex)[:2] == (True, True)
    assert thm02_hypotheses(curve3)[:2] == (True, True)


def test_gram_hypotheses_fail_after_perturbation(tetrahedron):
    p = perturb_break_pairing(tetrahedron, 0)
    hyp_rho, _, detail = thm02_hypotheses(p)
    assert hyp_rho is False
    assert detail["rho"]


def test_gram_hypotheses_imply_wm():
    insts = random_instances(30) + [assemble(*gen_curve_cycle(r, [1] * r)) for r in (2, 3, 4)]
    for inst in insts:
        if inst.pairings is None:
            continue
        hr, hg, _ = thm02_hypotheses(inst)
        if hr and hg:
            assert wm_verdict(inst)[0]


def test_rz_examples(curve3, tetrahedron):
    vertex = assemble(*gen_combinatorial([[0]], 2))
    assert rz_hypothesis(vertex)[0]
    ok, detail = rz_hypothesis(curve3)
    assert ok and detail["primitive_sign_check"]
    ok, detail = rz_hypothesis(perturb_break_pairing(tetrahedron, 0))
    assert not ok and detail["failures"]


def test_inductive_procedure_examples(curve3, tetrahedron):
    vertex = assemble(*gen_combinatorial([[0]], 2))
    assert thm03_procedure(vertex, True)[0]
    ok, trace = thm03_procedure(curve3, True)
    assert ok and all(step["im_gamma_rho_1_symmetric"] for step in trace)
    for r in (2, 4):
        assert thm03_procedure(assemble(*gen_curve_cycle(r, [0] * r)), True)[0]
    with pytest.raises(HypothesisFailed) as err:
        thm03_procedure(perturb_break_pairing(tetrahedron, 0))
    assert err.value.which == "entry"
