from __future__ import annotations

import random
from fractions import Fraction

import pytest

from wmlab.errors import HypothesisFailed, NotLefschetzType, WrongDegree
from wmlab.graded import (
    GradedLModule,
    GradedMorphism,
    GradedPairing,
    SL2Model,
    adjoint,
    check_symmetric,
    dual_block_pair,
    image_filtration,
    isotropic_negative_control,
    lambda_op,
    lemma14_check,
    modified_pairing,
    primitive_decomposition,
    primitive_part,
    prop13_dimension_report,
    prop15_decompose,
    prop16_check,
    star,
    trace_form,
    verify_lemma_1_2,
)
from wmlab.linalg import Matrix, kernel_basis


def chain(k: int) -> SL2Model:
    """A single string V_k in the standard basis."""
    return SL2Model({k: 1}, None, mix=False)


def one(Q=1):
    return Matrix([[Q]])


def random_pair(rng: random.Random, max_k: int = 3):
    parity = rng.randint(0, 1)
    SM = SL2Model.random(rng, max_k, 2, parity)
    SN = SL2Model.random(rng, max_k, 2, 1 - parity)
    f = SM.random_morphism(rng, SN, 1)
    PhiM, PhiN = SM.random_pairing(rng), SN.random_pairing(rng)
    g = adjoint(f, PhiM, PhiN, 1)
    return f, g, PhiM, PhiN


def example_f():
    """V_1 -> V_2 sending the primitive to L times the primitive."""
    SM, SN = chain(1), chain(2)
    f = SM.morphism_from_primitives(SN, 1, {(1, 0): SN.std_unit(0, (2, 1, 0))})
    return SM, SN, f


# --- symmetry and primitives ---------------------------------------------------

def test_check_symmetric_examples():
    assert check_symmetric(GradedLModule({0: 1}), 0)
    assert check_symmetric(GradedLModule({-1: 1, 1: 1}, {-1: one()}), 0)
    assert not check_symmetric(GradedLModule({-1: 1, 1: 2}, {-1: Matrix([[1], [0]])}), 0)


def test_zero_L_fails_symmetry():
    assert not check_symmetric(GradedLModule({-1: 1, 1: 1}), 0)


def test_primitive_decomposition_examples():
    P2 = chain(2).module
    assert primitive_decomposition(P2).primitive_dims == {-2: 1}
    pt = GradedLModule({0: 1})
    assert primitive_decomposition(pt).primitive_dims == {0: 1}
    both = GradedLModule.direct_sum([P2, pt])
    assert primitive_decomposition(both).primitive_dims == {-2: 1, 0: 1}


def test_primitive_decomposition_rejects_non_lefschetz():
    with pytest.raises(NotLefschetzType):
        primitive_decomposition(GradedLModule({-1: 1, 1: 2}, {-1: Matrix([[1], [0]])}))


def test_dimension_bookkeeping_on_random_modules():
    rng = random.Random(11)
    for _ in range(40):
        S = SL2Model.random(rng, 4, 3)
        data = primitive_decomposition(S.module)
        for k, m in S.mult.items():
            assert data.primitive_dims.get(-k, 0) == m
        for deg in S.module.degrees:
            total = sum(sz for _, _, _, sz in data.blocks[deg])
            assert total == S.module.dim(deg)


# --- image filtration -------------------------------------------------------------

def test_image_filtration_zero_map():
    SM, SN = chain(1), chain(2)
    f = GradedMorphism.zero(SM.module, SN.module, 1)
    filt = image_filtration(f)
    assert all(s.dim == 0 for s in filt.im0.values())
    assert filt.im1_dims == {}
    assert verify_lemma_1_2(f)


def test_image_filtration_misses_primitive_degree():
    _, SN, f = example_f()
    filt = image_filtration(f)
    assert {d for d, s in filt.image.items() if s.dim} == {0, 2}
    assert all(s.dim == 0 for s in filt.im0.values())
    assert filt.im1_dims == {0: 1, 2: 1}
    assert verify_lemma_1_2(f)


def test_image_filtration_onto_primitives():
    SM, SN = chain(2), chain(1)
    f = SM.morphism_from_primitives(SN, 1, {(2, 0): SN.std_unit(-1, (1, 0, 0))})
    filt = image_filtration(f)
    for d in SN.module.degrees:
        assert filt.im0[d] == filt.image[d]
    assert filt.im1_dims == {}
    assert verify_lemma_1_2(f)


def test_image_filtration_wrong_degree():
    M = chain(1).module
    with pytest.raises(WrongDegree):
        image_filtration(GradedMorphism(M, M, 0, {-1: one(), 1: one()}))


def test_image_quotient_symmetry_sweep():
    rng = random.Random(1)
    for _ in range(300):
        f, *_ = random_pair(rng, 3)
        assert verify_lemma_1_2(f)


# --- dual pairs ----------------------------------------------------------------------

def test_dimension_identities_zero_maps():
    SM, SN = chain(1), chain(2)
    f = GradedMorphism.zero(SM.module, SN.module, 1)
    g = GradedMorphism.zero(SN.module, SM.module, 1)
    rep = prop13_dimension_report(f, g, SM.pairing({1: one()}), SN.pairing({2: one()}))
    assert rep["verdict"] and rep["rows"] == {}


def test_dimension_identities_example_table():
    SM, SN, f = example_f()
    PhiM, PhiN = SM.pairing({1: one()}), SN.pairing({2: one()})
    g = adjoint(f, PhiM, PhiN)
    rep = prop13_dimension_report(f, g, PhiM, PhiN)
    assert rep["verdict"]
    # dim (Im0 g)^{-1} = dim (Im1 f)^0 = 1
    assert rep["rows"][-1]["c"] == 1 and rep["rows"][-1]["d"] == 1
    assert lemma14_check(f, g, PhiM, PhiN) == (True, True)


def test_dimension_identities_and_injectivity_sweep():
    rng = random.Random(2)
    hyp_true = 0
    for _ in range(200):
        f, g, PhiM, PhiN = random_pair(rng, 3)
        assert prop13_dimension_report(f, g, PhiM, PhiN)["verdict"]
        hyp, concl = lemma14_check(f, g, PhiM, PhiN)
        if hyp:
            hyp_true += 1
            assert concl
    assert hyp_true > 50


def test_injectivity_isotropic_control():
    f, g, PhiM, PhiN = isotropic_negative_control(random.Random(0))
    hyp, _ = lemma14_check(f, g, PhiM, PhiN)
    assert hyp is False


def test_fgf_decomposition_zero_maps():
    SM, SN = chain(1), chain(2)
    f = GradedMorphism.zero(SM.module, SN.module, 1)
    g = GradedMorphism.zero(SN.module, SM.module, 1)
    rep = prop15_decompose(f, g, SM.pairing({1: one()}), SN.pairing({2: one()}))
    assert rep["verdict"]
    assert not any(rep[k] for k in ("im0_f", "im1_f", "im0_g", "im1_g"))


def test_fgf_decomposition_names_failed_hypothesis():
    SM, SN, f = example_f()
    PhiM, PhiN = SM.pairing({1: one()}), SN.pairing({2: one()})
    g = adjoint(f, PhiM, PhiN)
    assert not f.then(g).then(f).is_zero()
    with pytest.raises(HypothesisFailed) as err:
        prop15_decompose(f, g, PhiM, PhiN)
    assert err.value.which == "fgf=0"


def test_fgf_decomposition_sweep():
    rng = random.Random(3)
    done = 0
    while done < 100:
        a = rng.randint(1, 3)
        extra_M = {rng.randint(0, 3): rng.randint(0, 1)}
        extra_N = {rng.randint(0, 2): rng.randint(0, 1)}
        extra_M = {k: m for k, m in extra_M.items() if (k - a) % 2 == 0}
        extra_N = {k: m for k, m in extra_N.items() if (k - a + 1) % 2 == 0}
        f, g, PhiM, PhiN = dual_block_pair(rng, a, extra_M, extra_N, mirrored=rng.random() < 0.5)
        rep = prop15_decompose(f, g, PhiM, PhiN)
        assert rep["verdict"], rep["checks"]
        done += 1


def test_kernel_image_zero_maps():
    SM, SN = chain(1), chain(2)
    f = GradedMorphism.zero(SM.module, SN.module, 1)
    g = GradedMorphism.zero(SN.module, SM.module, 1)
    assert prop16_check(f, g, SM.pairing({1: one()}), SN.pairing({2: one()}))


def test_kernel_image_sweep():
    rng = random.Random(4)
    ran = 0
    for _ in range(300):
        if ran >= 100:
            break
        a = rng.randint(1, 3)
        f, g, PhiM, PhiN = dual_block_pair(rng, a, mirrored=rng.random() < 0.5)
        try:
            verdict = prop16_check(f, g, PhiM, PhiN)
        except HypothesisFailed:
            continue
        assert verdict
        ran += 1
    assert ran >= 100


# --- structural invariants ---------------------------------------------------------

def test_degree_one_maps_respect_primitive_shape():
    rng = random.Random(5)
    for _ in range(60):
        f, *_ = random_pair(rng, 3)
        M, N = f.source, f.target
        for deg in M.degrees:
            if deg > 0:
                continue
            img = f.image_of(deg, primitive_part(M, deg))
            allowed = primitive_part(N, deg + 1)
            if N.dim(deg - 1):
                allowed = allowed + primitive_part(N, deg - 1).image(N.L(deg - 1))
            assert img <= allowed


def test_degree_zero_maps_preserve_primitives():
    rng = random.Random(6)
    for _ in range(60):
        S = SL2Model.random(rng, 3, 2, rng.randint(0, 1))
        T = SL2Model(S.mult, rng)
        f = S.random_morphism(rng, T, 0)
        for deg in S.module.degrees:
            if deg <= 0:
                assert f.image_of(deg, primitive_part(S.module, deg)) <= primitive_part(T.module, deg)


def _l_linear_solutions(M: GradedLModule, N: GradedLModule, degree: int) -> int:
    """Dimension of the space of L-linear maps of the given degree, by brute-force linear algebra."""
    unknowns = []
    for j in M.degrees:
        for r in range(N.dim(j + degree)):
            for c in range(M.dim(j)):
                unknowns.append((j, r, c))
    if not unknowns:
        return 0
    columns = []
    for (j, r, c) in unknowns:
        comps = {}
        E = [[0] * M.dim(j) for _ in range(N.dim(j + degree))]
        E[r][c] = 1
        comps[j] = Matrix(E, rows=N.dim(j + degree), cols=M.dim(j))
        f = GradedMorphism.unchecked(M, N, degree, comps)
        vec = []
        for jj in M.degrees:
            defect = f.at(jj + 2) @ M.L(jj) - N.L(jj + degree) @ f.at(jj)
            vec.extend(x for row in defect.tolist() for x in row)
        columns.append(vec)
    A = Matrix.from_columns(columns, rows=len(columns[0]))
    return kernel_basis(A).dim


def test_no_negative_degree_morphisms():
    rng = random.Random(7)
    for _ in range(30):
        S = SL2Model.random(rng, 3, 2)
        T = SL2Model.random(rng, 3, 2)
        for degree in (-1, -2, -3):
            assert _l_linear_solutions(S.module, T.module, degree) == 0


def test_nonnegative_degree_morphisms_exist():
    assert _l_linear_solutions(chain(1).module, chain(2).module, 1) == 1


# --- star, Lambda, modified pairing, trace ------------------------------------------

def test_star_signs_curve_examples():
    M = chain(1).module
    s = star(M, 1)
    assert s.at(-1) == one() and s.at(1) == one()
    pt = GradedLModule({0: 1})
    assert star(pt, 1).at(0) == one(-1)


def test_star_is_involution():
    rng = random.Random(8)
    for _ in range(100):
        S = SL2Model.random(rng, 3, 2)
        assert star(S.module, rng.randint(0, 4)).squared_is_identity()


def test_lambda_on_p2_shape():
    M = chain(2).module
    lam = lambda_op(M)
    assert lam.at(-2).is_zero()
    assert lam.at(0) == one() and lam.at(2) == one()
    assert lambda_op(GradedLModule({0: 1})).is_zero()


def test_lambda_commutator_is_blockwise_scalar():
    rng = random.Random(9)
    for _ in range(40):
        S = SL2Model.random(rng, 3, 2)
        M = S.module
        lam = lambda_op(M)
        for deg in M.degrees:
            comm = lam.at(deg + 2) @ M.L(deg) - M.L(deg - 2) @ lam.at(deg)
            std = S.from_module(deg, comm @ S.T[deg])
            expect = Matrix.diagonal([int(a < k) - int(a > 0) for (k, a, s) in S.index[deg]])
            assert std == expect


def test_lambda_and_L_compose_to_block_projectors():
    rng = random.Random(10)
    for _ in range(40):
        S = SL2Model.random(rng, 3, 2)
        M = S.module
        lam = lambda_op(M)
        for deg in M.degrees:
            lamL = S.from_module(deg, lam.at(deg + 2) @ M.L(deg) @ S.T[deg])
            Llam = S.from_module(deg, M.L(deg - 2) @ lam.at(deg) @ S.T[deg])
            assert lamL == Matrix.diagonal([int(a < k) for (k, a, s) in S.index[deg]])
            assert Llam == Matrix.diagonal([int(a > 0) for (k, a, s) in S.index[deg]])


def test_modified_pairing_on_string():
    S = chain(1)
    forms = modified_pairing(S.module, S.pairing({1: one()}), 1)
    assert forms[-1].gram == one() and forms[1].gram == one()
    empty = GradedLModule({})
    assert modified_pairing(empty, GradedPairing(empty, {}), 0) == {}


def test_modified_pairing_primitive_factor_and_nondegenerate():
    rng = random.Random(12)
    for _ in range(100):
        S = SL2Model.random(rng, 3, 2)
        M = S.module
        Phi = S.random_pairing(rng)
        n = rng.randint(0, 4)
        forms = modified_pairing(M, Phi, n)
        for deg, form in forms.items():
            assert form.gram.rank() == M.dim(deg)
            if deg > 0:
                continue
            k = -deg
            i = n - k
            sign = -1 if (i * (i + 1) // 2) % 2 else 1
            P = primitive_part(M, deg).basis
            lhs = form.gram @ P
            rhs = (Phi.gram(deg) @ M.L_power(deg, k) @ P).scale(sign)
            assert lhs == rhs


def test_trace_form_identity_and_zero():
    S = chain(1)
    M, Phi = S.module, S.pairing({1: one()})
    ident = GradedMorphism(M, M, 0, {d: Matrix.identity(M.dim(d)) for d in M.degrees})
    _, tr = trace_form(ident, M, Phi, 1)
    assert tr == 2
    _, tr0 = trace_form(GradedMorphism.zero(M, M, 0), M, Phi, 1)
    assert tr0 == 0


def test_trace_form_positive_on_block_projectors():
    rng = random.Random(13)
    for _ in range(30):
        S = SL2Model.random(rng, 3, 2)
        if not S.mult:
            continue
        Q = {k: Matrix.diagonal([rng.randint(1, 4) for _ in range(m)]) for k, m in S.mult.items()}
        Phi = S.pairing(Q)
        keep = {(k, s) for k, m in S.mult.items() for s in range(m) if rng.random() < 0.6}
        if not keep:
            continue
        comps = {}
        for d, lst in S.index.items():
            D = Matrix.diagonal([1 if (k, s) in keep else 0 for (k, a, s) in lst])
            comps[d] = S.T[d] @ D @ S.from_module(d, Matrix.identity(len(lst)))
        Gamma = GradedMorphism(S.module, S.module, 0, comps)
        _, tr = trace_form(Gamma, S.module, Phi, 3)
        assert tr > 0
        assert isinstance(tr, Fraction)
