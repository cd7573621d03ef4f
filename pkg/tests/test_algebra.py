import pytest
from hypothesis import given, strategies as st

from gkdeform.algebra import (CliffordFiber, Degenerate, DegreeError, DimensionMismatch, FormFiber, GCFiberStructure,
                              Multivector, NotPure, TangentCotangentFiber, ad_matrix, adjoint_action, clifford_mul,
                              endo_to_ttstar, exp_two_form, ext, form_exp, gc_matrix_of_complex, holomorphic_volume,
                              iota, lbar_vectors, pairing, project_CL2, spin_action, standard_J, standard_omega,
                              wedge, wedge_operator)
from gkdeform.scalar import I, ONE, ZERO, Q, S, identity, matmul

from conftest import forms, scalars, tt_vectors, two_forms

dx = FormFiber.dx


def vec(n, j):
    return TangentCotangentFiber.basis(n, j - 1)


def cov(n, j):
    return TangentCotangentFiber.basis(n, 2 * n + j - 1)


def test_wedge_examples():
    phi = dx(2, 1) + dx(2, 3).scale(Q(2))
    assert wedge(FormFiber.one(2), phi) == phi
    assert not wedge(dx(2, 1), dx(2, 1))
    assert wedge(dx(2, 1) + dx(2, 2), dx(2, 3)) == dx(2, 1).wedge(dx(2, 3)) + dx(2, 2).wedge(dx(2, 3))


def test_wedge_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        wedge(dx(1, 1), dx(2, 1))


@given(forms(2), forms(2), forms(2))
def test_wedge_associative(a, b, c):
    assert a.wedge(b).wedge(c) == a.wedge(b.wedge(c))


@given(st.integers(0, 4), st.integers(0, 4), forms(2), forms(2))
def test_wedge_graded_commutative(p, q, a, b):
    a, b = a.part(p), b.part(q)
    sign = -1 if (p * q) % 2 else 1
    assert a.wedge(b) == b.wedge(a).scale(Q(sign))


def test_spin_examples():
    n = 2
    u = vec(n, 1) + cov(n, 1)
    phi = dx(n, 2) + dx(n, 1).wedge(dx(n, 3)) + FormFiber.one(n)
    assert pairing(u, u) == ONE
    assert spin_action(u, spin_action(u, phi)) == phi
    assert spin_action(vec(n, 1), dx(n, 1).wedge(dx(n, 2))) == dx(n, 2)
    assert spin_action(cov(n, 1), dx(n, 2)) == dx(n, 1).wedge(dx(n, 2))


@given(tt_vectors(2), forms(2))
def test_spin_square_is_pairing(u, phi):
    assert spin_action(u, spin_action(u, phi)) == phi.scale(pairing(u, u))


@given(tt_vectors(1), tt_vectors(1))
def test_clifford_relation(u, v):
    cu, cv = u.to_clifford(), v.to_clifford()
    assert clifford_mul(cu, cv) + clifford_mul(cv, cu) == CliffordFiber.identity(1).scale(2 * pairing(u, v))


@given(tt_vectors(2), forms(2))
def test_clifford_element_acts_as_spin_action(u, phi):
    assert u.to_clifford().apply(phi) == spin_action(u, phi)


def test_clifford_examples():
    n = 2
    u = (vec(n, 1) + cov(n, 1)).to_clifford()
    assert u * u == CliffordFiber.identity(n)
    a, b = vec(n, 1).to_clifford(), cov(n, 2).to_clifford()
    assert not (a * b + b * a)


@given(two_forms(2), st.integers(1, 4))
def test_two_form_commutator_is_minus_contraction(omega, j):
    n = 2
    X = vec(n, j)
    W = wedge_operator(omega)
    contraction = spin_action(X, omega)
    assert W.commutator(X.to_clifford()) == wedge_operator(contraction).scale(Q(-1))


def test_exp_two_form_examples():
    assert exp_two_form(FormFiber.zero(2)) == CliffordFiber.identity(2)
    w1 = dx(1, 1).wedge(dx(1, 2))
    assert exp_two_form(w1).apply(FormFiber.one(1)) == FormFiber.one(1) + w1
    w = standard_omega(2)
    top = dx(2, 1).wedge(dx(2, 2)).wedge(dx(2, 3)).wedge(dx(2, 4))
    # independent expansion: omega^2 / 2 = dx1^dx2^dx3^dx4 for omega = dx12 + dx34
    assert exp_two_form(w).apply(FormFiber.one(2)) == FormFiber.one(2) + w + top
    with pytest.raises(DegreeError):
        exp_two_form(dx(2, 1))


def test_adjoint_action_examples():
    n = 2
    X = vec(n, 1).to_clifford()
    assert adjoint_action(CliffordFiber.identity(n), X) == X
    w = standard_omega(n)
    g = exp_two_form(w)
    W = wedge_operator(w)
    assert adjoint_action(g, X) == X + W.commutator(X)
    xi = cov(n, 3).to_clifford()
    assert adjoint_action(g, xi) == xi


@given(two_forms(2), tt_vectors(2), tt_vectors(2))
def test_ad_preserves_pairing(omega, u, v):
    g = exp_two_form(omega)
    gi = exp_two_form(omega.scale(Q(-1)))
    au = adjoint_action(g, u.to_clifford(), gi)
    av = adjoint_action(g, v.to_clifford(), gi)
    assert au.is_degree1() and av.is_degree1()
    assert pairing(au.degree1_part(), av.degree1_part()) == pairing(u, v)


def test_project_cl2_examples():
    n = 1
    c = CliffordFiber.scalar(n, S(2, 1))
    assert project_CL2(c) == c
    m1 = Q(-1)
    prod = (vec(n, 1) + cov(n, 1)).to_clifford() * (vec(n, 1) + cov(n, 1).scale(m1)).to_clifford() * \
        (vec(n, 2) + cov(n, 2)).to_clifford() * (vec(n, 2) + cov(n, 2).scale(m1)).to_clifford()
    assert not project_CL2(prod)
    beta = Multivector(2, {0b11: ONE}).to_clifford()
    bb = beta + beta.conj()
    assert project_CL2(bb) == bb


@given(st.lists(scalars, min_size=4, max_size=4))
def test_project_cl2_idempotent(xs):
    n = 1
    c = CliffordFiber.scalar(n, xs[0]) + iota(n, 0).scale(xs[1]) + (iota(n, 1) * ext(n, 0)).scale(xs[2]) + \
        (iota(n, 0) * iota(n, 1) * ext(n, 0) * ext(n, 1)).scale(xs[3])
    p = project_CL2(c)
    assert project_CL2(p) == p


def test_endo_to_ttstar_zero_and_identity():
    assert not endo_to_ttstar([[ZERO] * 4 for _ in range(4)])
    g = endo_to_ttstar(identity(4))
    M = ad_matrix(g)
    assert [row[:4] for row in M[:4]] == identity(4)
    # T* is preserved: no T-components in the image of covectors
    assert all(not M[i][j] for i in range(4) for j in range(4, 8))


@given(st.lists(scalars, min_size=4, max_size=4))
def test_endo_to_ttstar_round_trip(xs):
    A = [[xs[0], xs[1]], [xs[2], xs[3]]]
    M = ad_matrix(endo_to_ttstar(A))
    assert [row[:2] for row in M[:2]] == A
    assert all(not M[i][j] for i in range(2) for j in range(2, 4))


def _check_gc(gc: GCFiberStructure):
    d = 4 * gc.n
    Id = identity(d)
    PL, PLb = gc.L_projector, gc.Lbar_projector
    assert [[a + b for a, b in zip(r, s)] for r, s in zip(PL, PLb)] == Id
    assert matmul(PL, PL) == PL
    J = gc.J_matrix
    assert matmul(J, J) == [[-x for x in r] for r in Id]
    assert gc.is_orthogonal()


def test_gc_structures():
    for n in (1, 2):
        _check_gc(GCFiberStructure.from_complex(n))
        _check_gc(GCFiberStructure.from_spinor(form_exp(standard_omega(n).scale(I))))


def test_complex_type_matches_matrix_formula():
    gc = GCFiberStructure.from_complex(2)
    assert gc.J_matrix == gc_matrix_of_complex(standard_J(2))


def test_l_frame_annihilates_holomorphic_volume():
    for n in (1, 2):
        omega = holomorphic_volume(n)
        for v in lbar_vectors(n):
            assert not spin_action(v.conj(), omega)
            assert spin_action(v, omega)


def test_degenerate_and_impure_spinors():
    with pytest.raises(NotPure):
        GCFiberStructure.from_spinor(FormFiber.one(2) + dx(2, 1))
    # a real form: L meets its conjugate
    with pytest.raises(Degenerate):
        GCFiberStructure.from_spinor(FormFiber.one(1))
