import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import symoracle as so
from hodgewp.family import build_cy3_model, build_weight2_model, classic_family
from hodgewp.field import QQi, eye, max_abs, zeros
from hodgewp.generate import random_cy3_model, random_rational, random_symmetric_tensor, rng_from_seed
from hodgewp.hodge import IN_D, OUTSIDE, HodgeFiltration
from hodgewp.period import (PeriodError, abelian_check, cy3_sigma, endomorphism, exp_nilpotent, grading_decompose,
                            orbit_filtration, q_compat_check)


def q(x):
    return QQi(Fraction(x))


def n1(a):
    return build_cy3_model(np.array([[[q(a)]]], dtype=object))


def test_q_compat_examples():
    m = build_cy3_model(random_symmetric_tensor(rng_from_seed(1), 3))
    for e in m.E:
        ok, r = q_compat_check(e, m.polarization)
        assert ok and r == 0
        assert q_compat_check(endomorphism(e), m.polarization)[0]
    ok, r = q_compat_check(eye(8, True), m.polarization)
    assert not ok and r > 0
    hk = build_weight2_model(3)
    assert all(q_compat_check(e, hk.polarization)[0] for e in hk.E)
    with pytest.raises(PeriodError):
        q_compat_check(eye(3, True), m.polarization)


def test_grading_examples():
    m = build_cy3_model(random_symmetric_tensor(rng_from_seed(2), 2))
    F = HodgeFiltration.reference(m.hodge)
    for e in m.E:
        assert grading_decompose(endomorphism(e), F).degrees == [-1]
    D = zeros((6, 6), True)
    for a in range(6):
        D[a, a] = q(a + 1)
    assert grading_decompose(D, F).degrees == [0]
    hk = build_weight2_model(2)
    Fh = HodgeFiltration.reference(hk.hodge)
    assert grading_decompose(endomorphism(hk.E[0] @ hk.E[0]), Fh).degrees == [-2]


def random_rational_matrix(rng, d):
    M = zeros((d, d), True)
    for a, b in itertools.product(range(d), repeat=2):
        M[a, b] = random_rational(rng, 3, 4, complex_part=True)
    return M


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bracket_respects_grading(seed):
    rng = rng_from_seed(seed)
    m = build_cy3_model(random_symmetric_tensor(rng, 1))
    F = HodgeFiltration.reference(m.hodge)
    X, Y = grading_decompose(random_rational_matrix(rng, 4), F), grading_decompose(random_rational_matrix(rng, 4), F)
    assert max_abs(sum(X.grading.values(), zeros((4, 4), True)) - X.matrix) == 0
    for a, b in itertools.product(range(-3, 4), repeat=2):
        xa, yb = X.component(a), Y.component(b)
        br = xa @ yb - yb @ xa
        degs = grading_decompose(br, F).degrees
        assert degs in ([], [a + b])


def test_exp_examples():
    hk = build_weight2_model(1)
    assert [[int(x.re) for x in row] for row in exp_nilpotent(hk.E[0] * q(2))] == [[1, 2, 2], [0, 1, 2], [0, 0, 1]]
    with pytest.raises(PeriodError):
        exp_nilpotent(eye(3, True))
    with pytest.raises(PeriodError):
        exp_nilpotent(zeros((2, 3), True))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_exp_is_exact_homomorphism_on_commuting_inputs(seed, N):
    rng = rng_from_seed(seed)
    m = build_cy3_model(random_symmetric_tensor(rng, N))
    a = [random_rational(rng, 2, 3, complex_part=True) for _ in range(N)]
    b = [random_rational(rng, 2, 3, complex_part=True) for _ in range(N)]
    X = sum((e * x for e, x in zip(m.E[1:], a[1:])), m.E[0] * a[0])
    Y = sum((e * x for e, x in zip(m.E[1:], b[1:])), m.E[0] * b[0])
    assert max_abs(exp_nilpotent(X) @ exp_nilpotent(Y) - exp_nilpotent(X + Y)) == 0
    assert max_abs(exp_nilpotent(X) @ exp_nilpotent(-X) - eye(len(X), True)) == 0


def test_sigma_n1_display():
    a, t = Fraction(3, 2), Fraction(1, 3)
    rep = cy3_sigma(n1(a), [q(t)])
    want = [[1, t, a * t * t / 2, a * t ** 3 / 6], [0, 1, a * t, a * t * t / 2], [0, 0, 1, t], [0, 0, 0, 1]]
    assert [[x.fractions()[0] for x in row] for row in rep.sigma] == want
    assert rep.all_hold and rep.in_G_residual == 0 and rep.exp_residual == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_sigma_against_symbolic_exponential(seed, N):
    rng = rng_from_seed(seed)
    m = build_cy3_model(random_symmetric_tensor(rng, N))
    t = [random_rational(rng, 2, 5, complex_part=True) for _ in range(N)]
    rep = cy3_sigma(m, t)
    assert rep.all_hold
    # first row of sigma is the classic family at t
    assert (rep.sigma[0] == classic_family(m).eval(t)).all()
    # oracle: sympy matrix exponential of sum t_i E_i
    d = m.dim
    X = sp.zeros(d, d)
    for e, x in zip(rep.E, t):
        X += sp.Matrix(d, d, [so.num(v) for v in e.flat]) * so.num(x)
    X2 = (X * X).applyfunc(sp.expand)
    X3 = (X2 * X).applyfunc(sp.expand)
    assert (X3 * X).applyfunc(sp.expand).is_zero_matrix
    expo = sp.eye(d) + X + X2 / 2 + X3 / 6
    assert (sp.Matrix(d, d, [so.num(v) for v in rep.sigma.flat]) - expo).applyfunc(sp.expand).is_zero_matrix


def test_sigma_refuses_strong_correction():
    C = np.array([[[q(1)]]], dtype=object)
    v = np.array([q(0), q(0), q(1), q(0)], dtype=object)
    with pytest.raises(PeriodError):
        cy3_sigma(build_cy3_model(C, extra_coeffs={(2,): v}), [q(0)])
    with pytest.raises(PeriodError):
        cy3_sigma(n1(1), [q(0), q(0)])


def test_abelian_examples():
    m = build_cy3_model(random_symmetric_tensor(rng_from_seed(5), 3))
    assert abelian_check(m.E) == (True, 0)
    assert abelian_check(build_weight2_model(3).E)[0]
    # asymmetric A: C_001 = 1 but C_010 = 0
    from hodgewp.family import cy3_E_matrices
    A0 = zeros((2, 2), True)
    A1 = zeros((2, 2), True)
    A0[0, 1] = q(1)
    E = cy3_E_matrices([A0, A1], True)
    ok, worst = abelian_check(E)
    brute = E[0] @ E[1] - E[1] @ E[0]
    assert not ok and worst == max_abs(brute) > 0


def test_orbit_examples():
    hk = build_weight2_model(1)
    F = HodgeFiltration.reference(hk.hodge)
    base = orbit_filtration(hk.E, [q(0)], F, hk.polarization)
    assert base.in_D and (base.filtration.basis_matrix == F.basis_matrix).all()
    assert orbit_filtration(hk.E, [q(Fraction(1, 2))], F, hk.polarization).verdict == IN_D
    assert orbit_filtration(hk.E, [0.5], F, hk.polarization).verdict == IN_D
    assert orbit_filtration(hk.E, [q(2)], F, hk.polarization).verdict == OUTSIDE
    m = build_cy3_model(random_symmetric_tensor(rng_from_seed(0), 2))
    with pytest.raises(PeriodError):
        orbit_filtration(m.E, [q(0)], HodgeFiltration.reference(m.hodge), m.polarization)


def test_orbit_rejects_noncommuting():
    from hodgewp.family import cy3_E_matrices
    A0 = zeros((2, 2), True)
    A0[0, 1] = q(1)
    E = cy3_E_matrices([A0, zeros((2, 2), True)], True)
    m = build_cy3_model(random_symmetric_tensor(rng_from_seed(0), 2))
    with pytest.raises(PeriodError):
        orbit_filtration(E, [q(0), q(0)], HodgeFiltration.reference(m.hodge), m.polarization)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_small_cy3_orbits_in_D(seed):
    rng = rng_from_seed(seed)
    m = random_cy3_model(rng, 2)
    tau = [random_rational(rng, 1, 40, complex_part=True) for _ in range(2)]
    pt = orbit_filtration(m.E, tau, HodgeFiltration.reference(m.hodge), m.polarization)
    assert pt.hr.first_relation_holds and pt.hr.first_relation_residual == 0
