import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import symoracle as so
from hodgewp.family import (ModelError, build_cy3_model, build_weight2_model, canonical_family, classic_family,
                            quantum_correction, validate_model, yukawa)
from hodgewp.field import QQi
from hodgewp.generate import random_cy3_model, rng_from_seed


def tensor(N, entries):
    C = np.empty((N, N, N), dtype=object)
    C[...] = QQi(0)
    for idx, v in entries.items():
        for p in set(itertools.permutations(idx)):
            C[p] = QQi(v)
    return C


small = st.fractions(-3, 3, max_denominator=4)


@st.composite
def sym_tensors(draw, max_n=3):
    N = draw(st.integers(1, max_n))
    entries = {idx: draw(small) for idx in itertools.combinations_with_replacement(range(N), 3)}
    return tensor(N, entries)


def vec(d, pairs):
    v = np.empty(d, dtype=object)
    v[:] = QQi(0)
    for k, x in pairs.items():
        v[k] = QQi(x) if not isinstance(x, QQi) else x
    return v


def sym_family(C, extras, t):
    """Canonical family written out symbolically: closed classic form, extras, and A(t) acting on order-2 extras."""
    N = len(t)
    f = so.cy3_classic_closed_form(C, t)
    for I, v in extras.items():
        mono = sp.Mul(*[t[i] ** e for i, e in enumerate(I)])
        for a in range(len(f)):
            f[a] += so.num(v[a]) * mono
        if sum(I) == 2:
            for i in range(N):
                for j in range(N):
                    for k in range(N):
                        f[1 + N + k] += t[i] * mono * so.num(C[i, j, k]) * so.num(v[1 + N + j])
    return [sp.expand(x) for x in f]


def series_matches(series, exprs, t, tb):
    got = so.series_to_expr(series, t, tb)
    return all(sp.expand(a - b) == 0 for a, b in zip(got, exprs))


def test_build_examples():
    m = build_cy3_model(tensor(1, {}))
    t, tb = so.symbols(1)
    assert series_matches(classic_family(m).coeffs, [1, t[0], 0, 0], t, tb)

    m = build_cy3_model(tensor(2, {(0, 0, 1): 1}))
    A1, A2 = m.A_tensors
    assert [[int(x.re) for x in r] for r in A1] == [[0, 1], [1, 0]]
    assert [[int(x.re) for x in r] for r in A2] == [[1, 0], [0, 0]]


def test_n1_coefficients():
    a = Fraction(7, 3)
    f = classic_family(build_cy3_model(tensor(1, {(0, 0, 0): a}))).coeffs
    assert f.coefficient((2,))[2] == QQi(a / 2)
    assert f.coefficient((3,))[3] == QQi(a / 6)
    assert (f.coefficient((0,)) == np.array([QQi(1), 0, 0, 0], dtype=object)).all()


def test_asymmetric_tensor_names_the_triple():
    C = tensor(2, {})
    C[0, 0, 1] = QQi(1)
    with pytest.raises(ModelError, match=r"\(0, 0, 1\)|\(0, 1, 0\)|\(1, 0, 0\)"):
        build_cy3_model(C)


@settings(max_examples=15, deadline=None)
@given(sym_tensors())
def test_classic_family_matches_closed_form(C):
    N = C.shape[0]
    t, tb = so.symbols(N)
    f = classic_family(build_cy3_model(C)).coeffs
    assert series_matches(f, so.cy3_classic_closed_form(C, t), t, tb)
    assert all(sum(I) <= 3 for (I, _J), _ in f.items())


def test_weight2_family_terminates_at_degree_two():
    f = classic_family(build_weight2_model(3)).coeffs
    assert max(sum(I) for (I, _), _ in f.items()) == 2


def test_no_extras_canonical_is_classic():
    m = build_cy3_model(tensor(2, {(0, 1, 1): 2}))
    assert canonical_family(m).coeffs == classic_family(m).coeffs
    qc = quantum_correction(m)
    assert qc.strong_is_zero and qc.weak_is_zero
    assert yukawa(m).correction.is_zero()


def test_single_extra_superposition():
    c = Fraction(2, 5)
    m = build_cy3_model(tensor(1, {}), extra_coeffs={(2,): vec(4, {2: c})})
    diff = canonical_family(m).coeffs - classic_family(m).coeffs
    items = list(diff.items())
    assert len(items) == 1
    (I, J), v = items[0]
    assert I == (2,) and list(v) == [0, 0, QQi(c), 0]


@pytest.mark.parametrize("bad", [{0: 1}, {1: 1}])
def test_extras_in_first_two_blocks_rejected(bad):
    with pytest.raises(ModelError):
        build_cy3_model(tensor(1, {(0, 0, 0): 1}), extra_coeffs={(2,): vec(4, bad)})


def test_extras_violating_transversality_rejected():
    with pytest.raises(ModelError):
        build_cy3_model(tensor(1, {}), extra_coeffs={(2,): vec(4, {3: 1})})


def test_order_one_extra_rejected():
    with pytest.raises(ModelError):
        build_cy3_model(tensor(1, {}), extra_coeffs={(1,): vec(4, {2: 1})})


def test_validate_rejects_broken_normalization():
    m = build_cy3_model(tensor(1, {}))
    E = [e.copy() for e in m.E]
    E[0][0, 1] = QQi(2)
    from hodgewp.family import VHSModel
    with pytest.raises(ModelError):
        validate_model(VHSModel(m.hodge, m.polarization, tuple(E), {}, m.order, m.kind, m.A_tensors))


def test_weak_correction_n1():
    a, c = Fraction(3), Fraction(1, 2)
    m = build_cy3_model(tensor(1, {(0, 0, 0): a}), extra_coeffs={(2,): vec(4, {2: c})})
    qc = quantum_correction(m)
    assert not qc.strong_is_zero and not qc.weak_is_zero
    assert qc.weak[0, 0, 0, 2] == QQi(a * c)
    assert min(sum(I) for (I, _), _ in qc.strong.items()) == 2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2))
def test_canonical_and_yukawa_against_symbolic(seed, N):
    m = random_cy3_model(rng_from_seed(seed), N, extras=True)
    t, tb = so.symbols(N)
    f_sym = sym_family(m.yukawa_tensor, m.extra_coeffs, t)
    assert series_matches(canonical_family(m).coeffs, f_sym, t, tb)

    # Yukawa oracle: bilinear Qtilde pairing by symbolic differentiation
    G = m.polarization.gram_Qtilde
    y = yukawa(m)
    d = m.dim
    for i, j, k in itertools.combinations_with_replacement(range(N), 3):
        d3 = [sp.diff(x, t[i], t[j], t[k]) for x in f_sym]
        full = sp.expand(sum(f_sym[a] * so.num(G[a, b]) * d3[b] for a in range(d) for b in range(d) if G[a, b] != 0))
        comp = so.series_to_expr(y.full.component((i, j, k)), t, tb)
        want = so.coefficients(full, t, tb, m.order)
        assert sp.expand(comp - sum(c * sp.Mul(*[v ** e for v, e in zip(t + tb, I + J)])
                                    for (I, J), c in want.items())) == 0
        assert y.classic_constant[i, j, k] == m.yukawa_tensor[i, j, k]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_weak_zero_iff_first_order_yukawa_correction_zero(seed, N):
    rng = rng_from_seed(seed)
    m = random_cy3_model(rng, N, extras=True)
    if rng.random() < 0.4:
        # keep only order-3 extras: strong survives but weak vanishes
        m = m.with_extra({I: v for I, v in m.extra_coeffs.items() if sum(I) == 3})
    qc = quantum_correction(m)
    deg1 = yukawa(m).correction_degree(1)
    assert qc.weak_is_zero == deg1.is_zero()
    assert qc.strong_is_zero == (not m.has_strong_correction)
    if qc.strong_is_zero:
        assert yukawa(m).correction.is_zero()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_degree_one_slot_independent_of_extras(seed):
    m = random_cy3_model(rng_from_seed(seed), 2, extras=True)
    bare = m.with_extra({})
    f, g = canonical_family(m).coeffs, canonical_family(bare).coeffs
    assert f.homogeneous_part(1) == g.homogeneous_part(1)
    assert f.homogeneous_part(0) == g.homogeneous_part(0)


def test_yukawa_requires_weight_three():
    with pytest.raises(ModelError):
        yukawa(build_weight2_model(2))
