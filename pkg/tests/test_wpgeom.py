import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import symoracle as so
from hodgewp.family import build_cy3_model, canonical_family
from hodgewp.field import QQi, as_float_array
from hodgewp.generate import random_cy3_model, random_point, rng_from_seed
from hodgewp.hyperkahler import build_hk_model
from hodgewp.wpgeom import (NOT_SYMMETRIC, SYMMETRIC_AT_BASE, SYMMETRIC_ON_SAMPLES, GeometryError,
                            curvature_at_base, curvature_via_projection, geometry_at, symmetry_verdict,
                            wp_metric_series, wp_potential)


def cy3_zero(N=1):
    C = np.empty((N, N, N), dtype=object)
    C[...] = QQi(0)
    return build_cy3_model(C)


def n1_model(a, c=None):
    C = np.array([[[QQi(a)]]], dtype=object)
    extra = {}
    if c is not None:
        v = np.array([QQi(0), QQi(0), QQi(c), QQi(0)], dtype=object)
        extra = {(2,): v}
    return build_cy3_model(C, extra_coeffs=extra)


def test_potential_examples():
    q = wp_potential(cy3_zero()).q
    assert dict(q.items()) == {((0,), (0,)): QQi(1), ((1,), (1,)): QQi(-1)}
    q = wp_potential(build_hk_model(1).vhs).q
    assert dict(q.items()) == {((0,), (0,)): QQi(1), ((1,), (1,)): QQi(-1), ((2,), (2,)): QQi(Fraction(1, 4))}


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2), st.booleans())
def test_potential_matches_symbolic_pairing(seed, N, extras):
    m = random_cy3_model(rng_from_seed(seed), N, extras=extras)
    t, tb = so.symbols(N)
    f = so.series_to_expr(canonical_family(m).coeffs, t, tb)
    q = so.potential(f, m.polarization.hermitian, t, tb)
    assert so.same_coefficients(wp_potential(m).q, q, t, tb)
    pot = wp_potential(m)
    assert pot.q.coefficient((0,) * N) == QQi(1)
    for i, j in itertools.product(range(N), repeat=2):
        I = tuple(int(v == i) for v in range(N))
        J = tuple(int(v == j) for v in range(N))
        assert pot.q.coefficient(I, J) == QQi(-1 if i == j else 0)
        assert pot.q.coefficient(I, (0,) * N) == 0


def test_hk_metric_series():
    g = wp_metric_series(wp_potential(build_hk_model(1).vhs))
    coeffs = {k: v[0, 0] for k, v in g.items()}
    assert coeffs[((0,), (0,))] == 1 and coeffs[((1,), (1,))] == 1
    assert coeffs[((2,), (2,))] == QQi(Fraction(3, 4))


def test_metric_series_order_check():
    with pytest.raises(GeometryError):
        wp_metric_series(wp_potential(cy3_zero()), order=1)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_metric_first_order_term_is_curvature(seed, N):
    m = random_cy3_model(rng_from_seed(seed), N, extras=True)
    pot = wp_potential(m)
    g = wp_metric_series(pot)
    q4 = pot.q4()
    for i, j, k, l in itertools.product(range(N), repeat=4):
        I = tuple(int(v == i) for v in range(N))
        J = tuple(int(v == j) for v in range(N))
        want = int(i == j and k == l) + int(i == l and j == k) - q4[i, k, j, l]
        assert g.coefficient(I, J)[k, l] == want
    assert (g.coefficient((0,) * N) == np.eye(N, dtype=int)).all()


def test_base_point_normal_form():
    rep = geometry_at(n1_model(2))
    assert rep.exact
    assert rep.metric[0, 0] == 1 and rep.christoffel[0, 0, 0] == 0
    assert geometry_at(cy3_zero()).curvature[0, 0, 0, 0] == 2


@pytest.mark.parametrize("N", [1, 2])
def test_base_curvature_against_symbolic(N):
    rng = rng_from_seed(11 + N)
    m = random_cy3_model(rng, N, extras=True)
    t, tb = so.symbols(N)
    f = so.series_to_expr(canonical_family(m).coeffs, t, tb)
    q = so.potential(f, m.polarization.hermitian, t, tb)
    g0, R = so.curvature_at_base(q, t, tb)
    assert g0 == sp.eye(N)
    base = curvature_at_base(m, fd_oracle=False)
    for idx in itertools.product(range(N), repeat=4):
        assert so.num(base.curvature[idx]) == R[idx]
        assert base.curvature[idx] == base.from_q4[idx]


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2), st.booleans())
def test_analytic_geometry_matches_finite_differences(seed, N, extras):
    rng = rng_from_seed(seed)
    m = random_cy3_model(rng, N, extras=extras)
    rep = geometry_at(m, random_point(rng, N, 0.2))
    assert rep.residuals["metric"] < 1e-8
    assert rep.residuals["christoffel"] < 1e-6
    scale = lambda a: max(1.0, float(np.max(np.abs(as_float_array(a)))))
    assert rep.residuals["curvature"] < 1e-6 * scale(rep.curvature)
    assert rep.residuals["nabla"] < 1e-6 * max(scale(rep.nabla), scale(rep.nabla_bar))


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_kahler_symmetries_and_hermitian_metric(seed, N):
    rng = rng_from_seed(seed)
    m = random_cy3_model(rng, N, extras=True)
    rep = geometry_at(m, random_point(rng, N, 0.2), fd_oracle=False)
    g = as_float_array(rep.metric)
    R = as_float_array(rep.curvature)
    assert np.allclose(g, g.conj().T, atol=1e-12)
    assert np.allclose(R, np.transpose(R, (2, 1, 0, 3)), atol=1e-10)
    assert np.allclose(R, np.transpose(R, (0, 3, 2, 1)), atol=1e-10)


def test_base_nabla_from_fifth_order_coefficients():
    base = curvature_at_base(n1_model(3, Fraction(1, 2)), fd_oracle=True)
    assert base.residuals["nabla_vs_q5"] == 0
    assert base.residuals["nabla"] < 1e-6
    assert abs(complex(base.nabla[0, 0, 0, 0, 0])) > 1e-3


def test_zero_weak_gives_zero_nabla_at_base():
    base = curvature_at_base(n1_model(3), fd_oracle=False)
    assert all(x == 0 for x in base.nabla.flat)


def test_hk_constant_curvature_disk():
    pot = wp_potential(build_hk_model(1).vhs)
    r0, r1 = geometry_at(pot, [0]), geometry_at(pot, [0.5])
    k0 = complex(r0.curvature[0, 0, 0, 0]) / complex(r0.metric[0, 0]) ** 2
    k1 = complex(r1.curvature[0, 0, 0, 0]) / complex(r1.metric[0, 0]) ** 2
    assert abs(k0 - k1) < 1e-12
    assert abs(complex(r1.metric[0, 0]) - (1 - 0.25 / 2) ** -2) < 1e-12


def test_outside_validity_domain():
    with pytest.raises(GeometryError):
        geometry_at(cy3_zero(), [1.0])
    with pytest.raises(GeometryError):
        geometry_at(cy3_zero(), [0.1, 0.2])


def test_symmetry_verdicts():
    rng = rng_from_seed(3)
    pts = [random_point(rng, 2, 0.4) for _ in range(5)]
    assert symmetry_verdict(build_hk_model(2).vhs, pts).verdict == SYMMETRIC_ON_SAMPLES
    assert symmetry_verdict(n1_model(2)).verdict == SYMMETRIC_AT_BASE
    assert symmetry_verdict(n1_model(2, Fraction(1, 3))).verdict == NOT_SYMMETRIC


@pytest.mark.parametrize("seed", range(4))
def test_projection_route_agrees(seed):
    m = random_cy3_model(rng_from_seed(seed), 1 + seed % 3, extras=True)
    proj = curvature_via_projection(m)
    assert proj.residual == 0
    base = geometry_at(m, fd_oracle=False)
    assert all(a == b for a, b in zip(proj.curvature.flat, base.curvature.flat))
