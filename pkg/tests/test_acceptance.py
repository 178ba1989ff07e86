"""Acceptance suite: one recorded pass/fail line per criterion, fixed seeds throughout."""

import itertools
import math

import numpy as np
import sympy as sp

import symoracle as so
from hodgewp.family import build_cy3_model, quantum_correction, yukawa
from hodgewp.field import QQi, as_float_array, eye, max_abs
from hodgewp.generate import (random_cy3_model, random_point, random_rational, random_rational_point,
                              random_symmetric_tensor, rng_from_seed)
from hodgewp.hodge import IN_D, HodgeFiltration, check_hodge_riemann
from hodgewp.hyperkahler import build_hk_model, coordinate_coincidence, hk20_family, hk2n0_coefficients
from hodgewp.period import abelian_check, cy3_sigma
from hodgewp.wpgeom import (SYMMETRIC_ON_SAMPLES, curvature_at_base, curvature_via_projection, geometry_at,
                            symmetry_verdict, wp_potential)


def model_set(count, max_n, seed, extras=False):
    rng = rng_from_seed(seed)
    return [random_cy3_model(rng, 1 + k % max_n, extras=extras) for k in range(count)]


def weak_free(rng, N):
    """Random model whose weak correction vanishes: no extras, or order-3 extras in the conj-Omega slot only.

    An order-3 extra with an eta-bar component is itself a weak correction, so it is cleared here.
    """
    m = random_cy3_model(rng, N, extras=True)
    if rng.random() < 0.5:
        return m.with_extra({})
    extra = {}
    for I, v in m.extra_coeffs.items():
        if sum(I) == 3:
            w = v.copy()
            w[1 + N:1 + 2 * N] = QQi(0)
            w[-1] = w[-1] + QQi(1)
            extra[I] = w
    out = m.with_extra(extra)
    assert quantum_correction(out).weak_is_zero
    return out


def inject_order2(rng, m):
    """Add one degree-2 extra whose A-pairing is nonzero, so the weak correction is nonzero."""
    N = m.N
    while True:
        I = tuple(int(x) for x in np.bincount(rng.integers(0, N, size=2), minlength=N))
        v = np.empty(m.dim, dtype=object)
        v[:] = QQi(0)
        for k in range(1 + N, 1 + 2 * N):
            v[k] = random_rational(rng, 2, 3, complex_part=True)
        extra = dict(m.extra_coeffs)
        extra[I] = v
        out = m.with_extra(extra)
        if not quantum_correction(out).weak_is_zero:
            return out


def test_criterion_01_normal_form(acceptance):
    models = model_set(10, 4, 101, extras=True) + [build_hk_model(N).vhs for N in (1, 2, 3)]
    bad = []
    for m in models:
        rep = geometry_at(m, fd_oracle=False)
        N = m.N
        ok = rep.exact and all(rep.metric[i, j] == (1 if i == j else 0) for i in range(N) for j in range(N))
        ok = ok and all(x == 0 for x in rep.christoffel.flat)
        if not ok:
            bad.append(N)
    passed = not bad
    acceptance(1, passed, f"g(0)=I, Gamma(0)=0 exactly on {len(models)} models")
    assert passed


def test_criterion_02_curvature_oracle(acceptance):
    worst = 0.0
    for m in model_set(20, 4, 202):
        rep = geometry_at(m, fd_nabla=False)
        worst = max(worst, rep.residuals["curvature"])
    passed = worst < 1e-6
    acceptance(2, passed, f"max |R_analytic - R_fd| = {worst:.2e} (tol 1e-6) over 20 CY3 models N<=4")
    assert passed


def test_criterion_03_projection_formula(acceptance):
    worst = 0.0
    exact = True
    for m in model_set(20, 4, 202):
        proj = curvature_via_projection(m)
        base = geometry_at(m, fd_oracle=False)
        diff = max_abs(proj.curvature - base.curvature)
        exact = exact and diff == 0 and base.exact
        worst = max(worst, float(diff))
    passed = exact and worst < 1e-10
    acceptance(3, passed, f"projection vs series curvature max diff {worst:.1e} (exact rational mode)")
    assert passed


def test_criterion_04_symmetric_iff_weak_vanishes(acceptance):
    rng = rng_from_seed(404)
    zero_ok, detected, fd_ok = True, 0, True
    for k in range(10):
        m = weak_free(rng, 1 + k % 3)
        base = curvature_at_base(m, fd_oracle=False)
        zero_ok = zero_ok and all(x == 0 for x in base.nabla.flat) and all(x == 0 for x in base.nabla_from_q5.flat)
        inj = inject_order2(rng, m)
        b2 = curvature_at_base(inj, fd_oracle=True)
        size = float(np.max(np.abs(as_float_array(b2.nabla))))
        if size > 1e-6:
            detected += 1
        fd_ok = fd_ok and b2.residuals["nabla"] < 1e-6 * max(1.0, size)
    passed = zero_ok and detected == 10 and fd_ok
    acceptance(4, passed, f"weak=0 => nablaR(0)=0 exactly: {zero_ok}; injections detected {detected}/10; "
                          f"finite-difference agreement: {fd_ok}")
    assert passed


def test_criterion_05_yukawa_correction(acceptance):
    rng = rng_from_seed(505)
    results = []
    for k in range(10):
        N = 1 + k % 3
        kind = k % 3
        m = weak_free(rng, N) if kind < 2 else inject_order2(rng, random_cy3_model(rng, N))
        if kind == 0:
            m = m.with_extra({})
        qc = quantum_correction(m)
        y = yukawa(m)
        results.append((y.correction.is_zero() == qc.strong_is_zero,
                        y.correction_degree(1).is_zero() == qc.weak_is_zero,
                        qc.strong_is_zero, qc.weak_is_zero))
    both = all(a and b for a, b, _, _ in results)
    covered = {(s, w) for _, _, s, w in results}
    passed = both and covered == {(True, True), (False, True), (False, False)}
    acceptance(5, passed, f"correction=0 iff strong=0 and degree-1=0 iff weak=0 on 10 models; "
                          f"cases (strong0, weak0) seen: {sorted(covered)}")
    assert passed


def test_criterion_06_sigma(acceptance):
    rng = rng_from_seed(606)
    ok = True
    for k in range(20):
        N = 1 + k % 5
        m = build_cy3_model(random_symmetric_tensor(rng, N))
        t = [random_rational(rng, 2, 5, complex_part=True) for _ in range(N)]
        rep = cy3_sigma(m, t)
        ok = ok and rep.in_G and rep.in_G_residual == 0 and rep.equals_exp and rep.exp_residual == 0
        ok = ok and abelian_check(rep.E) == (True, 0)
    acceptance(6, ok, "sigma^T M sigma = M, sigma = exp(sum t E), [E_i, E_j] = 0 exactly for 20 tensors N<=5")
    assert ok


def test_criterion_07_hk_symmetric(acceptance):
    rng = rng_from_seed(707)
    verdicts, fd_worst, closed_worst = [], 0.0, 0.0
    for N in (1, 2, 3):
        m = build_hk_model(N)
        pts = [random_point(rng, N, 0.8) for _ in range(5)]
        v = symmetry_verdict(m.vhs, pts)
        verdicts.append(v.verdict)
        for key in v.sample_max:
            fd_worst = max(fd_worst, v.sample_max[key] + v.fd_residuals[key])
        if N == 1:
            pot = wp_potential(m.vhs)
            for p in pts:
                g = complex(geometry_at(pot, p, fd_oracle=False).metric[0, 0])
                closed_worst = max(closed_worst, abs(g - (1 - abs(p[0]) ** 2 / 2) ** -2))
    passed = all(v == SYMMETRIC_ON_SAMPLES for v in verdicts) and fd_worst < 1e-6 and closed_worst < 1e-12
    acceptance(7, passed, f"HK N=1,2,3 verdicts {verdicts}; finite-difference |nablaR| <= {fd_worst:.1e}; "
                          f"N=1 closed-form metric error {closed_worst:.1e}")
    assert passed


def test_criterion_08_hk_potential(acceptance):
    ok = True
    for N in (1, 2, 3):
        t, tb = so.symbols(N)
        f = [sp.Integer(1)] + list(t) + [sum(x ** 2 for x in t) / 2]
        fc = [so.conj_expr(x, t, tb) for x in f]
        bilinear = sp.expand(f[0] * fc[0] - sum(a * b for a, b in zip(f[1:-1], fc[1:-1])) + f[-1] * fc[-1])
        closed = sp.expand(1 - sum(a * b for a, b in zip(t, tb))
                           + sum(x ** 2 for x in t) * sum(x ** 2 for x in tb) / 4)
        ok = ok and sp.expand(bilinear - closed) == 0
        ok = ok and so.same_coefficients(wp_potential(build_hk_model(N).vhs).q, bilinear, t, tb)
    acceptance(8, ok, "HK potential equals the bilinear expansion coefficient-by-coefficient for N=1,2,3")
    assert ok


def test_criterion_09_wedge_combinatorics(acceptance):
    ok = True
    for N, n in itertools.product((1, 2, 3), (2, 3)):
        m = build_hk_model(N, n)
        tab = hk2n0_coefficients(m)
        for (k, key), c in tab.coefficients.items():
            mult = [key.count(i) for i in range(N)]
            ok = ok and sum(mult) == k and c == sp.Rational(1, math.prod(math.factorial(x) for x in mult))
        # every sorted tuple of length <= 2n is present, nothing beyond
        want = {(k, c) for k in range(2 * n + 1) for c in itertools.combinations_with_replacement(range(N), k)}
        ok = ok and set(tab.coefficients) == want and tab.max_degree == 2 * n
        ok = ok and hk20_family(m).coeffs.degree() == 2
    acceptance(9, ok, "wedge-power table equals 1/m! multinomials for N<=3, n<=3; degrees stop at 2 and 2n")
    assert ok


def test_criterion_10_coincidence(acceptance):
    rng = rng_from_seed(1010)
    residuals = []
    for k in range(20):
        N = 1 + k % 3
        residuals.append(coordinate_coincidence(build_hk_model(N), random_rational_point(rng, N)))
    passed = all(r == 0 for r in residuals)
    acceptance(10, passed, f"tau = t residual exactly 0 on {len(residuals)} rational points N<=3")
    assert passed


def test_criterion_11_hodge_riemann_gate(acceptance):
    refs_ok = True
    for N in (1, 2, 3):
        for m in (build_cy3_model(random_symmetric_tensor(rng_from_seed(N), N)), build_hk_model(N).vhs):
            v = check_hodge_riemann(HodgeFiltration.reference(m.hodge), m.polarization)
            refs_ok = refs_ok and v.verdict == IN_D and v.first_relation_residual == 0
    rng = rng_from_seed(1111)
    rejected = 0
    trials = 0
    while trials < 10:
        N = 1 + trials % 3
        m = build_cy3_model(random_symmetric_tensor(rng, N))
        B = eye(m.dim, True)
        for a in range(1, m.dim):
            B[a, 0] = random_rational(rng, 1, 4, complex_part=True)
        G = m.polarization.gram_Q
        # independent check that Q(F^3, F^1) = 0 fails for the perturbed line
        if all((B[:, 0] @ G @ B[:, b]) == 0 for b in range(m.dim - 1)):
            continue
        trials += 1
        if check_hodge_riemann(HodgeFiltration(B, m.hodge), m.polarization).verdict != IN_D:
            rejected += 1
    passed = refs_ok and rejected == 10
    acceptance(11, passed, f"reference filtrations in_D: {refs_ok}; Q-violating perturbations rejected {rejected}/10")
    assert passed
