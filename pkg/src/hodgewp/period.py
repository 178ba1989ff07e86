"""Matrix algebra on the period domain: Q-compatibility, Hodge grading of
endomorphisms, nilpotent exponentials, N+ orbits and the CY3 sigma(t) matrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .family import ModelError, VHSModel, classic_family
from .field import QQi, array_is_exact, as_float_array, coerce_array, conj, eye, max_abs, scalar, zeros
from .hodge import (DEFAULT_TOL, IN_D, OUTSIDE, HodgeData, HodgeFiltration, HRVerdict, PolarizationForm,
                    check_hodge_riemann)
from .linalg import inverse, rank
from .series import TruncatedSeries, unit_index


class PeriodError(ValueError):
    pass


def _exact_pair(*arrays) -> bool:
    return all(array_is_exact(a) for a in arrays)


def _mode(*arrays):
    exact_mode = _exact_pair(*arrays)
    return exact_mode, [coerce_array(np.asarray(a, dtype=object), exact_mode) for a in arrays]


def q_compat_check(X, P: PolarizationForm) -> tuple[bool, float]:
    """True iff X^T M + M X = 0 with M the Gram matrix of Q."""
    exact_mode, (X, M) = _mode(X, P.gram_Q)
    if X.shape != M.shape:
        raise PeriodError(f"matrix shape {X.shape} does not match polarization {M.shape}")
    res = X.T @ M + M @ X
    r = max_abs(res)
    return (r == 0 if exact_mode else r <= DEFAULT_TOL), r


@dataclass
class GradedLieElement:
    matrix: np.ndarray
    grading: dict  # k -> component mapping H^{r, n-r} into H^{r+k, n-r-k}

    @property
    def degrees(self) -> list[int]:
        return sorted(k for k, c in self.grading.items() if max_abs(c) > 0)

    def component(self, k: int) -> np.ndarray:
        return self.grading[k]


def _hodge_of(F: HodgeFiltration) -> HodgeData:
    return F.hodge


def grading_decompose(X, F_ref: HodgeFiltration) -> GradedLieElement:
    """Split X (acting on column coordinates) into Hodge-degree components.

    The reference basis columns of F_ref are assumed adapted to the splitting
    (H^{n,0} block first), as for HodgeFiltration.reference or any in_D point
    whose basis columns span the H^{p,q}.
    """
    H = _hodge_of(F_ref)
    B = F_ref.basis_matrix
    exact_mode, (X, B) = _mode(X, B)
    Y = inverse(B) @ X @ B
    n = H.weight
    out = {}
    for k in range(-n, n + 1):
        comp = zeros(Y.shape, exact_mode)
        for r in range(n + 1):
            s = r + k
            if 0 <= s <= n:
                comp[H.block(s), H.block(r)] = Y[H.block(s), H.block(r)]
        out[k] = B @ comp @ inverse(B)
    return GradedLieElement(X, out)


def endomorphism(E) -> np.ndarray:
    """Column-coordinate endomorphism of a row-convention action matrix."""
    return np.asarray(E).T


def exp_nilpotent(X) -> np.ndarray:
    """Finite exponential sum of a nilpotent matrix."""
    X = np.asarray(X, dtype=object)
    exact_mode = array_is_exact(X)
    X = coerce_array(X, exact_mode)
    d = X.shape[0]
    if X.shape != (d, d):
        raise PeriodError("exp_nilpotent needs a square matrix")
    power = eye(d, exact_mode)
    out = eye(d, exact_mode)
    for k in range(1, d + 1):
        power = power @ X
        if max_abs(power) == 0:
            return out
        f = Fraction(1, math.factorial(k))
        out = out + power * (QQi(f) if exact_mode else float(f))
    if max_abs(power @ X) > (0 if exact_mode else 1e-9 * (1 + max_abs(X)) ** d):
        raise PeriodError("matrix is not nilpotent")
    return out


def abelian_check(E) -> tuple[bool, float]:
    mats = [np.asarray(e, dtype=object) for e in E]
    exact_mode = _exact_pair(*mats)
    mats = [coerce_array(m, exact_mode) for m in mats]
    worst = 0.0
    for a, b in itertools.combinations(mats, 2):
        if a.shape != b.shape:
            raise PeriodError("matrices must share one shape")
        worst = max(worst, max_abs(a @ b - b @ a))
    return (worst == 0 if exact_mode else worst <= DEFAULT_TOL), worst


# -- CY3 sigma(t) --------------------------------------------------------------------

def sigma_series(model: VHSModel) -> TruncatedSeries:
    """The block upper-triangular sigma(t) of a CY3 model as a matrix polynomial in t."""
    if model.weight != 3 or model.A_tensors is None:
        raise PeriodError("sigma(t) is defined for CY3 models")
    N = model.N
    d = 2 * N + 2
    order = max(model.order, 3)
    t = [TruncatedSeries.variable(i, N, order) for i in range(N)]
    zero = TruncatedSeries.zero(N, order)
    one = TruncatedSeries.constant(QQi(1), N, order)
    A = [np.asarray(a) for a in model.A_tensors]
    At = [[sum((t[i].scale(A[i][j, k]) for i in range(N)), zero) for k in range(N)] for j in range(N)]
    tA = [sum((t[j] * At[j][k] for j in range(N)), zero) for k in range(N)]  # row vector t A(t)
    tAt = sum((tA[k] * t[k] for k in range(N)), zero)
    At_t = [sum((At[j][k] * t[k] for k in range(N)), zero) for j in range(N)]  # A(t) t^T
    half = QQi(Fraction(1, 2))
    S = [[zero] * d for _ in range(d)]
    for a in range(d):
        S[a][a] = one
    for k in range(N):
        S[0][1 + k] = t[k]
        S[0][1 + N + k] = tA[k].scale(half)
        S[1 + k][d - 1] = At_t[k].scale(half)
        S[1 + N + k][d - 1] = t[k]
        for j in range(N):
            S[1 + j][1 + N + k] = At[j][k]
    S[0][d - 1] = tAt.scale(QQi(Fraction(1, 6)))
    keys = set().union(*(S[a][b].keys() for a in range(d) for b in range(d)))
    coeffs = {}
    for key in keys:
        arr = zeros((d, d), True)
        for a, b in itertools.product(range(d), repeat=2):
            arr[a, b] = S[a][b].coefficient(*key)
        coeffs[key] = arr
    return TruncatedSeries(N, order, coeffs, (d, d))


@dataclass
class SigmaReport:
    sigma: np.ndarray
    E: list
    in_G: bool  # (a)
    in_G_residual: float
    equals_exp: bool  # (b)
    exp_residual: float
    transversal: bool  # (c)
    transversality_rank_excess: int

    @property
    def all_hold(self) -> bool:
        return self.in_G and self.equals_exp and self.transversal


def cy3_sigma(model: VHSModel, t) -> SigmaReport:
    if model.has_strong_correction:
        raise PeriodError("sigma(t) describes the period map only when the strong quantum correction vanishes; "
                          "this model has nonzero strong correction")
    S = sigma_series(model)
    N = model.N
    t = [scalar(x) for x in np.ravel(np.asarray(t, dtype=object))]
    if len(t) != N:
        raise PeriodError(f"t must have {N} coordinates")
    exact_mode = model.exact and all(isinstance(x, QQi) for x in t)
    sigma = S.eval(t)
    sigma = coerce_array(sigma, exact_mode)
    z = (0,) * N
    E = [coerce_array(S.coefficient(unit_index(N, i), z), exact_mode) for i in range(N)]
    M = coerce_array(model.polarization.gram_Q, exact_mode)
    resid_a = max_abs(sigma.T @ M @ sigma - M)
    X = sum((E[i] * t[i] for i in range(1, N)), E[0] * t[0])
    resid_b = max_abs(exp_nilpotent(X) - sigma)
    fam = classic_family(model).coeffs
    span = sigma[: N + 1]
    excess = 0
    for i in range(N):
        dv = coerce_array(fam.d(holo=(i,)).eval(t), exact_mode)
        excess = max(excess, rank(np.vstack([span, dv[None, :]])) - rank(span))
    ok = (lambda r: r == 0) if exact_mode else (lambda r: r <= DEFAULT_TOL)
    return SigmaReport(sigma, E, ok(resid_a), resid_a, ok(resid_b), resid_b, excess == 0, excess)


# -- N+ orbits ---------------------------------------------------------------------------

@dataclass
class NilpotentOrbitPoint:
    parameters: list
    matrix: np.ndarray
    filtration: HodgeFiltration
    hr: HRVerdict
    connected_to_base: bool

    @property
    def verdict(self) -> str:
        if self.hr.verdict == IN_D and not self.connected_to_base:
            return OUTSIDE
        return self.hr.verdict

    @property
    def in_D(self) -> bool:
        return self.verdict == IN_D


def _to_sympy(x):
    if isinstance(x, QQi):
        re, im = x.fractions()
        return sympy.Rational(re.numerator, re.denominator) + sympy.I * sympy.Rational(im.numerator, im.denominator)
    return sympy.nsimplify(complex(x).real, rational=True) + sympy.I * sympy.nsimplify(complex(x).imag, rational=True)


def top_line_positivity(E, params, F_ref: HodgeFiltration, P: PolarizationForm):
    """p(s) = Qtilde(v(s), conj v(s)) = i^n Q(v(s), conj v(s)) for the top Hodge line v(s) of exp(s sum tau_i E_i) F_ref, s real."""
    s = sympy.Symbol("s", real=True)
    B = np.asarray(F_ref.basis_matrix, dtype=object)
    d = B.shape[0]
    X = sympy.zeros(d, d)
    for e, tau in zip(E, params):
        X += sympy.Matrix(d, d, [_to_sympy(x) for x in np.asarray(e).flat]) * _to_sympy(tau)
    expo = sympy.eye(d)
    power = sympy.eye(d)
    for k in range(1, d + 1):
        power = power * X * s
        expo += power / sympy.factorial(k)
    Bs = sympy.Matrix(d, d, [_to_sympy(x) for x in B.flat])
    v = Bs * expo.T[:, 0]
    Hm = sympy.Matrix(d, d, [_to_sympy(x) for x in np.asarray(P.hermitian).flat])
    val = (v.T * Hm * v.conjugate())[0, 0]
    p = sympy.Poly(sympy.expand(sympy.re(sympy.expand(val))), s)
    return p


def connected_along_ray(E, params, F_ref: HodgeFiltration, P: PolarizationForm) -> bool:
    """No zero of the top-line positivity on the segment s in (0, 1]."""
    p = top_line_positivity(E, params, F_ref, P)
    if p.is_zero:
        return False
    if p.eval(0) <= 0:
        return False
    return p.count_roots(sympy.Rational(0), sympy.Rational(1)) == 0


def orbit_filtration(E, params, F_ref: HodgeFiltration, P: PolarizationForm,
                     tol: float = DEFAULT_TOL) -> NilpotentOrbitPoint:
    """exp(sum params_i E_i) acting on F_ref, with a full Hodge-Riemann verdict.

    The Hodge-Riemann relations cut out both components of the flag locus;
    ``connected_to_base`` additionally follows the top Hodge line along the ray
    s * params and rejects points reached only through a positivity zero.
    """
    E = [np.asarray(e, dtype=object) for e in E]
    params = [scalar(x) for x in np.ravel(np.asarray(params, dtype=object))]
    if len(params) != len(E):
        raise PeriodError(f"expected {len(E)} parameters")
    ok, worst = abelian_check(E)
    if not ok:
        raise PeriodError(f"E matrices do not commute (max commutator {worst:.3g})")
    exact_mode = _exact_pair(*E, F_ref.basis_matrix) and all(isinstance(x, QQi) for x in params)
    E = [coerce_array(e, exact_mode) for e in E]
    d = F_ref.basis_matrix.shape[0]
    X = zeros((d, d), exact_mode)
    for e, tau in zip(E, params):
        X = X + e * (tau if exact_mode else complex(tau))
    sigma = exp_nilpotent(X)
    B = coerce_array(np.asarray(F_ref.basis_matrix, dtype=object), exact_mode)
    F = HodgeFiltration(B @ sigma.T, F_ref.hodge)
    Pm = P if exact_mode else PolarizationForm(P.weight, as_float_array(P.gram_Q), as_float_array(P.real_structure))
    hr = check_hodge_riemann(F, Pm, tol=tol)
    connected = hr.verdict == IN_D and connected_along_ray(E, params, F_ref, P)
    return NilpotentOrbitPoint(params, sigma, F, hr, connected)
