"""Weight-2 (Hyperkähler) specialization."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .family import FamilyExpansion, VHSModel, build_weight2_model, classic_family
from .field import QQi, as_float_array, coerce_array, max_abs, scalar, zeros
from .hodge import IN_D, HodgeFiltration, HRVerdict
from .period import abelian_check, endomorphism, exp_nilpotent, orbit_filtration, q_compat_check
from .series import DEFAULT_ORDER, TruncatedSeries


class HKError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HKModel:
    N: int
    n: int
    vhs: VHSModel

    @property
    def gram_Q(self) -> np.ndarray:
        return self.vhs.polarization.gram_Q

    @property
    def polarization(self):
        return self.vhs.polarization

    @property
    def hodge(self):
        return self.vhs.hodge

    @property
    def dim(self) -> int:
        return self.N + 2


def build_hk_model(N: int, n: int = 2, order: int = DEFAULT_ORDER) -> HKModel:
    """Basis [Omega, eta_1..eta_N, conj Omega] with Q(Omega, conj Omega) = -1, Q(eta_i, eta_j) = delta_ij."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise HKError(f"N must be a positive integer, got {N!r}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise HKError(f"n must be an integer >= 2 (real dimension 4n >= 8), got {n!r}")
    return HKModel(int(N), int(n), build_weight2_model(int(N), order, int(n)))


def hk20_family(model: HKModel) -> FamilyExpansion:
    fam = classic_family(model.vhs)
    if fam.coeffs.degree() > 2:
        raise HKError("(2,0)-family has terms beyond degree 2")
    return FamilyExpansion(fam.coeffs, "hk20")


@dataclass
class WedgeExpansionTable:
    """Coefficients of t_{i_1} ... t_{i_k} [phi_{i_1} ... phi_{i_k} . wedge^n Omega], i_1 <= ... <= i_k."""

    N: int
    n: int
    coefficients: dict  # (k, tuple) -> Fraction
    ordered_tuple_coefficients: dict  # (k, tuple) -> 1/k!, the bookkeeping over sorted tuples

    @property
    def max_degree(self) -> int:
        return max(k for k, _ in self.coefficients)

    def coefficient(self, indices) -> Fraction:
        indices = tuple(sorted(indices))
        return self.coefficients[(len(indices), indices)]

    def disagreements(self) -> dict:
        """Tuples where the 1/k!-over-sorted-tuples coefficient differs from the exponential one."""
        return {key: (self.coefficients[key], self.ordered_tuple_coefficients[key])
                for key in self.coefficients
                if self.coefficients[key] != self.ordered_tuple_coefficients[key]}

    @property
    def bookkeeping_agrees(self) -> bool:
        return not self.disagreements()


def hk2n0_coefficients(model: HKModel) -> WedgeExpansionTable:
    """exp(sum t_i phi_i) on wedge^n Omega, expanded by brute force over ordered words.

    (sum t_i phi_i)^k / k! is summed word by word; words sharing a sorted tuple
    collect into that tuple's coefficient.  Contractions of more than 2n vector
    fields into a 2n-form vanish, so k stops at 2n.
    """
    N, n = model.N, model.n
    coeffs = {(0, ()): Fraction(1)}
    sorted_book = {(0, ()): Fraction(1)}
    for k in range(1, 2 * n + 1):
        counts = {}
        for word in itertools.product(range(N), repeat=k):
            key = tuple(sorted(word))
            counts[key] = counts.get(key, 0) + 1
        for key, c in counts.items():
            coeffs[(k, key)] = Fraction(c, math.factorial(k))
            sorted_book[(k, key)] = Fraction(1, math.factorial(k))
    return WedgeExpansionTable(N, n, coeffs, sorted_book)


@dataclass
class HCVerdict:
    inside: bool
    verdict: str
    hr: HRVerdict
    connected_to_base: bool
    positivity: float  # 1 - sum|tau|^2 + 1/4 |sum tau^2|^2
    positivity_unsquared: float  # 1 - sum|tau|^2 + 1/4 |sum tau^2|


def _positivity_scalars(tau):
    tau = [complex(x) for x in tau]
    a = sum(abs(x) ** 2 for x in tau)
    b = abs(sum(x * x for x in tau))
    return 1 - a + 0.25 * b ** 2, 1 - a + 0.25 * b


def hc_membership(model: HKModel, tau, tol: float = 1e-9) -> HCVerdict:
    """Domain membership of exp(sum tau_i E_i) F_ref by the full Hodge-Riemann check."""
    tau = [scalar(x) for x in np.ravel(np.asarray(tau, dtype=object))]
    if len(tau) != model.N:
        raise HKError(f"tau must have {model.N} coordinates")
    pt = orbit_filtration(model.vhs.E, tau, HodgeFiltration.reference(model.hodge), model.polarization, tol)
    sq, unsq = _positivity_scalars(tau)
    return HCVerdict(pt.verdict == IN_D, pt.verdict, pt.hr, pt.connected_to_base, sq, unsq)


@dataclass
class HKEReport:
    E: list
    products_ok: bool
    exp_ok: bool
    q_compat_ok: bool
    abelian: bool


def corner_matrix(N: int) -> np.ndarray:
    C = zeros((N + 2, N + 2), True)
    C[0, N + 1] = QQi(1)
    return C


def hk_exp_display(tau) -> np.ndarray:
    """[[1, tau, 1/2 sum tau^2], [0, I, tau^T], [0, 0, 1]]."""
    tau = [scalar(x) for x in tau]
    N = len(tau)
    exact_mode = all(isinstance(x, QQi) for x in tau)
    one = QQi(1) if exact_mode else 1.0
    M = zeros((N + 2, N + 2), exact_mode)
    for a in range(N + 2):
        M[a, a] = one
    for i, x in enumerate(tau):
        M[0, 1 + i] = x
        M[1 + i, N + 1] = x
    half = QQi(Fraction(1, 2)) if exact_mode else 0.5
    M[0, N + 1] = sum((x * x for x in tau[1:]), tau[0] * tau[0]) * half
    return M


def hk_E_matrices(model: HKModel, sample_tau=None) -> HKEReport:
    E = [np.asarray(e) for e in model.vhs.E]
    N = model.N
    corner = corner_matrix(N)
    zero = zeros((N + 2, N + 2), True)
    products = all(((E[i] @ E[j]) == (corner if i == j else zero)).all() for i in range(N) for j in range(N))
    if sample_tau is None:
        sample_tau = [QQi(Fraction(i + 1, i + 3), Fraction(-1, i + 2)) for i in range(N)]
    tau = [scalar(x) for x in sample_tau]
    X = sum((E[i] * tau[i] for i in range(1, N)), E[0] * tau[0])
    exp_ok = max_abs(exp_nilpotent(X) - hk_exp_display(tau)) == 0
    qc = all(q_compat_check(endomorphism(e), model.polarization)[0] for e in E)
    return HKEReport(E, products, exp_ok, qc, abelian_check(E)[0])


def coordinate_coincidence(model: HKModel, t) -> float:
    """|first row of exp(sum t_i E_i) - (2,0)-family at t|, exact zero on rationals."""
    t = [scalar(x) for x in np.ravel(np.asarray(t, dtype=object))]
    if len(t) != model.N:
        raise HKError(f"t must have {model.N} coordinates")
    if not hc_membership(model, t).inside:
        raise HKError("t lies outside the Harish-Chandra domain")
    exact_mode = all(isinstance(x, QQi) for x in t)
    E = [coerce_array(np.asarray(e), exact_mode) for e in model.vhs.E]
    X = sum((E[i] * t[i] for i in range(1, model.N)), E[0] * t[0])
    row = exp_nilpotent(X)[0]
    fam = coerce_array(hk20_family(model).coeffs.eval(t), exact_mode)
    return max_abs(row - fam)
