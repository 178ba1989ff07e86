"""VHS models and their family expansions: classic and canonical families,
strong/weak quantum corrections and the Yukawa coupling series."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .field import QQi, array_is_exact, as_exact_array, as_float_array, coerce_array, zeros
from .hodge import HodgeData, PolarizationForm, cy3_polarization, weight2_polarization
from .series import DEFAULT_ORDER, TruncatedSeries, factorial_weight, unit_index


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VHSModel:
    """Finite description of a polarized VHS around a base point.

    ``E[i]`` is the action of the i-th Beltrami class on the reference basis:
    row a of ``E[i]`` holds the coordinates of phi_i contracted with basis vector a.
    ``extra_coeffs`` maps a multi-index I (|I| >= 2) to the coordinate vector a_I
    of canonical-family corrections beyond the classic family.
    """

    hodge: HodgeData
    polarization: PolarizationForm
    E: tuple
    extra_coeffs: Mapping = field(default_factory=dict)
    order: int = DEFAULT_ORDER
    kind: str = "abstract_vhs"
    A_tensors: tuple | None = None
    n: int | None = None  # half dimension for hyperkahler models

    @property
    def N(self) -> int:
        return len(self.E)

    @property
    def weight(self) -> int:
        return self.hodge.weight

    @property
    def dim(self) -> int:
        return self.hodge.total_dim

    @property
    def exact(self) -> bool:
        return (self.polarization.exact and all(array_is_exact(e) for e in self.E)
                and all(array_is_exact(v) for v in self.extra_coeffs.values()))

    @property
    def has_strong_correction(self) -> bool:
        return any(np.any([bool(x) for x in np.asarray(v).flat]) for v in self.extra_coeffs.values())

    @property
    def yukawa_tensor(self) -> np.ndarray | None:
        if self.A_tensors is None:
            return None
        return np.stack([np.asarray(a) for a in self.A_tensors])

    def with_extra(self, extra: Mapping) -> "VHSModel":
        m = VHSModel(self.hodge, self.polarization, self.E, dict(extra), self.order, self.kind,
                     self.A_tensors, self.n)
        validate_model(m)
        return m

    def with_order(self, order: int) -> "VHSModel":
        return VHSModel(self.hodge, self.polarization, self.E, self.extra_coeffs, order, self.kind,
                        self.A_tensors, self.n)


@dataclass(frozen=True, eq=False)
class FamilyExpansion:
    coeffs: TruncatedSeries
    kind: str

    def eval(self, t):
        return self.coeffs.eval(t)


# -- construction ----------------------------------------------------------------

def _check_symmetric_cubic(C: np.ndarray):
    N = C.shape[0]
    if C.shape != (N, N, N):
        raise ModelError(f"Yukawa tensor must have shape (N, N, N), got {C.shape}")
    for i, j, k in itertools.product(range(N), repeat=3):
        for p in set(itertools.permutations((i, j, k))):
            if C[p] != C[i, j, k] if C.dtype == object else abs(C[p] - C[i, j, k]) > 1e-12:
                raise ModelError(f"Yukawa tensor not symmetric: C{(i, j, k)} != C{p}")


def cy3_E_matrices(A: list[np.ndarray], exact_mode: bool) -> list[np.ndarray]:
    N = len(A)
    d = 2 * N + 2
    out = []
    for i in range(N):
        E = zeros((d, d), exact_mode)
        one = QQi(1) if exact_mode else 1.0
        E[0, 1 + i] = one
        E[1:1 + N, 1 + N:1 + 2 * N] = A[i]
        E[1 + N + i, d - 1] = one
        out.append(E)
    return out


def build_cy3_model(C, order: int = DEFAULT_ORDER, extra_coeffs: Mapping | None = None) -> VHSModel:
    """CY3 model with (A_i)_{jk} = C_{ijk} and the reference anti-diagonal polarization."""
    C = np.asarray(C, dtype=object)
    exact_mode = array_is_exact(C)
    C = coerce_array(C, exact_mode)
    if C.ndim != 3:
        raise ModelError("Yukawa tensor must be 3-dimensional")
    _check_symmetric_cubic(C)
    N = C.shape[0]
    A = tuple(C[i].copy() for i in range(N))
    P = cy3_polarization(N)
    if not exact_mode:
        P = PolarizationForm(3, as_float_array(P.gram_Q), as_float_array(P.real_structure))
    model = VHSModel(HodgeData.cy3(N), P, tuple(cy3_E_matrices(list(A), exact_mode)),
                     dict(extra_coeffs or {}), order, "cy3", A)
    validate_model(model)
    return model


def weight2_E_matrices(N: int) -> list[np.ndarray]:
    d = N + 2
    out = []
    for i in range(N):
        E = zeros((d, d), True)
        E[0, 1 + i] = QQi(1)
        E[1 + i, d - 1] = QQi(1)
        out.append(E)
    return out


def build_weight2_model(N: int, order: int = DEFAULT_ORDER, n: int | None = None) -> VHSModel:
    model = VHSModel(HodgeData.weight2(N), weight2_polarization(N), tuple(weight2_E_matrices(N)), {},
                     order, "hyperkahler", None, n)
    validate_model(model)
    return model


# -- validation --------------------------------------------------------------------

def _normalize_extra(model: VHSModel) -> dict:
    out = {}
    for I, v in model.extra_coeffs.items():
        I = tuple(int(x) for x in I)
        if len(I) != model.N or min(I) < 0:
            raise ModelError(f"extra coefficient index {I} is not a multi-index in {model.N} variables")
        if sum(I) < 2:
            raise ModelError(f"extra coefficient index {I} has order < 2")
        v = np.asarray(v, dtype=object)
        if v.shape != (model.dim,):
            raise ModelError(f"extra coefficient a_{I} must have length {model.dim}")
        out[I] = v
    return out


def validate_model(model: VHSModel):
    H = model.hodge
    n = H.weight
    d = model.dim
    if model.polarization.dim != d:
        raise ModelError("polarization dimension does not match Hodge data")
    if model.N != H.hodge_numbers[n - 1]:
        raise ModelError(f"number of deformation directions {model.N} != h^(n-1,1) = {H.hodge_numbers[n - 1]}")
    for i, E in enumerate(model.E):
        E = np.asarray(E)
        if E.shape != (d, d):
            raise ModelError(f"E[{i}] must be {d}x{d}")
        for a, b in itertools.product(range(d), repeat=2):
            if E[a, b] and H.block_of_index(b) != H.block_of_index(a) - 1:
                raise ModelError(f"E[{i}] entry ({a},{b}) does not lower the Hodge type by one")
    extra = _normalize_extra(model)
    for I, v in extra.items():
        for a, x in enumerate(v):
            if not x if isinstance(x, QQi) else abs(complex(x)) == 0:
                continue
            p = H.block_of_index(a)
            if p >= n - 1:
                raise ModelError(
                    f"a_{I} has a nonzero component in H^({p},{n - p}); corrections of order >= 2 must lie "
                    f"in the blocks H^(n-j,j), j >= 2 ([Omega] + sum [phi_i Omega] t_i + O(|t|^2))")
            if n - p > sum(I):
                raise ModelError(
                    f"a_{I} has a component in H^({p},{n - p}) of order {sum(I)} < {n - p}; "
                    f"Griffiths transversality puts order-k terms in F^(n-k)")
    # normalization of the reference coefficients
    Hm = model.polarization.hermitian
    a0 = np.zeros(d, dtype=object)
    a0[:] = QQi(0)
    a0[0] = QQi(1)
    if Hm[0, 0] != 1:
        raise ModelError("normalization violated: Qtilde(a_0, conj a_0) != 1")
    rows = [np.asarray(E)[0] for E in model.E]
    for i, ri in enumerate(rows):
        if (ri @ Hm @ a0) != 0:
            raise ModelError(f"normalization violated: Qtilde(a_{i + 1}, conj a_0) != 0")
        for j, rj in enumerate(rows):
            val = ri @ Hm @ np.array([x.conjugate() for x in rj], dtype=object)
            if val != (-1 if i == j else 0):
                raise ModelError(f"normalization violated: Qtilde(a_{i + 1}, conj a_{j + 1}) = {val}")


# -- families ---------------------------------------------------------------------------

def _family_order(model: VHSModel) -> int:
    top = max([model.weight] + [sum(I) + 1 for I in model.extra_coeffs])
    return max(model.order, 2 * top)


def beltrami_matrix_series(model: VHSModel, order: int | None = None) -> TruncatedSeries:
    """Matrix-valued linear series sum_i t_i E_i."""
    order = order or _family_order(model)
    N = model.N
    z = (0,) * N
    coeffs = {(unit_index(N, i), z): np.asarray(E) for i, E in enumerate(model.E)}
    return TruncatedSeries(N, order, coeffs, (model.dim, model.dim))


def classic_family(model: VHSModel) -> FamilyExpansion:
    """First row of exp(sum t_i E_i): the family exp(sum t_i phi_i) applied to [Omega].

    Built term by term, row_k = row_{k-1} X / k, which stops at degree n.
    """
    X = beltrami_matrix_series(model)
    Xt = TruncatedSeries(X.num_vars, X.max_order, {k: np.asarray(c).T for k, c in X.items()}, X.shape)
    exact_mode = model.exact
    e0 = zeros((model.dim,), exact_mode)
    e0[0] = QQi(1) if exact_mode else 1.0
    row = TruncatedSeries.constant(e0, model.N, X.max_order)
    out = row
    k = 1
    while True:
        row = (Xt * row).scale(QQi(Fraction(1, k)) if exact_mode else 1.0 / k)
        if not row:
            break
        out = out + row
        k += 1
    return FamilyExpansion(out, "classic")


def _extra_series(model: VHSModel, order: int) -> TruncatedSeries:
    z = (0,) * model.N
    return TruncatedSeries(model.N, order, {(I, z): v for I, v in _normalize_extra(model).items()}, (model.dim,))


def induced_weak_series(model: VHSModel, order: int | None = None) -> TruncatedSeries:
    """Cubic term t_i t_j t_k [phi_i . phi_jk . Omega] generated by order-2 corrections.

    Only CY3 models carry it: the order-2 data c(t) (coordinates in the
    H^{1,2} block) is acted on by A(t) = sum t_i A_i, giving A(t) c(t) in H^{1,2}.
    """
    order = order or _family_order(model)
    N = model.N
    if model.kind != "cy3" or model.A_tensors is None:
        return TruncatedSeries.zero(N, order, (model.dim,))
    z = (0,) * N
    out = {}
    exact_mode = model.exact
    for I, v in _normalize_extra(model).items():
        if sum(I) != 2:
            continue
        c = np.asarray(v[1 + N:1 + 2 * N])
        for i in range(N):
            w = np.asarray(model.A_tensors[i]) @ c
            full = zeros((model.dim,), exact_mode)
            full[1 + N:1 + 2 * N] = w
            key = (tuple(x + (1 if k == i else 0) for k, x in enumerate(I)), z)
            out[key] = out[key] + full if key in out else full
    return TruncatedSeries(N, order, out, (model.dim,))


def strong_correction_series(model: VHSModel) -> TruncatedSeries:
    order = _family_order(model)
    return _extra_series(model, order) + induced_weak_series(model, order)


def canonical_family(model: VHSModel) -> FamilyExpansion:
    cl = classic_family(model).coeffs
    return FamilyExpansion(cl + strong_correction_series(model).with_order(cl.max_order), "canonical")


@dataclass
class QuantumCorrection:
    strong: TruncatedSeries
    weak: np.ndarray  # weak[i, j, k, :] symmetric in (i, j, k), supported in the H^(n-2,2) block
    strong_is_zero: bool
    weak_is_zero: bool


def cubic_tensor(series: TruncatedSeries) -> np.ndarray:
    """Symmetric w[i,j,k,...] with sum_ijk w t_i t_j t_k equal to the holomorphic cubic part."""
    N = series.num_vars
    exact_mode = series.exact
    w = zeros((N, N, N) + series.shape, exact_mode)
    for idx in itertools.product(range(N), repeat=3):
        I = tuple(idx.count(v) for v in range(N))
        c = series.coefficient(I)
        f = Fraction(factorial_weight(I), 6)
        w[idx] = c * (QQi(f) if exact_mode else float(f))
    return w


def quantum_correction(model: VHSModel, tol: float = 0.0) -> QuantumCorrection:
    """Strong correction [Xi(t)] = canonical - classic and its weak part.

    The weak part t_i t_j t_k [phi_i . phi_jk . Omega] is a class of type
    (n-2, 2), so it is the cubic part of the strong correction in that block.
    """
    strong = canonical_family(model).coeffs - classic_family(model).coeffs
    weak = cubic_tensor(strong.homogeneous_part(3))
    n = model.weight
    if n >= 2:
        keep = model.hodge.block(n - 2)
        mask = np.zeros(model.dim, dtype=bool)
        mask[keep] = True
        weak[..., ~mask] = QQi(0) if weak.dtype == object else 0
    weak_zero = not any(abs(complex(x)) > tol for x in weak.flat) if weak.size else True
    return QuantumCorrection(strong, weak, strong.is_zero(tol), weak_zero)


@dataclass
class YukawaSeries:
    full: TruncatedSeries  # shape (N, N, N)
    correction: TruncatedSeries
    classic_constant: np.ndarray

    def correction_degree(self, d: int) -> TruncatedSeries:
        return self.correction.homogeneous_part(d)


def _third_derivatives(f: TruncatedSeries, N: int):
    out = {}
    for i, j, k in itertools.combinations_with_replacement(range(N), 3):
        out[(i, j, k)] = f.d(holo=(i, j, k))
    return out


def _pairing_tensor(f: TruncatedSeries, d3: dict, gram, N: int, order: int) -> TruncatedSeries:
    parts = {}
    for key, g in d3.items():
        parts[key] = f.dot(g.with_order(f.max_order), gram)
    keys = set().union(*(p.keys() for p in parts.values()))
    exact_mode = all(p.exact for p in parts.values())
    coeffs = {}
    for kk in keys:
        arr = zeros((N, N, N), exact_mode)
        for (i, j, k), p in parts.items():
            c = p.coefficient(*kk)
            for perm in set(itertools.permutations((i, j, k))):
                arr[perm] = c
        coeffs[kk] = arr
    return TruncatedSeries(N, order, {k: v for k, v in coeffs.items() if sum(k[0]) + sum(k[1]) <= order},
                           (N, N, N))


def yukawa(model: VHSModel) -> YukawaSeries:
    """C_ijk(t) = Q(Omega^c(t), d^3 Omega^c / dt_i dt_j dt_k) and its correction series.

    The pairing uses the bilinear Gram of Qtilde; the correction subtracts the
    classic constant Q(Omega, phi_i phi_j phi_k Omega).
    """
    if model.weight != 3:
        raise ModelError(f"Yukawa coupling needs a weight-3 model, got weight {model.weight}")
    N = model.N
    G = model.polarization.gram_Qtilde
    f = canonical_family(model).coeffs
    fc = classic_family(model).coeffs
    full = _pairing_tensor(f, _third_derivatives(f, N), G, N, model.order)
    classic = _pairing_tensor(fc, _third_derivatives(fc, N), G, N, model.order)
    const = classic.coefficient((0,) * N)
    if classic.homogeneous_part(0) != classic:
        raise ModelError("classic Yukawa pairing is not constant; model E matrices are inconsistent")
    correction = full - TruncatedSeries.constant(const, N, model.order)
    return YukawaSeries(full, correction, const)
