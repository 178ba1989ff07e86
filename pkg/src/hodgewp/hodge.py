"""Polarized Hodge structures: Hodge data, polarization, filtrations and Hodge-Riemann checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import QQi, array_is_exact, as_exact_array, as_float_array, conj, eye, ipow, max_abs, zeros
from .linalg import SingularMatrixError, hermitian_positive_definite, is_hermitian, nullspace, rank

IN_D = "in_D"
IN_DCHECK_ONLY = "in_Dcheck_only"
OUTSIDE = "outside"

DEFAULT_TOL = 1e-9


class HodgeError(ValueError):
    pass


class HodgeComponentError(HodgeError):
    """The filtration does not split into Hodge components of the expected sizes."""


@dataclass(frozen=True)
class HodgeData:
    """Weight and Hodge numbers; ``hodge_numbers[p]`` is h^{p, n-p}."""

    weight: int
    hodge_numbers: tuple[int, ...]

    def __post_init__(self):
        h = tuple(int(x) for x in self.hodge_numbers)
        object.__setattr__(self, "hodge_numbers", h)
        if len(h) != self.weight + 1 or min(h) < 0:
            raise HodgeError(f"need {self.weight + 1} non-negative Hodge numbers, got {h}")
        if h != h[::-1]:
            raise HodgeError(f"Hodge numbers must satisfy h^(p,q) = h^(q,p): {h}")

    @property
    def total_dim(self) -> int:
        return sum(self.hodge_numbers)

    def f(self, k: int) -> int:
        """dim F^k."""
        if k > self.weight:
            return 0
        return sum(self.hodge_numbers[max(k, 0):])

    @property
    def filtration_dims(self) -> tuple[int, ...]:
        return tuple(self.f(k) for k in range(self.weight + 1))

    def block(self, p: int) -> slice:
        """Coordinates of H^{p, n-p} in the reference adapted basis (H^{n,0} first)."""
        return slice(self.f(p + 1), self.f(p))

    def block_of_index(self, i: int) -> int:
        for p in range(self.weight, -1, -1):
            b = self.block(p)
            if b.start <= i < b.stop:
                return p
        raise IndexError(i)

    @classmethod
    def cy3(cls, N: int) -> "HodgeData":
        return cls(3, (1, N, N, 1))

    @classmethod
    def weight2(cls, N: int) -> "HodgeData":
        return cls(2, (1, N, 1))


@dataclass(frozen=True, eq=False)
class PolarizationForm:
    """Bilinear polarization Q with real structure conj(v) = real_structure @ conj_entries(v).

    ``gram_Qtilde`` is (sqrt(-1))**n * gram_Q.  ``hermitian`` is the matrix of
    the sesquilinear pairing (u, v) -> Qtilde(u, conj v).
    """

    weight: int
    gram_Q: np.ndarray
    real_structure: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gram_Q)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise HodgeError("gram_Q must be square")
        sym = ipow(2 * self.weight)  # (-1)^n
        exact_mode = g.dtype == object
        if exact_mode:
            bad = any((g[i, j] - sym * g[j, i]) for i in range(len(g)) for j in range(len(g)))
        else:
            s = complex(sym)
            bad = np.max(np.abs(g - s * g.T)) > DEFAULT_TOL * max(1.0, float(np.max(np.abs(g))))
        if bad:
            kind = "symmetric" if self.weight % 2 == 0 else "antisymmetric"
            raise HodgeError(f"gram_Q must be {kind} for weight {self.weight}")
        if rank(g) < len(g):
            raise HodgeError("gram_Q is degenerate")

    @classmethod
    def from_qtilde(cls, weight: int, gram_qtilde, real_structure) -> "PolarizationForm":
        gt = np.asarray(gram_qtilde)
        if gt.dtype == object:
            gt = as_exact_array(gt)
            return cls(weight, gt * ipow(-weight), as_exact_array(real_structure))
        return cls(weight, gt * complex(ipow(-weight)), np.asarray(real_structure))

    @property
    def exact(self) -> bool:
        return array_is_exact(self.gram_Q) and array_is_exact(self.real_structure)

    @property
    def dim(self) -> int:
        return self.gram_Q.shape[0]

    @property
    def gram_Qtilde(self) -> np.ndarray:
        g = self.gram_Q
        return g * ipow(self.weight) if g.dtype == object else g * complex(ipow(self.weight))

    @property
    def hermitian(self) -> np.ndarray:
        return self.gram_Qtilde @ self.real_structure

    def conj_vectors(self, v) -> np.ndarray:
        """Complex conjugation in the real structure (columns or single vector)."""
        return self.real_structure @ conj(np.asarray(v))

    def Q(self, u, v):
        return np.asarray(u).T @ self.gram_Q @ np.asarray(v)

    def Qtilde(self, u, v):
        return np.asarray(u).T @ self.gram_Qtilde @ np.asarray(v)


def cy3_polarization(N: int) -> PolarizationForm:
    """Reference CY3 polarization on the basis [Omega, eta_1..N, etabar_1..N, Omegabar].

    The anti-diagonal block matrix (1, -I, I, -1) is the Gram matrix of Qtilde,
    so Qtilde(Omega, conj Omega) = 1 and Qtilde(eta_i, conj eta_j) = -delta_ij.
    """
    d = 2 * N + 2
    M = zeros((d, d), True)
    M[0, d - 1] = QQi(1)
    M[d - 1, 0] = QQi(-1)
    for i in range(N):
        M[1 + i, 1 + N + i] = QQi(-1)
        M[1 + N + i, 1 + i] = QQi(1)
    P = zeros((d, d), True)
    P[0, d - 1] = P[d - 1, 0] = QQi(1)
    for i in range(N):
        P[1 + i, 1 + N + i] = P[1 + N + i, 1 + i] = QQi(1)
    return PolarizationForm.from_qtilde(3, M, P)


def weight2_polarization(N: int) -> PolarizationForm:
    """Basis [Omega, eta_1..N, Omegabar] with Q(Omega, Omegabar) = -1 and Q(eta_i, eta_j) = delta_ij."""
    d = N + 2
    G = zeros((d, d), True)
    G[0, d - 1] = G[d - 1, 0] = QQi(-1)
    P = zeros((d, d), True)
    P[0, d - 1] = P[d - 1, 0] = QQi(1)
    for i in range(N):
        G[1 + i, 1 + i] = QQi(1)
        P[1 + i, 1 + i] = QQi(1)
    return PolarizationForm(2, G, P)


def weil_apply(v, component: tuple[int, int], weight: int):
    """Weil operator on a vector of type (p, q): multiply by (sqrt(-1))**(p - q)."""
    p, q = component
    if p + q != weight:
        raise HodgeError(f"type ({p},{q}) does not have weight {weight}")
    v = np.asarray(v)
    c = ipow(p - q)
    return v * c if v.dtype == object else v * complex(c)


@dataclass(frozen=True, eq=False)
class HodgeFiltration:
    """Adapted basis: the leading f^k columns of ``basis_matrix`` span F^k."""

    basis_matrix: np.ndarray
    hodge: HodgeData

    def __post_init__(self):
        b = np.asarray(self.basis_matrix)
        d = self.hodge.total_dim
        if b.shape != (d, d):
            raise HodgeError(f"basis matrix must be {d}x{d}, got {b.shape}")

    @property
    def block_boundaries(self) -> tuple[int, ...]:
        return self.hodge.filtration_dims

    def F(self, k: int) -> np.ndarray:
        return self.basis_matrix[:, : self.hodge.f(k)]

    @classmethod
    def reference(cls, hodge: HodgeData, exact_mode: bool = True) -> "HodgeFiltration":
        return cls(eye(hodge.total_dim, exact_mode), hodge)


def _agree_modes(F: HodgeFiltration, P: PolarizationForm):
    b = np.asarray(F.basis_matrix)
    exact_mode = array_is_exact(b) and P.exact
    if exact_mode:
        return as_exact_array(b), as_exact_array(P.gram_Q), as_exact_array(P.real_structure), True
    return as_float_array(b), as_float_array(P.gram_Q), as_float_array(P.real_structure), False


def hodge_components(F: HodgeFiltration, P: PolarizationForm, tol: float = DEFAULT_TOL) -> dict[int, np.ndarray]:
    """Bases (as columns) of H^{p,n-p} = F^p intersected with conj(F^{n-p})."""
    B, G, R, exact_mode = _agree_modes(F, P)
    H = F.hodge
    n = H.weight
    out = {}
    for p in range(n, -1, -1):
        A = B[:, : H.f(p)]
        C = R @ conj(B[:, : H.f(n - p)])
        stacked = np.concatenate([A, -C], axis=1)
        ns = nullspace(stacked, tol)
        vecs = A @ ns[: A.shape[1], :]
        dim = rank(vecs, tol) if vecs.shape[1] else 0
        if dim != H.hodge_numbers[p]:
            raise HodgeComponentError(
                f"H^({p},{n - p}) has dimension {dim}, expected h^({p},{n - p}) = {H.hodge_numbers[p]}")
        out[p] = vecs
    return out


@dataclass
class HRVerdict:
    verdict: str
    first_relation_residual: float
    first_relation_holds: bool
    components_ok: bool
    positivity: dict = field(default_factory=dict)
    message: str = ""

    @property
    def in_D(self) -> bool:
        return self.verdict == IN_D


def check_hodge_riemann(F: HodgeFiltration, P: PolarizationForm, H: HodgeData | None = None,
                        tol: float = DEFAULT_TOL) -> HRVerdict:
    """Decide membership of a filtration in the period domain D or its compact dual."""
    H = H or F.hodge
    if H != F.hodge:
        raise HodgeError("filtration Hodge data does not match")
    if P.dim != H.total_dim:
        raise HodgeError(f"polarization dimension {P.dim} != total_dim {H.total_dim}")
    B, G, R, exact_mode = _agree_modes(F, P)
    if rank(B, tol) < H.total_dim:
        raise SingularMatrixError("basis_matrix is singular")
    n = H.weight
    residual = 0.0
    ok1 = True
    scale = 1.0 if exact_mode else max(1.0, max_abs(B)) ** 2 * max(1.0, max_abs(G))
    for k in range(1, n + 1):
        block = B[:, : H.f(k)].T @ G @ B[:, : H.f(n - k + 1)]
        if exact_mode:
            if any(block.flat):
                ok1 = False
            residual = max(residual, max_abs(block))
        else:
            r = max_abs(block)
            residual = max(residual, r)
            if r > tol * scale:
                ok1 = False
    if not ok1:
        return HRVerdict(OUTSIDE, residual, False, False, message="Q(F^k, F^(n-k+1)) != 0")
    try:
        comps = hodge_components(F, P, tol)
    except HodgeComponentError as exc:
        return HRVerdict(IN_DCHECK_ONLY, residual, True, False, message=str(exc))
    positivity = {}
    all_pos = True
    for p, V in comps.items():
        q = n - p
        c = ipow(p - q)
        h = V.T @ G @ (R @ conj(V))
        h = h * c if exact_mode else h * complex(c)
        if not is_hermitian(h, tol):
            all_pos = False
            positivity[p] = float("nan")
            continue
        pd, smallest = hermitian_positive_definite(h, tol)
        positivity[p] = smallest
        all_pos &= pd
    verdict = IN_D if all_pos else IN_DCHECK_ONLY
    msg = "" if all_pos else "Q(Cv, conj v) fails to be positive definite"
    return HRVerdict(verdict, residual, True, True, positivity, msg)
