"""Weil-Petersson potential, metric, curvature and covariant derivative of curvature.

Sign conventions: g_{i jbar} = -d_i dbar_j log q and
R_{i jbar k lbar} = d_k dbar_l g_{i jbar} - g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .family import VHSModel, canonical_family
from .field import QQi, array_is_exact, as_float_array, conj, is_exact_scalar, max_abs, scalar
from .linalg import inverse
from .series import TruncatedSeries

CURVATURE_CONVENTION = ("R_{i jbar k lbar} = d_k dbar_l g_{i jbar} - g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}, "
                        "g_{i jbar} = -d_i dbar_j log q")
NABLA_CONVENTION = ("nabla_r R_{i jbar k lbar} = d_r R - Gamma^q_{ri} R_{q jbar k lbar} - Gamma^q_{rk} R_{i jbar q lbar}, "
                    "Gamma^q_{ri} = g^{q sbar} d_r g_{i sbar}")
SYMMETRIC_AT_BASE = "symmetric_at_base"
SYMMETRIC_ON_SAMPLES = "symmetric_on_samples"
NOT_SYMMETRIC = "not_symmetric"
DOMAIN_EPS = 1e-8


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WPPotential:
    """q(t, tbar) = Qtilde(Omega^c(t), conj Omega^c(t)) as an exact polynomial."""

    q: TruncatedSeries
    model: VHSModel

    @property
    def N(self) -> int:
        return self.q.num_vars

    def tensor(self, n_holo: int, n_anti: int) -> np.ndarray:
        return self.q.derivative_tensor(n_holo, n_anti)

    def q4(self) -> np.ndarray:
        """q4[i, k, j, l] = d_i d_k dbar_j dbar_l q at 0."""
        return self.tensor(2, 2)

    def q5_holo(self) -> np.ndarray:
        """q5[i, k, r, j, l] = d_i d_k d_r dbar_j dbar_l q at 0."""
        return self.tensor(3, 2)

    def q5_anti(self) -> np.ndarray:
        return self.tensor(2, 3)

    def eval(self, t):
        return self.q.eval(t)


def wp_potential(model: VHSModel) -> WPPotential:
    f = canonical_family(model).coeffs
    deg = f.degree()
    f = f.with_order(max(2 * deg, 2))
    q = f.dot(f.conjugate(), model.polarization.hermitian)
    return WPPotential(q, model)


def wp_metric_series(pot: WPPotential, order: int = 6) -> TruncatedSeries:
    """Matrix series g_{k lbar}(t, tbar), correct through total order ``order - 2``."""
    if order < 2:
        raise GeometryError("metric series needs order >= 2")
    L = pot.q.truncate(order).log_unit()
    N = pot.N
    parts = [[-(L.d(holo=(k,), anti=(l,))) for l in range(N)] for k in range(N)]
    keys = set().union(*(p.keys() for row in parts for p in row))
    exact_mode = L.exact
    coeffs = {}
    for key in keys:
        arr = np.empty((N, N), dtype=object if exact_mode else complex)
        for k, l in itertools.product(range(N), repeat=2):
            arr[k, l] = parts[k][l].coefficient(*key)
        coeffs[key] = arr
    return TruncatedSeries(N, order - 2, coeffs, (N, N), polynomial=False)


@dataclass
class CurvatureReport:
    point: np.ndarray
    exact: bool
    q_value: object
    metric: np.ndarray
    christoffel: np.ndarray  # [q, r, i]
    curvature: np.ndarray  # [i, j, k, l]
    nabla: np.ndarray  # [r, i, j, k, l]
    nabla_bar: np.ndarray
    residuals: dict = field(default_factory=dict)
    conventions: dict = field(default_factory=lambda: {"curvature": CURVATURE_CONVENTION,
                                                       "nabla": NABLA_CONVENTION})

    @property
    def max_nabla(self) -> float:
        return max(max_abs(self.nabla), max_abs(self.nabla_bar)) if self.nabla.size else 0.0


def _exact_point(point) -> bool:
    return all(is_exact_scalar(x) for x in point)


def _local_log(pot: WPPotential, point, exact_mode: bool):
    N = pot.N
    pt = [scalar(x) for x in point] if exact_mode else [complex(x) for x in point]
    q = pot.q
    if not exact_mode and q.exact:
        q = TruncatedSeries(q.num_vars, q.max_order, {k: complex(v) for k, v in q.items()})
    at_base = all((x == 0) for x in pt)
    qc = q if at_base else q.recenter_polynomial(pt)
    q0 = qc.coefficient((0,) * N)
    if abs(complex(q0).real) <= DOMAIN_EPS or complex(q0).real < 0:
        raise GeometryError(f"point lies outside the domain of the potential (q = {complex(q0):.3g})")
    inv = (QQi(1) / q0) if exact_mode else 1.0 / q0
    L = qc.truncate(5).scale(inv).log_unit()
    return L, q0


def geometry_at(model_or_pot, point=None, fd_oracle: bool = True, tol_nonzero: float = 1e-9,
                fd_step: float = oracles.DEFAULT_STEP, fd_nested_step: float = oracles.NESTED_STEP,
                fd_nabla: bool = True) -> CurvatureReport:
    """Metric, curvature and nabla R at ``point`` from the recentered log potential.

    With ``fd_oracle`` the finite-difference oracle is run at the same point and
    max-abs residuals are stored in ``report.residuals``; ``fd_nabla=False``
    skips the (expensive) nested difference for nabla R.
    """
    pot = model_or_pot if isinstance(model_or_pot, WPPotential) else wp_potential(model_or_pot)
    N = pot.N
    if point is None:
        point = [0] * N
    point = list(np.ravel(np.asarray(point, dtype=object)))
    if len(point) != N:
        raise GeometryError(f"point must have {N} coordinates")
    exact_mode = pot.q.exact and _exact_point(point)
    L, q0 = _local_log(pot, point, exact_mode)
    D = L.derivative_tensor
    L11, L21, L12, L22 = D(1, 1), D(2, 1), D(1, 2), D(2, 2)
    L31, L13, L32, L23 = D(3, 1), D(1, 3), D(3, 2), D(2, 3)
    G = -L11
    dg = -np.transpose(L21, (1, 0, 2))  # dg[r,k,l] = d_r g_{k lbar}
    dbg = -np.transpose(L12, (2, 0, 1))  # dbg[s,k,l] = dbar_s g_{k lbar}
    ddg = -np.transpose(L22, (1, 3, 0, 2))  # ddg[r,s,k,l] = d_r dbar_s g_{k lbar}
    Gi = inverse(G).T
    ein = lambda spec, *ops: np.einsum(spec, *ops, optimize="greedy")
    R = np.transpose(ddg, (2, 3, 0, 1)) - ein("pq,kiq,lpj->ijkl", Gi, dg, dbg)
    Gam = ein("qs,ris->qri", Gi, dg)
    # third derivatives of g
    d_dg = -np.transpose(L31, (1, 2, 0, 3))  # d_dg[r,k,i,q] = d_r d_k g_{i qbar}
    d_ddg = -np.transpose(L32, (2, 1, 4, 0, 3))  # [r,k,l,i,j] = d_r d_k dbar_l g_{i jbar}
    db_ddg = -np.transpose(L23, (4, 1, 3, 0, 2))  # [s,k,l,i,j] = dbar_s d_k dbar_l g_{i jbar}
    db_dg = -np.transpose(L22, (3, 1, 0, 2))  # [s,k,i,q] = dbar_s d_k g_{i qbar}
    d_dbg = -np.transpose(L22, (1, 3, 0, 2))  # [r,l,p,j] = d_r dbar_l g_{p jbar}
    db_dbg = -np.transpose(L13, (3, 2, 0, 1))  # [s,l,p,j] = dbar_s dbar_l g_{p jbar}
    dGi = -ein("pa,rba,bq->rpq", Gi, dg, Gi)
    dbGi = -ein("pa,sba,bq->spq", Gi, dbg, Gi)
    dR = (np.transpose(d_ddg, (0, 3, 4, 1, 2))
          - ein("rpq,kiq,lpj->rijkl", dGi, dg, dbg)
          - ein("pq,rkiq,lpj->rijkl", Gi, d_dg, dbg)
          - ein("pq,kiq,rlpj->rijkl", Gi, dg, d_dbg))
    dbR = (np.transpose(db_ddg, (0, 3, 4, 1, 2))
           - ein("spq,kiq,lpj->sijkl", dbGi, dg, dbg)
           - ein("pq,skiq,lpj->sijkl", Gi, db_dg, dbg)
           - ein("pq,kiq,slpj->sijkl", Gi, dg, db_dbg))
    nab = dR - ein("qri,qjkl->rijkl", Gam, R) - ein("qrk,ijql->rijkl", Gam, R)
    cG = conj(Gam)
    nabb = dbR - ein("qrj,iqkl->rijkl", cG, R) - ein("qrl,ijkq->rijkl", cG, R)
    report = CurvatureReport(np.array(point, dtype=object), exact_mode, q0, G, Gam, R, nab, nabb)
    if fd_oracle and pot.q.polynomial:
        fd = oracles.fd_geometry(pot.q, [complex(x) for x in point], fd_step, fd_nested_step, with_nabla=fd_nabla)
        f = lambda a: as_float_array(a)
        report.residuals = {
            "metric": max_abs(f(G) - fd["metric"]),
            "christoffel": max_abs(f(Gam) - fd["christoffel"]),
            "curvature": max_abs(f(R) - fd["curvature"]),
        }
        if fd_nabla:
            report.residuals["nabla"] = max(max_abs(f(nab) - fd["nabla"]), max_abs(f(nabb) - fd["nabla_bar"]))
    return report


@dataclass
class BaseCurvature:
    curvature: np.ndarray
    from_q4: np.ndarray  # delta_ij delta_kl + delta_il delta_kj - q_{ik, jbar lbar}
    nabla: np.ndarray
    nabla_from_q5: np.ndarray  # -q_{ikr, jbar lbar}
    nabla_alt_sign: np.ndarray  # +q_{ikr, jbar lbar}
    residuals: dict


def _delta_terms(N: int, exact_mode: bool):
    one = QQi(1) if exact_mode else 1.0
    zero = QQi(0) if exact_mode else 0.0
    T = np.empty((N,) * 4, dtype=object if exact_mode else complex)
    for i, j, k, l in itertools.product(range(N), repeat=4):
        T[i, j, k, l] = (one if (i == j and k == l) else zero) + (one if (i == l and k == j) else zero)
    return T


def curvature_at_base(model: VHSModel, fd_oracle: bool = True) -> BaseCurvature:
    """Curvature and nabla R at t = 0, with the closed forms in q-derivatives."""
    pot = wp_potential(model)
    rep = geometry_at(pot, None, fd_oracle=fd_oracle)
    N = pot.N
    q4 = pot.q4()
    from_q4 = _delta_terms(N, pot.q.exact) - np.transpose(q4, (0, 2, 1, 3))
    q5 = pot.q5_holo()  # [i,k,r,j,l]
    nab_q5 = -np.transpose(q5, (2, 0, 3, 1, 4))
    res = dict(rep.residuals)
    res["curvature_vs_q4"] = max_abs(as_float_array(rep.curvature) - as_float_array(from_q4))
    res["nabla_vs_q5"] = max_abs(as_float_array(rep.nabla) - as_float_array(nab_q5))
    return BaseCurvature(rep.curvature, from_q4, rep.nabla, nab_q5, -nab_q5, res)


def nabla_curvature_at_base(model: VHSModel, fd_oracle: bool = True) -> BaseCurvature:
    return curvature_at_base(model, fd_oracle)


@dataclass
class SymmetryVerdict:
    verdict: str
    base_max: float
    sample_max: dict
    fd_residuals: dict


def symmetry_verdict(model: VHSModel, sample_points=(), tol: float = 1e-6) -> SymmetryVerdict:
    pot = wp_potential(model)
    base = geometry_at(pot, None, fd_oracle=False)
    base_max = base.max_nabla
    if base_max > tol:
        return SymmetryVerdict(NOT_SYMMETRIC, base_max, {}, {})
    samples, fdres = {}, {}
    ok = len(sample_points) > 0
    for pt in sample_points:
        rep = geometry_at(pot, pt, fd_oracle=True)
        key = tuple(complex(x) for x in np.ravel(pt))
        fd_nabla = rep.max_nabla + rep.residuals["nabla"]
        samples[key] = rep.max_nabla
        fdres[key] = rep.residuals["nabla"]
        ok = ok and rep.max_nabla <= tol and fd_nabla <= tol
    return SymmetryVerdict(SYMMETRIC_ON_SAMPLES if ok else SYMMETRIC_AT_BASE, base_max, samples, fdres)


@dataclass
class ProjectionCurvature:
    curvature: np.ndarray
    residual: float


def curvature_via_projection(model: VHSModel) -> ProjectionCurvature:
    """Curvature at 0 from D_k D_i Omega:  g g + g g - Qtilde(D_k D_i Omega, conj D_l D_j Omega) / q."""
    pot = wp_potential(model)
    N = pot.N
    f = canonical_family(model).coeffs
    f = f.with_order(pot.q.max_order)
    exact_mode = pot.q.exact
    L = pot.q.log_unit()  # q(0) = 1 by normalization
    K = [-(L.d(holo=(i,))) for i in range(N)]
    Dom = [f.d(holo=(i,)) + (f.with_order(K[i].max_order) * K[i]) for i in range(N)]
    g0 = -L.derivative_tensor(1, 1)
    dg0 = -np.transpose(L.derivative_tensor(2, 1), (1, 0, 2))
    Gam = np.einsum("qs,ris->qri", inverse(g0).T, dg0)
    z = (0,) * N
    Dom0 = [d.coefficient(z) for d in Dom]
    DD = {}
    for k, i in itertools.product(range(N), repeat=2):
        v = Dom[i].d(holo=(k,)).coefficient(z) + K[k].coefficient(z) * Dom0[i]
        for m in range(N):
            v = v - Gam[m, k, i] * Dom0[m]
        DD[k, i] = v
    H = model.polarization.hermitian
    q0 = pot.q.coefficient(z)
    R = np.empty((N,) * 4, dtype=object if exact_mode else complex)
    for i, j, k, l in itertools.product(range(N), repeat=4):
        pair = DD[k, i] @ H @ conj(DD[l, j])
        R[i, j, k, l] = g0[i, j] * g0[k, l] + g0[i, l] * g0[k, j] - pair / q0
    ref = geometry_at(pot, None, fd_oracle=False).curvature
    return ProjectionCurvature(R, max_abs(as_float_array(R) - as_float_array(ref)))
