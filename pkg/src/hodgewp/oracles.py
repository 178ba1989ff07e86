"""Finite-difference oracle for the Kähler metric of a polynomial potential.

The metric is evaluated pointwise from q and its first/second derivatives
(g = q^-2 (dq dbar q - q d dbar q)), never through the log series.  Christoffel
symbols, curvature and nabla R come from Wirtinger central differences with
Richardson extrapolation.
"""

from __future__ import annotations

import numpy as np

from .series import TruncatedSeries

DEFAULT_STEP = 1e-2
DEFAULT_LEVELS = 3
NESTED_STEP = 2e-3
NESTED_LEVELS = 3
CHUNK = 2048  # points per batched polynomial evaluation
INNER_STEP = 2e-2  # curvature step inside the nabla R difference
INNER_LEVELS = 3


class PolynomialEvaluator:
    """Vectorized evaluation of a scalar polynomial in (t, tbar) and its low derivatives."""

    def __init__(self, q: TruncatedSeries):
        if q.shape != ():
            raise ValueError("potential must be scalar")
        if not q.polynomial:
            raise ValueError("finite-difference oracle needs an untruncated polynomial potential")
        self.N = q.num_vars
        items = list(q.items())
        self.I = np.array([k[0] for k, _ in items], dtype=int).reshape(len(items), self.N)
        self.J = np.array([k[1] for k, _ in items], dtype=int).reshape(len(items), self.N)
        self.c = np.array([complex(v) for _, v in items], dtype=complex)
        self._cache = {}

    def _terms(self, holo, anti):
        key = (tuple(holo), tuple(anti))
        if key not in self._cache:
            I, J, c = self.I.copy(), self.J.copy(), self.c.copy()
            for v in holo:
                c = c * I[:, v]
                I[:, v] -= 1
            for v in anti:
                c = c * J[:, v]
                J[:, v] -= 1
            mask = (I >= 0).all(axis=1) & (J >= 0).all(axis=1) & (c != 0)
            self._cache[key] = (I[mask], J[mask], c[mask])
        return self._cache[key]

    def d(self, t, holo=(), anti=()) -> complex:
        I, J, c = self._terms(holo, anti)
        t = np.asarray(t, dtype=complex)
        return complex(np.sum(c * np.prod(t ** I, axis=1) * np.prod(np.conj(t) ** J, axis=1)))

    def value(self, t) -> complex:
        return self.d(t)

    def _metric_terms(self):
        """q, d_k q, dbar_l q and d_k dbar_l q stacked into one term list plus a segment matrix."""
        if "metric" not in self._cache:
            N = self.N
            keys = [((), ())] + [((k,), ()) for k in range(N)] + [((), (l,)) for l in range(N)]
            keys += [((k,), (l,)) for k in range(N) for l in range(N)]
            parts = [self._terms(h, a) for h, a in keys]
            IJ = np.concatenate([np.hstack([p[0], p[1]]) for p in parts])
            col = np.concatenate([np.full(len(p[2]), n) for n, p in enumerate(parts)]).astype(int)
            uniq, row = np.unique(IJ.reshape(-1, 2 * N), axis=0, return_inverse=True)
            S = np.zeros((len(uniq), len(keys)), dtype=complex)
            np.add.at(S, (row.ravel(), col), np.concatenate([p[2] for p in parts]))
            self._cache["metric"] = (uniq[:, :N], uniq[:, N:], S)
        return self._cache["metric"]

    def metric_data(self, T):
        """(q, dq, dbar q, d dbar q) at a batch of points T of shape (P, N)."""
        I, J, S = self._metric_terms()
        T = np.asarray(T, dtype=complex).reshape(-1, self.N)
        N = self.N
        deg = int(max(I.max(initial=0), J.max(initial=0)))
        out = np.empty((len(T), S.shape[1]), dtype=complex)
        for lo in range(0, len(T), CHUNK):
            X = T[lo:lo + CHUNK]
            pw = X[:, :, None] ** np.arange(deg + 1)
            pwc = np.conj(pw)
            M = np.ones((len(X), len(I)), dtype=complex)
            for n in range(N):
                M *= pw[:, n, I[:, n]] * pwc[:, n, J[:, n]]
            out[lo:lo + CHUNK] = M @ S
        return out[:, 0], out[:, 1:1 + N], out[:, 1 + N:1 + 2 * N], out[:, 1 + 2 * N:].reshape(-1, N, N)


def metric_batch(ev: PolynomialEvaluator, T) -> np.ndarray:
    """g_{k lbar} = q^-2 (d_k q dbar_l q - q d_k dbar_l q) at each row of T."""
    q, dq, dbq, ddq = ev.metric_data(T)
    return (dq[:, :, None] * dbq[:, None, :] - q[:, None, None] * ddq) / q[:, None, None] ** 2


def metric_pointwise(ev: PolynomialEvaluator, t) -> np.ndarray:
    return metric_batch(ev, np.asarray(t, dtype=complex)[None, :])[0]


def _real_dirs(N: int) -> np.ndarray:
    """Row 2k moves Re t_k, row 2k+1 moves Im t_k."""
    D = np.zeros((2 * N, N), dtype=complex)
    for k in range(N):
        D[2 * k, k] = 1.0
        D[2 * k + 1, k] = 1j
    return D


def wirtinger_weights(N: int):
    """W, Wbar with d_k = sum_a W[k, a] D_a and dbar_k = sum_a Wbar[k, a] D_a."""
    W = np.zeros((N, 2 * N), dtype=complex)
    Wb = np.zeros((N, 2 * N), dtype=complex)
    for k in range(N):
        W[k, 2 * k], W[k, 2 * k + 1] = 0.5, -0.5j
        Wb[k, 2 * k], Wb[k, 2 * k + 1] = 0.5, 0.5j
    return W, Wb


def _extrapolate(table):
    """Richardson table for estimates at h, h/2, h/4, ... with even error expansion."""
    for m in range(1, len(table)):
        w = 4 ** m
        table = [(w * table[k + 1] - table[k]) / (w - 1) for k in range(len(table) - 1)]
    return table[0]


def _stencil(f, T, offsets, weights, steps, power):
    """sum_o weights[o] f(T + s offsets[o]) / s^power for each step s, all in one batched call of f."""
    P, N = T.shape
    pts = np.concatenate([T[:, None, :] + s * offsets[None, :, :] for s in steps], axis=1)
    vals = f(pts.reshape(-1, N))
    vals = vals.reshape((P, len(steps), len(offsets)) + vals.shape[1:])
    return [np.tensordot(vals[:, k], weights, axes=([1], [0])) / s ** power for k, s in enumerate(steps)]


def real_gradient(f, T, h: float, levels: int = 1) -> np.ndarray:
    """Central-difference real partials D_a f at each row of T; result axes (P, ..., a)."""
    N = T.shape[1]
    dirs = _real_dirs(N)
    offsets = np.concatenate([dirs, -dirs])
    weights = np.concatenate([np.eye(2 * N), -np.eye(2 * N)]) / 2
    steps = [h / 2 ** k for k in range(levels + 1)]
    return _extrapolate(_stencil(f, T, offsets, weights, steps, 1))


def real_hessian(f, T, h: float, levels: int = 1) -> np.ndarray:
    """Second real partials D_a D_b f at each row of T; result axes (P, ..., a, b)."""
    N = T.shape[1]
    dirs = _real_dirs(N)
    n = len(dirs)
    offsets, weights = [np.zeros(N, dtype=complex)], [np.zeros((n, n))]
    weights[0][np.diag_indices(n)] = -2 / 4

    def add(off, a, b, w):
        offsets.append(off)
        W = np.zeros((n, n))
        W[a, b] = W[b, a] = w
        weights.append(W)

    for a in range(n):
        add(2 * dirs[a], a, a, 1 / 4)
        add(-2 * dirs[a], a, a, 1 / 4)
        for b in range(a + 1, n):
            u, v = dirs[a], dirs[b]
            add(u + v, a, b, 1 / 4)
            add(-(u + v), a, b, 1 / 4)
            add(u - v, a, b, -1 / 4)
            add(v - u, a, b, -1 / 4)
    steps = [h / 2 ** k for k in range(levels + 1)]
    return _extrapolate(_stencil(f, T, np.array(offsets), np.array(weights), steps, 2))


def curvature_batch(ev: PolynomialEvaluator, T, h: float = DEFAULT_STEP, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """R_{i jbar k lbar} = d_k dbar_l g_{i jbar} - g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}."""
    N = ev.N
    T = np.asarray(T, dtype=complex).reshape(-1, N)
    g = lambda X: metric_batch(ev, X)
    W, Wb = wirtinger_weights(N)
    Gi = np.transpose(np.linalg.inv(g(T)), (0, 2, 1))
    Dg = real_gradient(g, T, h, levels)  # (P, i, j, a)
    dg = np.einsum("ka,Pija->Pkij", W, Dg)
    dbg = np.einsum("ka,Pija->Pkij", Wb, Dg)
    ddg = np.einsum("ka,lb,Pijab->Pklij", W, Wb, real_hessian(g, T, h, levels))
    return np.einsum("Pklij->Pijkl", ddg) - np.einsum("Ppq,Pkiq,Plpj->Pijkl", Gi, dg, dbg)


def curvature_pointwise(ev: PolynomialEvaluator, t, h: float = DEFAULT_STEP, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    return curvature_batch(ev, np.asarray(t, dtype=complex)[None, :], h, levels)[0]


def christoffel_pointwise(ev: PolynomialEvaluator, t, h: float = DEFAULT_STEP, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Gamma[q, r, i] = g^{q sbar} d_r g_{i sbar}."""
    N = ev.N
    T = np.asarray(t, dtype=complex)[None, :]
    g = lambda X: metric_batch(ev, X)
    W, _ = wirtinger_weights(N)
    Gi = np.linalg.inv(g(T)[0]).T
    dg = np.einsum("ra,isa->ris", W, real_gradient(g, T, h, levels)[0])
    return np.einsum("qs,ris->qri", Gi, dg)


def fd_geometry(q: TruncatedSeries, point, h: float = DEFAULT_STEP, h_nested: float = NESTED_STEP,
                with_nabla: bool = True, h_inner: float = INNER_STEP) -> dict:
    """Metric, Christoffel symbols, curvature and covariant derivatives by finite differences."""
    ev = PolynomialEvaluator(q)
    N = ev.N
    t = np.asarray([complex(x) for x in np.ravel(point)], dtype=complex)
    out = {"metric": metric_pointwise(ev, t),
           "christoffel": christoffel_pointwise(ev, t, h),
           "curvature": curvature_pointwise(ev, t, h)}
    if with_nabla:
        R = out["curvature"]
        Gam = out["christoffel"]
        W, Wb = wirtinger_weights(N)
        DR = real_gradient(lambda X: curvature_batch(ev, X, h_inner, INNER_LEVELS), t[None, :], h_nested,
                           NESTED_LEVELS)[0]
        dR = np.einsum("ra,ijkla->rijkl", W, DR)
        dbR = np.einsum("ra,ijkla->rijkl", Wb, DR)
        out["nabla"] = dR - np.einsum("qri,qjkl->rijkl", Gam, R) - np.einsum("qrk,ijql->rijkl", Gam, R)
        cG = np.conj(Gam)
        out["nabla_bar"] = dbR - np.einsum("qrj,iqkl->rijkl", cG, R) - np.einsum("qrl,ijkq->rijkl", cG, R)
    return out
