"""Pivoted elimination that works over exact QQi arrays and float complex arrays."""

from __future__ import annotations

import numpy as np

from .field import QQi, array_is_exact, as_float_array, eye, is_exact_scalar


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def _is_exact(a) -> bool:
    return np.asarray(a).dtype == object


def _negligible(x, scale: float, tol: float) -> bool:
    if is_exact_scalar(x):
        return not x
    return abs(x) <= tol * max(scale, 1.0)


def row_echelon(a, tol: float = 1e-9):
    """Reduced row echelon form. Returns (rref, pivot_columns)."""
    a = np.array(a, dtype=object if _is_exact(a) else complex, copy=True)
    rows, cols = a.shape
    scale = 0.0 if _is_exact(a) else float(np.max(np.abs(a))) if a.size else 0.0
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        if _is_exact(a):
            p = next((i for i in range(r, rows) if a[i, c]), None)
        else:
            col = np.abs(a[r:, c])
            k = int(np.argmax(col)) if col.size else 0
            p = r + k if col.size and not _negligible(a[r + k, c], scale, tol) else None
        if p is None:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        piv = a[r, c]
        a[r] = a[r] / piv
        for i in range(rows):
            if i != r and not (is_exact_scalar(a[i, c]) and not a[i, c]):
                a[i] = a[i] - a[i, c] * a[r]
        pivots.append(c)
        r += 1
    if not _is_exact(a):
        a[np.abs(a) <= tol * max(scale, 1.0)] = 0
    return a, pivots


def rank(a, tol: float = 1e-9) -> int:
    return len(row_echelon(a, tol)[1])


def nullspace(a, tol: float = 1e-9) -> np.ndarray:
    """Columns spanning {x : a x = 0}."""
    a = np.asarray(a)
    exact_mode = _is_exact(a)
    cols = a.shape[1]
    rref, pivots = row_echelon(a, tol)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.empty((cols, len(free)), dtype=object if exact_mode else complex)
    zero = QQi(0) if exact_mode else 0.0
    one = QQi(1) if exact_mode else 1.0
    for j, f in enumerate(free):
        v = [zero] * cols
        v[f] = one
        for i, p in enumerate(pivots):
            v[p] = -rref[i, f]
        basis[:, j] = v
    return basis


def inverse(a, tol: float = 1e-12) -> np.ndarray:
    a = np.asarray(a)
    n = a.shape[0]
    if not _is_exact(a):
        if np.linalg.matrix_rank(a, tol=tol * max(1.0, float(np.max(np.abs(a))))) < n:
            raise SingularMatrixError("matrix is singular")
        return np.linalg.inv(a)
    aug = np.concatenate([a, eye(n, True)], axis=1)
    rref, pivots = row_echelon(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return rref[:, n:]


def hermitian_positive_definite(h, tol: float = 1e-9) -> tuple[bool, float]:
    """Positive-definiteness of a Hermitian matrix.

    Exact inputs use LDL^H pivots (all pivots > 0); float inputs use eigvalsh.
    Returns (verdict, smallest pivot or eigenvalue).
    """
    h = np.asarray(h)
    n = h.shape[0]
    if n == 0:
        return True, float("inf")
    if not array_is_exact(h):
        w = np.linalg.eigvalsh(as_float_array(h))
        scale = max(1.0, float(np.max(np.abs(w))))
        return bool(w[0] > tol * scale), float(w[0])
    a = np.array(h, dtype=object, copy=True)
    smallest = None
    for k in range(n):
        piv = a[k, k]
        if piv.im != 0:
            raise ValueError("matrix is not Hermitian")
        smallest = piv.re if smallest is None else min(smallest, piv.re)
        if piv.re <= 0:
            return False, float(piv.re)
        for i in range(k + 1, n):
            f = a[i, k] / piv
            a[i, k:] = a[i, k:] - f * a[k, k:]
    return True, float(smallest)


def is_hermitian(h, tol: float = 1e-9) -> bool:
    h = np.asarray(h)
    diff = h - np.array([[x.conjugate() for x in row] for row in h.T], dtype=h.dtype)
    if _is_exact(h):
        return not any(diff.flat)
    return bool(np.max(np.abs(diff), initial=0.0) <= tol * max(1.0, float(np.max(np.abs(h)))))
