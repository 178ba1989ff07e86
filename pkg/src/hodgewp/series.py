"""Truncated multivariate power series in t and conj(t).

A term is keyed by a pair of exponent tuples ``(I, J)`` meaning
``t**I * conj(t)**J``; its combined order is ``|I| + |J|``.
Coefficients are scalars (QQi or complex) or numpy arrays of a fixed shape.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable

import numpy as np
from fractions import Fraction

from .field import QQi, as_exact_array, as_float_array, conj, exact, is_exact_scalar, scalar

Key = tuple[tuple[int, ...], tuple[int, ...]]

DEFAULT_ORDER = 6


class SeriesError(ValueError):
    """Raised on mismatched series operands or invalid requests."""


# -- multi-indices ------------------------------------------------------------

def multi_indices(num_vars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples of the given total order, graded-lex (descending lex)."""
    out = []
    for combo in itertools.combinations_with_replacement(range(num_vars), order):
        e = [0] * num_vars
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


def graded_lex_key(key: Key):
    I, J = key
    return (sum(I) + sum(J), sum(I), tuple(-x for x in I), tuple(-x for x in J))


def unit_index(num_vars: int, i: int) -> tuple[int, ...]:
    e = [0] * num_vars
    e[i] = 1
    return tuple(e)


def index_from_vars(num_vars: int, variables: Iterable[int]) -> tuple[int, ...]:
    e = [0] * num_vars
    for v in variables:
        e[v] += 1
    return tuple(e)


def factorial_weight(I: tuple[int, ...]) -> int:
    return math.prod(math.factorial(k) for k in I)


def _add_idx(a, b):
    return tuple(x + y for x, y in zip(a, b))


# -- coefficient helpers -------------------------------------------------------

def _coef_is_zero(c) -> bool:
    if isinstance(c, np.ndarray):
        if c.dtype == object:
            return not any(c.flat)
        return not np.any(c)
    return not c


def _coef_exact(c) -> bool:
    if isinstance(c, np.ndarray):
        return c.dtype == object
    return isinstance(c, QQi)


def _demote(c):
    if isinstance(c, np.ndarray):
        return as_float_array(c)
    return complex(c)


def _normalize(c):
    if isinstance(c, np.ndarray):
        if c.ndim == 0:
            return _normalize(c.item())
        if c.dtype == object:
            if all(is_exact_scalar(x) for x in c.flat):
                return as_exact_array(c)
            return as_float_array(c)
        return c.astype(complex)
    if isinstance(c, list):
        return _normalize(np.array(c, dtype=object))
    return scalar(c)


def _shape_of(c) -> tuple[int, ...]:
    return c.shape if isinstance(c, np.ndarray) else ()


def _mul_coef(a, b):
    sa, sb = _shape_of(a), _shape_of(b)
    if sa == () or sb == ():
        return a * b
    return a @ b


def _product_shape(sa, sb):
    if sa == ():
        return sb
    if sb == ():
        return sa
    if len(sa) == 2 and len(sb) in (1, 2) and sa[1] == sb[0]:
        return (sa[0],) + tuple(sb[1:])
    raise SeriesError(f"coefficient shape mismatch in mul: {sa} x {sb}")


# -- the series type -----------------------------------------------------------

class TruncatedSeries:
    """Immutable truncated power series in ``num_vars`` variables and conjugates.

    ``polynomial`` certifies that no nonzero term has ever been discarded by
    truncation, so the stored terms are the exact function.
    """

    __slots__ = ("num_vars", "max_order", "shape", "polynomial", "_coeffs")

    def __init__(self, num_vars: int, max_order: int, coeffs=None, shape=(), polynomial: bool = True):
        self.num_vars = int(num_vars)
        self.max_order = int(max_order)
        self.shape = tuple(shape)
        self.polynomial = bool(polynomial)
        store = {}
        for key, c in (coeffs or {}).items():
            I, J = tuple(key[0]), tuple(key[1])
            if len(I) != self.num_vars or len(J) != self.num_vars or min(I + J, default=0) < 0:
                raise SeriesError(f"bad multi-index pair {key!r} for {self.num_vars} variables")
            c = _normalize(c)
            if _shape_of(c) != self.shape:
                raise SeriesError(f"coefficient shape {_shape_of(c)} != series shape {self.shape}")
            if _coef_is_zero(c):
                continue
            if sum(I) + sum(J) > self.max_order:
                self.polynomial = False
                continue
            k = (I, J)
            store[k] = store[k] + c if k in store else c
        if any(not _coef_exact(c) for c in store.values()):
            store = {k: _demote(c) for k, c in store.items()}
        self._coeffs = {k: store[k] for k in sorted(store, key=graded_lex_key)}

    # -- construction helpers ------------------------------------------------
    @classmethod
    def zero(cls, num_vars, max_order=DEFAULT_ORDER, shape=()):
        return cls(num_vars, max_order, {}, shape)

    @classmethod
    def constant(cls, value, num_vars, max_order=DEFAULT_ORDER):
        z = (0,) * num_vars
        c = _normalize(value)
        return cls(num_vars, max_order, {(z, z): c}, _shape_of(c))

    @classmethod
    def variable(cls, i, num_vars, max_order=DEFAULT_ORDER, kind="holo"):
        z = (0,) * num_vars
        e = unit_index(num_vars, i)
        key = (e, z) if kind == "holo" else (z, e)
        return cls(num_vars, max_order, {key: QQi(1)})

    @classmethod
    def from_terms(cls, num_vars, max_order, terms, shape=()):
        """Build from an iterable of (holo_vars, anti_vars, coefficient) where vars are index lists."""
        coeffs = {}
        for hv, av, c in terms:
            key = (index_from_vars(num_vars, hv), index_from_vars(num_vars, av))
            coeffs[key] = coeffs[key] + _normalize(c) if key in coeffs else _normalize(c)
        return cls(num_vars, max_order, coeffs, shape)

    # -- introspection ------------------------------------------------------
    @property
    def exact(self) -> bool:
        return all(_coef_exact(c) for c in self._coeffs.values())

    def items(self):
        return self._coeffs.items()

    def keys(self):
        return self._coeffs.keys()

    def __len__(self):
        return len(self._coeffs)

    def coefficient(self, holo, anti=None):
        anti = (0,) * self.num_vars if anti is None else tuple(anti)
        c = self._coeffs.get((tuple(holo), anti))
        if c is not None:
            return c
        return self._zero_coef()

    def _zero_coef(self):
        if self.exact:
            return np.full(self.shape, QQi(0), dtype=object) if self.shape else QQi(0)
        return np.zeros(self.shape, dtype=complex) if self.shape else 0j

    def is_zero(self, tol: float = 0.0) -> bool:
        for c in self._coeffs.values():
            if _coef_exact(c):
                return False
            if np.max(np.abs(c)) > tol:
                return False
        return True

    def degree(self) -> int:
        return max((sum(I) + sum(J) for I, J in self._coeffs), default=-1)

    def bidegree_part(self, p: int, q: int) -> "TruncatedSeries":
        return self._filter(lambda I, J: sum(I) == p and sum(J) == q)

    def homogeneous_part(self, d: int) -> "TruncatedSeries":
        return self._filter(lambda I, J: sum(I) + sum(J) == d)

    def truncate(self, order: int) -> "TruncatedSeries":
        kept = {k: c for k, c in self._coeffs.items() if sum(k[0]) + sum(k[1]) <= order}
        lost = len(kept) != len(self._coeffs)
        return TruncatedSeries(self.num_vars, order, kept, self.shape, self.polynomial and not lost)

    def with_order(self, order: int) -> "TruncatedSeries":
        return self.truncate(order) if order < self.max_order else TruncatedSeries(
            self.num_vars, order, self._coeffs, self.shape, self.polynomial)

    def _filter(self, pred):
        return TruncatedSeries(self.num_vars, self.max_order,
                               {k: c for k, c in self._coeffs.items() if pred(*k)}, self.shape, self.polynomial)

    def component(self, index) -> "TruncatedSeries":
        """Scalar (or sub-array) series of one coefficient entry."""
        coeffs = {k: c[index] for k, c in self._coeffs.items()}
        sub = np.shape(np.zeros(self.shape)[index]) if self.shape else ()
        return TruncatedSeries(self.num_vars, self.max_order, coeffs, sub, self.polynomial)

    @classmethod
    def stack(cls, parts: list["TruncatedSeries"]) -> "TruncatedSeries":
        """Vector series whose entries are the given scalar series."""
        first = parts[0]
        n = len(parts)
        exact_mode = all(p.exact for p in parts)
        keys = set().union(*(p.keys() for p in parts))
        coeffs = {}
        for k in keys:
            v = np.empty((n,) + first.shape, dtype=object if exact_mode else complex)
            for i, p in enumerate(parts):
                c = p.coefficient(*k)
                v[i] = c if exact_mode else _demote(c)
            coeffs[k] = v
        return cls(first.num_vars, min(p.max_order for p in parts), coeffs, (n,) + first.shape,
                   all(p.polynomial for p in parts))

    # -- compatibility -----------------------------------------------------------
    def _check(self, other: "TruncatedSeries", op: str):
        if not isinstance(other, TruncatedSeries):
            raise SeriesError(f"{op}: operand is not a TruncatedSeries")
        if other.num_vars != self.num_vars:
            raise SeriesError(f"{op}: num_vars mismatch ({self.num_vars} vs {other.num_vars})")
        if other.max_order != self.max_order:
            raise SeriesError(f"{op}: max_order mismatch ({self.max_order} vs {other.max_order})")

    # -- ring operations --------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.num_vars, self.max_order)
        self._check(other, "add")
        if other.shape != self.shape:
            raise SeriesError(f"add: shape mismatch ({self.shape} vs {other.shape})")
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out[k] + c if k in out else c
        return TruncatedSeries(self.num_vars, self.max_order, out, self.shape,
                               self.polynomial and other.polynomial)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.num_vars, self.max_order, {k: -c for k, c in self._coeffs.items()},
                               self.shape, self.polynomial)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.num_vars, self.max_order)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "TruncatedSeries":
        f = _normalize(factor)
        shape = _product_shape(_shape_of(f), self.shape)
        return TruncatedSeries(self.num_vars, self.max_order,
                               {k: _mul_coef(f, c) for k, c in self._coeffs.items()}, shape, self.polynomial)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other, "mul")
        shape = _product_shape(self.shape, other.shape)
        max_order = self.max_order
        a_terms = [(I, J, sum(I) + sum(J), c) for (I, J), c in self._coeffs.items()]
        b_terms = [(I, J, sum(I) + sum(J), c) for (I, J), c in other._coeffs.items()]
        out: dict = {}
        dropped = False
        for I1, J1, o1, c1 in a_terms:
            for I2, J2, o2, c2 in b_terms:
                if o1 + o2 > max_order:
                    dropped = True
                    continue
                k = (_add_idx(I1, I2), _add_idx(J1, J2))
                p = _mul_coef(c1, c2)
                out[k] = out[k] + p if k in out else p
        poly = self.polynomial and other.polynomial and not dropped
        return TruncatedSeries(self.num_vars, max_order, out, shape, poly)

    def __rmul__(self, other):
        return self.scale(other)

    def arithmetic(self, other, op: str):
        if op == "add":
            return self + other
        if op == "sub":
            return self - other
        if op == "mul":
            return self * other
        if op == "scale":
            return self.scale(other)
        raise SeriesError(f"unknown op {op!r}")

    def dot(self, other: "TruncatedSeries", gram=None) -> "TruncatedSeries":
        """Scalar series sum_s,t a_s G_st b_t of two vector series (G = identity if None)."""
        self._check(other, "dot")
        if len(self.shape) != 1 or self.shape != other.shape:
            raise SeriesError(f"dot: need matching vector shapes, got {self.shape} and {other.shape}")
        a = self if gram is None else self.transform(np.asarray(gram).T)
        out: dict = {}
        dropped = False
        for (I1, J1), c1 in a._coeffs.items():
            o1 = sum(I1) + sum(J1)
            for (I2, J2), c2 in other._coeffs.items():
                if o1 + sum(I2) + sum(J2) > self.max_order:
                    dropped = True
                    continue
                k = (_add_idx(I1, I2), _add_idx(J1, J2))
                p = c1 @ c2
                out[k] = out[k] + p if k in out else p
        return TruncatedSeries(self.num_vars, self.max_order, out, (),
                               self.polynomial and other.polynomial and not dropped)

    def transform(self, matrix) -> "TruncatedSeries":
        """Apply a constant matrix to every vector coefficient: c -> M c."""
        m = np.asarray(matrix)
        return TruncatedSeries(self.num_vars, self.max_order,
                               {k: m @ c for k, c in self._coeffs.items()}, (m.shape[0],) + self.shape[1:],
                               self.polynomial)

    def conjugate(self) -> "TruncatedSeries":
        """The series of conj(f(t)): swaps t and conj(t) and conjugates coefficients."""
        return TruncatedSeries(self.num_vars, self.max_order,
                               {(J, I): conj(c) for (I, J), c in self._coeffs.items()}, self.shape, self.polynomial)

    # -- calculus ---------------------------------------------------------------
    def derivative(self, var: int, kind: str = "holo") -> "TruncatedSeries":
        if not 0 <= var < self.num_vars:
            raise SeriesError(f"derivative: variable {var} out of range for {self.num_vars} variables")
        if kind not in ("holo", "anti", "antiholo"):
            raise SeriesError(f"derivative: kind must be 'holo' or 'anti', got {kind!r}")
        out = {}
        for (I, J), c in self._coeffs.items():
            e = I if kind == "holo" else J
            k = e[var]
            if k == 0:
                continue
            e2 = list(e)
            e2[var] -= 1
            key = (tuple(e2), J) if kind == "holo" else (I, tuple(e2))
            out[key] = c * (QQi(k) if _coef_exact(c) else k)
        return TruncatedSeries(self.num_vars, max(self.max_order - 1, 0), out, self.shape, self.polynomial)

    def d(self, holo=(), anti=()) -> "TruncatedSeries":
        s = self
        for v in holo:
            s = s.derivative(v, "holo")
        for v in anti:
            s = s.derivative(v, "antiholo")
        return s

    def partial_at_zero(self, holo=(), anti=()):
        """Value at 0 of the mixed partial derivative d^holo dbar^anti."""
        I = index_from_vars(self.num_vars, holo)
        J = index_from_vars(self.num_vars, anti)
        c = self.coefficient(I, J)
        w = factorial_weight(I) * factorial_weight(J)
        return c * (QQi(w) if _coef_exact(c) else w)

    def derivative_tensor(self, n_holo: int, n_anti: int) -> np.ndarray:
        """Array T[i1..ia, j1..jb] of all mixed partials at 0 of a scalar series."""
        if self.shape != ():
            raise SeriesError("derivative_tensor needs a scalar series")
        N = self.num_vars
        exact_mode = self.exact
        T = np.empty((N,) * (n_holo + n_anti), dtype=object if exact_mode else complex)
        cache = {}
        for idx in itertools.product(range(N), repeat=n_holo + n_anti):
            key = (tuple(sorted(idx[:n_holo])), tuple(sorted(idx[n_holo:])))
            if key not in cache:
                cache[key] = self.partial_at_zero(*key)
            T[idx] = cache[key]
        return T

    # -- evaluation -------------------------------------------------------------
    def eval(self, point):
        point = [scalar(p) for p in point]
        if len(point) != self.num_vars:
            raise SeriesError(f"eval: point has {len(point)} entries, series has {self.num_vars} variables")
        cpoint = [p.conjugate() for p in point]
        exact_mode = self.exact and all(isinstance(p, QQi) for p in point)
        total = None
        for (I, J), c in self._coeffs.items():
            m = QQi(1) if exact_mode else 1.0 + 0j
            for v, k in enumerate(I):
                if k:
                    m = m * (point[v] ** k if exact_mode else complex(point[v]) ** k)
            for v, k in enumerate(J):
                if k:
                    m = m * (cpoint[v] ** k if exact_mode else complex(cpoint[v]) ** k)
            term = c * m if exact_mode else _demote(c) * m
            total = term if total is None else total + term
        if total is None:
            z = self._zero_coef()
            return z if exact_mode else _demote(z)
        return total

    def recenter_polynomial(self, center) -> "TruncatedSeries":
        """Exact re-expansion of a certified polynomial around ``center``."""
        if not self.polynomial:
            raise SeriesError("recenter_polynomial: series is not a certified polynomial")
        center = [scalar(c) for c in center]
        if len(center) != self.num_vars:
            raise SeriesError("recenter_polynomial: center dimension mismatch")
        exact_mode = self.exact and all(isinstance(c, QQi) for c in center)
        ccenter = [c.conjugate() for c in center]
        one = QQi(1) if exact_mode else 1.0
        out: dict = {}
        N = self.num_vars
        for (I, J), c in self._coeffs.items():
            if not exact_mode:
                c = _demote(c)
            # binomial expansion of prod (t_v + c_v)^I_v (tbar_v + cbar_v)^J_v
            factors = []
            for v in range(N):
                factors.append([(a, math.comb(I[v], a) * (center[v] ** (I[v] - a) if I[v] - a else one))
                                for a in range(I[v] + 1)])
            for v in range(N):
                factors.append([(b, math.comb(J[v], b) * (ccenter[v] ** (J[v] - b) if J[v] - b else one))
                                for b in range(J[v] + 1)])
            for combo in itertools.product(*factors):
                w = one
                for _, f in combo:
                    w = w * f
                key = (tuple(x[0] for x in combo[:N]), tuple(x[0] for x in combo[N:]))
                term = c * w
                out[key] = out[key] + term if key in out else term
        order = max(self.max_order, self.degree())
        return TruncatedSeries(N, order, out, self.shape, True)

    # -- transcendental functions on unit-constant scalars ----------------------
    def _split_unit(self, op: str):
        if self.shape != ():
            raise SeriesError(f"{op}: needs a scalar series")
        z = (0,) * self.num_vars
        c0 = self._coeffs.get((z, z), QQi(0) if self.exact else 0j)
        rest = TruncatedSeries(self.num_vars, self.max_order,
                               {k: c for k, c in self._coeffs.items() if k != (z, z)}, (), self.polynomial)
        return c0, rest

    def log_unit(self) -> "TruncatedSeries":
        c0, x = self._split_unit("log_unit")
        if (c0 != 1) if self.exact else abs(complex(c0) - 1) > 1e-12:
            raise SeriesError(f"log_unit: constant term must be 1, got {c0!r}; normalize first")
        min_order = min((sum(I) + sum(J) for I, J in x.keys()), default=None)
        out = TruncatedSeries.zero(self.num_vars, self.max_order)
        if min_order is None:
            return out
        power = x
        k = 1
        while power and k * min_order <= self.max_order:
            coef = QQi(Fraction((-1) ** (k + 1), k)) if self.exact else ((-1) ** (k + 1)) / k
            out = out + power.scale(coef)
            k += 1
            power = power * x
        return TruncatedSeries(self.num_vars, self.max_order, dict(out.items()), (), False)

    def exp_unit(self) -> "TruncatedSeries":
        """exp of a scalar series with zero constant term."""
        c0, x = self._split_unit("exp_unit")
        if c0 != 0:
            raise SeriesError("exp_unit: constant term must be 0")
        out = TruncatedSeries.constant(QQi(1), self.num_vars, self.max_order)
        power = TruncatedSeries.constant(QQi(1), self.num_vars, self.max_order)
        k = 1
        while True:
            power = (power * x).scale(QQi(Fraction(1, k)) if self.exact else 1.0 / k)
            if not power:
                break
            out = out + power
            k += 1
            if k > self.max_order + 1:
                break
        return out

    def __bool__(self):
        return bool(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if (self.num_vars, self.shape) != (other.num_vars, other.shape):
            return False
        if set(self._coeffs) != set(other._coeffs):
            return False
        for k, c in self._coeffs.items():
            d = other._coeffs[k]
            if isinstance(c, np.ndarray):
                if not np.array_equal(c, d):
                    return False
            elif c != d:
                return False
        return True

    __hash__ = None

    def max_abs_difference(self, other: "TruncatedSeries") -> float:
        diff = self - other.with_order(self.max_order) if other.max_order != self.max_order else self - other
        return max((float(np.max(np.abs(as_float_array(np.asarray(c, dtype=object) if _coef_exact(c) else c))))
                    for c in diff._coeffs.values()), default=0.0)

    def __repr__(self):
        terms = []
        for (I, J), c in list(self._coeffs.items())[:8]:
            mono = "".join(f"t{v + 1}^{k}" for v, k in enumerate(I) if k)
            mono += "".join(f"tb{v + 1}^{k}" for v, k in enumerate(J) if k)
            terms.append(f"{c}*{mono or '1'}")
        more = " + ..." if len(self._coeffs) > 8 else ""
        return f"TruncatedSeries(N={self.num_vars}, order={self.max_order}: {' + '.join(terms) or '0'}{more})"


def matrix_exp_nilpotent_series(x: TruncatedSeries) -> TruncatedSeries:
    """exp of a square-matrix-valued series with zero constant part (nilpotent in degree)."""
    n = x.shape[0]
    ident = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            ident[i, j] = QQi(1 if i == j else 0)
    out = TruncatedSeries.constant(ident, x.num_vars, x.max_order)
    power = out
    k = 1
    while True:
        power = (power * x).scale(QQi(1) / k if x.exact else 1.0 / k)
        if not power:
            break
        out = out + power
        k += 1
    return out
