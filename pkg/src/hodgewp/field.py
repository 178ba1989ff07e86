"""Coefficient field: exact Gaussian rationals with demotion to binary64 complex."""

from __future__ import annotations

import numbers
from fractions import Fraction

import numpy as np
from gmpy2 import mpq, mpz

_MPQ0 = mpq(0)


_RATIONAL_TYPES = (int, Fraction, type(mpq()), type(mpz()))


def _new(re, im):
    obj = object.__new__(QQi)
    obj.re = re
    obj.im = im
    return obj


class QQi:
    """Exact complex number ``re + im*i`` with rational parts (gmpy2 mpq)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    # -- coercion ---------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, QQi):
            return other
        if isinstance(other, _RATIONAL_TYPES) and not isinstance(other, bool):
            return _new(mpq(other), _MPQ0)
        return None

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = other if isinstance(other, QQi) else self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return complex(self) + other
        return _new(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = other if isinstance(other, QQi) else self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return complex(self) - other
        return _new(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return other - complex(self)
        return _new(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = other if isinstance(other, QQi) else self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return complex(self) * other
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return _new(a * c, _MPQ0)
        return _new(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return complex(self) / other
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("QQi division by zero")
        return _new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if not isinstance(other, numbers.Complex):
                return NotImplemented
            return other / complex(self)
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int):
            return complex(self) ** k
        if k < 0:
            return QQi(1) / (self ** (-k))
        out, base = QQi(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __neg__(self):
        return _new(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return _new(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        return abs(complex(self))

    # -- comparison / conversion -----------------------------------------
    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __float__(self):
        if self.im != 0:
            raise TypeError(f"{self!r} is not real")
        return float(self.re)

    def __repr__(self):
        if self.im == 0:
            return f"QQi({self.re})"
        return f"QQi({self.re}, {self.im})"

    def fractions(self) -> tuple[Fraction, Fraction]:
        return (Fraction(int(self.re.numerator), int(self.re.denominator)),
                Fraction(int(self.im.numerator), int(self.im.denominator)))

    __str__ = __repr__


I = QQi(0, 1)
ZERO = QQi(0)
ONE = QQi(1)


def is_exact_scalar(x) -> bool:
    return isinstance(x, (QQi,) + _RATIONAL_TYPES) and not isinstance(x, bool)


def exact(x) -> QQi:
    """Convert an int, Fraction, QQi or (re, im) pair of rationals to QQi."""
    if isinstance(x, QQi):
        return x
    if isinstance(x, _RATIONAL_TYPES):
        return QQi(x)
    if isinstance(x, tuple) and len(x) == 2:
        return QQi(x[0], x[1])
    raise TypeError(f"cannot represent {x!r} exactly")


def scalar(x):
    """Normalize a scalar: exact inputs become QQi, everything else complex."""
    if is_exact_scalar(x) or isinstance(x, tuple):
        return exact(x)
    if isinstance(x, numbers.Complex):
        return complex(x)
    raise TypeError(f"unsupported scalar {x!r}")


def ipow(k: int) -> QQi:
    """(sqrt(-1))**k exactly."""
    return [QQi(1), QQi(0, 1), QQi(-1), QQi(0, -1)][k % 4]


def array_is_exact(a) -> bool:
    a = np.asarray(a)
    return a.dtype == object and all(is_exact_scalar(x) for x in a.flat)


def as_exact_array(a) -> np.ndarray:
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = exact(x)
    return out


def as_float_array(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(complex)
    out = np.empty(a.shape, dtype=complex)
    for idx, x in np.ndenumerate(a):
        out[idx] = complex(x)
    return out


def coerce_array(a, exact_mode: bool) -> np.ndarray:
    return as_exact_array(a) if exact_mode else as_float_array(a)


def zeros(shape, exact_mode: bool) -> np.ndarray:
    if exact_mode:
        out = np.empty(shape, dtype=object)
        out[...] = ZERO
        # np fills with the same object; QQi is immutable so sharing is safe
        return out
    return np.zeros(shape, dtype=complex)


def eye(n: int, exact_mode: bool) -> np.ndarray:
    out = zeros((n, n), exact_mode)
    for i in range(n):
        out[i, i] = ONE if exact_mode else 1.0
    return out


def conj(a):
    """Entrywise complex conjugate for exact or float arrays and scalars."""
    if isinstance(a, np.ndarray):
        if a.dtype == object:
            out = np.empty(a.shape, dtype=object)
            for idx, x in np.ndenumerate(a):
                out[idx] = x.conjugate()
            return out
        return np.conj(a)
    return a.conjugate()


def is_zero(x, tol: float = 0.0) -> bool:
    if is_exact_scalar(x):
        return not exact(x)
    return abs(x) <= tol


def max_abs(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(max(abs(complex(x)) for x in a.flat))


def to_json_scalar(x):
    """Exact values become [[num, den], [num, den]]; floats become [re, im] strings."""
    if is_exact_scalar(x):
        q = exact(x)
        return [[int(q.re.numerator), int(q.re.denominator)], [int(q.im.numerator), int(q.im.denominator)]]
    z = complex(x)
    return [repr(z.real), repr(z.imag)]


def from_json_scalar(v):
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return QQi(v)
    if isinstance(v, str):
        return complex(float(v))
    if isinstance(v, list) and len(v) == 2:
        re, im = v
        if isinstance(re, list) and isinstance(im, list):
            return QQi(Fraction(re[0], re[1]), Fraction(im[0], im[1]))
        if isinstance(re, int) and isinstance(im, int) and not isinstance(re, bool):
            # a bare rational num/den pair
            return QQi(Fraction(re, im))
        if isinstance(re, str) and isinstance(im, str):
            return complex(float(re), float(im))
    raise ValueError(f"unrecognized scalar encoding {v!r}")
