"""Seeded random models and sample points."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .family import VHSModel, build_cy3_model
from .field import QQi


def rng_from_seed(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_rational(rng, bound: int = 4, den: int = 5, complex_part: bool = False) -> QQi:
    re = Fraction(int(rng.integers(-bound * den, bound * den + 1)), int(rng.integers(1, den + 1)))
    im = Fraction(int(rng.integers(-bound * den, bound * den + 1)), int(rng.integers(1, den + 1))) \
        if complex_part else Fraction(0)
    return QQi(re, im)


def random_symmetric_tensor(rng, N: int, bound: int = 3, den: int = 4) -> np.ndarray:
    C = np.empty((N, N, N), dtype=object)
    for key in itertools.combinations_with_replacement(range(N), 3):
        v = random_rational(rng, bound, den)
        for p in set(itertools.permutations(key)):
            C[p] = v
    return C


def random_cy3_model(rng, N: int, order: int = 6, extras: bool = False, nonzero_A: bool = True) -> VHSModel:
    """CY3 model with random rational Yukawa tensor and optionally random order-2/3 corrections."""
    while True:
        C = random_symmetric_tensor(rng, N)
        if not nonzero_A or any(C.flat):
            break
    extra = {}
    if extras:
        d = 2 * N + 2
        for I in _indices(N, 2) + _indices(N, 3):
            if rng.random() < 0.5:
                continue
            v = np.empty(d, dtype=object)
            v[:] = QQi(0)
            for k in range(1 + N, 1 + 2 * N):
                v[k] = random_rational(rng, 2, 3, complex_part=True)
            if sum(I) == 3:
                v[d - 1] = random_rational(rng, 2, 3, complex_part=True)
            extra[I] = v
    return build_cy3_model(C, order, extra)


def _indices(N: int, k: int) -> list[tuple]:
    out = []
    for combo in itertools.combinations_with_replacement(range(N), k):
        out.append(tuple(combo.count(i) for i in range(N)))
    return out


def random_point(rng, N: int, radius: float = 0.3) -> np.ndarray:
    """Uniform point in the complex ball of the given radius."""
    z = rng.normal(size=N) + 1j * rng.normal(size=N)
    z /= np.linalg.norm(z)
    return z * radius * rng.random() ** (1.0 / (2 * N))


def random_rational_point(rng, N: int, radius: Fraction = Fraction(1, 2), den: int = 16) -> list:
    """Rational point with every coordinate inside the square |Re|, |Im| < radius / sqrt(2N)."""
    out = []
    lim = int(radius * den / np.sqrt(2 * N))
    for _ in range(N):
        out.append(QQi(Fraction(int(rng.integers(-lim, lim + 1)), den),
                       Fraction(int(rng.integers(-lim, lim + 1)), den)))
    return out
