"""Closed-form mean and covariance of the trace powers ``tr S^k``.

Every binomial sum is evaluated with :class:`fractions.Fraction` so the
result is exact for rational ``c`` and converted to float once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from numbers import Rational

import numpy as np

K_MAX = 20


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"non-finite ratio {x!r}")
    return Fraction(x)


def _check_k(k: int, name: str = "k") -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise TypeError(f"{name} must be an integer, got {type(k).__name__}")
    if not 1 <= k <= K_MAX:
        raise ValueError(f"{name}={k} outside [1, {K_MAX}]")


@dataclass(frozen=True)
class MomentParams:
    """Dimensions of the ensemble and the derived ratios.

    ``c`` is ``n/p`` and ``c_tilde`` is ``(n-1)/p``, both exact rationals.
    """

    n: int
    p: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")

    @property
    def c(self) -> Fraction:
        return Fraction(self.n, self.p)

    @property
    def c_tilde(self) -> Fraction:
        return Fraction(self.n - 1, self.p)


def mp_moment_exact(k: int, ratio) -> Fraction:
    """k-th Marchenko-Pastur moment as an exact rational."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    y = _as_fraction(ratio)
    if y <= 0:
        raise ValueError(f"ratio must be positive, got {ratio!r}")
    return sum(
        (Fraction(comb(k, j) * comb(k - 1, j), j + 1) * y**j for j in range(k)),
        Fraction(0),
    )


def mp_moment(k: int, ratio) -> float:
    """k-th moment of the Marchenko-Pastur law with ratio ``ratio``.

    ``sum_{j<k} C(k,j) C(k-1,j) ratio^j / (j+1)``
    """
    return float(mp_moment_exact(k, ratio))


def _sqrt_binomial_sum(c: Fraction, k: int) -> Fraction:
    # (1 - sqrt c)^{2k} + (1 + sqrt c)^{2k}: the odd powers of sqrt c cancel
    return 2 * sum((comb(2 * k, 2 * i) * c**i for i in range(k + 1)), Fraction(0))


def mean_tr_terms(params: MomentParams, k: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """The four summands of the expansion of ``E tr S^k``, exactly."""
    _check_k(k)
    n, c = params.n, params.c
    u = (1 - c) / c  # (p - n) / n

    term1 = Fraction(n**k, (n - 1) ** (k - 1)) * mp_moment_exact(k, params.c_tilde)
    term2 = -Fraction(1, 2) * sum((comb(k, j) ** 2 * c**j for j in range(k + 1)), Fraction(0))
    term3 = 2 * c ** (1 + k) * sum(
        (
            comb(k, j) * u**j * (comb(2 * k - j, k - 1) - comb(2 * k + 1 - j, k - 1))
            for j in range(k + 1)
        ),
        Fraction(0),
    )
    term4 = Fraction(1, 4) * _sqrt_binomial_sum(c, k)
    return term1, term2, term3, term4


@lru_cache(maxsize=512)
def mean_tr_exact(params: MomentParams, k: int) -> Fraction:
    return sum(mean_tr_terms(params, k), Fraction(0))


def mean_tr(params: MomentParams, k: int) -> float:
    """Asymptotic expansion of ``E tr S^k`` at finite ``(n, p)`` with ``c = n/p``.

    The vanishing remainder of the expansion is dropped.
    """
    return float(mean_tr_exact(params, k))


def cov_g_exact(k1: int, k2: int, c) -> Fraction:
    """Limiting covariance of ``tr S^k1`` and ``tr S^k2`` as an exact rational."""
    _check_k(k1, "k1")
    _check_k(k2, "k2")
    return _cov_g_exact(int(k1), int(k2), _as_fraction(c))


@lru_cache(maxsize=1024)
def _cov_g_exact(k1: int, k2: int, c: Fraction) -> Fraction:
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    # canonical argument order makes the result bit-symmetric
    if k1 > k2:
        k1, k2 = k2, k1
    u = (1 - c) / c

    first = Fraction(0)
    for j1 in range(k1):
        for j2 in range(k2 + 1):
            inner = sum(
                l * comb(2 * k1 - 1 - (j1 + l), k1 - 1) * comb(2 * k2 - 1 - j2 + l, k2 - 1)
                for l in range(1, k1 - j1 + 1)
            )
            if inner:
                first += comb(k1, j1) * comb(k2, j2) * u ** (j1 + j2) * inner

    second = Fraction(0)
    for j1 in range(k1 + 1):
        for j2 in range(k2 + 1):
            second += (
                comb(k1, j1)
                * comb(k2, j2)
                * u ** (j1 + j2)
                * comb(2 * k1 - j1, k1 - 1)
                * comb(2 * k2 - j2, k2 - 1)
            )

    return 2 * c ** (k1 + k2) * first - 2 * c ** (k1 + k2 + 1) * second


def cov_g(k1: int, k2: int, c) -> float:
    """Limiting covariance ``Cov(G_k1, G_k2)`` of the centred trace powers."""
    return float(cov_g_exact(k1, k2, c))


@dataclass
class CltMoments:
    """Mean and covariance table for a set of trace powers at fixed ``(n, p)``."""

    params: MomentParams
    ks: tuple[int, ...]
    mean_tr: dict[int, float] = field(init=False)
    cov_G: dict[tuple[int, int], float] = field(init=False)

    def __post_init__(self):
        self.ks = tuple(sorted(set(self.ks)))
        self.mean_tr = {k: mean_tr(self.params, k) for k in self.ks}
        self.cov_G = {(a, b): cov_g(a, b, self.params.c) for a in self.ks for b in self.ks}

    @property
    def var_G(self) -> dict[int, float]:
        return {k: self.cov_G[k, k] for k in self.ks}

    def cov_matrix(self) -> np.ndarray:
        return np.array([[self.cov_G[a, b] for b in self.ks] for a in self.ks])
