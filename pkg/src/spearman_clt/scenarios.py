"""Data generators for the null and alternative scenarios of the size/power study.

Every generator is a deterministic function of ``(rng, n, p)`` and returns an
``n x p`` array with observations in rows.
"""
from __future__ import annotations

import numpy as np

SCENARIOS = ("H01", "H02", "H03", "Ha11", "Ha12", "Ha21", "Ha22", "Ha31", "Ha32")
NULL_SCENARIOS = ("H01", "H02", "H03")

STRONG_PAIR = 0.8
HA12_WEIGHT = 4.0
HA22_DIVISOR = 7.0
HA32_WEIGHT = 12.0


class CovarianceError(ValueError):
    """The requested Gaussian covariance is not positive definite."""

    def __init__(self, min_eigenvalue: float, shape: int):
        super().__init__(
            f"{shape}x{shape} covariance is not positive definite "
            f"(min eigenvalue {min_eigenvalue:.3e})"
        )
        self.min_eigenvalue = min_eigenvalue


def normalize_scenario(name: str) -> str:
    """Accept ``Ha11``, ``ha11``, ``Ha1-1``, ``H_{a,1-1}`` style names."""
    key = name.replace("_", "").replace("{", "").replace("}", "").replace(",", "").replace("-", "")
    for s in SCENARIOS:
        if key.lower() == s.lower():
            return s
    raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


def cauchy(rng: np.random.Generator, size) -> np.ndarray:
    return np.tan(np.pi * (rng.random(size) - 0.5))


def student_t4(rng: np.random.Generator, size) -> np.ndarray:
    z = rng.standard_normal(size)
    # chi^2_4 = 2 (E1 + E2) with E ~ Exp(1)
    chi2 = 2.0 * (rng.standard_exponential(size) + rng.standard_exponential(size))
    return z / np.sqrt(chi2 / 4.0)


def covariance_root(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive-definite covariance."""
    w, V = np.linalg.eigh(cov)
    if w[0] <= 0:
        raise CovarianceError(float(w[0]), cov.shape[0])
    return (V * np.sqrt(w)) @ V.T


def one_pair_cov(m: int, strength: float = STRONG_PAIR) -> np.ndarray:
    """``I + C`` with ``c12 = c21 = strength``."""
    cov = np.eye(m)
    cov[0, 1] = cov[1, 0] = strength
    return cov


def equicorrelated_cov(m: int, off: float) -> np.ndarray:
    """``I + D`` with every off-diagonal entry equal to ``off``."""
    return (1.0 - off) * np.eye(m) + off * np.ones((m, m))


def gaussian(rng: np.random.Generator, n: int, cov: np.ndarray) -> np.ndarray:
    root = covariance_root(cov)
    return rng.standard_normal((n, cov.shape[0])) @ root


def _thirds(p: int) -> tuple[int, int]:
    if p < 6:
        raise ValueError(f"mixed-margin scenarios need p >= 6, got {p}")
    return p // 3, (2 * p) // 3


def _mixed_tail(rng, n: int, p: int) -> np.ndarray:
    # Cauchy block then t(4) block, as in columns floor(p/3)+1 .. p of H03
    a, b = _thirds(p)
    return np.hstack([cauchy(rng, (n, b - a)), student_t4(rng, (n, p - b))])


def generate(scenario: str, n: int, p: int, rng: np.random.Generator,
             strength: float = STRONG_PAIR) -> np.ndarray:
    """Draw one ``n x p`` data set from ``scenario``.

    ``strength`` is the single large covariance entry of ``Ha11``/``Ha31``.
    """
    s = normalize_scenario(scenario)
    if n < 2 or p < 2:
        raise ValueError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
    if s == "H01":
        return rng.standard_normal((n, p))
    if s == "H02":
        return cauchy(rng, (n, p))
    if s == "H03":
        a, _ = _thirds(p)
        return np.hstack([rng.standard_normal((n, a)), _mixed_tail(rng, n, p)])
    if s == "Ha11":
        return gaussian(rng, n, one_pair_cov(p, strength))
    if s == "Ha12":
        return gaussian(rng, n, equicorrelated_cov(p, HA12_WEIGHT / p))
    if s == "Ha21":
        X = cauchy(rng, (n, p))
        Y = X.copy()
        Y[:, 0] = X[:, 0] + STRONG_PAIR * X[:, 1]
        Y[:, 1] = X[:, 1] + STRONG_PAIR * X[:, 0]
        return Y
    if s == "Ha22":
        X = cauchy(rng, (n, p))
        others = X.sum(axis=1, keepdims=True) - X
        return X + others / (HA22_DIVISOR * p)
    if s == "Ha31":
        a, _ = _thirds(p)
        return np.hstack([gaussian(rng, n, one_pair_cov(a, strength)), _mixed_tail(rng, n, p)])
    if s == "Ha32":
        a, _ = _thirds(p)
        return np.hstack([gaussian(rng, n, equicorrelated_cov(a, HA32_WEIGHT / p)),
                          _mixed_tail(rng, n, p)])
    raise AssertionError(s)  # pragma: no cover
