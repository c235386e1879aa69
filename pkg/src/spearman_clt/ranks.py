"""Rank transform, the normalized rank ensemble, and the Spearman and Pearson matrices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

TIE_POLICIES = ("average", "error")


class TieError(ValueError):
    """Raised when a column contains ties and the tie policy is ``"error"``."""


class TieWarning(UserWarning):
    pass


def _as_data(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"data must be two-dimensional, got shape {a.shape}")
    n, p = a.shape
    if n < 2 or p < 1:
        raise ValueError(f"need n >= 2 observations and p >= 1 variables, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("data contains non-finite entries")
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Raw observations, one row per observation and one column per variable."""

    values: np.ndarray

    def __post_init__(self):
        a = _as_data(self.values)
        if a.shape[1] < 2:
            raise ValueError(f"need p >= 2 variables, got {a.shape[1]}")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def _ranks_with_ties(column: np.ndarray) -> tuple[np.ndarray, bool]:
    n = column.shape[0]
    order = np.argsort(column, kind="stable")
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.arange(1, n + 1, dtype=float)
    sorted_vals = column[order]
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    if len(starts) == n:
        return ranks, False
    ends = np.r_[starts[1:], n]
    for s, e in zip(starts, ends):
        if e - s > 1:
            # mean of the covered range s+1 .. e
            ranks[order[s:e]] = (s + 1 + e) / 2.0
    return ranks, True


def compute_ranks(column, tie_policy: str = "average") -> np.ndarray:
    """Ranks ``1..n`` of a vector; tied entries get the mid-rank under ``"average"``.

    Raises
    ------
    ValueError
        If the input contains non-finite values or has fewer than two entries.
    TieError
        If ties are present and ``tie_policy == "error"``.
    """
    ranks, _ = rank_column(column, tie_policy)
    return ranks


def rank_column(column, tie_policy: str = "average") -> tuple[np.ndarray, bool]:
    """Like :func:`compute_ranks` but also return whether ties were found."""
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    col = np.asarray(column, dtype=float)
    if col.ndim != 1 or col.shape[0] < 2:
        raise ValueError("column must be a vector with at least two entries")
    if not np.all(np.isfinite(col)):
        raise ValueError("column contains non-finite values")
    ranks, tied = _ranks_with_ties(col)
    if tied and tie_policy == "error":
        raise TieError("column contains tied values")
    return ranks, tied


@dataclass(frozen=True)
class RankEnsemble:
    """Ranks ``Q`` (p x n) and normalized ranks ``X`` (p x n) of a data matrix.

    Row ``i`` of ``X`` is ``sqrt(12 / (p (n^2 - 1))) * (Q_i - (n + 1) / 2)``.
    """

    Q: np.ndarray
    X: np.ndarray
    tie_flag: np.ndarray

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def has_ties(self) -> bool:
        return bool(self.tie_flag.any())


def normalize_ranks(Q: np.ndarray) -> np.ndarray:
    """Map a p x n rank matrix to the normalized ensemble ``X``."""
    p, n = Q.shape
    scale = np.sqrt(12.0 / (p * (n * n - 1.0)))
    return scale * (Q - (n + 1) / 2.0)


def build_ensemble(data, tie_policy: str = "average") -> RankEnsemble:
    """Rank every variable of ``data`` (n x p, observations in rows)."""
    values = data.values if isinstance(data, DataMatrix) else _as_data(data)
    n, p = values.shape
    Q = np.empty((p, n), dtype=float)
    tie_flag = np.zeros(p, dtype=bool)
    for i in range(p):
        Q[i], tie_flag[i] = rank_column(values[:, i], tie_policy)
    if tie_flag.any():
        warnings.warn(
            f"{int(tie_flag.sum())} of {p} variables contain ties; mid-ranks used",
            TieWarning,
            stacklevel=2,
        )
    X = normalize_ranks(Q)
    for a in (Q, X, tie_flag):
        a.setflags(write=False)
    return RankEnsemble(Q=Q, X=X, tie_flag=tie_flag)


@dataclass(frozen=True)
class SpearmanMatrix:
    """``S = X X^T``; ``(p/n) S[i, j]`` is the pairwise Spearman rho."""

    S: np.ndarray
    n: int
    p: int
    has_ties: bool = False

    def rho(self) -> np.ndarray:
        """Pairwise Spearman rho, clipped to [-1, 1] against rounding.

        Without ties the diagonal is exactly 1. Mid-ranks shrink the diagonal
        of tied variables below 1, and that is kept as is.
        """
        r = np.clip((self.p / self.n) * self.S, -1.0, 1.0)
        if not self.has_ties:
            np.fill_diagonal(r, 1.0)
        return r


def _symmetric_gram(A: np.ndarray) -> np.ndarray:
    try:
        from scipy.linalg.blas import dsyrk
    except ImportError:  # pragma: no cover
        G = A @ A.T
    else:
        # upper triangle only, then mirrored
        G = dsyrk(1.0, np.ascontiguousarray(A, dtype=float))
    return np.triu(G) + np.triu(G, 1).T


def spearman_matrix(ens: RankEnsemble) -> SpearmanMatrix:
    S = _symmetric_gram(ens.X)
    S.setflags(write=False)
    return SpearmanMatrix(S=S, n=ens.n, p=ens.p, has_ties=ens.has_ties)


@dataclass(frozen=True)
class PearsonMatrix:
    R: np.ndarray

    @property
    def p(self) -> int:
        return self.R.shape[0]


def pearson_matrix(data) -> PearsonMatrix:
    """Sample product-moment correlation matrix of the columns of ``data``."""
    values = data.values if isinstance(data, DataMatrix) else _as_data(data)
    centred = values - values.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centred, centred))
    scale = np.abs(values).max(axis=0)
    if np.any(norms <= 1e-14 * np.maximum(scale, 1.0) * np.sqrt(values.shape[0])):
        bad = np.flatnonzero(norms <= 1e-14 * np.maximum(scale, 1.0) * np.sqrt(values.shape[0]))
        raise ValueError(f"zero-variance column(s): {bad.tolist()}")
    U = (centred / norms).T
    R = _symmetric_gram(U)
    np.clip(R, -1.0, 1.0, out=R)
    np.fill_diagonal(R, 1.0)
    R.setflags(write=False)
    return PearsonMatrix(R=R)
