"""Spectral quantities of symmetric matrices used by the test statistics."""
from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass

import numpy as np
from scipy import linalg

SYMMETRY_TOL = 1e-9
PD_THRESHOLD = 1e-12
TRACE_POWER_MAX = 32


class NotPositiveDefinite(ValueError):
    """The matrix has an eigenvalue at or below the positive-definiteness threshold."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


def _check_symmetric(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return M


class EigenCache:
    """Eigenvalues keyed by the identity of a read-only matrix object.

    Writeable arrays bypass the cache since they could change under the key.
    Entries drop out when the matrix is garbage collected. Reads are lock-free;
    inserts take a lock.
    """

    def __init__(self):
        self._store: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def get(self, M: np.ndarray) -> np.ndarray:
        key = id(M)
        ev = self._store.get(key)
        if ev is not None:
            return ev
        ev = linalg.eigvalsh(_check_symmetric(M), driver="evr")
        ev.setflags(write=False)
        with self._lock:
            if key not in self._store:
                self._store[key] = ev
                try:
                    weakref.finalize(M, self._store.pop, key, None)
                except TypeError:
                    # not weak-referenceable: do not keep it
                    del self._store[key]
        return ev

    def __len__(self):
        return len(self._store)


_CACHE = EigenCache()


def eigenvalues(M, cache: EigenCache | None = _CACHE) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    if cache is None or not isinstance(M, np.ndarray) or M.flags.writeable:
        return linalg.eigvalsh(_check_symmetric(M), driver="evr")
    return cache.get(M)


def _check_k(k: int) -> None:
    if not 1 <= int(k) <= TRACE_POWER_MAX or int(k) != k:
        raise ValueError(f"k={k} outside [1, {TRACE_POWER_MAX}]")


def trace_power(M, k: int, method: str = "eig") -> float:
    """``tr M^k`` for symmetric ``M``.

    ``method="eig"`` sums ``lambda_i^k`` over the (cached) eigenvalues;
    ``method="matmul"`` uses repeated squaring and serves as a cross-check.
    """
    _check_k(k)
    if method == "eig":
        ev = eigenvalues(M)
        return float(np.sum(ev**k))
    if method == "matmul":
        M = _check_symmetric(M)
        return float(np.trace(np.linalg.matrix_power(M, int(k))))
    raise ValueError(f"unknown method {method!r}")


def largest_eigenvalue(M) -> float:
    return float(eigenvalues(M)[-1])


def log_det(M) -> float:
    """Log-determinant of a symmetric positive-definite matrix.

    Raises :class:`NotPositiveDefinite` when the smallest eigenvalue is at or
    below ``1e-12``; this is how a rank-deficient correlation matrix surfaces.
    """
    ev = eigenvalues(M)
    if ev[0] <= PD_THRESHOLD:
        raise NotPositiveDefinite(float(ev[0]))
    return float(np.sum(np.log(ev)))


def max_offdiag_abs(M) -> tuple[float, int, int]:
    """Largest ``|M[i, j]|`` over ``i < j`` with its (0-based) index pair.

    Ties go to the lexicographically smallest pair.
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    if M.ndim != 2 or p != M.shape[1] or p < 2:
        raise ValueError(f"expected a square matrix with p >= 2, got shape {M.shape}")
    iu, ju = np.triu_indices(p, k=1)
    vals = np.abs(M[iu, ju])
    # argmax returns the first maximum; triu_indices is row-major, i.e. lexicographic
    at = int(np.argmax(vals))
    return float(vals[at]), int(iu[at]), int(ju[at])


@dataclass
class SpectralSummary:
    trace_powers: dict[int, float]
    lambda_max: float
    max_offdiag: float
    max_offdiag_pair: tuple[int, int]
    log_det: float | None = None


def summarize(M, ks=(1, 2, 3, 4), with_log_det: bool = False) -> SpectralSummary:
    ev = eigenvalues(M)
    value, i, j = max_offdiag_abs(M)
    ld = None
    if with_log_det:
        try:
            ld = log_det(M)
        except NotPositiveDefinite:
            ld = None
    return SpectralSummary(
        trace_powers={k: float(np.sum(ev**k)) for k in ks},
        lambda_max=float(ev[-1]),
        max_offdiag=value,
        max_offdiag_pair=(i, j),
        log_det=ld,
    )
