"""The independence test statistics W1-W7.

W2, W6 and W7 are functions of the Spearman matrix only and are therefore
distribution free. W1, W3, W4 and W5 are Pearson-based comparison baselines.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import nulls
from .moments import K_MAX, MomentParams, cov_g, mean_tr
from .ranks import DataMatrix, SpearmanMatrix, TieWarning, build_ensemble, pearson_matrix, spearman_matrix
from .spectral import NotPositiveDefinite, eigenvalues, log_det, max_offdiag_abs

STATISTICS = ("W1", "W2", "W3", "W4", "W5", "W6", "W7")
RANK_STATISTICS = ("W2", "W6", "W7")
PEARSON_STATISTICS = ("W1", "W3", "W4", "W5")

NULL_OF = {
    "W1": nulls.TW1,
    "W2": nulls.STD_NORMAL,
    "W3": nulls.STD_NORMAL,
    "W4": nulls.STD_NORMAL,
    "W5": nulls.GUMBEL_W5,
    "W6": nulls.GUMBEL_W6,
    "W7": nulls.STD_NORMAL,
}
DEFAULT_SIDEDNESS = {
    "W1": nulls.UPPER,
    "W2": nulls.TWO_SIDED,
    "W3": nulls.TWO_SIDED,
    "W4": nulls.TWO_SIDED,
    "W5": nulls.UPPER,
    "W6": nulls.UPPER,
    "W7": nulls.TWO_SIDED,
}


class UndefinedStatistic(ValueError):
    """The statistic is not defined for this input (e.g. W4 when p >= n - 1)."""

    def __init__(self, statistic: str, reason: str):
        super().__init__(f"{statistic} is undefined: {reason}")
        self.statistic = statistic
        self.reason = reason


class FormulaError(ArithmeticError):
    """The closed-form variance is not positive at these parameters."""


@dataclass(frozen=True)
class TestConfig:
    statistic: str = "W7"
    k: int = 4
    delta: float = 0.5
    alpha: float = 0.05
    sidedness: str | None = None
    # W5 Gumbel constant; None means n/p
    ratio: float | None = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        stat = self.statistic.upper()
        if stat not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        object.__setattr__(self, "statistic", stat)
        if not 2 <= self.k <= K_MAX:
            raise ValueError(f"k={self.k} outside [2, {K_MAX}]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta={self.delta} outside (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha={self.alpha} outside (0, 1)")
        side = self.sidedness or DEFAULT_SIDEDNESS[stat]
        if side not in nulls.SIDEDNESS:
            raise ValueError(f"unknown sidedness {side!r}")
        if side == nulls.TWO_SIDED and NULL_OF[stat] != nulls.STD_NORMAL:
            raise ValueError(f"{stat} has a one-sided null; two_sided is not available")
        object.__setattr__(self, "sidedness", side)


@dataclass(frozen=True)
class TestReport:
    statistic: str
    value: float
    null_dist: str
    p_value: float
    reject: bool
    alpha: float
    sidedness: str
    diagnostics: dict = field(default_factory=dict)

    __test__ = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "value": self.value,
            "null_dist": self.null_dist,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "sidedness": self.sidedness,
            "diagnostics": dict(self.diagnostics),
        }


def _report(statistic: str, value: float, alpha: float, sidedness: str | None,
            diagnostics: dict, ratio: float | None = None) -> TestReport:
    dist = NULL_OF[statistic]
    side = sidedness or DEFAULT_SIDEDNESS[statistic]
    p, saturated = nulls.p_value(value, dist, side, ratio=ratio)
    if saturated:
        diagnostics = {**diagnostics, "p_value_saturated": True}
    return TestReport(
        statistic=statistic,
        value=float(value),
        null_dist=dist,
        p_value=p,
        reject=bool(p < alpha),
        alpha=alpha,
        sidedness=side,
        diagnostics=diagnostics,
    )


def _warn_ties(S: SpearmanMatrix, statistic: str) -> None:
    if S.has_ties:
        warnings.warn(f"{statistic} computed from data with ties; the null law assumes none",
                      TieWarning, stacklevel=3)


# --- rank-based statistics -------------------------------------------------


def w2_value(S: SpearmanMatrix, k: int) -> tuple[float, dict]:
    params = MomentParams(S.n, S.p)
    var = cov_g(k, k, params.c)
    if not var > 0:
        raise FormulaError(f"Var(G_{k}) = {var} at n={S.n}, p={S.p}")
    trk = float(np.sum(eigenvalues(S.S) ** k))
    mean = mean_tr(params, k)
    return (trk - mean) / math.sqrt(var), {"tr_S_k": trk, "mean_tr": mean, "var_G": var, "k": k}


def w6_value(S: SpearmanMatrix) -> tuple[float, dict]:
    if S.p < 2:
        raise ValueError("W6 needs p >= 2")
    rho_max, i, j = max_offdiag_abs(S.S)
    rho_max *= S.p / S.n
    logp = math.log(S.p)
    value = S.n * rho_max**2 - 4.0 * logp + math.log(logp)
    return value, {"max_abs_rho": rho_max, "pair": [i, j]}


def compute_w2(S: SpearmanMatrix, k: int = 4, alpha: float = 0.05,
               sidedness: str | None = None) -> TestReport:
    """Standardized trace power ``(tr S^k - E tr S^k) / sqrt(Var G_k)``, N(0,1) null."""
    _warn_ties(S, "W2")
    value, diag = w2_value(S, k)
    return _report("W2", value, alpha, sidedness, diag)


def compute_w6(S: SpearmanMatrix, alpha: float = 0.05) -> TestReport:
    """Largest off-diagonal Spearman rho, ``n rho_max^2 - 4 log p + log log p``."""
    _warn_ties(S, "W6")
    value, diag = w6_value(S)
    return _report("W6", value, alpha, nulls.UPPER, diag)


def compute_w7(S: SpearmanMatrix, k: int = 4, delta: float = 0.5, alpha: float = 0.05,
               sidedness: str | None = None) -> TestReport:
    """``W2 + n^-delta W6``, referred to N(0,1)."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} outside (0, 1)")
    _warn_ties(S, "W7")
    w2, d2 = w2_value(S, k)
    w6, d6 = w6_value(S)
    value = w2 + S.n ** (-delta) * w6
    diag = {**d2, **d6, "W2": w2, "W6": w6, "delta": delta}
    return _report("W7", value, alpha, sidedness, diag)


# --- Pearson-based reference statistics -----------------------------------


def _values(data) -> np.ndarray:
    return data.values if isinstance(data, DataMatrix) else DataMatrix(np.asarray(data)).values


def w1_value(R: np.ndarray, n: int) -> float:
    p = R.shape[0]
    lam = float(eigenvalues(R)[-1])
    sn, sp = math.sqrt(n), math.sqrt(p)
    return (n * lam - (sp + sn) ** 2) / ((sn + sp) * (1 / sp + 1 / sn) ** (1 / 3))


def w3_value(R: np.ndarray, n: int) -> float:
    p = R.shape[0]
    iu = np.triu_indices(p, k=1)
    ssq = float(np.sum(R[iu] ** 2))
    return (ssq - p * (p - 1) / (2 * n)) / (p / n)


def w4_value(R: np.ndarray, n: int) -> float:
    p = R.shape[0]
    if p >= n - 1:
        raise UndefinedStatistic("W4", f"needs p < n - 1, got n={n}, p={p}")
    try:
        ld = log_det(R)
    except NotPositiveDefinite as exc:
        raise UndefinedStatistic("W4", str(exc)) from exc
    y = p / (n - 1)
    centre = (p - n + 1.5) * math.log1p(-y) - (n - 2) * y
    scale = math.sqrt(-2.0 * (y + math.log1p(-y)))
    return (ld - centre) / scale


def w5_value(R: np.ndarray, n: int) -> float:
    r_max, _, _ = max_offdiag_abs(R)
    logn = math.log(n)
    return n * r_max**2 - 4.0 * logn + math.log(logn)


_REFERENCE = {"W1": w1_value, "W3": w3_value, "W4": w4_value, "W5": w5_value}


def compute_reference(data, kind: str, alpha: float = 0.05, sidedness: str | None = None,
                      ratio: float | None = None) -> TestReport:
    """Pearson-based comparison statistic ``kind`` in {W1, W3, W4, W5}.

    ``ratio`` is the constant of the W5 Gumbel limit and defaults to ``n/p``.
    Raises :class:`UndefinedStatistic` for W4 when ``p >= n - 1``.
    """
    kind = kind.upper()
    if kind not in _REFERENCE:
        raise ValueError(f"{kind!r} is not a Pearson-based statistic")
    values = _values(data)
    n, p = values.shape
    if kind == "W4" and p >= n - 1:
        raise UndefinedStatistic("W4", f"needs p < n - 1, got n={n}, p={p}")
    R = pearson_matrix(values).R
    value = _REFERENCE[kind](R, n)
    diag = {"n": n, "p": p}
    if kind == "W5":
        ratio = n / p if ratio is None else ratio
        diag["ratio"] = ratio
    return _report(kind, value, alpha, sidedness, diag, ratio=ratio)


# --- orchestration ---------------------------------------------------------


def run_test(data, config: TestConfig, tie_policy: str = "average", *,
             spearman: SpearmanMatrix | None = None) -> TestReport:
    """Run one configured test on raw data (n x p, observations in rows)."""
    stat = config.statistic
    if stat in RANK_STATISTICS:
        if spearman is None:
            spearman = spearman_matrix(build_ensemble(_values(data), tie_policy))
        if stat == "W2":
            return compute_w2(spearman, config.k, config.alpha, config.sidedness)
        if stat == "W6":
            return compute_w6(spearman, config.alpha)
        return compute_w7(spearman, config.k, config.delta, config.alpha, config.sidedness)
    return compute_reference(data, stat, config.alpha, config.sidedness, config.ratio)


def run_tests(data, configs, tie_policy: str = "average") -> list[TestReport | UndefinedStatistic]:
    """Run several tests sharing one rank ensemble.

    Undefined statistics are returned as their :class:`UndefinedStatistic`
    instead of aborting the others.
    """
    values = _values(data)
    spearman = None
    out = []
    for cfg in configs:
        if cfg.statistic in RANK_STATISTICS and spearman is None:
            spearman = spearman_matrix(build_ensemble(values, tie_policy))
        try:
            out.append(run_test(values, cfg, tie_policy, spearman=spearman))
        except UndefinedStatistic as exc:
            out.append(exc)
    return out


def with_sidedness(config: TestConfig, sidedness: str) -> TestConfig:
    return replace(config, sidedness=sidedness)
