"""Independence tests for high-dimensional data built on Spearman's rank
correlation matrix, with a central limit theory for its trace powers."""
from __future__ import annotations

__version__ = "0.1.0"

from .moments import CltMoments, MomentParams, cov_g, cov_g_exact, mean_tr, mean_tr_exact
from .ranks import (
    DataMatrix,
    PearsonMatrix,
    RankEnsemble,
    SpearmanMatrix,
    TieError,
    TieWarning,
    build_ensemble,
    compute_ranks,
    pearson_matrix,
    spearman_matrix,
)
from .spectral import NotPositiveDefinite, SpectralSummary, summarize, trace_power
from .stats import (
    STATISTICS,
    TestConfig,
    TestReport,
    UndefinedStatistic,
    compute_w2,
    compute_w6,
    compute_w7,
    run_test,
    run_tests,
)

__all__ = [
    "CltMoments", "DataMatrix", "MomentParams", "NotPositiveDefinite", "PearsonMatrix",
    "RankEnsemble", "STATISTICS", "SpearmanMatrix", "SpectralSummary", "TestConfig",
    "TestReport", "TieError", "TieWarning", "UndefinedStatistic", "__version__",
    "build_ensemble", "compute_ranks", "compute_w2", "compute_w6", "compute_w7", "cov_g",
    "cov_g_exact", "mean_tr", "mean_tr_exact", "pearson_matrix", "run_test", "run_tests",
    "spearman_matrix", "summarize", "trace_power",
]
