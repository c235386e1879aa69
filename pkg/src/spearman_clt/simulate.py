"""Seeded Monte Carlo estimation of size and power.

Replication ``r`` of a run draws from its own Philox stream keyed by
``SeedSequence(master_seed, spawn_key=(r,))``, so results do not depend on how
replications are split across workers.
"""
from __future__ import annotations

import math
import os
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import stats as st
from .ranks import build_ensemble, pearson_matrix, spearman_matrix
from .scenarios import NULL_SCENARIOS, SCENARIOS, generate, normalize_scenario

RNG_ALGORITHM = "numpy Philox4x64-10, SeedSequence(master_seed, spawn_key=(replication,))"
SEED_ENV = "SPEARMAN_CLT_SEED"
DEFAULT_SEED = 20151001


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, DEFAULT_SEED))


def substream(master_seed: int, replication: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(ss))


def stat_label(cfg: st.TestConfig) -> str:
    """Result key; options off their defaults are spelled out so keys stay unique."""
    opts = []
    if cfg.statistic in ("W2", "W7"):
        opts.append(f"k={cfg.k}")
    if cfg.statistic == "W7":
        opts.append(f"delta={cfg.delta:g}")
    if cfg.sidedness != st.DEFAULT_SIDEDNESS[cfg.statistic]:
        opts.append(cfg.sidedness)
    if cfg.ratio is not None:
        opts.append(f"ratio={cfg.ratio:g}")
    return cfg.statistic + (f"({','.join(opts)})" if opts else "")


@dataclass(frozen=True)
class SimConfig:
    scenario: str
    n: int
    p: int
    replications: int = 1000
    master_seed: int = DEFAULT_SEED
    statistics: tuple[st.TestConfig, ...] = (st.TestConfig("W7"),)
    alpha: float = 0.05
    strength: float | None = None  # overrides the 0.8 pair covariance of Ha11/Ha31

    def __post_init__(self):
        object.__setattr__(self, "scenario", normalize_scenario(self.scenario))
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.n < 3 or self.p < 2:
            raise ValueError(f"need n >= 3 and p >= 2, got n={self.n}, p={self.p}")
        cfgs = tuple(
            replace(c if isinstance(c, st.TestConfig) else st.TestConfig(c), alpha=self.alpha)
            for c in self.statistics
        )
        labels = [stat_label(c) for c in cfgs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate statistic configurations: {labels}")
        object.__setattr__(self, "statistics", cfgs)

    def echo(self) -> dict:
        d = asdict(self)
        d["statistics"] = [stat_label(c) for c in self.statistics]
        return d


@dataclass(frozen=True)
class StatResult:
    label: str
    statistic: str
    k: int | None
    delta: float | None
    rejections: int | None
    reps: int
    reason: str | None = None

    @property
    def rate(self) -> float | None:
        return None if self.rejections is None else self.rejections / self.reps

    @property
    def rate_pct(self) -> float | None:
        return None if self.rejections is None else 100.0 * self.rejections / self.reps

    @property
    def se_pct(self) -> float | None:
        r = self.rate
        return None if r is None else 100.0 * math.sqrt(r * (1.0 - r) / self.reps)


@dataclass
class SimResult:
    config: SimConfig
    results: dict[str, StatResult]
    wall_time: float
    rng: str = RNG_ALGORITHM
    error: str | None = None
    decisions: np.ndarray | None = field(default=None, repr=False)

    @property
    def seed(self) -> int:
        return self.config.master_seed

    def rate_pct(self, label: str) -> float | None:
        return self.results[label].rate_pct

    def same_outcome(self, other: "SimResult") -> bool:
        """Equality of everything except wall time."""
        return (
            self.config == other.config
            and self.results == other.results
            and self.error == other.error
        )

    def records(self) -> list[dict]:
        cfg = self.config
        out = []
        for label, r in self.results.items():
            out.append({
                "scenario": cfg.scenario,
                "n": cfg.n,
                "p": cfg.p,
                "label": label,
                "statistic": r.statistic,
                "k": r.k,
                "delta": r.delta,
                "rate_pct": r.rate_pct,
                "se_pct": r.se_pct,
                "reps": r.reps,
                "seed": cfg.master_seed,
                "note": r.reason or self.error,
            })
        return out


class _Replication:
    """Statistic values for one data set, sharing S, R and eigenvalues across configs."""

    def __init__(self, data: np.ndarray):
        self.data = data
        self._S = None
        self._w2: dict[int, float] = {}
        self._w6 = None
        self._ref: dict[str, float] = {}

    @property
    def S(self):
        if self._S is None:
            self._S = spearman_matrix(build_ensemble(self.data, "average"))
        return self._S

    def w2(self, k: int) -> float:
        if k not in self._w2:
            self._w2[k] = st.w2_value(self.S, k)[0]
        return self._w2[k]

    def w6(self) -> float:
        if self._w6 is None:
            self._w6 = st.w6_value(self.S)[0]
        return self._w6

    def reference(self, kind: str) -> float:
        if kind not in self._ref:
            R = pearson_matrix(self.data).R
            n = self.data.shape[0]
            if kind == "W4" and R.shape[0] >= n - 1:
                raise st.UndefinedStatistic("W4", f"needs p < n - 1, got n={n}, p={R.shape[0]}")
            fn = {"W1": st.w1_value, "W3": st.w3_value, "W4": st.w4_value, "W5": st.w5_value}[kind]
            self._ref[kind] = fn(R, n)
        return self._ref[kind]

    def decide(self, cfg: st.TestConfig) -> bool:
        s = cfg.statistic
        n, p = self.data.shape
        ratio = None
        if s == "W2":
            value = self.w2(cfg.k)
        elif s == "W6":
            value = self.w6()
        elif s == "W7":
            value = self.w2(cfg.k) + n ** (-cfg.delta) * self.w6()
        else:
            value = self.reference(s)
            if s == "W5":
                ratio = n / p if cfg.ratio is None else cfg.ratio
        pv, _ = st.nulls.p_value(value, st.NULL_OF[s], cfg.sidedness, ratio=ratio)
        return pv < cfg.alpha


Transform = Callable[[np.ndarray], np.ndarray]


def _run_chunk(config: SimConfig, reps: Sequence[int],
               transform: Transform | None) -> tuple[np.ndarray, dict[int, str]]:
    """Decisions for replications ``reps``: int8 matrix, -1 marks undefined."""
    out = np.zeros((len(reps), len(config.statistics)), dtype=np.int8)
    reasons: dict[int, str] = {}
    strength = {} if config.strength is None else {"strength": config.strength}
    for row, r in enumerate(reps):
        data = generate(config.scenario, config.n, config.p, substream(config.master_seed, r),
                        **strength)
        if transform is not None:
            data = transform(data)
        rep = _Replication(data)
        for col, cfg in enumerate(config.statistics):
            try:
                out[row, col] = rep.decide(cfg)
            except st.UndefinedStatistic as exc:
                out[row, col] = -1
                reasons.setdefault(col, exc.reason)
    return out, reasons


def _chunks(reps: int, workers: int) -> list[range]:
    size = math.ceil(reps / workers)
    return [range(a, min(a + size, reps)) for a in range(0, reps, size)]


def run(config: SimConfig, workers: int = 1, executor: str = "process",
        transform: Transform | None = None, keep_decisions: bool = False) -> SimResult:
    """Estimate rejection rates of every configured statistic.

    ``workers > 1`` splits replications across a process (or thread) pool; the
    tallies are identical for any split. ``transform`` is applied to each
    generated data set before the statistics are computed.
    """
    t0 = time.perf_counter()
    if workers <= 1:
        parts = [_run_chunk(config, range(config.replications), transform)]
    else:
        pool_cls = ProcessPoolExecutor if executor == "process" else ThreadPoolExecutor
        chunks = _chunks(config.replications, workers)
        with pool_cls(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [config] * len(chunks), chunks,
                                  [transform] * len(chunks)))
    decisions = np.vstack([d for d, _ in parts])
    reasons: dict[int, str] = {}
    for _, rs in parts:
        for col, why in rs.items():
            reasons.setdefault(col, why)

    results = {}
    for col, cfg in enumerate(config.statistics):
        label = stat_label(cfg)
        column = decisions[:, col]
        keyed = cfg.statistic in ("W2", "W7")
        if (column < 0).any():
            results[label] = StatResult(label, cfg.statistic, cfg.k if keyed else None,
                                        cfg.delta if cfg.statistic == "W7" else None,
                                        None, config.replications, reasons.get(col, "undefined"))
        else:
            results[label] = StatResult(label, cfg.statistic, cfg.k if keyed else None,
                                        cfg.delta if cfg.statistic == "W7" else None,
                                        int(column.sum()), config.replications)
    return SimResult(config, results, time.perf_counter() - t0,
                     decisions=decisions if keep_decisions else None)


# --- table sweeps -----------------------------------------------------------

TABLE_SIZES = ((60, 40), (120, 80), (60, 10), (120, 160))
TABLE2_KS = (2, 4, 6, 8, 10)
TABLE2_DELTAS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


@dataclass(frozen=True)
class SweepCell:
    scenario: str
    n: int
    p: int
    statistics: tuple[st.TestConfig, ...]


def _stat_configs(names: Iterable[str], k: int = 4, delta: float = 0.5) -> tuple[st.TestConfig, ...]:
    return tuple(st.TestConfig(s, k=k, delta=delta) for s in names)


def table1_grid(sizes=TABLE_SIZES, k: int = 4, delta: float = 0.5,
                statistics: Sequence[str] | None = None) -> list[SweepCell]:
    """Every (n, p) under every scenario; all seven statistics for the Gaussian
    family, the rank statistics elsewhere, unless ``statistics`` is given."""
    cells = []
    for scen in SCENARIOS:
        if statistics is not None:
            names = statistics
        elif scen in ("H01", "Ha11", "Ha12"):
            names = st.STATISTICS
        else:
            names = st.RANK_STATISTICS
        for n, p in sizes:
            cells.append(SweepCell(scen, n, p, _stat_configs(names, k, delta)))
    return cells


def sensitivity_grid(scenario: str, sizes=TABLE_SIZES, ks=TABLE2_KS,
                     deltas=TABLE2_DELTAS) -> list[SweepCell]:
    """W2 and W7 over a grid of ``k`` and ``delta`` (the layout of the table2 and table3 presets)."""
    cells = []
    for n, p in sizes:
        cfgs = []
        for k in ks:
            cfgs.append(st.TestConfig("W2", k=k))
            cfgs.extend(st.TestConfig("W7", k=k, delta=d) for d in deltas)
        cells.append(SweepCell(scenario, n, p, tuple(cfgs)))
    return cells


def preset_grid(name: str) -> list[SweepCell]:
    if name == "table1":
        return table1_grid()
    if name == "table2":
        return sensitivity_grid("H01")
    if name == "table3":
        return sensitivity_grid("Ha11")
    raise ValueError(f"unknown preset {name!r}; choose table1, table2 or table3")


def table_sweep(cells: Iterable[SweepCell], replications: int = 1000,
                master_seed: int = DEFAULT_SEED, alpha: float = 0.05, workers: int = 1,
                progress: Callable[[SweepCell, SimResult], None] | None = None) -> list[SimResult]:
    """Run every cell; a failing cell is reported with its error instead of aborting."""
    out = []
    for cell in cells:
        cfg = SimConfig(cell.scenario, cell.n, cell.p, replications, master_seed,
                        cell.statistics, alpha)
        try:
            res = run(cfg, workers=workers)
        except (ValueError, ArithmeticError) as exc:
            res = SimResult(cfg, {
                stat_label(c): StatResult(stat_label(c), c.statistic,
                                          c.k if c.statistic in ("W2", "W7") else None,
                                          c.delta if c.statistic == "W7" else None,
                                          None, replications, str(exc))
                for c in cfg.statistics
            }, 0.0, error=str(exc))
        out.append(res)
        if progress is not None:
            progress(cell, res)
    return out


__all__ = [
    "NULL_SCENARIOS", "SCENARIOS", "SimConfig", "SimResult", "StatResult", "SweepCell",
    "preset_grid", "run", "sensitivity_grid", "substream", "table1_grid", "table_sweep",
]
