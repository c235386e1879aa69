"""Null distributions of the test statistics and p-value evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr

STD_NORMAL = "std_normal"
TW1 = "tw1"
GUMBEL_W5 = "gumbel_w5"
GUMBEL_W6 = "gumbel_w6"
NULL_DISTS = (STD_NORMAL, TW1, GUMBEL_W5, GUMBEL_W6)

UPPER = "upper"
TWO_SIDED = "two_sided"
SIDEDNESS = (UPPER, TWO_SIDED)

_W6_RATE = 1.0 / math.sqrt(8.0 * math.pi)


def normal_cdf(x):
    return ndtr(x)


def _gumbel_cdf(y, rate):
    return np.exp(-rate * np.exp(-np.asarray(y, dtype=float) / 2.0))


def _gumbel_sf(y, rate):
    # 1 - exp(-a) without cancellation for small a
    return -np.expm1(-rate * np.exp(-np.asarray(y, dtype=float) / 2.0))


def w5_rate(ratio: float) -> float:
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    return 1.0 / (ratio**2 * math.sqrt(8.0 * math.pi))


def w5_cdf(y, ratio: float):
    """``exp(-(ratio^2 sqrt(8 pi))^-1 exp(-y/2))``."""
    return _gumbel_cdf(y, w5_rate(ratio))


def w6_cdf(y):
    """``exp(-(8 pi)^(-1/2) exp(-y/2))``."""
    return _gumbel_cdf(y, _W6_RATE)


@dataclass(frozen=True)
class QuantileTable:
    """Monotone table of (probability, quantile) pairs for a continuous law."""

    probs: np.ndarray
    quantiles: np.ndarray
    header: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.probs) < 2 or len(self.probs) != len(self.quantiles):
            raise ValueError("quantile table needs at least two matching rows")
        if np.any(np.diff(self.probs) <= 0) or np.any(np.diff(self.quantiles) <= 0):
            raise ValueError("quantile table must be strictly increasing in both columns")

    @property
    def support(self) -> tuple[float, float]:
        return float(self.quantiles[0]), float(self.quantiles[-1])

    def cdf(self, x) -> tuple[np.ndarray, np.ndarray]:
        """CDF by monotone interpolation, clamped outside the table.

        Returns the CDF values and a boolean mask marking clamped (saturated) points.
        """
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        f = _pchip(self.quantiles.tobytes(), self.probs.tobytes())
        vals = np.clip(f(np.clip(x, lo, hi)), self.probs[0], self.probs[-1])
        return vals, (x < lo) | (x > hi)

    def quantile(self, prob: float) -> float:
        return float(np.interp(prob, self.probs, self.quantiles))


@lru_cache(maxsize=8)
def _pchip(qbytes: bytes, pbytes: bytes) -> PchipInterpolator:
    return PchipInterpolator(np.frombuffer(qbytes), np.frombuffer(pbytes))


def parse_quantile_table(text: str) -> QuantileTable:
    """Parse ``probability quantile`` lines; ``#`` starts a comment."""
    probs, quants, header = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        if comment and not line.strip():
            header.append(comment.strip())
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'probability quantile', got {raw!r}")
        try:
            prob, q = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric entry {raw!r}") from None
        if not 0.0 < prob < 1.0:
            raise ValueError(f"line {lineno}: probability {prob} outside (0, 1)")
        probs.append(prob)
        quants.append(q)
    return QuantileTable(np.array(probs), np.array(quants), tuple(header))


def load_quantile_table(path: str | Path) -> QuantileTable:
    return parse_quantile_table(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def tw1_table() -> QuantileTable:
    """The shipped Tracy-Widom (beta = 1) quantile table."""
    text = resources.files("spearman_clt").joinpath("data/tw1_quantiles.txt").read_text("utf-8")
    return parse_quantile_table(text)


def p_value(value: float, dist: str, sidedness: str = UPPER, *, ratio: float | None = None,
            table: QuantileTable | None = None) -> tuple[float, bool]:
    """P-value of ``value`` under a null law.

    Returns ``(p, saturated)``; ``saturated`` is only ever true for the
    tabulated TW1 law when ``value`` falls outside the table.
    """
    if sidedness not in SIDEDNESS:
        raise ValueError(f"unknown sidedness {sidedness!r}")
    if math.isnan(value):
        raise ValueError("p-value of NaN")
    if dist == STD_NORMAL:
        if sidedness == TWO_SIDED:
            p = 2.0 * float(ndtr(-abs(value)))
        else:
            p = float(ndtr(-value))
        return min(max(p, 0.0), 1.0), False
    if sidedness != UPPER:
        raise ValueError(f"{dist} only supports upper-tail p-values")
    if dist == GUMBEL_W6:
        return float(_gumbel_sf(value, _W6_RATE)), False
    if dist == GUMBEL_W5:
        if ratio is None:
            raise ValueError("W5 null needs the dimension ratio")
        return float(_gumbel_sf(value, w5_rate(ratio))), False
    if dist == TW1:
        tab = table if table is not None else tw1_table()
        cdf, sat = tab.cdf(value)
        return float(1.0 - cdf), bool(sat)
    raise ValueError(f"unknown null distribution {dist!r}")
