"""Exact small-instance oracle for the cumulants of Spearman trace powers.

Two independent routes to ``C(tr S^k1, ..., tr S^kr)``:

* :func:`cumulant_tr_formula` sums products of joint cumulants of the rank
  vector ``Z`` over set partitions of ``[2k]``;
* :func:`direct_cumulant_tr` enumerates every rank configuration of the
  ``p x n`` matrix and takes the cumulant of the resulting finite law.

Everything is exact rational arithmetic.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from collections.abc import Callable, Sequence
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .partitions import MatchingPair, Partition, enumerate_partitions, n_join_blocks

PERM_N_MAX = 8
FORMULA_K_MAX = 4
DIRECT_CONFIG_MAX = 2_000_000


def mobius_weight(blocks: int) -> int:
    """``(-1)^(b-1) (b-1)!``, the Mobius function of the partition lattice to the top."""
    return (-1) ** (blocks - 1) * math.factorial(blocks - 1)


def joint_cumulant(moment_fn: Callable[[tuple[int, ...]], Fraction], N: int) -> Fraction:
    """Joint cumulant of ``N`` variables from their mixed moments.

    ``moment_fn(block)`` must return ``E prod_{i in block} xi_i`` for a sorted
    tuple of 1-based positions.
    """
    total = Fraction(0)
    memo: dict[tuple[int, ...], Fraction] = {}
    for pi in enumerate_partitions(N):
        term = Fraction(mobius_weight(len(pi)))
        for block in pi.blocks:
            if block not in memo:
                memo[block] = Fraction(moment_fn(block))
            term *= memo[block]
            if not term:
                break
        total += term
    return total


# --- exact moments of the normalized rank vector --------------------------


def _merge_terms(terms) -> dict[int, int]:
    powers: Counter = Counter()
    for index, power in terms:
        if power < 0:
            raise ValueError(f"negative power {power}")
        powers[int(index)] += int(power)
    return {i: a for i, a in powers.items() if a}


@lru_cache(maxsize=None)
def _centred_rank_moment(n: int, powers: tuple[int, ...]) -> Fraction:
    """``E prod (2 Q_l - n - 1)^{a_l}`` over distinct positions, exactly."""
    m = len(powers)
    values = range(1 - n, n, 2)  # 2q - n - 1 for q = 1..n
    total = 0
    count = 0
    for combo in itertools.permutations(values, m):
        prod = 1
        for v, a in zip(combo, powers):
            prod *= v**a
        total += prod
        count += 1
    return Fraction(total, count)


def exact_perm_moment(n: int, terms) -> Fraction:
    """``E[Z_{l1}^{a1} ... Z_{lm}^{am}]`` for ``Z`` the normalized uniform permutation.

    ``terms`` is an iterable of ``(index, power)`` pairs with 1-based indices;
    repeated indices are merged. Odd total degree returns 0 by symmetry
    without enumeration.
    """
    if not 2 <= n <= PERM_N_MAX:
        raise ValueError(f"n={n} outside [2, {PERM_N_MAX}]")
    powers = _merge_terms(terms)
    if any(not 1 <= i <= n for i in powers):
        raise ValueError(f"indices must lie in [1, {n}]")
    degree = sum(powers.values())
    if degree == 0:
        return Fraction(1)
    if degree % 2:
        return Fraction(0)
    # the law of (Z_l) over distinct l depends only on the multiset of powers
    key = tuple(sorted(powers.values(), reverse=True))
    # Z = sqrt(3 / (n^2 - 1)) (2Q - n - 1)
    return _centred_rank_moment(n, key) * Fraction(3, n * n - 1) ** (degree // 2)


class ExactMomentTable:
    """Memoised exact moments and joint cumulants of ``Z`` for fixed ``n``."""

    def __init__(self, n: int):
        if not 2 <= n <= PERM_N_MAX:
            raise ValueError(f"n={n} outside [2, {PERM_N_MAX}]")
        self.n = n
        self.cache: dict[tuple[int, ...], Fraction] = {}
        self._cumulants: dict[tuple[int, ...], Fraction] = {}

    def moment(self, indices: Sequence[int]) -> Fraction:
        """``E prod_t Z_{indices[t]}``."""
        key = tuple(sorted(Counter(indices).values(), reverse=True))
        if key not in self.cache:
            self.cache[key] = exact_perm_moment(self.n, [(i + 1, a) for i, a in enumerate(key)])
        return self.cache[key]

    def cumulant(self, indices: Sequence[int]) -> Fraction:
        """Joint cumulant ``C(Z_{j_1}, ..., Z_{j_m})``."""
        key = tuple(sorted(Counter(indices).values(), reverse=True))
        if key not in self._cumulants:
            if sum(key) % 2:
                self._cumulants[key] = Fraction(0)
            else:
                word = [i for i, a in enumerate(key) for _ in range(a)]
                self._cumulants[key] = joint_cumulant(
                    lambda block: self.moment([word[t - 1] for t in block]), len(word)
                )
        return self._cumulants[key]


# --- the two routes to C(tr S^k1, ..., tr S^kr) -----------------------------


def _check_sizes(k_list, n) -> tuple[int, ...]:
    ks = tuple(int(k) for k in k_list)
    if not ks or min(ks) < 1:
        raise ValueError(f"k_list must be positive integers, got {k_list!r}")
    if not 2 <= n <= PERM_N_MAX:
        raise ValueError(f"n={n} outside [2, {PERM_N_MAX}]")
    return ks


def cumulant_tr_formula(k_list: Sequence[int], n: int, p: int, kind: str = "2+") -> Fraction:
    """``C(tr S^k1, ..., tr S^kr)`` from the set-partition expansion.

    Sums ``p^(-k + #(pi0 v pi)) * sum_j C_pi(j)`` over partitions ``pi`` of
    ``[2k]`` with blocks of size >= 2 (``kind="2+"``) or of even size
    (``kind="even"``) such that ``pi0 v pi1 v pi`` is the single block, where
    ``j`` ranges over ``pi1``-measurable words in ``[n]^{2k}``.
    """
    ks = _check_sizes(k_list, n)
    k = sum(ks)
    if k > FORMULA_K_MAX:
        raise ValueError(f"total degree k={k} exceeds {FORMULA_K_MAX}")
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    pair = MatchingPair.build(ks)
    table = ExactMomentTable(n)
    pi1_blocks = pair.pi1.blocks
    slot = [0] * (2 * k)  # position -> index into the free letters of a word
    for b_idx, block in enumerate(pi1_blocks):
        for pos in block:
            slot[pos - 1] = b_idx

    total = Fraction(0)
    for pi in enumerate_partitions(2 * k, kind):
        if n_join_blocks(pair.pi0, pair.pi1, pi) != 1:
            continue
        word_sum = Fraction(0)
        for letters in itertools.product(range(n), repeat=len(pi1_blocks)):
            term = Fraction(1)
            for block in pi.blocks:
                term *= table.cumulant([letters[slot[pos - 1]] for pos in block])
                if not term:
                    break
            word_sum += term
        if word_sum:
            total += Fraction(p) ** (n_join_blocks(pair.pi0, pi) - k) * word_sum
    return total


def _trace_power_batch(G: np.ndarray, k: int) -> list[int]:
    M = G.copy()
    for _ in range(k - 1):
        M = M @ G
    return [int(t) for t in np.trace(M, axis1=1, axis2=2)]


def direct_cumulant_tr(k_list: Sequence[int], n: int, p: int,
                       chunk: int = 50_000) -> Fraction:
    """``C(tr S^k1, ..., tr S^kr)`` by enumerating all ``(n!)^p`` rank matrices."""
    ks = _check_sizes(k_list, n)
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    n_configs = math.factorial(n) ** p
    if n_configs > DIRECT_CONFIG_MAX:
        raise ValueError(f"(n!)^p = {n_configs} exceeds {DIRECT_CONFIG_MAX}")
    # integer rows 2Q - n - 1; X = sqrt(3 / (p (n^2 - 1))) * B
    rows = np.array(list(itertools.permutations(range(1 - n, n, 2))), dtype=np.int64)
    distinct = sorted(set(ks))
    traces: dict[int, list[int]] = {k: [] for k in distinct}
    configs = itertools.product(range(len(rows)), repeat=p)
    while True:
        idx = np.array(list(itertools.islice(configs, chunk)), dtype=np.int64)
        if idx.size == 0:
            break
        B = rows[idx]  # (batch, p, n)
        G = B @ B.transpose(0, 2, 1)
        for k in distinct:
            traces[k].extend(_trace_power_batch(G, k))

    count = len(traces[distinct[0]])
    scale = Fraction(3, p * (n * n - 1))

    def moment(block: tuple[int, ...]) -> Fraction:
        cols = [traces[ks[t - 1]] for t in block]
        acc = 0
        for vals in zip(*cols):
            acc += math.prod(vals)
        return Fraction(acc, count)

    # multilinearity: pull the scale of each argument out of the cumulant
    return scale ** sum(ks) * joint_cumulant(moment, len(ks))
