"""The exact-arithmetic self-check suite behind ``spearman-clt verify``."""
from __future__ import annotations

import random
import time
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from fractions import Fraction

from .cumulants import (
    PERM_N_MAX,
    cumulant_tr_formula,
    direct_cumulant_tr,
    exact_perm_moment,
    joint_cumulant,
)
from .partitions import Partition, bell, enumerate_partitions, join

FORMULA_CASES = (
    ((1,), 4, 2),
    ((2,), 4, 2),
    ((2,), 5, 2),
    ((1, 1), 4, 2),
    ((2, 2), 4, 2),
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def _check_join_example() -> tuple[bool, str]:
    s1 = Partition([[1, 2], [3, 4, 5], [6], [7, 8]])
    s2 = Partition([[1, 3], [2, 5], [4], [6, 8], [7]])
    got = join(s1, s2)
    want = Partition([[1, 2, 3, 4, 5], [6, 7, 8]])
    return got == want, repr(got)


def _check_join_laws(max_N: int) -> tuple[bool, str]:
    pairs = 0
    for N in range(1, max_N + 1):
        parts = list(enumerate_partitions(N))
        bottom, top = Partition.discrete(N), Partition.single_block(N)
        for a in parts:
            if join(a, a) != a or join(a, bottom) != a or join(a, top) != top:
                return False, f"identity law fails for {a}"
            for b in parts:
                j = join(a, b)
                if j != join(b, a):
                    return False, f"not commutative on {a}, {b}"
                if len(j) > min(len(a), len(b)) or not (a.refines(j) and b.refines(j)):
                    return False, f"not an upper bound on {a}, {b}"
                pairs += 1
        rng = random.Random(N)
        for _ in range(200):
            a, b, c = (rng.choice(parts) for _ in range(3))
            if join(join(a, b), c) != join(a, join(b, c)):
                return False, f"not associative on {a}, {b}, {c}"
    return True, f"{pairs} pairs"


def _check_counts(max_N: int) -> tuple[bool, str]:
    for N in range(1, max_N + 1):
        if sum(1 for _ in enumerate_partitions(N)) != bell(N):
            return False, f"Bell({N}) mismatch"
    matchings = sum(1 for _ in enumerate_partitions(6, "matching"))
    return matchings == 15, f"Bell(1..{max_N}) ok, matchings of [6] = {matchings}"


def _check_low_order_cumulants() -> tuple[bool, str]:
    # a three-point law with P(-1) = 1/4, P(0) = 1/4, P(2) = 1/2
    support = [(Fraction(-1), Fraction(1, 4)), (Fraction(0), Fraction(1, 4)), (Fraction(2), Fraction(1, 2))]

    def m(r):
        return sum(w * x**r for x, w in support)

    def mfn(block):
        return m(len(block))

    c1 = joint_cumulant(mfn, 1)
    c2 = joint_cumulant(mfn, 2)
    c4 = joint_cumulant(mfn, 4)
    mu = m(1)
    cm = [sum(w * (x - mu) ** r for x, w in support) for r in range(5)]
    ok = c1 == mu and c2 == m(2) - mu**2 and c4 == cm[4] - 3 * cm[2] ** 2
    return ok, f"k1={c1} k2={c2} k4={c4}"


def _check_perm_moments(max_n: int) -> tuple[bool, str]:
    for n in range(3, max_n + 1):
        if exact_perm_moment(n, [(1, 1)]) != 0 or exact_perm_moment(n, [(1, 2)]) != 1:
            return False, f"E Z or E Z^2 wrong at n={n}"
        if exact_perm_moment(n, [(1, 1), (2, 1)]) != Fraction(-1, n - 1):
            return False, f"Cov(Z1, Z2) wrong at n={n}"
    rng = random.Random(1)
    for _ in range(20):
        n = rng.randint(3, max_n)
        m = rng.randint(1, min(3, n))
        powers = [rng.randint(1, 3) for _ in range(m)]
        if sum(powers) % 2 == 0:
            powers[0] += 1
        terms = list(zip(rng.sample(range(1, n + 1), m), powers))
        if exact_perm_moment(n, terms) != 0:
            return False, f"odd moment nonzero for n={n}, {terms}"
    return True, f"n = 3..{max_n}"


def _formula_checks(max_n: int) -> Iterator[tuple[str, Callable[[], tuple[bool, str]]]]:
    for ks, n, p in FORMULA_CASES:
        if n > max_n:
            continue

        def check(ks=ks, n=n, p=p):
            a = cumulant_tr_formula(ks, n, p)
            b = direct_cumulant_tr(ks, n, p)
            return a == b, f"formula={a} enumeration={b}"

        yield f"trace cumulant {ks} at n={n}, p={p}", check


def checks(max_n: int = PERM_N_MAX) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    if not 3 <= max_n <= PERM_N_MAX:
        raise ValueError(f"max_n must lie in [3, {PERM_N_MAX}]")
    out = [
        ("join example {{1,2},{3,4,5},{6},{7,8}} v {{1,3},{2,5},{4},{6,8},{7}}", _check_join_example),
        ("join laws, N <= 5", lambda: _check_join_laws(5)),
        ("partition counts", lambda: _check_counts(8)),
        ("cumulants from moments, orders 1, 2, 4", _check_low_order_cumulants),
        ("exact permutation moments", lambda: _check_perm_moments(max_n)),
    ]
    out.extend(_formula_checks(max_n))
    return out


def run_suite(max_n: int = PERM_N_MAX) -> list[CheckResult]:
    results = []
    for name, fn in checks(max_n):
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results


__all__ = ["CheckResult", "FORMULA_CASES", "checks", "run_suite"]
