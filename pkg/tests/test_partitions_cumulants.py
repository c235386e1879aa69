import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spearman_clt.cumulants import (
    ExactMomentTable,
    cumulant_tr_formula,
    direct_cumulant_tr,
    exact_perm_moment,
    joint_cumulant,
)
from spearman_clt.partitions import (
    MatchingPair,
    Partition,
    bell,
    enumerate_partitions,
    join,
    n_join_blocks,
)
from spearman_clt.verify import run_suite


class TestPartition:
    def test_canonical_form(self):
        p = Partition([[5, 3], [1], [4, 2]])
        assert p.blocks == ((1,), (2, 4), (3, 5))
        assert p == Partition.from_labels([0, 1, 2, 1, 2])

    @pytest.mark.parametrize("blocks", [[[1, 2], [2, 3]], [[1], [3]], [[]]])
    def test_invalid_blocks(self, blocks):
        with pytest.raises(ValueError):
            Partition(blocks, 3)

    def test_counts(self):
        assert sum(1 for _ in enumerate_partitions(4)) == 15
        assert sum(1 for _ in enumerate_partitions(4, "matching")) == 3
        assert [bell(N) for N in range(1, 9)] == [1, 2, 5, 15, 52, 203, 877, 4140]

    def test_even_filter_recount(self):
        even = set(enumerate_partitions(6, "even"))
        manual = {p for p in enumerate_partitions(6) if all(len(b) % 2 == 0 for b in p.blocks)}
        assert even == manual and len(even) == 1 + 15 + 15

    def test_four_filter(self):
        four = list(enumerate_partitions(6, "four"))
        assert len(four) == 15  # choose the 4-block, the remaining pair is forced
        assert all(sorted(p.block_sizes()) == [2, 4] for p in four)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            list(enumerate_partitions(11))
        with pytest.raises(ValueError):
            list(enumerate_partitions(3, "odd"))

    def test_join_example(self):
        s1 = Partition([[1, 2], [3, 4, 5], [6], [7, 8]])
        s2 = Partition([[1, 3], [2, 5], [4], [6, 8], [7]])
        assert join(s1, s2) == Partition([[1, 2, 3, 4, 5], [6, 7, 8]])
        assert s1 | s2 == join(s1, s2)

    def test_measurable_words(self):
        p = Partition([[1, 3], [2]])
        assert p.is_measurable("aba")
        assert not p.is_measurable("abc")

    @pytest.mark.parametrize("ks", [(1,), (2,), (3,), (2, 2), (1, 2, 3)])
    def test_matching_pair(self, ks):
        pair = MatchingPair.build(ks)
        assert all(s == 2 for s in pair.pi0.block_sizes())
        assert all(s == 2 for s in pair.pi1.block_sizes())
        assert n_join_blocks(pair.pi0, pair.pi1) == len(ks)


def _all_parts(N):
    return list(enumerate_partitions(N))


@pytest.mark.parametrize("N", range(1, 7))
def test_join_laws_exhaustive(N):
    parts = _all_parts(N)
    bottom, top = Partition.discrete(N), Partition.single_block(N)
    for a in parts:
        assert join(a, a) == a
        assert join(a, bottom) == a
        assert join(a, top) == top
        for b in parts:
            j = join(a, b)
            assert j == join(b, a)
            assert a.refines(j) and b.refines(j)
    if N <= 4:
        for a, b, c in itertools.product(parts, repeat=3):
            assert join(join(a, b), c) == join(a, join(b, c))


def test_join_is_least_upper_bound():
    parts = _all_parts(5)
    for a in parts[::3]:
        for b in parts[::2]:
            j = join(a, b)
            for c in parts:
                if a.refines(c) and b.refines(c):
                    assert j.refines(c)


# --- joint cumulants over explicit finite laws ---------------------------------


def cumulant_of(columns, weights):
    """Joint cumulant of random variables given as value columns over a finite space."""
    def moment(block):
        return sum(w * math.prod(columns[t - 1][o] for t in block) for o, w in enumerate(weights))
    return joint_cumulant(moment, len(columns))


def test_low_order_cumulants():
    w = [Fraction(1, 2)] * 2
    x = [Fraction(1, 2), Fraction(-1, 2)]  # centred Bernoulli(1/2)
    assert cumulant_of([x], w) == 0
    y = [Fraction(3), Fraction(1)]
    assert cumulant_of([y], w) == 2
    assert cumulant_of([y, y], w) == 1
    m2, m4 = Fraction(1, 4), Fraction(1, 16)
    assert cumulant_of([x] * 4, w) == m4 - 3 * m2**2


values = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def finite_law(draw, n_vars):
    size = draw(st.integers(1, 4))
    raw = draw(st.lists(st.integers(1, 5), min_size=size, max_size=size))
    weights = [Fraction(r, sum(raw)) for r in raw]
    cols = [draw(st.lists(values, min_size=size, max_size=size)) for _ in range(n_vars)]
    return cols, weights


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6).flatmap(lambda N: st.tuples(finite_law(N + 1), values, values)))
def test_cumulant_multilinear(args):
    (cols, w), a, b = args
    *rest, extra = cols
    mixed = [a * u + b * v for u, v in zip(rest[0], extra)]
    lhs = cumulant_of([mixed] + rest[1:], w)
    rhs = a * cumulant_of(rest, w) + b * cumulant_of([extra] + rest[1:], w)
    assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_cumulant_vanishes_for_independent_groups(na, nb, data):
    # product space: group A reads the first coordinate, group B the second
    cols_a, wa = data.draw(finite_law(na))
    cols_b, wb = data.draw(finite_law(nb))
    pairs = list(itertools.product(range(len(wa)), range(len(wb))))
    w = [wa[i] * wb[j] for i, j in pairs]
    cols = [[c[i] for i, _ in pairs] for c in cols_a] + [[c[j] for _, j in pairs] for c in cols_b]
    order = data.draw(st.permutations(range(na + nb)))
    assert cumulant_of([cols[t] for t in order], w) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5).flatmap(lambda N: st.tuples(finite_law(N), st.permutations(range(N)))))
def test_cumulant_symmetric(args):
    (cols, w), perm = args
    assert cumulant_of(cols, w) == cumulant_of([cols[i] for i in perm], w)


# --- permutation moments ---------------------------------------------------------


@pytest.mark.parametrize("n", range(3, 9))
def test_rank_vector_moments(n):
    assert exact_perm_moment(n, [(1, 1)]) == 0
    assert exact_perm_moment(n, [(1, 2)]) == 1
    assert exact_perm_moment(n, [(1, 1), (2, 1)]) == Fraction(-1, n - 1)


def test_perm_moment_against_enumeration():
    n = 5
    total = Fraction(0)
    scale = Fraction(3, n * n - 1)
    count = 0
    for perm in itertools.permutations(range(1, n + 1)):
        z = [Fraction(2 * q - n - 1) for q in perm]
        total += z[0] ** 2 * z[1] ** 2 * scale**2
        count += 1
    assert exact_perm_moment(n, [(1, 2), (2, 2)]) == total / count


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.lists(st.integers(1, 3), min_size=1, max_size=3), st.data())
def test_odd_degree_vanishes(n, powers, data):
    if sum(powers) % 2 == 0:
        powers[0] += 1
    idx = data.draw(st.lists(st.integers(1, n), min_size=len(powers), max_size=len(powers)))
    assert exact_perm_moment(n, list(zip(idx, powers))) == 0


def test_moment_table_relabel_invariant():
    t = ExactMomentTable(6)
    assert t.moment([1, 1, 2, 2]) == t.moment([4, 5, 4, 5])
    assert t.cumulant([0, 0]) == 1


# --- trace cumulants ---------------------------------------------------------------


def test_tr_s_is_deterministic():
    assert cumulant_tr_formula((1,), 4, 2) == 4
    assert direct_cumulant_tr((1,), 4, 2) == 4
    assert direct_cumulant_tr((1,), 3, 3) == 3
    assert cumulant_tr_formula((1, 1), 4, 3) == 0


@pytest.mark.parametrize("ks,n,p", [((2,), 4, 2), ((2,), 5, 2), ((1, 1), 4, 2), ((3,), 3, 3),
                                     ((1, 2), 4, 2)])
def test_formula_equals_enumeration(ks, n, p):
    assert cumulant_tr_formula(ks, n, p) == direct_cumulant_tr(ks, n, p)


def test_even_filter_gives_same_value():
    assert cumulant_tr_formula((2,), 5, 2, kind="even") == cumulant_tr_formula((2,), 5, 2)


def test_mean_tr_s2_monte_carlo():
    from spearman_clt.ranks import build_ensemble, spearman_matrix
    from spearman_clt.spectral import trace_power

    n, p = 5, 2
    rng = np.random.default_rng(1)
    vals = [trace_power(spearman_matrix(build_ensemble(rng.standard_normal((n, p)))).S, 2)
            for _ in range(4000)]
    exact = float(direct_cumulant_tr((2,), n, p))
    se = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - exact) <= 3 * se


def test_limits_enforced():
    with pytest.raises(ValueError):
        cumulant_tr_formula((3, 2), 4, 2)
    with pytest.raises(ValueError):
        direct_cumulant_tr((2,), 8, 3)


def test_verify_suite_passes():
    results = run_suite(5)
    assert results and all(r.passed for r in results), [r for r in results if not r.passed]
