"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL ...`` line (printed in the
terminal summary and to stdout) before asserting, so a failing criterion is
still reported with its measured numbers.
"""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as sps

from spearman_clt import nulls
from spearman_clt.cumulants import cumulant_tr_formula, direct_cumulant_tr, exact_perm_moment, joint_cumulant
from spearman_clt.moments import MomentParams, cov_g, cov_g_exact, mean_tr
from spearman_clt.partitions import Partition, enumerate_partitions, join
from spearman_clt.ranks import build_ensemble, pearson_matrix, spearman_matrix
from spearman_clt.simulate import DEFAULT_SEED, SimConfig, run, stat_label, substream
from spearman_clt.spectral import trace_power
from spearman_clt.stats import TestConfig, UndefinedStatistic, compute_reference, w1_value

SEED = DEFAULT_SEED  # 20151001, fixed before any acceptance run
REPS = 1000


def report(log, number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    log.append(line)
    print(line)


def within(value, target, tol):
    return abs(value - target) <= tol


# --- 1 ----------------------------------------------------------------------------


def test_criterion_1_exact_invariants(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    problems = []
    sizes = [(10, 5), (60, 40), (30, 50)]
    for i in range(100):
        n, p = sizes[i % 3]
        data = rng.standard_normal((n, p))
        ens = build_ensemble(data)
        S = spearman_matrix(ens)
        if abs(np.trace(S.S) - n) > 1e-10:
            problems.append(f"tr S at {i}")
        if np.abs(np.diag(S.S) - n / p).max() > 1e-12:
            problems.append(f"s_ii at {i}")
        if np.abs(ens.X.sum(axis=1)).max() > 1e-12:
            problems.append(f"row sums at {i}")
        if np.abs(S.rho()).max() > 1.0:
            problems.append(f"rho range at {i}")
        transformed = np.exp(data) * 2.0 + data**3
        if not np.array_equal(build_ensemble(transformed).Q, ens.Q):
            problems.append(f"monotone invariance at {i}")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 1.0
    report(criterion_log, 1, ok, f"100 datasets, {len(problems)} violations, {elapsed:.2f}s (limit 1s)")
    assert not problems, problems
    assert elapsed < 1.0


# --- 2 ----------------------------------------------------------------------------


def test_criterion_2_exact_moments(criterion_log):
    t0 = time.perf_counter()
    bad = []
    for n in range(3, 9):
        if exact_perm_moment(n, [(1, 1)]) != 0:
            bad.append(f"E Z, n={n}")
        if exact_perm_moment(n, [(1, 2)]) != 1:
            bad.append(f"E Z^2, n={n}")
        if exact_perm_moment(n, [(1, 1), (2, 1)]) != Fraction(-1, n - 1):
            bad.append(f"Cov, n={n}")
    rng = np.random.default_rng(SEED)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(1, 4))
        powers = [int(a) for a in rng.integers(1, 4, size=m)]
        if sum(powers) % 2 == 0:
            powers[0] += 1
        idx = [int(i) for i in rng.choice(np.arange(1, n + 1), size=m, replace=False)]
        if exact_perm_moment(n, list(zip(idx, powers))) != 0:
            bad.append(f"odd-degree terms {list(zip(idx, powers))} at n={n}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10
    report(criterion_log, 2, ok, f"n=3..8 plus 20 odd-degree cases, {len(bad)} mismatches, {elapsed:.2f}s")
    assert not bad, bad
    assert elapsed < 10


# --- 3 ----------------------------------------------------------------------------


def test_criterion_3_formula_vs_enumeration(criterion_log):
    t0 = time.perf_counter()
    cases = [((1,), 4, 2), ((2,), 4, 2), ((2,), 5, 2), ((1, 1), 4, 2), ((2, 2), 4, 2)]
    rows = []
    for ks, n, p in cases:
        a = cumulant_tr_formula(ks, n, p)
        b = direct_cumulant_tr(ks, n, p)
        rows.append((ks, n, p, a, b))
    elapsed = time.perf_counter() - t0
    mismatched = [r for r in rows if r[3] != r[4]]
    ok = not mismatched and elapsed < 60
    detail = "; ".join(f"{ks}@({n},{p})={a}" for ks, n, p, a, _ in rows)
    report(criterion_log, 3, ok, f"{len(rows) - len(mismatched)}/5 exact, {elapsed:.1f}s: {detail}")
    assert not mismatched, mismatched
    assert elapsed < 60


# --- 4 ----------------------------------------------------------------------------


def test_criterion_4_clt_calibration(criterion_log):
    n = p = 200
    reps = 2000
    ks = (2, 3, 4)
    traces = np.empty((reps, len(ks)))
    for r in range(reps):
        S = spearman_matrix(build_ensemble(substream(SEED, r).standard_normal((n, p)))).S
        ev = np.linalg.eigvalsh(S)
        traces[r] = [np.sum(ev**k) for k in ks]
    params = MomentParams(n, p)
    ok = True
    parts = []
    for col, k in enumerate(ks):
        x = traces[:, col]
        mu, var = mean_tr(params, k), cov_g(k, k, params.c)
        se = x.std(ddof=1) / math.sqrt(reps)
        z = (x.mean() - mu) / se
        vratio = x.var(ddof=1) / var
        ks_dist = sps.kstest((x - mu) / math.sqrt(var), "norm").statistic
        good = abs(z) <= 3 and abs(vratio - 1) <= 0.10 and ks_dist < 0.05
        ok &= good
        parts.append(f"k={k}: mean {z:+.2f} SE, var ratio {vratio:.3f}, KS {ks_dist:.3f}")
    report(criterion_log, 4, ok, "; ".join(parts))
    assert ok, parts


# --- 5 ----------------------------------------------------------------------------


def _rates(scenario, n, p, configs):
    """Rejection rates keyed by statistic name, or by full label when options differ."""
    res = run(SimConfig(scenario, n, p, REPS, SEED, tuple(configs)))
    out = {}
    for cfg, (label, r) in zip(configs, res.results.items()):
        out[cfg.statistic if cfg == TestConfig(cfg.statistic) else label] = r.rate_pct
    return out


RANK3 = (TestConfig("W2"), TestConfig("W6"), TestConfig("W7"))


def test_criterion_5_size_and_power_cells(criterion_log):
    checks = []  # (label, measured, passed, target text)

    def near(label, got, target, tol):
        checks.append((label, got, within(got, target, tol), f"{target} +/- {tol}"))

    def at_least(label, got, bound):
        checks.append((label, got, got >= bound, f">= {bound}"))

    upper_w7 = TestConfig("W7", sidedness="upper")
    h01 = _rates("H01", 60, 40, RANK3 + (upper_w7,))
    near("H01 W2", h01["W2"], 4.0, 2.0)
    near("H01 W6", h01["W6"], 3.2, 1.5)
    near("H01 W7", h01["W7"], 4.5, 2.0)

    ha11 = _rates("Ha11", 60, 40, RANK3)
    at_least("Ha11 W6", ha11["W6"], 99)
    near("Ha11 W7", ha11["W7"], 92.9, 4)

    ha12 = _rates("Ha12", 60, 40, RANK3)
    at_least("Ha12 W2", ha12["W2"], 97)
    at_least("Ha12 W7", ha12["W7"], 97)
    near("Ha12 W6", ha12["W6"], 18.0, 5)

    h02 = _rates("H02", 60, 40, RANK3)
    near("H02 W2", h02["W2"], 4.7, 2)
    near("H02 W6", h02["W6"], 1.9, 1.5)
    near("H02 W7", h02["W7"], 4.9, 2)

    x = substream(SEED, 0).standard_normal((120, 160))
    try:
        compute_reference(x, "W4")
        w4_undefined = False
    except UndefinedStatistic:
        w4_undefined = True
    checks.append(("W4 (120,160)", float("nan"), w4_undefined, "Undefined"))

    failed = [c for c in checks if not c[2]]
    detail = "; ".join(f"{lab}={got:.1f} [{tgt}]{'' if ok else ' MISS'}" for lab, got, ok, tgt in checks)
    # informational: the same W7 cell under an upper-tail rejection region
    detail += f"; info: upper-tail H01 W7={h01[stat_label(upper_w7)]:.1f}"
    report(criterion_log, 5, not failed, f"seed {SEED}, {REPS} reps: {detail}")
    assert not failed, failed


# --- 6 ----------------------------------------------------------------------------


def test_criterion_6_delta_sensitivity(criterion_log):
    deltas = (0.3, 0.4, 0.5)
    cfgs = tuple(TestConfig("W7", k=4, delta=d) for d in deltas)
    res = run(SimConfig("H01", 60, 40, REPS, SEED, cfgs))
    sizes = [res.results[f"W7(k=4,delta={d:g})"].rate_pct for d in deltas]
    power = run(SimConfig("Ha11", 60, 40, REPS, SEED, (TestConfig("W7", k=4, delta=0.5),)))
    pw = power.results["W7(k=4,delta=0.5)"].rate_pct

    ok_05 = within(sizes[2], 6.0, 2.5)
    ok_03 = within(sizes[0], 19.0, 4)
    ok_pw = within(pw, 92.9, 4)
    # nonincreasing up to the 2.5-point tolerance of the size cells
    ok_trend = all(b <= a + 2.5 for a, b in zip(sizes, sizes[1:]))
    ok = ok_05 and ok_03 and ok_pw and ok_trend
    report(criterion_log, 6, ok,
           f"size(d=0.3,0.4,0.5)={sizes} [19+/-4, -, 6+/-2.5], power(d=0.5)={pw} [92.9+/-4], "
           f"trend {'ok' if ok_trend else 'broken'}")
    assert ok_05 and ok_03 and ok_pw and ok_trend


# --- 7 ----------------------------------------------------------------------------


def test_criterion_7_w1(criterion_log):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10):
        n, p = int(rng.integers(20, 200)), int(rng.integers(5, 150))
        x = rng.standard_normal((n, p))
        R = np.corrcoef(x, rowvar=False)
        lam = max(np.linalg.eigvalsh(R))
        direct = (n * lam - (math.sqrt(p) + math.sqrt(n)) ** 2) / (
            (math.sqrt(n) + math.sqrt(p)) * (1 / math.sqrt(p) + 1 / math.sqrt(n)) ** (1 / 3))
        worst = max(worst, abs(w1_value(pearson_matrix(x).R, n) - direct))
    structural = worst <= 1e-10
    size = _rates("H01", 60, 40, (TestConfig("W1"),))["W1"]
    report(criterion_log, 7, structural,
           f"max |W1 - direct| = {worst:.1e} (gate 1e-10); measured W1 size at (60,40) = {size:.1f}% "
           f"vs reference range 0.4-1.7% (informational, not gated)")
    assert structural


# --- 8 ----------------------------------------------------------------------------


def _finite_cumulant(cols, weights):
    def moment(block):
        return sum(w * math.prod(cols[t - 1][o] for t in block) for o, w in enumerate(weights))
    return joint_cumulant(moment, len(cols))


def test_criterion_8_property_suite(criterion_log):
    results = {}

    # join laws, exhaustive for N <= 6
    good = True
    for N in range(1, 7):
        parts = list(enumerate_partitions(N))
        top, bottom = Partition.single_block(N), Partition.discrete(N)
        for a in parts:
            good &= join(a, a) == a and join(a, bottom) == a and join(a, top) == top
            for b in parts:
                j = join(a, b)
                good &= j == join(b, a) and a.refines(j) and b.refines(j)
        if N <= 4:
            for a, b, c in itertools.product(parts, repeat=3):
                good &= join(join(a, b), c) == join(a, join(b, c))
    results["join laws"] = good

    # multilinearity and independence-vanishing of joint cumulants, N <= 6
    rng = np.random.default_rng(SEED)
    good_lin = good_ind = True
    for N in range(1, 7):
        size = 3
        w = [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)]
        cols = [[Fraction(int(v)) for v in rng.integers(-3, 4, size)] for _ in range(N + 1)]
        a, b = Fraction(int(rng.integers(-3, 4))), Fraction(1, int(rng.integers(1, 4)))
        mixed = [a * u + b * v for u, v in zip(cols[0], cols[N])]
        lhs = _finite_cumulant([mixed] + cols[1:N], w)
        rhs = a * _finite_cumulant(cols[:N], w) + b * _finite_cumulant([cols[N]] + cols[1:N], w)
        good_lin &= lhs == rhs
        if N >= 2:
            split = int(rng.integers(1, N))
            grid = list(itertools.product(range(size), range(size)))
            wp = [w[i] * w[j] for i, j in grid]
            prod_cols = ([[c[i] for i, _ in grid] for c in cols[:split]]
                         + [[c[j] for _, j in grid] for c in cols[split:N]])
            good_ind &= _finite_cumulant(prod_cols, wp) == 0
    results["cumulant multilinearity"] = good_lin
    results["cumulant independence"] = good_ind

    # cov_G PSD over k, k' <= 8
    good = True
    for c in (Fraction(1, 4), Fraction(2, 3), Fraction(1), Fraction(3, 2), Fraction(4)):
        C = np.array([[float(cov_g_exact(a, b, c)) for b in range(1, 9)] for a in range(1, 9)])
        ev = np.linalg.eigvalsh(C)
        good &= ev.min() >= -1e-9 * ev.max()
    results["cov_G PSD"] = bool(good)

    # p-value monotonicity
    grid = np.linspace(-20, 40, 601)
    good = True
    for dist in (nulls.STD_NORMAL, nulls.TW1, nulls.GUMBEL_W5, nulls.GUMBEL_W6):
        ps = [nulls.p_value(v, dist, ratio=1.5)[0] for v in grid]
        good &= all(b <= a for a, b in zip(ps, ps[1:]))
    two = [nulls.p_value(v, nulls.STD_NORMAL, nulls.TWO_SIDED)[0] for v in np.abs(grid)]
    results["p-value monotone"] = bool(good) and all(
        b <= a for a, b in zip(sorted(two, reverse=True), sorted(two, reverse=True)[1:]))

    # reproducibility under varying worker counts
    cfg = SimConfig("H03", 40, 30, 60, SEED, (TestConfig("W7"), TestConfig("W6"), TestConfig("W3")))
    base = run(cfg, keep_decisions=True)
    same = all(
        base.same_outcome(other) and np.array_equal(base.decisions, other.decisions)
        for other in (run(cfg, workers=w, executor=e, keep_decisions=True)
                      for w, e in ((2, "thread"), (4, "thread"), (3, "process")))
    )
    results["worker reproducibility"] = same

    ok = all(results.values())
    report(criterion_log, 8, ok, ", ".join(f"{k}: {'ok' if v else 'FAIL'}" for k, v in results.items()))
    assert ok, results
