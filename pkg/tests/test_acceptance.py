"""Acceptance suite: one test per criterion, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``);
the terminal summary prints one PASS/FAIL line per criterion.
"""

import math
import re
import time

import numpy as np
import pytest
from scipy import stats

from selfstab import (
    AlphaModel, PointSet, StripSpec, TruncationPlan, cms_stable_sample, contraction_sum, figure_model,
    generate_poisson_strip, ks_distance, poisson_sum_scale, simulate_path, simulate_subordinator,
    solve_picard, solve_sequential, stable_norm_constant, stable_norm_constant_closed,
    truncation_error_bound,
)
from selfstab.analysis import holder_constant, holder_estimate, localization_experiment
from selfstab.cli import main
from selfstab.errors import AllIncrementsZero, InsufficientScales
from selfstab.simulate import solve_tempered, tempered_envelope, tempered_terms

FIG1, FIG2 = figure_model(1), figure_model(2)

# pre-registered seeds
SEED_C2, SEED_C3, SEED_C4 = 202, 303, 404
SEED_C7 = 707
SEEDS_C9 = range(9000, 9200)
SEED_C10 = 1010


def random_set(rng, n, ylo, yhi, t0=0.0, t1=1.0):
    x = rng.uniform(t0, t1, n)
    y = rng.choice([-1.0, 1.0], n) * rng.uniform(ylo, yhi, n)
    return PointSet(t0, t1, x, y)


def sup_distance_at(f, g, times):
    return float(np.max(np.abs(f.eval(times) - g.eval(times))))


@pytest.mark.criterion(1, "N(epsilon) reproduction via the plan command")
def test_c1_plan_reproduction(capsys):
    start = time.perf_counter()
    found = {}
    for M in (1, 0):
        assert main(["plan", "--epsilon", "0.1", "--T", "1", "--b", "0.5", "--M", str(M), "--K", "1"]) == 0
        found[M] = int(re.search(r"^N = (\d+)$", capsys.readouterr().out, re.M).group(1))
    elapsed = time.perf_counter() - start
    hand = {M: math.floor(2 * math.exp(2 * M) / 0.1 ** 2) + 1 for M in (1, 0)}
    assert found == hand == {1: 1478, 0: 200}
    assert elapsed < 1.0


@pytest.mark.criterion(2, "truncation error bound dominates the observed error")
def test_c2_error_bound_dominance():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED_C2)
    violations = checked = 0
    for _ in range(100):
        ps = random_set(rng, int(rng.integers(20, 201)), 1.0, 50.0)
        full = solve_sequential(ps, FIG1, 0.0)
        levels = np.unique(np.abs(ps.y))
        cuts = np.concatenate(([0.5], levels, (levels[:-1] + levels[1:]) / 2))
        times = np.concatenate(([0.0], ps.x))
        for n in cuts:
            err = sup_distance_at(solve_sequential(ps.truncate(n), FIG1, 0.0), full, times)
            bound = truncation_error_bound(ps, FIG1, n, form="product")
            violations += err > bound
            checked += 1
    assert checked > 2000
    assert violations == 0
    assert time.perf_counter() - start < 30


@pytest.mark.criterion(3, "Picard iteration agrees with the sequential pass")
def test_c3_picard_sequential():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED_C3)
    worst, done = 0.0, 0
    while done < 100:
        ps = random_set(rng, int(rng.integers(1, 8)), 300.0, 5000.0)
        if not contraction_sum(ps, FIG1) < 0.5:
            continue
        a0 = rng.uniform(-2, 2)
        seq, pic = solve_sequential(ps, FIG1, a0), solve_picard(ps, FIG1, a0)
        worst = max(worst, sup_distance_at(seq, pic, np.concatenate(([0.0], ps.x))))
        done += 1
    assert worst < 1e-10
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(4, "restart at a mid-point reproduces the full solve")
def test_c4_restart():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED_C4)
    worst = 0.0
    for _ in range(1000):
        model = FIG1 if rng.random() < 0.5 else FIG2
        ps = random_set(rng, int(rng.integers(1, 60)), 0.05, 100.0)
        s = rng.uniform(0.05, 0.95)
        full = solve_sequential(ps, model, rng.uniform(-1, 1))
        restarted = solve_sequential(ps.restrict(s, 1.0), model, full(s))
        probe = np.concatenate((ps.x[ps.x > s], rng.uniform(s, 1.0, 20)))
        worst = max(worst, float(np.max(np.abs(full.eval(probe) - restarted.eval(probe)))))
    assert worst <= 1e-12
    assert time.perf_counter() - start < 10


@pytest.fixture(scope="module")
def constant_endpoints():
    """Z(1) - a0 for alpha = 0.7, K = 0.01, N = 1e5 over 2000 seeds, plus the time taken."""
    start = time.perf_counter()
    model = AlphaModel.constant(0.7)
    plan = TruncationPlan.explicit(0.01, 1e5)
    a0 = 0.0
    ends = np.array([simulate_path(model, a0, (0.0, 1.0), plan, seed, 2).values[-1] - a0
                     for seed in range(2000)])
    return ends, time.perf_counter() - start


@pytest.mark.slow
@pytest.mark.criterion(5, "constant-index reduction against the stable law with scale 1/C_0.7")
def test_c5_constant_index_reduction(constant_endpoints):
    ends, elapsed = constant_endpoints
    reference = cms_stable_sample(0.7, 1.0 / stable_norm_constant_closed(0.7), 100_000, 5)
    ks = ks_distance(ends, reference)
    print(f"KS to S_0.7(1/C_0.7): {ks:.4f}")
    assert elapsed < 300
    assert ks < 0.05


@pytest.mark.slow
def test_c5_companion_with_doubled_scale(constant_endpoints):
    """Same endpoints against S_0.7(2^(1/0.7)/C_0.7), the law of a unit-intensity
    Poisson sum over both signs of y on (0, 1]."""
    ends, _ = constant_endpoints
    reference = cms_stable_sample(0.7, poisson_sum_scale(0.7, 1.0), 100_000, 5)
    assert ks_distance(ends, reference) < 0.05


@pytest.mark.criterion(6, "C_alpha quadrature against the closed form")
def test_c6_norm_constant():
    start = time.perf_counter()
    for alpha in np.round(np.arange(0.1, 1.0, 0.1), 1):
        quad, closed = stable_norm_constant(alpha), stable_norm_constant_closed(alpha)
        assert abs(quad - closed) / closed < 1e-8
        by_hand = (math.gamma(1 - alpha) * math.cos(math.pi * alpha / 2)) ** (-1 / alpha)
        assert closed == pytest.approx(by_hand, rel=1e-14)
    assert time.perf_counter() - start < 5


@pytest.mark.slow
@pytest.mark.criterion(7, "localizability trend for the cosine model")
def test_c7_localizability():
    start = time.perf_counter()
    r_values = [1e-2, 1e-3, 1e-4]
    for z0 in (0.0, 1.5):
        rep = localization_experiment(FIG1, z0, r_values, u=1.0, n_paths=4000, seed=SEED_C7)
        print(f"z0={z0}: ks={[round(k, 4) for k in rep.ks_stats]} se={[round(s, 4) for s in rep.standard_errors()]}")
        inversions = rep.inversions(n_se=2.0)
        assert len(inversions) <= 1 and all(ok for _, _, ok in inversions)
        assert rep.ks_stats[r_values.index(1e-4)] < 0.08
    assert time.perf_counter() - start <= 600


@pytest.mark.criterion(8, "Hoelder growth of the subordinator")
def test_c8_holder():
    start = time.perf_counter()
    alpha, t = 0.5, 0.0
    exponent = 1 / alpha - 0.1
    h = np.geomspace(1e-3, 0.5, 12)
    slopes, ratios = [], []
    for seed in range(100):
        coarse = simulate_subordinator(alpha, (0.0, 1.0), 0.0, 1e4, seed, 1000)
        fine = simulate_subordinator(alpha, (0.0, 1.0), 0.0, 1e4, seed, 4000)
        c_coarse, c_fine = holder_constant(coarse, t, exponent), holder_constant(fine, t, exponent)
        ratios.append(c_fine / c_coarse)
        try:
            slopes.append(holder_estimate(fine, t, h))
        except (AllIncrementsZero, InsufficientScales):
            pass
    ratios = np.array(ratios)
    assert np.all((ratios >= 0.1) & (ratios <= 10))
    assert 1.5 <= np.median(slopes) <= 2.5
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(9, "Poisson strip statistics")
def test_c9_strip_statistics():
    start = time.perf_counter()
    t0, t1, K, N = 0.0, 2.0, 0.5, 30.0
    T = t1 - t0
    gaps, xs, counts = [], [], []
    for seed in SEEDS_C9:
        ps = generate_poisson_strip(StripSpec(t0, t1, K, N, seed))
        counts.append(len(ps))
        xs.append((ps.x - t0) / T)
        for sign in (1, -1):
            levels = np.sort(np.abs(ps.y[np.sign(ps.y) == sign]))
            gaps.append(np.diff(np.concatenate(([K], levels))))
    gaps, xs, counts = np.concatenate(gaps), np.concatenate(xs), np.array(counts)
    assert stats.kstest(gaps, "expon", args=(0, 1 / T)).pvalue > 0.01
    assert stats.kstest(xs, "uniform").pvalue > 0.01
    # counts against Poisson(2 (N - K) T), bins holding at least 5 expected counts
    mean = 2 * (N - K) * T
    edges = np.arange(int(stats.poisson.ppf(0.005, mean)), int(stats.poisson.ppf(0.995, mean)) + 2)
    observed = np.array([np.sum(counts < edges[0])] + [np.sum(counts == k) for k in edges[:-1]] +
                        [np.sum(counts > edges[-2])])
    probs = np.concatenate(([stats.poisson.cdf(edges[0] - 1, mean)], stats.poisson.pmf(edges[:-1], mean),
                            [stats.poisson.sf(edges[-2], mean)]))
    expected = probs * counts.size
    merged_obs, merged_exp, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(observed, expected):
        acc_o, acc_e = acc_o + o, acc_e + e
        if acc_e >= 5:
            merged_obs.append(acc_o), merged_exp.append(acc_e)
            acc_o = acc_e = 0.0
    merged_obs[-1] += acc_o
    merged_exp[-1] += acc_e
    assert stats.chisquare(merged_obs, merged_exp).pvalue > 0.01
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(10, "tempered jumps respect the capped envelope")
def test_c10_tempered():
    start = time.perf_counter()
    horizon, n_terms = 1.0, 1000
    finals = np.empty(10_000)
    worst = 0.0
    for i in range(finals.size):
        terms = tempered_terms(horizon, n_terms, SEED_C10 * 100_000 + i)
        f, jumps = solve_tempered(terms, FIG1, 0.0)
        cap = np.minimum(tempered_envelope(terms.gamma, horizon, FIG1.a, FIG1.b), terms.e)
        worst = max(worst, float(np.max(np.abs(jumps) / cap)))
        finals[i] = f.final_value
    assert worst <= 1.0 + 1e-12
    se = finals.std(ddof=1) / math.sqrt(finals.size)
    assert abs(finals.mean()) <= 3 * se
    assert time.perf_counter() - start < 120


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
