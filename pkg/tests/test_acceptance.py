"""Acceptance suite: one PASS/FAIL line per criterion, echoed in the terminal summary.

The study-scale criteria (7 to 10) take minutes; they are marked ``slow``.
"""
import math
import time

import numpy as np
import pytest

from conftest import batch_means_se, ks_statistic, report, tabulated_cdf
from decdens.base_measures import sample_theta_new, single_posterior_cdf, update_tau_variant_d
from decdens.cli import main
from decdens.core import BaseMeasureSpec, SampleData, mixture_to_step
from decdens.estimators import grenander, penalized_mle, solve_gamma
from decdens.harness import (
    StudyConfig,
    run_comparison,
    run_marginal_zero_study,
    run_rate_study,
    truth_at_zero,
)
from decdens.sampler import ClusterState, SamplerConfig, _run_chain, gibbs_sweep, run_chain, update_theta_cluster
from test_estimators import minmax_penalized
from test_sampler import d_theta_cdf

VARIANTS = {v: BaseMeasureSpec(v) for v in "ABCD"}


def test_criterion_01_penalized_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = worst_g = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 51))
        d = SampleData(rng.exponential(size=n))
        xs = d.values
        alpha = rng.uniform(0, xs[-1] / 2)
        if alpha == 0.0:
            continue
        f, gam = penalized_mle(d, alpha)
        worst = max(worst, float(np.max(np.abs(f(xs) - minmax_penalized(xs, alpha, gam)))))
        f0, _ = penalized_mle(d, 0.0)
        g = grenander(d)
        grid = np.concatenate([[0.0], xs, xs + 1e-9])
        worst_g = max(worst_g, float(np.max(np.abs(f0(grid) - g(grid)))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and worst_g < 1e-12 and dt < 10
    report(1, ok, f"max |LCM - minmax| = {worst:.2e}, max |alpha=0 - Grenander| = {worst_g:.2e}, {dt:.1f}s")


def test_criterion_02_gamma_fixed_point():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 101))
        d = SampleData(rng.exponential(size=n))
        xs, frac = d.ecdf_points()
        alpha = rng.uniform(0, xs[-1])
        gam = solve_gamma(d, alpha)
        worst = max(worst, abs(gam - float(np.min(1 - alpha * frac / (alpha + gam * xs)))))
    single = abs(solve_gamma(SampleData([1.0]), 0.5) - 0.5)
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and single < 1e-12 and dt < 5
    report(2, ok, f"max residual {worst:.2e}, n=1 case error {single:.2e}, {dt:.1f}s")


def test_criterion_03_sampler_validity():
    t0 = time.perf_counter()
    data = SampleData(np.random.default_rng(103).exponential(size=100))
    worst_mass, violations, increasing = 0.0, 0, 0
    for v, base in VARIANTS.items():
        rng = np.random.default_rng(1030 + base.code)
        state = ClusterState.single_cluster(data)
        tau = float(state.thetas.min()) / 2 if v == "D" else None
        for _ in range(5000):
            state = gibbs_sweep(state, data, base, 1.0, 0.5, rng, tau=tau)
            if v == "D":
                tau = update_tau_variant_d(state.thetas, base, rng)
            try:
                state.validate(data)
            except ValueError:
                violations += 1
            step = mixture_to_step(state.to_mixture())
            worst_mass = max(worst_mass, abs(step.total_mass() - 1))
            increasing += int(np.any(np.diff(step.heights) > 0))
        # the packaged runner's retained draws obey the same contract
        chain = run_chain(data, SamplerConfig(base=base, iterations=5000, burn_in=0, seed=base.code))
        for d in chain:
            worst_mass = max(worst_mass, abs(d.density.total_mass() - 1))
            increasing += int(np.any(np.diff(d.density.heights) > 0))
    dt = time.perf_counter() - t0
    ok = worst_mass <= 1e-12 and violations == 0 and increasing == 0 and dt < 120
    report(3, ok, f"max |mass - 1| = {worst_mass:.1e}, support violations {violations}, "
                  f"non-decreasing draws {increasing}, {dt:.0f}s")


def test_criterion_04_kernel_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    parts = {}
    # (a) base A rejection sampler at x = 0.5, truncated Gamma for tau with theta = {0.66}
    t = np.sort([sample_theta_new(0.5, VARIANTS["A"], rng) for _ in range(100_000)])
    cdf = tabulated_cdf(lambda s: math.exp(-s - 1 / s) / s, 0.5, 60.5, num=6001)
    parts["A-rejection"] = ks_statistic(t, cdf(t))
    tau = np.sort([update_tau_variant_d([0.66], VARIANTS["D"], rng) for _ in range(100_000)])
    cdf = tabulated_cdf(lambda s: s ** 2 * math.exp(-s), 0.0, 0.66, num=2001)
    parts["D-tau"] = ks_statistic(tau, cdf(tau))
    ok_a = parts["A-rejection"] < 0.006 and parts["D-tau"] < 0.006
    # (b) conjugate cluster updates: Pareto(abar + m, max(tau, max x)) moments
    ok_b = True
    zs = []
    for abar, thr, xs in [(1.0, 0.5, [0.3, 0.9]), (2.0, 1.5, [0.2, 0.4, 0.7, 1.0])]:
        base = BaseMeasureSpec("C", alpha_bar=abar, tau=thr)
        data = SampleData(xs)
        state = ClusterState(np.ones(len(xs), dtype=np.int64), [max(xs + [thr])])
        draws = np.array([update_theta_cluster(1, state, data, base, 0.5, rng) for _ in range(100_000)])
        a, scale = abar + len(xs), max(thr, max(xs))
        # log(theta / scale) ~ Exp(a); (scale / theta) ~ Beta(a, 1)
        logs = np.log(draws / scale)
        zs.append((logs.mean() - 1 / a) / (1 / a / math.sqrt(draws.size)))
        ratio = scale / draws
        zs.append((ratio.mean() - a / (a + 1)) / math.sqrt(a / ((a + 1) ** 2 * (a + 2)) / draws.size))
        mean_sd = math.sqrt(a * scale ** 2 / ((a - 1) ** 2 * (a - 2)) / draws.size)
        zs.append((draws.mean() - a * scale / (a - 1)) / mean_sd)
        ok_b &= bool(draws.min() >= scale)
    ok_b &= max(abs(z) for z in zs) < 4
    # (c) n = 1 chains against the exact single-observation posterior
    x = 0.6
    for v, base in VARIANTS.items():
        chain = run_chain(SampleData([x]), SamplerConfig(base=base, iterations=100_001, burn_in=1, seed=104,
                                                         tune=False))
        t = np.sort(chain.atoms)
        if v == "A":
            F = tabulated_cdf(lambda s: math.exp(-s - 1 / s) / s, x, x + 60.0, num=6001)(t)
        elif v == "D":
            F = d_theta_cdf(x)(t)
        else:
            F = single_posterior_cdf(t, x, base)
        parts[f"n=1 {v}"] = ks_statistic(t, F)
    ok_c = all(parts[f"n=1 {v}"] < 0.01 for v in "ABCD")
    dt = time.perf_counter() - t0
    ok = ok_a and ok_b and ok_c and dt < 180
    detail = ", ".join(f"KS {k} {v:.4f}" for k, v in parts.items())
    report(4, ok, f"{detail}, max conjugate-moment |z| {max(abs(z) for z in zs):.2f}, {dt:.0f}s")


def test_criterion_05_crp_prior():
    t0 = time.perf_counter()
    worst = 0.0
    base = BaseMeasureSpec("C")
    for n in (3, 10, 25):
        data = SampleData(np.linspace(0.1, 0.4, n))
        for alpha in (0.5, 1.0, 2.0):
            cfg = SamplerConfig(alpha=alpha, base=base, iterations=100_001, burn_in=1, seed=105 + n)
            k = _run_chain(data, cfg, likelihood=False).n_clusters
            expected = sum(alpha / (alpha + i - 1) for i in range(1, n + 1))
            worst = max(worst, abs(k.mean() - expected) / batch_means_se(k))
    dt = time.perf_counter() - t0
    ok = worst < 3 and dt < 60
    report(5, ok, f"max |mean K - E K| / sigma = {worst:.2f} over 9 (n, alpha) cells, {dt:.0f}s")


def test_criterion_06_grenander_inconsistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    vals, bound_ok = [], True
    for _ in range(200):
        d = SampleData(rng.exponential(size=1000))
        g0 = grenander(d).at_zero()
        bound_ok &= g0 >= 1 / (1000 * d.values[0]) * (1 - 1e-14)
        vals.append(g0)
    med = float(np.median(vals))
    dt = time.perf_counter() - t0
    ok = 1.5 <= med <= 3.0 and bound_ok and dt < 10
    report(6, ok, f"median f_n(0) = {med:.3f}, lower bound held in all replicates: {bound_ok}, {dt:.1f}s")


@pytest.mark.slow
def test_criterion_07_table1_frequentist():
    t0 = time.perf_counter()
    table = run_comparison(StudyConfig(distribution="exponential", sample_sizes=(50, 200), replicates=50,
                                       estimators=("P", "S", "A", "H")))
    brackets = {(50, "P"): 0.037, (200, "P"): 0.029, (50, "H"): 0.076, (200, "H"): 0.040}
    got = {k: table.get(*k)["mse"] for k in brackets}
    dt = time.perf_counter() - t0
    ok = all(ref / 2 <= got[k] <= ref * 2 for k, ref in brackets.items()) and dt < 60
    detail = ", ".join(f"{e} n={n} MSE {got[(n, e)]:.4f} (ref {ref})" for (n, e), ref in brackets.items())
    report(7, ok, f"{detail}, {dt:.0f}s")


@pytest.mark.slow
def test_criterion_08_table2_bayes():
    t0 = time.perf_counter()
    # 200 replicates per n split into ten independent 20-replicate aggregates;
    # the first aggregate at n = 50 is exactly the 20-replicate configuration
    cfg = StudyConfig(distribution="half_normal", sample_sizes=(50, 200), replicates=200,
                      estimators=("P", "S", "A", "H", "B"),
                      sampler=SamplerConfig(base=BaseMeasureSpec("A"), iterations=5000, burn_in=2500))
    table = run_comparison(cfg)
    truth = truth_at_zero("half_normal")
    b50 = np.asarray(table.raw[(50, "B")][:20])
    mse = float(np.mean((b50 - truth) ** 2))
    wins = 0
    for n in (50, 200):
        for block in range(10):
            var = {e: float(np.var(table.raw[(n, e)][20 * block:20 * block + 20])) for e in "PSAHB"}
            wins += int(min(var, key=var.get) == "B")
    dt = time.perf_counter() - t0
    ok_mse = 0.012 / 3 <= mse <= 0.012 * 3
    ok = ok_mse and wins >= 15 and dt < 1800
    report(8, ok, f"B MSE (n=50, 20 reps) {mse:.4f} vs [0.004, 0.036]: {ok_mse}; "
                  f"B smallest variance in {wins}/20 aggregates (need 15), {dt:.0f}s")


@pytest.mark.slow
def test_criterion_09_rate_study():
    t0 = time.perf_counter()
    cfg = StudyConfig(distribution="exponential", sample_sizes=(250, 500, 1000, 2000, 4000), replicates=20,
                      sampler=SamplerConfig(iterations=2500, burn_in=1250, target_accept=0.2),
                      warmup_iterations=20000)
    res = run_rate_study(cfg, ("A", "B"))
    slopes = {v: res.slopes[v]["all"] for v in "AB"}
    dt = time.perf_counter() - t0
    ok = all(-0.45 <= s <= -0.20 for s in slopes.values()) and dt < 7200
    report(9, ok, f"log-log slope A {slopes['A']:.3f}, B {slopes['B']:.3f} (need [-0.45, -0.20]), {dt:.0f}s")


@pytest.mark.slow
def test_criterion_10_mean_median():
    t0 = time.perf_counter()
    res = run_marginal_zero_study(StudyConfig(distribution="exponential", sample_sizes=(500,),
                                              sampler=SamplerConfig(iterations=50000, burn_in=25000)))
    mean, med = res.mean[500], res.median[500]
    rel = abs(mean - med) / med
    dt = time.perf_counter() - t0
    ok = len(res.draws[500]) == 25000 and rel < 0.1 and dt < 300
    report(10, ok, f"mean {mean:.4f}, median {med:.4f}, relative gap {rel:.4f}, {dt:.0f}s")


def test_criterion_11_replay(tmp_path):
    t0 = time.perf_counter()
    data = tmp_path / "data.txt"
    data.write_text("".join(f"{float(v)!r}\n" for v in np.random.default_rng(111).exponential(size=40)))
    tiny = ["--iters", "300", "--burn", "150"]
    commands = {
        "fit": ["fit", str(data), "--base", "D"] + tiny,
        "zero": ["zero", str(data)] + tiny,
        "compare": ["study", "compare", "--n", "20,40", "--reps", "3", "--estimators", "P,S,A,H,B"] + tiny,
        "rate": ["study", "rate", "--n", "30,60,120", "--reps", "2", "--warmup", "100"] + tiny,
        "marginal": ["study", "marginal-zero", "--n", "30"] + tiny,
    }
    mismatched = []
    for name, argv in commands.items():
        first, again = tmp_path / f"{name}-1", tmp_path / f"{name}-2"
        assert main(argv + ["--out", str(first)]) == 0
        assert main(["replay", str(first / "manifest.json"), "--out", str(again)]) == 0
        files = sorted(p.name for p in first.iterdir())
        if files != sorted(p.name for p in again.iterdir()):
            mismatched.append(name)
            continue
        mismatched += [f"{name}/{f}" for f in files if (first / f).read_bytes() != (again / f).read_bytes()]
    dt = time.perf_counter() - t0
    ok = not mismatched and dt < 60
    report(11, ok, f"{len(commands)} commands replayed, mismatches: {mismatched or 'none'}, {dt:.0f}s")
