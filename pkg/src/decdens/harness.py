"""Simulation studies: estimator comparison, contraction rate, posterior at zero,
and credible bands for a data file.

Every replicate owns an RNG stream derived from ``(master_seed, n, replicate)``
through :class:`numpy.random.SeedSequence` spawn keys, so results do not
depend on execution order or on the number of worker processes.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import DataError, EvalGrid, SampleData, read_data
from .estimators import estimate_all_zero
from .sampler import ClusterState, SamplerConfig, run_chain
from .summary import ChainSummary, summarize_chain

TRUTH_AT_ZERO = {"exponential": 1.0, "half_normal": math.sqrt(2.0 / math.pi)}
ESTIMATORS = ("P", "S", "A", "H", "B")
DIST_ALIASES = {"exp": "exponential", "exponential": "exponential", "half_normal": "half_normal",
                "half-normal": "half_normal", "halfnormal": "half_normal", "hn": "half_normal"}


class ReplicateError(RuntimeError):
    pass


def fmt(x) -> str:
    return "nan" if x is None else format(float(x), ".17g")


def replicate_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key)))


def derived_seed(master_seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def normalize_distribution(name: str) -> str:
    if name.startswith("file:"):
        return name
    try:
        return DIST_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown distribution {name!r}") from None


def generate_sample(distribution: str, n: int, rng: np.random.Generator) -> SampleData:
    """Draw n observations; ``file:PATH`` resamples a data file with replacement."""
    if n < 1:
        raise ValueError("n must be positive")
    distribution = normalize_distribution(distribution)
    if distribution == "exponential":
        return SampleData(-np.log(1.0 - rng.random(n)))
    if distribution == "half_normal":
        x = np.abs(rng.standard_normal(n))
        # a zero draw has probability 2^-53 per value; redraw to keep the sample positive
        while np.any(x == 0):
            x[x == 0] = np.abs(rng.standard_normal(int(np.sum(x == 0))))
        return SampleData(x)
    pool = read_data(distribution[len("file:"):]).values
    return SampleData(rng.choice(pool, size=n, replace=True))


def truth_at_zero(distribution: str) -> float:
    distribution = normalize_distribution(distribution)
    if distribution not in TRUTH_AT_ZERO:
        raise ValueError(f"true f(0) unknown for {distribution!r}")
    return TRUTH_AT_ZERO[distribution]


@dataclass(frozen=True)
class StudyConfig:
    distribution: str = "exponential"
    sample_sizes: tuple = (50, 200)
    replicates: int = 50
    estimators: tuple = ("P", "S", "A", "H")
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    master_seed: int = 20240101
    grid_points: int = 200
    warmup_iterations: int = 20000
    alpha0: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "distribution", normalize_distribution(self.distribution))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "estimators", tuple(e.upper() for e in self.estimators))
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ValueError("sample_sizes must be a nonempty list of positive integers")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            raise ValueError(f"unknown estimators {sorted(bad)}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sampler"] = self.sampler.to_dict()
        d["sample_sizes"] = list(self.sample_sizes)
        d["estimators"] = list(self.estimators)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        d = dict(d)
        d["sampler"] = SamplerConfig.from_dict(d.get("sampler", {}))
        return cls(**d)


def _map(fn, tasks, threads: int):
    if threads == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    workers = (os.cpu_count() or 1) if threads == 0 else threads
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*tasks)))


# -- estimator comparison ---------------------------------------------------

@dataclass
class ComparisonTable:
    """Bias, population variance and MSE per (n, estimator)."""

    rows: list
    truth: float
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_estimates(cls, estimates: dict, truth: float) -> "ComparisonTable":
        rows = []
        for (n, est), vals in sorted(estimates.items(), key=lambda kv: (kv[0][0], ESTIMATORS.index(kv[0][1]))):
            v = np.asarray(vals, dtype=float)
            rows.append({"n": n, "estimator": est, "bias": float(v.mean() - truth),
                         "variance": float(v.var()), "mse": float(np.mean((v - truth) ** 2))})
        return cls(rows, truth, dict(estimates))

    def get(self, n: int, estimator: str) -> dict:
        for r in self.rows:
            if r["n"] == n and r["estimator"] == estimator:
                return r
        raise KeyError((n, estimator))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "estimator", "bias", "variance", "mse"])
        for r in self.rows:
            w.writerow([r["n"], r["estimator"], fmt(r["bias"]), fmt(r["variance"]), fmt(r["mse"])])
        return buf.getvalue()

    def to_text(self) -> str:
        ests = [e for e in ESTIMATORS if any(r["estimator"] == e for r in self.rows)]
        lines = [f"{'n':>7} {'':5}" + "".join(f"{'f^' + e:>10}" for e in ests)]
        for n in sorted({r["n"] for r in self.rows}):
            for stat, label in (("bias", "Bias"), ("variance", "Var"), ("mse", "MSE")):
                cells = "".join(f"{self.get(n, e)[stat]:>10.4f}" for e in ests)
                lines.append(f"{n if stat == 'bias' else '':>7} {label:5}" + cells)
        return "\n".join(lines) + "\n"


def _comparison_replicate(distribution, n, rep, master_seed, estimators, sampler, alpha0):
    try:
        data = generate_sample(distribution, n, replicate_rng(master_seed, n, rep, 0))
        bayes = None
        if "B" in estimators:
            bayes = dataclasses.replace(sampler, seed=derived_seed(master_seed, n, rep, 1))
        est = estimate_all_zero(data, bayes, alpha0=alpha0).as_dict()
    except Exception as exc:
        raise ReplicateError(f"replicate failed (master_seed={master_seed}, n={n}, replicate={rep}): {exc}") from exc
    return {e: est[e] for e in estimators}


def run_comparison(config: StudyConfig, threads: int = 1) -> ComparisonTable:
    truth = truth_at_zero(config.distribution)
    tasks = [(config.distribution, n, r, config.master_seed, config.estimators, config.sampler, config.alpha0)
             for n in config.sample_sizes for r in range(config.replicates)]
    results = _map(_comparison_replicate, tasks, threads)
    estimates = {(n, e): [] for n in config.sample_sizes for e in config.estimators}
    for (_, n, _, *_), res in zip(tasks, results):
        for e, v in res.items():
            estimates[(n, e)].append(v)
    return ComparisonTable.from_estimates(estimates, truth)


# -- contraction rate -------------------------------------------------------

def fit_loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(values, dtype=float)), 1)
    return float(slope)


@dataclass
class RateStudyResult:
    rmse: dict  # (variant, n) -> rmse
    slopes: dict  # variant -> {"all": slope, "tail": slope}
    medians: dict = field(default_factory=dict, repr=False)
    acceptance: dict = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "n", "rmse"])
        for (v, n), r in sorted(self.rmse.items()):
            w.writerow([v, n, fmt(r)])
        return buf.getvalue()

    def slopes_json(self) -> str:
        return json.dumps({v: {k: fmt(s) for k, s in d.items()} for v, d in sorted(self.slopes.items())},
                          indent=2, sort_keys=True) + "\n"


def _warm_start(state: ClusterState, data: SampleData) -> ClusterState:
    """Reuse a partition and its scales on fresh data, lifting scales to cover members."""
    thetas = state.thetas.copy()
    np.maximum.at(thetas, state.assignments - 1, data.values)
    return ClusterState(state.assignments.copy(), thetas)


def _rate_cell(distribution, variant, n, master_seed, replicates, sampler, warmup_iterations):
    vcode = "ABCD".index(variant)
    truth = truth_at_zero(distribution)
    base = dataclasses.replace(sampler.base, variant=variant)
    warm_data = generate_sample(distribution, n, replicate_rng(master_seed, vcode, n, 0, 0))
    warm_cfg = dataclasses.replace(sampler, base=base, iterations=warmup_iterations,
                                   burn_in=warmup_iterations - 1, thin=1,
                                   seed=derived_seed(master_seed, vcode, n, 0, 1))
    warm = run_chain(warm_data, warm_cfg)
    medians, accs = [], []
    for r in range(replicates):
        data = generate_sample(distribution, n, replicate_rng(master_seed, vcode, n, r + 1, 0))
        cfg = dataclasses.replace(sampler, base=base, mh_step=warm.mh_step,
                                  seed=derived_seed(master_seed, vcode, n, r + 1, 1))
        init_tau = warm.final_tau
        chain = run_chain(data, cfg, init=_warm_start(warm.final_state, data), init_tau=init_tau)
        medians.append(float(np.median(chain.values_at(0.0))))
        accs.append(chain.acceptance_rate)
    medians = np.array(medians)
    return math.sqrt(float(np.mean((medians - truth) ** 2))), medians, accs


def run_rate_study(config: StudyConfig, base_variants: Sequence[str] = ("A", "B"), threads: int = 1,
                   tail_points: int = 4) -> RateStudyResult:
    """RMSE of the posterior median at zero versus n, with log-log slopes.

    Per (variant, n) a warm-up chain is run once; its final partition
    initializes every replicate chain for that n.
    """
    if len(config.sample_sizes) < 3:
        raise ValueError("rate study needs at least three sample sizes")
    ns = sorted(config.sample_sizes)
    tasks = [(config.distribution, v, n, config.master_seed, config.replicates, config.sampler,
              config.warmup_iterations) for v in base_variants for n in ns]
    results = _map(_rate_cell, tasks, threads)
    rmse, medians, acc = {}, {}, {}
    for t, (r, m, a) in zip(tasks, results):
        rmse[(t[1], t[2])] = r
        medians[(t[1], t[2])] = m
        acc[(t[1], t[2])] = a
    slopes = {}
    for v in base_variants:
        ys = [rmse[(v, n)] for n in ns]
        tail = min(tail_points, len(ns))
        slopes[v] = {"all": fit_loglog_slope(ns, ys), "tail": fit_loglog_slope(ns[-tail:], ys[-tail:])}
    return RateStudyResult(rmse, slopes, medians, acc)


# -- posterior of f(0) ------------------------------------------------------

@dataclass
class MarginalZeroResult:
    draws: dict  # n -> array of f(0) draws
    mean: dict
    median: dict

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean", "median", "draws"])
        for n in sorted(self.draws):
            w.writerow([n, fmt(self.mean[n]), fmt(self.median[n]), len(self.draws[n])])
        return buf.getvalue()


def run_marginal_zero_study(config: StudyConfig) -> MarginalZeroResult:
    draws, mean, median = {}, {}, {}
    for n in config.sample_sizes:
        data = generate_sample(config.distribution, n, replicate_rng(config.master_seed, n, 0, 0))
        cfg = dataclasses.replace(config.sampler, seed=derived_seed(config.master_seed, n, 0, 1))
        v = run_chain(data, cfg).values_at(0.0)
        draws[n] = v
        mean[n] = float(v.mean())
        median[n] = float(np.median(v))
    return MarginalZeroResult(draws, mean, median)


# -- data analysis ----------------------------------------------------------

def run_data_analysis(path, sampler: SamplerConfig, cutoff: Optional[float] = None,
                      grid: Optional[EvalGrid] = None, level: float = 0.95, grid_points: int = 200):
    """Credible bands for f and H0 from a data file.

    Without an explicit grid, ``grid_points`` points span 0 to the 0.999
    quantile of the (truncated) data. Returns ``(summary, chain, data)``.
    """
    data = read_data(path)
    if cutoff is not None:
        kept = data.values[data.values <= cutoff]
        if kept.size == 0:
            raise DataError(f"no observations at or below cutoff {cutoff}")
        data = SampleData(kept)
    grid = EvalGrid.for_data(data, grid_points) if grid is None else grid
    chain = run_chain(data, sampler)
    return summarize_chain(chain, grid, level), chain, data


def summary_csv(summary: ChainSummary, target: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "mean", "median", "lo", "hi"])
    for row in summary.table(target):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def column_csv(values, header: str) -> str:
    return header + "\n" + "".join(fmt(v) + "\n" for v in values)
