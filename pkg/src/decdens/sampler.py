"""Gibbs sampler for the Dirichlet process mixture of uniform densities.

The chain state is a partition of the observations into clusters together
with one uniform scale per cluster. Each sweep first refreshes every
cluster's scale given its members, then reassigns observations one at a time
(a cluster emptied by a reassignment is dropped immediately). For base
variant D the Pareto threshold tau is an extra Gibbs coordinate updated
between the two steps.
"""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .base_measures import marginal_likelihoods, update_tau_variant_d
from .core import BaseMeasureSpec, MixtureMeasure, SampleData, StepDensity, mixture_to_step

TUNE_WINDOW = 50


@dataclass(frozen=True)
class SamplerConfig:
    alpha: float = 1.0
    base: BaseMeasureSpec = dataclasses.field(default_factory=BaseMeasureSpec)
    iterations: int = 5000
    burn_in: int = 2500
    seed: int = 0
    mh_step: float = 0.5
    thin: int = 1
    target_accept: float = 0.3
    tune: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if not self.mh_step > 0:
            raise ValueError("mh_step must be positive")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["base"] = self.base.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        d = dict(d)
        d["base"] = BaseMeasureSpec(**d.get("base", {}))
        return cls(**d)


@dataclass
class ClusterState:
    """Cluster labels (1..K) for every observation plus the K cluster scales."""

    assignments: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        self.thetas = np.asarray(self.thetas, dtype=float)

    @property
    def n_clusters(self) -> int:
        return self.thetas.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignments - 1, minlength=self.n_clusters)

    def validate(self, data: Optional[SampleData] = None) -> None:
        z = self.assignments
        if z.min() < 1 or z.max() != self.n_clusters or np.any(self.counts() == 0):
            raise ValueError("labels must cover 1..K with no empty cluster")
        if data is not None and np.any(self.thetas[z - 1] < data.values):
            raise ValueError("an observation lies outside its cluster's support")

    def _arrays(self):
        n = self.assignments.size
        z = (self.assignments - 1).astype(np.int64)
        theta = np.zeros(n + 1)
        theta[: self.n_clusters] = self.thetas
        counts = np.zeros(n + 1, dtype=np.int64)
        counts[: self.n_clusters] = self.counts()
        return z, theta, counts, self.n_clusters

    @classmethod
    def _from_arrays(cls, z, theta, counts, k) -> "ClusterState":
        return cls(z + 1, theta[:k].copy())

    @classmethod
    def single_cluster(cls, data: SampleData, inflate: float = 1.05) -> "ClusterState":
        return cls(np.ones(data.n, dtype=np.int64), np.array([data.values[-1] * inflate]))

    def to_mixture(self) -> MixtureMeasure:
        return MixtureMeasure(self.thetas, self.counts() / self.assignments.size)


@dataclass(frozen=True)
class PosteriorDraw:
    density: StepDensity
    n_clusters: int
    tau_draw: Optional[float] = None


def crp_sample(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Sequential Chinese restaurant process labels, starting at 1."""
    if n < 1:
        raise ValueError("n must be positive")
    z = np.empty(n, dtype=np.int64)
    counts = [1]
    z[0] = 1
    for i in range(1, n):
        u = rng.random() * (i + alpha)
        if u >= i:
            counts.append(1)
            z[i] = len(counts)
        else:
            k = int(np.searchsorted(np.cumsum(counts), u, side="right"))
            counts[k] += 1
            z[i] = k + 1
    return z


def _tau_for(base: BaseMeasureSpec, tau: Optional[float]) -> float:
    return float(base.tau if tau is None else tau)


def update_theta_cluster(k: int, state: ClusterState, data: SampleData, base: BaseMeasureSpec,
                         mh_step: float, rng: np.random.Generator, tau: Optional[float] = None) -> float:
    """New scale for cluster ``k`` (1-based).

    Exact Pareto draw for C/D, one random-walk Metropolis-Hastings step for A/B.
    """
    members = data.values[state.assignments == k]
    if members.size == 0:
        raise ValueError(f"cluster {k} is empty")
    theta, _ = K.update_one_theta(base.code, float(state.thetas[k - 1]), float(members.max()), members.size,
                                  base.alpha_bar, _tau_for(base, tau), mh_step, rng)
    return theta


def assignment_probabilities(i: int, state: ClusterState, data: SampleData, base: BaseMeasureSpec,
                             alpha: float, tau: Optional[float] = None,
                             marg: Optional[np.ndarray] = None) -> tuple[ClusterState, np.ndarray]:
    """Conditional law of observation i's label given everyone else.

    Returns the state with i removed (its label set to 0, clusters compacted)
    and the normalized probabilities of joining each remaining cluster, the
    last entry being a new cluster.
    """
    if marg is None:
        marg = marginal_likelihoods(data.values, base, tau if base.variant == "D" else None)
    z, theta, counts, k = state._arrays()
    k = K.remove_observation(i, z, theta, counts, k)
    w = np.empty(data.n + 1)
    total = K.assignment_weights(data.values[i], theta, counts, k, marg[i], alpha, True, w)
    rest = ClusterState(z + 1, theta[:k].copy())
    return rest, w[: k + 1] / total


def update_assignment(i: int, state: ClusterState, data: SampleData, base: BaseMeasureSpec, alpha: float,
                      rng: np.random.Generator, tau: Optional[float] = None,
                      marg: Optional[np.ndarray] = None) -> ClusterState:
    if marg is None:
        marg = marginal_likelihoods(data.values, base, tau if base.variant == "D" else None)
    z, theta, counts, k = state._arrays()
    w = np.empty(data.n + 1)
    k = K.update_assignment(i, data.values, z, theta, counts, k, marg, alpha, base.code, base.alpha_bar,
                            _tau_for(base, tau), True, rng, w)
    return ClusterState._from_arrays(z, theta, counts, k)


def gibbs_sweep(state: ClusterState, data: SampleData, base: BaseMeasureSpec, alpha: float, mh_step: float,
                rng: np.random.Generator, tau: Optional[float] = None,
                marg: Optional[np.ndarray] = None) -> ClusterState:
    """One sweep: all cluster scales, then every assignment in index order.

    For variant D, ``tau`` is held fixed here; :func:`run_chain` interleaves
    :func:`update_tau_variant_d`.
    """
    if marg is None:
        marg = marginal_likelihoods(data.values, base, tau if base.variant == "D" else None)
    z, theta, counts, k = state._arrays()
    t = _tau_for(base, tau)
    stats = np.zeros(2, dtype=np.int64)
    K.update_thetas(data.values, z, theta, counts, k, base.code, base.alpha_bar, t, mh_step, rng, stats)
    k = K.update_assignments(data.values, z, theta, counts, k, marg, alpha, base.code, base.alpha_bar, t, True, rng)
    return ClusterState._from_arrays(z, theta, counts, k)


class Chain(Sequence):
    """Retained posterior draws of one chain, stored packed.

    Draw j is the mixture placing mass ``counts / n`` on the occupied cluster
    scales; indexing materializes it as a :class:`PosteriorDraw`.
    """

    def __init__(self, offsets, atoms, weights, n_clusters, taus, acceptance_rate, mh_step, final_state,
                 final_tau, config):
        self.offsets = offsets
        self.atoms = atoms
        self.weights = weights
        self.n_clusters = n_clusters
        self.taus = taus
        self.acceptance_rate = acceptance_rate
        self.mh_step = mh_step
        self.final_state = final_state
        self.final_tau = final_tau
        self.config = config

    def __len__(self):
        return self.offsets.size - 1

    def mixture(self, j: int) -> MixtureMeasure:
        sl = slice(self.offsets[j], self.offsets[j + 1])
        return MixtureMeasure(self.atoms[sl], self.weights[sl])

    def __getitem__(self, j):
        if isinstance(j, slice):
            return [self[i] for i in range(*j.indices(len(self)))]
        if j < 0:
            j += len(self)
        if not 0 <= j < len(self):
            raise IndexError(j)
        tau = None if self.taus is None else float(self.taus[j])
        return PosteriorDraw(mixture_to_step(self.mixture(j)), int(self.n_clusters[j]), tau)

    def values_at(self, x: float) -> np.ndarray:
        """Every retained draw evaluated at x."""
        return K.eval_at(self.offsets, self.atoms, self.weights, float(x))

    def evaluate(self, grid) -> np.ndarray:
        """Draws-by-grid matrix of density values."""
        return K.eval_grid(self.offsets, self.atoms, self.weights, np.asarray(grid, dtype=float))


def _initial_tau(theta: np.ndarray) -> float:
    return float(theta.min()) / 2.0


def run_chain(data: SampleData, config: SamplerConfig, init: Optional[ClusterState] = None,
              init_tau: Optional[float] = None) -> Chain:
    """Run the sampler and keep every ``thin``-th sweep after burn-in.

    Random-walk step sizes (variants A and B) are tuned toward
    ``config.target_accept`` during burn-in only.
    """
    return _run_chain(data, config, init, init_tau, likelihood=True)


def _run_chain(data, config, init=None, init_tau=None, likelihood=True) -> Chain:
    # likelihood=False samples the prior partition; used only to test the CRP moves
    base = config.base
    rng = np.random.default_rng(config.seed)
    x = np.ascontiguousarray(data.values)
    n = x.size
    state = ClusterState.single_cluster(data) if init is None else init
    if likelihood:
        state.validate(data)
    z, theta, counts, k = state._arrays()
    code = base.code
    tau = base.tau
    if base.variant == "D":
        tau = _initial_tau(theta[:k]) if init_tau is None else float(init_tau)
    marg = marginal_likelihoods(x, base, tau if base.variant == "D" else None)
    mh = base.variant in "AB"
    step = config.mh_step
    stats = np.zeros(2, dtype=np.int64)
    window = np.zeros(2, dtype=np.int64)
    post = np.zeros(2, dtype=np.int64)

    n_keep = config.n_draws
    atoms, weights, offsets = [], [], [0]
    ks = np.empty(n_keep, dtype=np.int64)
    taus = np.empty(n_keep) if base.variant == "D" else None
    j = 0
    for it in range(config.iterations):
        stats[:] = 0
        K.update_thetas(x, z, theta, counts, k, code, base.alpha_bar, tau, step, rng, stats)
        if base.variant == "D":
            tau = update_tau_variant_d(theta[:k], base, rng)
            marg = marginal_likelihoods(x, base, tau)
        k = K.update_assignments(x, z, theta, counts, k, marg, config.alpha, code, base.alpha_bar, tau,
                                 likelihood, rng)
        if it < config.burn_in:
            window += stats
            if mh and config.tune and (it + 1) % TUNE_WINDOW == 0 and window[1] > 0:
                rate = window[0] / window[1]
                step *= math.exp(rate - config.target_accept)
                window[:] = 0
            continue
        post += stats
        if (it - config.burn_in) % config.thin == config.thin - 1 and j < n_keep:
            atoms.append(theta[:k].copy())
            weights.append(counts[:k] / n)
            offsets.append(offsets[-1] + k)
            ks[j] = k
            if taus is not None:
                taus[j] = tau
            j += 1

    acc = float(post[0] / post[1]) if mh and post[1] > 0 else None
    return Chain(
        offsets=np.array(offsets, dtype=np.int64),
        atoms=np.concatenate(atoms) if atoms else np.empty(0),
        weights=np.concatenate(weights) if weights else np.empty(0),
        n_clusters=ks,
        taus=taus,
        acceptance_rate=acc,
        mh_step=step,
        final_state=ClusterState._from_arrays(z, theta, counts, k),
        final_tau=tau if base.variant == "D" else None,
        config=config,
    )
