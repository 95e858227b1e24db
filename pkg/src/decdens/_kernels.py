"""Compiled inner loops of the Gibbs sampler.

State layout shared by all kernels: ``z[i]`` is the 0-based cluster slot of
observation i, ``theta[:K]`` and ``counts[:K]`` hold the occupied clusters.
Slots are kept contiguous by moving the last cluster into a vacated slot.
Base variants are passed as integer codes 0..3 for A..D; for C and D ``tau``
is the (current) Pareto threshold.
"""
import math

import numba
import numpy as np

VARIANT_A, VARIANT_B, VARIANT_C, VARIANT_D = 0, 1, 2, 3

# sup_y y^-1 exp(-y - 1/y) is about 0.1729
REJECTION_BOUND = 0.18
# beyond this y the uniform envelope is replaced by exp(-y) / TAIL_START
TAIL_START = 8.0
# above this x the target is sampled on the theta scale with a shifted exponential proposal
SHIFTED_SWITCH = 3.0
MAX_REJECTIONS = 1_000_000


@numba.njit(cache=True)
def draw_theta_a(x, rng):
    """Exact draw from density proportional to exp(-t - 1/t) / t on t >= x."""
    if x > SHIFTED_SWITCH:
        # proposal x + Exp(1); ratio to envelope is x exp(-1/t) / t <= 1
        for _ in range(MAX_REJECTIONS):
            t = x + rng.exponential()
            if rng.random() * t <= x * math.exp(-1.0 / t):
                return t
        raise RuntimeError("rejection sampler for base A exceeded iteration cap")
    ymax = 1.0 / x
    l1 = min(ymax, TAIL_START)
    m1 = REJECTION_BOUND * l1
    m2 = 0.0
    if ymax > TAIL_START:
        m2 = (math.exp(-TAIL_START) - math.exp(-ymax)) / TAIL_START
    for _ in range(MAX_REJECTIONS):
        if m2 > 0.0 and rng.random() * (m1 + m2) >= m1:
            # truncated exponential on (TAIL_START, ymax]
            span = 1.0 - math.exp(-(ymax - TAIL_START))
            y = TAIL_START - math.log(1.0 - rng.random() * span)
            if rng.random() * y <= TAIL_START * math.exp(-1.0 / y):
                return 1.0 / y
        else:
            y = rng.random() * l1
            if y <= 0.0:
                continue
            if rng.random() <= math.exp(-y - 1.0 / y) / (REJECTION_BOUND * y):
                return 1.0 / y
    raise RuntimeError("rejection sampler for base A exceeded iteration cap")


@numba.njit(cache=True)
def draw_theta_new(code, x, abar, tau, rng):
    """Draw theta from g0(theta) / theta restricted to theta >= x."""
    if code == VARIANT_A:
        return draw_theta_a(x, rng)
    u = 1.0 - rng.random()
    if code == VARIANT_B:
        return x - math.log(u)
    return max(tau, x) * u ** (-1.0 / (abar + 1.0))


@numba.njit(cache=True)
def log_cluster_target(code, t, m):
    """Unnormalized log posterior of a cluster scale with m members (A and B)."""
    if code == VARIANT_A:
        return -t - 1.0 / t - m * math.log(t)
    return (1.0 - m) * math.log(t) - t


@numba.njit(cache=True)
def update_one_theta(code, theta, cmax, m, abar, tau, step, rng):
    """New scale for a cluster of size m whose largest member is cmax.

    Returns ``(theta, accepted)``; accepted is -1 for exact (conjugate) draws.
    """
    if code == VARIANT_C or code == VARIANT_D:
        u = 1.0 - rng.random()
        return max(tau, cmax) * u ** (-1.0 / (abar + m)), -1
    prop = theta + step * rng.standard_normal()
    if prop < cmax:
        return theta, 0
    logr = log_cluster_target(code, prop, m) - log_cluster_target(code, theta, m)
    if logr >= 0.0 or math.log(1.0 - rng.random()) < logr:
        return prop, 1
    return theta, 0


@numba.njit(cache=True)
def update_thetas(x, z, theta, counts, K, code, abar, tau, step, rng, stats):
    """Resample every occupied cluster's scale; stats += (accepted, proposed)."""
    cmax = np.zeros(K)
    for i in range(x.size):
        k = z[i]
        if x[i] > cmax[k]:
            cmax[k] = x[i]
    for k in range(K):
        t, acc = update_one_theta(code, theta[k], cmax[k], counts[k], abar, tau, step, rng)
        theta[k] = t
        if acc >= 0:
            stats[0] += acc
            stats[1] += 1


@numba.njit(cache=True)
def remove_observation(i, z, theta, counts, K):
    """Take observation i out of its cluster, compacting if it empties.

    Returns the new number of clusters.
    """
    k = z[i]
    counts[k] -= 1
    z[i] = -1
    if counts[k] == 0:
        last = K - 1
        if k != last:
            theta[k] = theta[last]
            counts[k] = counts[last]
            for j in range(z.size):
                if z[j] == last:
                    z[j] = k
        counts[last] = 0
        K -= 1
    return K


@numba.njit(cache=True)
def assignment_weights(xi, theta, counts, K, marg_i, alpha, use_lik, w):
    """Unnormalized weights of joining clusters 0..K-1 (w[:K]) or a new one (w[K])."""
    for k in range(K):
        if use_lik:
            w[k] = counts[k] / theta[k] if theta[k] >= xi else 0.0
        else:
            w[k] = counts[k]
    w[K] = alpha * marg_i if use_lik else alpha
    return w[: K + 1].sum()


@numba.njit(cache=True)
def update_assignment(i, x, z, theta, counts, K, marg, alpha, code, abar, tau, use_lik, rng, w):
    K = remove_observation(i, z, theta, counts, K)
    total = assignment_weights(x[i], theta, counts, K, marg[i], alpha, use_lik, w)
    u = rng.random() * total
    acc = 0.0
    choice = K
    for k in range(K + 1):
        acc += w[k]
        if u < acc:
            choice = k
            break
    if choice == K:
        # without the likelihood the scales never enter the weights
        theta[K] = draw_theta_new(code, x[i], abar, tau, rng) if use_lik else 1.0
        counts[K] = 0
        K += 1
    z[i] = choice
    counts[choice] += 1
    return K


@numba.njit(cache=True)
def update_assignments(x, z, theta, counts, K, marg, alpha, code, abar, tau, use_lik, rng):
    w = np.empty(x.size + 1)
    for i in range(x.size):
        K = update_assignment(i, x, z, theta, counts, K, marg, alpha, code, abar, tau, use_lik, rng, w)
    return K


@numba.njit(cache=True)
def eval_at(offsets, atoms, weights, x):
    """Value at x of every packed draw: sum of weight/atom over atoms >= x."""
    J = offsets.size - 1
    out = np.zeros(J)
    for j in range(J):
        s = 0.0
        for a in range(offsets[j], offsets[j + 1]):
            if atoms[a] >= x:
                s += weights[a] / atoms[a]
        out[j] = s
    return out


@numba.njit(cache=True)
def eval_grid(offsets, atoms, weights, grid):
    J = offsets.size - 1
    out = np.zeros((J, grid.size))
    for j in range(J):
        for a in range(offsets[j], offsets[j + 1]):
            c = weights[a] / atoms[a]
            t = atoms[a]
            for g in range(grid.size):
                if grid[g] > t:
                    break
                out[j, g] += c
    return out


def _check_rejection_bound():
    y = np.linspace(1e-3, 20.0, 200_001)
    sup = float(np.max(np.exp(-y - 1.0 / y) / y))
    if sup > REJECTION_BOUND:
        raise AssertionError(f"rejection bound {REJECTION_BOUND} below sup {sup}")


_check_rejection_bound()
