"""Base-measure computations: marginal likelihoods and exact single-site draws."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from . import _kernels as K
from .core import BaseMeasureSpec


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


QUAD_RTOL = 1e-8


def _quad(fun, a, b, what):
    val, err, info = integrate.quad(fun, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200, full_output=True)[:3]
    if not np.isfinite(val) or err > max(1e-7 * abs(val), 1e-300):
        raise QuadratureError(f"{what}: value={val!r} abserr={err!r} neval={info.get('neval')}")
    return val


@lru_cache(maxsize=None)
def variant_a_constant() -> float:
    """Normalizing constant of exp(-theta - 1/theta) on (0, inf)."""
    return _quad(lambda t: math.exp(-t - 1.0 / t), 0.0, np.inf, "base A normalizing constant")


def _pareto_marginal(x, abar, tau):
    return abar * tau ** abar / ((abar + 1.0) * np.maximum(x, tau) ** (abar + 1.0))


def marginal_likelihood(x: float, base: BaseMeasureSpec, tau: float | None = None) -> float:
    """Prior predictive density of one observation, int_x^inf g0(t) / t dt.

    For variant D, ``tau`` conditions on the Pareto threshold; without it the
    threshold is integrated out against its Gamma prior.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    v = base.variant
    if v == "A":
        val = _quad(lambda t: math.exp(-t - 1.0 / t) / t, x, np.inf, f"base A marginal at x={x}")
        return val / variant_a_constant()
    if v == "B":
        return math.exp(-x)
    if v == "C" or tau is not None:
        return float(_pareto_marginal(x, base.alpha_bar, base.tau if tau is None else tau))
    prior = stats.gamma(base.lam, scale=1.0 / base.beta)
    fun = lambda s: float(_pareto_marginal(x, base.alpha_bar, s)) * prior.pdf(s)
    return _quad(fun, 0.0, x, "base D marginal (lower)") + _quad(fun, x, np.inf, "base D marginal (upper)")


def marginal_likelihoods(xs, base: BaseMeasureSpec, tau: float | None = None) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if base.variant == "B":
        return np.exp(-xs)
    if base.variant == "C" or (base.variant == "D" and tau is not None):
        return _pareto_marginal(xs, base.alpha_bar, base.tau if tau is None else tau)
    uniq, inv = np.unique(xs, return_inverse=True)
    vals = np.array([marginal_likelihood(float(u), base, tau) for u in uniq])
    return vals[inv]


def theta_from_uniform_b(x: float, u: float) -> float:
    """Inverse-CDF map for base B: theta = x - log(u)."""
    return x - math.log(u)


def sample_theta_new(x: float, base: BaseMeasureSpec, rng: np.random.Generator, tau: float | None = None) -> float:
    """Exact draw from the single-observation posterior g0(t) t^-1 1{t >= x}."""
    if not x > 0:
        raise ValueError("x must be positive")
    thr = base.tau if tau is None else tau
    return K.draw_theta_new(base.code, float(x), base.alpha_bar, float(thr), rng)


def single_posterior_cdf(t, x: float, base: BaseMeasureSpec, tau: float | None = None):
    """CDF of the single-observation posterior of theta (quadrature for A)."""
    t = np.asarray(t, dtype=float)
    v = base.variant
    if v == "A":
        total = marginal_likelihood(x, base) * variant_a_constant()
        f = lambda s: 0.0 if s <= x else _quad(
            lambda u: math.exp(-u - 1.0 / u) / u, x, s, "base A posterior cdf") / total
        out = np.vectorize(f)(t)
    elif v == "B":
        out = np.where(t > x, 1.0 - np.exp(x - t), 0.0)
    else:
        lo = max(base.tau if tau is None else tau, x)
        out = np.where(t > lo, 1.0 - (lo / np.where(t > 0, t, 1.0)) ** (base.alpha_bar + 1.0), 0.0)
    return out if out.ndim else float(out)


def truncated_gamma_cdf(t, shape: float, rate: float, upper: float):
    t = np.clip(np.asarray(t, dtype=float), 0.0, upper)
    return special.gammainc(shape, rate * t) / special.gammainc(shape, rate * upper)


def update_tau_variant_d(thetas, base: BaseMeasureSpec, rng: np.random.Generator) -> float:
    """Draw tau ~ Gamma(lam + K alpha_bar, beta) truncated to [0, min(thetas)]."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size == 0:
        raise ValueError("need at least one cluster scale")
    shape = base.lam + thetas.size * base.alpha_bar
    upper = float(thetas.min())
    u = 1.0 - rng.random()
    pmax = special.gammainc(shape, base.beta * upper) if np.isfinite(upper) else 1.0
    if pmax < 1e-280:
        # far left tail: exp(-beta tau) is 1 to machine precision on [0, upper]
        return upper * u ** (1.0 / shape)
    tau = special.gammaincinv(shape, u * pmax) / base.beta
    return float(min(tau, upper))
