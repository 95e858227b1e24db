"""Frequentist estimators of a decreasing density and of its value at zero.

All of them are built on the least concave majorant (LCM) of a cumulative
point set: the Grenander estimator is the left derivative of the LCM of the
empirical CDF, and the penalized MLE is the same construction applied to
affinely transformed data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SampleData, StepDensity

PENALTY_CONSTANT = 0.649
ADAPTIVE_CONSTANT = 0.345
# pilot penalties tabulated for the two sample sizes used in the comparison study
PILOT_ALPHA = {50: 0.0516, 200: 0.0205}


@dataclass(frozen=True)
class ConcaveMajorant:
    """Piecewise-linear concave majorant through ``knots_x``/``knots_y``."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.knots_y) / np.diff(self.knots_x)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.knots_x.tolist(), self.knots_y.tolist()))

    def __call__(self, x):
        return np.interp(x, self.knots_x, self.knots_y)

    def left_derivative(self, x):
        """Slope of the segment ending at or containing x (0 beyond the last knot)."""
        idx = np.searchsorted(self.knots_x[1:], np.asarray(x, dtype=float), side="left")
        return np.append(self.slopes, 0.0)[idx]


def least_concave_majorant(x, y) -> ConcaveMajorant:
    """Upper hull of the points ``(x[i], y[i])`` by a single monotone-chain pass.

    ``x`` must be strictly ascending and start at 0 with ``y[0] == 0``.
    Collinear interior points are dropped so consecutive slopes strictly
    decrease.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two points with matching x and y")
    if x[0] != 0.0 or y[0] != 0.0:
        raise ValueError("points must start at (0, 0)")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x values must be strictly ascending (no duplicates)")

    hx = [x[0], x[1]]
    hy = [y[0], y[1]]
    for px, py in zip(x[2:].tolist(), y[2:].tolist()):
        while len(hx) >= 2:
            ax, ay, bx, by = hx[-2], hy[-2], hx[-1], hy[-1]
            # drop b if it lies on or below the chord a -> p
            if (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(px)
        hy.append(py)
    return ConcaveMajorant(np.array(hx), np.array(hy))


def _majorant_density(xs, cum) -> tuple[StepDensity, ConcaveMajorant]:
    lcm = least_concave_majorant(np.concatenate([[0.0], xs]), np.concatenate([[0.0], cum]))
    return StepDensity(lcm.knots_x[1:], lcm.slopes), lcm


def grenander(data: SampleData) -> StepDensity:
    """Grenander maximum likelihood estimator of a decreasing density."""
    xs, F = data.ecdf_points()
    return _majorant_density(xs, F)[0]


# -- penalized MLE ----------------------------------------------------------

def _gamma_residual(gamma: float, xs: np.ndarray, frac: np.ndarray, alpha: float) -> float:
    return float(np.min(1.0 - alpha * frac / (alpha + gamma * xs))) - gamma


def solve_gamma(data: SampleData, alpha: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Nontrivial root of ``gamma = min_s {1 - (alpha s/n) / (alpha + gamma x_s)}``.

    gamma = 0 always solves the equation; the residual is positive on
    (0, root) and negative on (root, 1], so bisection never needs to look at
    the trivial root.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0:
        return 1.0
    xs, frac = data.ecdf_points()
    lo, hi = 0.0, 1.0
    if _gamma_residual(hi, xs, frac, alpha) > 0:
        raise ArithmeticError("gamma equation is not bracketed on (0, 1]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _gamma_residual(mid, xs, frac, alpha) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    # the side with the smaller residual; both are within tol of the root
    if abs(_gamma_residual(lo, xs, frac, alpha)) < abs(_gamma_residual(hi, xs, frac, alpha)):
        return lo
    return hi


def penalized_mle(data: SampleData, alpha: float) -> tuple[StepDensity, float]:
    """Maximizer of ``sum log f(X_i) - alpha n f(0)`` over decreasing densities.

    Returns the step density on the original scale and gamma. With
    ``alpha = 0`` this is the Grenander estimator.
    """
    xs, F = data.ecdf_points()
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha >= xs[-1]:
        raise ValueError(f"penalty alpha={alpha!r} must be below the sample maximum {xs[-1]!r}")
    gamma = solve_gamma(data, alpha)
    w = alpha + gamma * xs
    _, lcm = _majorant_density(w, F)
    # knots are elements of w; map back by index rather than (w - alpha) / gamma
    breaks = xs[np.searchsorted(w, lcm.knots_x[1:])]
    return StepDensity(breaks, lcm.slopes), gamma


def penalized_zero(data: SampleData, alpha: float) -> float:
    """Penalized estimate at zero, ``(1 - gamma) / alpha``.

    Evaluated as the first majorant slope ``max_s F_s / (alpha + gamma x_s)``,
    which equals it at the root and avoids cancellation when alpha is tiny.
    """
    if alpha == 0:
        return grenander(data).at_zero()
    xs, F = data.ecdf_points()
    return float(np.max(F / (alpha + solve_gamma(data, alpha) * xs)))


def default_alpha0(n: int) -> float:
    return PILOT_ALPHA.get(n, PENALTY_CONSTANT * n ** (-2.0 / 3.0))


def penalized_alpha_n(data: SampleData, alpha0: Optional[float] = None) -> tuple[float, float]:
    """Data-driven penalty ``alpha_n`` and the curvature estimate ``beta_hat``."""
    n = data.n
    if alpha0 is None:
        alpha0 = default_alpha0(n)
    pilot, _ = penalized_mle(data, alpha0)
    floor = n ** (-1.0 / 3.0)
    if pilot.breakpoints.size < 2:
        beta_hat = floor
    else:
        f0 = pilot.at_zero()
        xm = pilot.breakpoints[1]
        fm = pilot(xm)
        beta_hat = max(f0 * (f0 - fm) / (2.0 * xm), floor)
    alpha_n = PENALTY_CONSTANT * beta_hat ** (-1.0 / 3.0) * n ** (-2.0 / 3.0)
    return alpha_n, beta_hat


# -- estimators of f(0) built on the Grenander estimator ---------------------

def simple_estimator(data: SampleData, fhat: Optional[StepDensity] = None) -> float:
    fhat = grenander(data) if fhat is None else fhat
    return float(fhat(data.n ** (-1.0 / 3.0)))


def derivative_at_zero(data: SampleData, fhat: Optional[StepDensity] = None) -> float:
    """Capped difference-quotient estimate of f'(0); always <= -n^(-1/3)."""
    fhat = grenander(data) if fhat is None else fhat
    n = data.n
    diff = n ** (1.0 / 6.0) * (fhat(n ** (-1.0 / 6.0)) - fhat(n ** (-1.0 / 3.0)))
    return min(float(diff), -(n ** (-1.0 / 3.0)))


def b21_hat(simple0: float, fprime0: float) -> float:
    return 4.0 ** (1.0 / 3.0) * simple0 ** (1.0 / 3.0) * abs(fprime0) ** (-2.0 / 3.0)


def adaptive_estimator(data: SampleData, fhat: Optional[StepDensity] = None) -> tuple[float, float, float]:
    """Grenander estimate at the adaptive point ``0.345 B21_hat n^(-1/3)``.

    Returns ``(estimate, B21_hat, fprime_hat)``.
    """
    fhat = grenander(data) if fhat is None else fhat
    n = data.n
    s0 = simple_estimator(data, fhat)
    fp = derivative_at_zero(data, fhat)
    b21 = b21_hat(s0, fp)
    return float(fhat(ADAPTIVE_CONSTANT * b21 * n ** (-1.0 / 3.0))), b21, fp


def histogram_estimator(data: SampleData, bandwidth: Optional[float] = None) -> tuple[float, float]:
    """``F_n(b) / b`` with ``b = 2^(-1/3) B21_hat n^(-1/3)`` unless given.

    Returns ``(estimate, bandwidth)``.
    """
    if bandwidth is None:
        _, b21, _ = adaptive_estimator(data)
        bandwidth = 2.0 ** (-1.0 / 3.0) * b21 * data.n ** (-1.0 / 3.0)
        if bandwidth == 0.0:
            # f^S(0) = 0: F_n(b)/b vanishes for all b below the smallest observation
            return 0.0, 0.0
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    return float(data.ecdf(bandwidth)) / bandwidth, bandwidth


@dataclass
class ZeroEstimates:
    grenander0: float
    penalized0: float
    simple0: float
    adaptive0: float
    histogram0: float
    bayes0: Optional[float] = None
    tuning: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"G": self.grenander0, "P": self.penalized0, "S": self.simple0,
               "A": self.adaptive0, "H": self.histogram0}
        if self.bayes0 is not None:
            out["B"] = self.bayes0
        return out


def estimate_all_zero(data: SampleData, bayes_config=None, alpha0: Optional[float] = None,
                      penalty: Optional[float] = None) -> ZeroEstimates:
    """All estimators of f(0) on one sample, with their tuning intermediates.

    ``penalty`` forces the penalized estimator's alpha instead of the
    data-driven rule. The Bayesian estimate (posterior median of f(0)) is only
    computed when ``bayes_config`` is given.
    """
    if data.n < 2:
        raise ValueError("need at least two observations")
    n = data.n
    fhat = grenander(data)
    alpha0 = default_alpha0(n) if alpha0 is None else alpha0
    if penalty is None:
        alpha_n, beta_hat = penalized_alpha_n(data, alpha0)
    else:
        alpha_n, beta_hat = penalty, float("nan")
    s0 = simple_estimator(data, fhat)
    a0, b21, fp = adaptive_estimator(data, fhat)
    h0, bw = histogram_estimator(data)
    tuning = {
        "alpha0": alpha0,
        "pilot0": penalized_zero(data, alpha0),
        "alpha_n": alpha_n,
        "beta_hat": beta_hat,
        "gamma": solve_gamma(data, alpha_n),
        "B21_hat": b21,
        "b_hat": bw,
        "fprime_hat": fp,
    }
    est = ZeroEstimates(
        grenander0=fhat.at_zero(),
        penalized0=penalized_zero(data, alpha_n),
        simple0=s0,
        adaptive0=a0,
        histogram0=h0,
        tuning=tuning,
    )
    if bayes_config is not None:
        from .sampler import run_chain

        chain = run_chain(data, bayes_config)
        est.bayes0 = float(np.median(chain.values_at(0.0)))
        tuning["acceptance_rate"] = chain.acceptance_rate
    return est
