"""Pointwise posterior summaries of the density and of H0 = 1 - f / f(0)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DegenerateDensityError, EvalGrid
from .sampler import Chain


@dataclass(frozen=True)
class ChainSummary:
    grid: EvalGrid
    mean: np.ndarray
    median: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    h0_mean: np.ndarray
    h0_median: np.ndarray
    h0_lo: np.ndarray
    h0_hi: np.ndarray
    level: float = 0.95
    acceptance_rate: Optional[float] = None

    def table(self, target: str = "f") -> np.ndarray:
        """Columns x, mean, median, lo, hi for ``target`` in {"f", "H0"}."""
        if target == "f":
            cols = (self.mean, self.median, self.lo, self.hi)
        elif target == "H0":
            cols = (self.h0_mean, self.h0_median, self.h0_lo, self.h0_hi)
        else:
            raise ValueError(f"unknown target {target!r}")
        return np.column_stack((self.grid.points,) + cols)


def draw_matrix(draws, grid: EvalGrid) -> np.ndarray:
    if isinstance(draws, Chain):
        return draws.evaluate(grid.points)
    return np.vstack([d.density(grid.points) for d in draws])


def summarize_chain(draws, grid: EvalGrid, level: float = 0.95, acceptance_rate=None) -> ChainSummary:
    """Pointwise mean, median and central ``level`` band over the draws.

    Quantiles interpolate linearly between order statistics. The H0 band is
    formed from the per-draw transforms, not by transforming the f band.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if isinstance(draws, Chain) and acceptance_rate is None:
        acceptance_rate = draws.acceptance_rate
    F = draw_matrix(draws, grid)
    if F.shape[0] < 2:
        raise ValueError("need at least two draws")
    if grid.points[0] != 0.0:
        raise ValueError("grid must include 0")
    if np.any(F[:, 0] <= 0):
        raise DegenerateDensityError("a draw vanishes at zero")
    H = 1.0 - F / F[:, :1]
    q = [(1.0 - level) / 2.0, 0.5, 1.0 - (1.0 - level) / 2.0]
    flo, fmed, fhi = np.quantile(F, q, axis=0)
    hlo, hmed, hhi = np.quantile(H, q, axis=0)
    return ChainSummary(grid, F.mean(axis=0), fmed, flo, fhi, H.mean(axis=0), hmed, hlo, hhi, level,
                        acceptance_rate)
