"""Domain types shared across the package.

A decreasing density on [0, inf) is stored either as a finite scale mixture of
uniforms (:class:`MixtureMeasure`) or as a right-closed step function
(:class:`StepDensity`). Both evaluate with the convention that the value at 0
is the right limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np


class DataError(ValueError):
    """Invalid observations or an unparsable data file."""


class DegenerateDensityError(ValueError):
    """Raised when a density vanishes at zero, so H0 is undefined."""


@dataclass(frozen=True)
class SampleData:
    """Strictly positive observations, stored sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise DataError("sample is empty")
        if not np.all(np.isfinite(v)):
            raise DataError("sample contains non-finite values")
        if v[0] <= 0:
            raise DataError(f"sample values must be > 0, got {v[0]!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def ecdf_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values and the empirical CDF at each (ties merged)."""
        xs, counts = np.unique(self.values, return_counts=True)
        return xs, np.cumsum(counts) / self.n

    def ecdf(self, t) -> np.ndarray:
        return np.searchsorted(self.values, t, side="right") / self.n


@dataclass(frozen=True)
class MixtureMeasure:
    """Discrete mixing measure: atoms theta_i > 0 with weights p_i summing to 1."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if a.shape != w.shape or a.size == 0:
            raise ValueError("atoms and weights must be nonempty and of equal length")
        if not np.all(a > 0) or not np.all(np.isfinite(a)):
            raise ValueError("atoms must be finite and strictly positive")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class StepDensity:
    """Nonincreasing step density.

    Takes value ``heights[k]`` on ``(breakpoints[k-1], breakpoints[k]]`` with
    ``breakpoints[-1] = 0`` implied, ``heights[0]`` at zero and 0 beyond the
    last breakpoint.
    """

    breakpoints: np.ndarray
    heights: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).ravel()
        h = np.asarray(self.heights, dtype=float).ravel()
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "heights", h)
        if not self.check:
            return
        if b.shape != h.shape or b.size == 0:
            raise ValueError("breakpoints and heights must be nonempty and of equal length")
        if b[0] <= 0 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be positive and strictly ascending")
        if np.any(h < 0) or np.any(np.diff(h) > 1e-12 * max(1.0, h[0])):
            raise ValueError("heights must be nonnegative and nonincreasing")
        if abs(self.total_mass() - 1.0) > 1e-10:
            raise ValueError(f"step density integrates to {self.total_mass()!r}")

    def total_mass(self) -> float:
        widths = np.diff(self.breakpoints, prepend=0.0)
        return float(np.dot(self.heights, widths))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="left")
        hext = np.append(self.heights, 0.0)
        out = hext[idx]
        return out if out.ndim else float(out)

    def at_zero(self) -> float:
        return float(self.heights[0])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        knots = np.concatenate([[0.0], self.breakpoints])
        masses = np.concatenate([[0.0], np.cumsum(self.heights * np.diff(knots))])
        return np.interp(x, knots, masses)

    def loglik(self, data: SampleData) -> float:
        vals = self(data.values)
        with np.errstate(divide="ignore"):
            return float(np.sum(np.log(vals)))


@dataclass(frozen=True)
class BaseMeasureSpec:
    """Base measure of the Dirichlet process.

    * ``A``: density proportional to exp(-theta - 1/theta)
    * ``B``: Gamma(2, 1)
    * ``C``: Pareto(alpha_bar, tau)
    * ``D``: Pareto(alpha_bar, tau) with tau ~ Gamma(lam, beta) (rate beta)
    """

    variant: str = "A"
    alpha_bar: float = 1.0
    tau: float = 0.5
    lam: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        v = str(self.variant).upper()
        if v not in ("A", "B", "C", "D"):
            raise ValueError(f"unknown base measure variant {self.variant!r}")
        object.__setattr__(self, "variant", v)
        for name in ("alpha_bar", "tau", "lam", "beta"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be strictly positive, got {val!r}")

    @property
    def code(self) -> int:
        return "ABCD".index(self.variant)

    def to_dict(self) -> dict:
        d = {"variant": self.variant}
        if self.variant in "CD":
            d["alpha_bar"] = self.alpha_bar
        if self.variant == "C":
            d["tau"] = self.tau
        if self.variant == "D":
            d["lam"] = self.lam
            d["beta"] = self.beta
        return d


@dataclass(frozen=True)
class EvalGrid:
    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).ravel()
        if p.size == 0 or p[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(p) <= 0):
            raise ValueError("grid points must be distinct and ascending")
        object.__setattr__(self, "points", p)

    @classmethod
    def linspace(cls, upper: float, num: int = 200) -> "EvalGrid":
        return cls(np.linspace(0.0, upper, num))

    @classmethod
    def for_data(cls, data: SampleData, num: int = 200, quantile: float = 0.999) -> "EvalGrid":
        return cls.linspace(float(np.quantile(data.values, quantile)), num)

    def __len__(self):
        return self.points.size


def mixture_density(G: MixtureMeasure, x):
    """Evaluate f_G(x) = sum over atoms theta_i >= x of p_i / theta_i."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("mixture density is defined on [0, inf)")
    order = np.argsort(G.atoms)
    atoms = G.atoms[order]
    contrib = (G.weights / G.atoms)[order]
    # tail sums: value at x is the sum over atoms >= x
    tail = np.append(np.cumsum(contrib[::-1])[::-1], 0.0)
    out = tail[np.searchsorted(atoms, x, side="left")]
    return out if out.ndim else float(out)


def mixture_to_step(G: MixtureMeasure) -> StepDensity:
    atoms, inv = np.unique(G.atoms, return_inverse=True)
    w = np.bincount(inv, weights=G.weights, minlength=atoms.size)
    heights = np.cumsum((w / atoms)[::-1])[::-1]
    return StepDensity(atoms, heights)


def inverse_relation(f: Union[StepDensity, Callable], x):
    """H(x) = 1 - f(x) / f(0)."""
    f0 = float(f(0.0))
    if not f0 > 0:
        raise DegenerateDensityError("density vanishes at zero")
    fx = f(x)
    if np.ndim(fx):
        return 1.0 - np.asarray(fx, dtype=float) / f0
    return 1.0 - float(fx) / f0


def parse_values(lines: Sequence[str], source: str = "<input>") -> SampleData:
    vals = []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise DataError(f"{source}:{lineno}: not a number: {s!r}") from None
        if not np.isfinite(v) or v <= 0:
            raise DataError(f"{source}:{lineno}: value must be finite and > 0, got {s!r}")
        vals.append(v)
    if not vals:
        raise DataError(f"{source}: no observations")
    return SampleData(np.array(vals))


def read_data(path) -> SampleData:
    """Read one positive decimal per line; blank lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    return parse_values(text.splitlines(), source=str(path))
