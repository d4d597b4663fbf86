"""Shared domain types and the elementary weighted estimators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

EQ_TOL = 1e-9
INPUT_TOL = 1e-6

FAMILIES = ("none", "parametric-gaussian", "symmetric", "log-concave")


class InvalidInputError(ValueError):
    """Raised when user-supplied data or parameters violate a precondition."""


class DegenerateInputError(InvalidInputError):
    pass


class EmptyPlausibilitySetError(RuntimeError):
    """No grid point admits a weighting compatible with the shape constraint.

    This is information about the data and the assumptions (gamma, alpha,
    delta_star, family), not a numerical failure.
    """


class SolverError(RuntimeError):
    """The LP solver stopped without certifying optimality or infeasibility."""


@dataclass(frozen=True)
class Sample:
    """Sorted real outcomes, ties kept as multiplicities."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InvalidInputError("sample must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("sample values must be finite")
        if np.any(np.diff(v) < 0):
            v = np.sort(v)
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "Sample":
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values and the (1-based) count of observations <= each."""
        uniq, counts = np.unique(self.values, return_counts=True)
        return uniq, np.cumsum(counts)

    def count_le(self, y) -> np.ndarray:
        """Number of observations <= y (vectorised)."""
        return np.searchsorted(self.values, y, side="right")

    def count_lt(self, y) -> np.ndarray:
        return np.searchsorted(self.values, y, side="left")

    def negated(self) -> "Sample":
        return Sample(-self.values[::-1])

    def mean(self) -> float:
        return float(np.mean(self.values))


def as_sample(data) -> Sample:
    if isinstance(data, Sample):
        return data
    return Sample.from_values(data)


@dataclass(frozen=True)
class WeightSolution:
    """Probability weights over the sorted sample plus the objective they give."""

    weights: np.ndarray
    objective: float
    feasible: bool = True
    grid_point: Optional[object] = None

    def ratio(self) -> float:
        return float(np.max(self.weights) / np.min(self.weights))

    def check(self, values: np.ndarray, gamma: float) -> None:
        w = self.weights
        if abs(w.sum() - 1.0) > EQ_TOL:
            raise AssertionError(f"weights sum to {w.sum()!r}")
        if np.min(w) <= 0 or self.ratio() > gamma * (1 + EQ_TOL):
            raise AssertionError(f"weight ratio {self.ratio()!r} exceeds gamma={gamma}")
        if abs(float(w @ values) - self.objective) > EQ_TOL * (1 + abs(self.objective)):
            raise AssertionError("objective does not match weights")


def weight_solution(values: np.ndarray, weights, grid_point=None, feasible=True) -> WeightSolution:
    w = np.asarray(weights, dtype=float).copy()
    w.setflags(write=False)
    return WeightSolution(w, float(w @ values), feasible, grid_point)


@dataclass(frozen=True)
class ConstraintSpec:
    """Which plausibility set is active, and its parameters.

    ``alpha=None`` means ``1/sqrt(n)``. ``theta_grid`` may be a pair of ints
    ``(n_loc, n_scale)`` or an explicit sequence of ``(loc, scale)`` pairs;
    ``m_grid`` may be an int (grid size) or an explicit sequence of centers.
    ``None`` selects the family's default grid.
    """

    gamma: float
    family: str = "none"
    alpha: Optional[float] = None
    delta_star: float = 0.0
    theta_grid: Optional[Union[tuple[int, int], Sequence[tuple[float, float]]]] = None
    m_grid: Optional[Union[int, Sequence[float]]] = None

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 1:
            raise InvalidInputError(f"gamma must be >= 1, got {self.gamma!r}")
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.delta_star >= 0:
            raise InvalidInputError(f"delta_star must be >= 0, got {self.delta_star!r}")
        for name in ("theta_grid", "m_grid"):
            grid = getattr(self, name)
            if grid is None:
                continue
            if isinstance(grid, (int, np.integer)):
                if grid < 1:
                    raise InvalidInputError(f"{name} must be nonempty")
            elif len(grid) == 0:
                raise InvalidInputError(f"{name} must be nonempty")

    def resolved_alpha(self, n: int) -> float:
        return self.alpha if self.alpha is not None else 1.0 / np.sqrt(n)

    def to_dict(self) -> dict:
        def plain(g):
            if g is None or isinstance(g, (int, np.integer)):
                return None if g is None else int(g)
            return [list(map(float, x)) if np.ndim(x) else float(x) for x in g]

        return {
            "gamma": float(self.gamma),
            "family": self.family,
            "alpha": None if self.alpha is None else float(self.alpha),
            "deltaStar": float(self.delta_star),
            "thetaGrid": plain(self.theta_grid),
            "mGrid": plain(self.m_grid),
        }


@dataclass(frozen=True)
class IdentificationInterval:
    lower: float
    upper: float
    lower_solution: Optional[WeightSolution]
    upper_solution: Optional[WeightSolution]
    spec: ConstraintSpec
    constants: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol

    def distance(self, x: float) -> float:
        """Distance from ``x`` to the nearest point of the interval."""
        return max(self.lower - x, x - self.upper, 0.0)

    def contained_in(self, other: "IdentificationInterval", tol: float = 0.0) -> bool:
        return other.lower - tol <= self.lower and self.upper <= other.upper + tol


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nondecreasing step function.

    ``levels[k]`` is the value on ``[breakpoints[k], breakpoints[k+1])``;
    ``pre_level`` is the value left of the first breakpoint.
    """

    breakpoints: np.ndarray
    levels: np.ndarray
    pre_level: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if b.shape != lv.shape or b.ndim != 1 or b.size == 0:
            raise InvalidInputError("breakpoints and levels must be equal-length 1-d arrays")
        if np.any(np.diff(b) <= 0):
            raise InvalidInputError("breakpoints must be strictly increasing")
        if np.any(np.diff(lv) < -EQ_TOL) or self.pre_level > lv[0] + EQ_TOL:
            raise InvalidInputError("levels must be nondecreasing")
        b.setflags(write=False)
        lv.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "pre_level", float(self.pre_level))

    def __call__(self, y):
        idx = np.searchsorted(self.breakpoints, y, side="right") - 1
        table = np.concatenate([[self.pre_level], self.levels])
        return table[idx + 1]

    def left_limit(self, y):
        idx = np.searchsorted(self.breakpoints, y, side="left") - 1
        table = np.concatenate([[self.pre_level], self.levels])
        return table[idx + 1]


def hajek_estimate(values, probs) -> float:
    """Ratio estimator: sum(Y / pi) / sum(1 / pi)."""
    y = np.asarray(values.values if isinstance(values, Sample) else values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if y.shape != p.shape:
        raise InvalidInputError(f"length mismatch: {y.size} values vs {p.size} probabilities")
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        raise InvalidInputError("selection probabilities must lie in (0, 1]")
    inv = 1.0 / p
    return float(inv @ y / inv.sum())


def weighted_ecdf(sample, weights) -> StepFunction:
    """Step CDF putting mass ``weights[i]`` on the i-th sorted observation."""
    s = as_sample(sample)
    w = np.asarray(weights, dtype=float)
    if w.shape != s.values.shape:
        raise InvalidInputError("weights must align with the sample")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > INPUT_TOL:
        raise InvalidInputError("weights must be positive and sum to 1")
    uniq, ends = s.distinct()
    cum = np.cumsum(w)[ends - 1]
    cum[-1] = 1.0
    return StepFunction(uniq, np.minimum(cum, 1.0))


def ecdf(sample) -> StepFunction:
    s = as_sample(sample)
    uniq, ends = s.distinct()
    return StepFunction(uniq, ends / s.n)


def ks_distance(f: StepFunction, g: Callable) -> float:
    """sup_y |f(y) - g(y)| for a step function ``f`` and a continuous CDF ``g``.

    Between breakpoints ``f`` is constant and ``g`` monotone, so the sup is
    attained at a breakpoint or approached from its left.
    """
    b = f.breakpoints
    gb = np.asarray(g(b), dtype=float)
    before = np.concatenate([[f.pre_level], f.levels[:-1]])
    cands = [
        np.abs(f.levels - gb),
        np.abs(before - gb),
        [abs(f.pre_level - 0.0), abs(f.levels[-1] - 1.0)],
    ]
    return float(max(np.max(c) for c in cands))
