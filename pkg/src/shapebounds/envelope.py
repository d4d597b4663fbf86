"""Lower envelopes for population CDFs with a log-concave density.

The chain is: sample ECDF lowered by a Kolmogorov band (``ks_lower_envelope``),
a population-CDF lower bound for a switch point ``m`` of the extreme two-level
weighting (``u_lower_bound``), then the exponential of the least concave
majorant of its logarithm (``log_concave_majorant``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DegenerateInputError, InvalidInputError, StepFunction, as_sample, ecdf
from .dist import kolmogorov_quantile


def ks_offset(n: int) -> float:
    """Kolmogorov quantile at 1 - 1/sqrt(n), scaled by 1/sqrt(n)."""
    if n < 2:
        raise InvalidInputError(f"need n >= 2, got {n}")
    root = math.sqrt(n)
    return kolmogorov_quantile(1.0 - 1.0 / root) / root


def ks_lower_envelope(sample) -> StepFunction:
    s = as_sample(sample)
    f = ecdf(s)
    return StepFunction(f.breakpoints, np.maximum(f.levels - ks_offset(s.n), 0.0))


def u_lower_bound(sks: StepFunction, gamma: float, m: float) -> StepFunction:
    """Population-CDF lower bound when sampling weights jump by gamma at ``m``.

    U(y) = (g S(y) - (g - 1) S(min(y, m))) / (g - (g - 1) S(m)), with S the
    lowered sample CDF.
    """
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    s_m = float(sks(m))
    denom = gamma - (gamma - 1.0) * s_m
    b = sks.breakpoints
    lv = sks.levels
    s_min = np.where(b <= m, lv, s_m)
    levels = (gamma * lv - (gamma - 1.0) * s_min) / denom
    pre = (gamma * sks.pre_level - (gamma - 1.0) * min(sks.pre_level, s_m)) / denom
    # rounding can push the top level a hair past its analytic value
    return StepFunction(b, np.clip(levels, 0.0, 1.0), min(max(pre, 0.0), levels[0]))


def upper_concave_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the least concave majorant of points sorted by ``x``."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.asarray(hull)
    return x[idx], y[idx]


@dataclass(frozen=True)
class LogLinearMajorant:
    """exp of a concave piecewise-linear function, defined on ``[knots[0], knots[-1]]``.

    ``log_values`` are the majorant's values at every breakpoint of the
    envelope it dominates (``knots``); left of the domain it evaluates to 0
    (no constraint), right of it the last value is held.
    """

    knots: np.ndarray
    log_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.exp(np.interp(y, self.knots, self.log_values))
        return np.where(y < self.knots[0], 0.0, out)


def log_concave_majorant(u: StepFunction) -> LogLinearMajorant:
    pos = u.levels > 0
    if not np.any(pos):
        raise DegenerateInputError("envelope has no positive level; its log has no concave majorant")
    x = u.breakpoints[pos]
    ly = np.log(u.levels[pos])
    hx, hy = upper_concave_hull(x, ly)
    return LogLinearMajorant(x, np.interp(x, hx, hy))
