"""Special-function kernels and concentration constants for the plausibility sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .core import InvalidInputError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GammaConstants:
    gamma: float
    sigma_sq: float
    t_star: float
    omega_sq_bound: float


def omega_sq_bound(gamma: float) -> float:
    """Upper bound (1 + g)(1 + 1/g)/4 on the variance inflation of the oracle CDF."""
    return (1.0 + gamma) * (1.0 + 1.0 / gamma) / 4.0


def a_gamma(t: float, gamma: float) -> float:
    """Worst-case gap |F(t) - t| for a CDF whose density ratio is bounded by gamma."""
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError(f"t must lie in [0, 1], got {t!r}")
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    if t > 0.5:
        t = 1.0 - t
    return gamma * t / (1.0 - t + gamma * t) - t


def _variance_envelope(t: float, gamma: float) -> float:
    return t * (1.0 - t) + a_gamma(t, gamma)


@lru_cache(maxsize=256)
def sigma_gamma_sq(gamma: float) -> GammaConstants:
    """Maximise t(1 - t) + A(t) over [0, 1/2] by golden-section search.

    The objective is concave on [0, 1/2], so the search converges to the
    unique maximiser.
    """
    gamma = float(gamma)
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    lo, hi = 0.0, 0.5
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = _variance_envelope(x1, gamma), _variance_envelope(x2, gamma)
    while hi - lo > 1e-12:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = _variance_envelope(x2, gamma)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = _variance_envelope(x1, gamma)
    # the endpoint t = 1/2 is the maximiser when gamma = 1
    best_t, best = max(((t, _variance_envelope(t, gamma)) for t in (lo, hi, 0.5)), key=lambda p: p[1])
    return GammaConstants(gamma, best, best_t, omega_sq_bound(gamma))


def delta_gamma_n(gamma: float, n: int) -> float:
    """KS-band radius sqrt(sigma^2 (1+g)(1+1/g) log(n) / (4n))."""
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n!r}")
    s2 = sigma_gamma_sq(float(gamma)).sigma_sq
    return math.sqrt(s2 * (1.0 + gamma) * (1.0 + 1.0 / gamma) * math.log(n) / (4.0 * n))


def zeta_gamma_alpha(gamma: float, alpha: float) -> float:
    """Symmetry-band constant Phi^{-1}(1 - alpha/4) sqrt((1+g)(1+1/g)/4)."""
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    return normal_quantile(1.0 - alpha / 4.0) * math.sqrt(omega_sq_bound(gamma))


def normal_cdf(x):
    return special.ndtr(x)


def normal_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr > 0)) or np.any(~(p_arr < 1)):
        raise InvalidInputError("normal_quantile needs p in (0, 1)")
    out = special.ndtri(p_arr)
    return float(out) if out.ndim == 0 else out


def kolmogorov_cdf(x: float) -> float:
    """Limiting distribution of sqrt(n) * D_n: 1 - 2 sum (-1)^(k-1) exp(-2 k^2 x^2)."""
    if x < 0.05:
        return 0.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < 1e-14:
            break
        k += 1
    return 1.0 - 2.0 * total


def kolmogorov_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must lie in (0, 1), got {p!r}")
    lo, hi = 0.05, 5.0
    if kolmogorov_cdf(lo) >= p:
        return lo
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
