"""Identification intervals for a population mean under bounded selection ratios.

Every estimator optimises the weighted mean ``sum w_i Y_i`` over weights
with ``sum w = 1`` and ``max w / min w <= gamma``. The shape-constrained
variants add linear rows on the weighted CDF for each point of a grid and
take the max (min) over grid points of the LP optimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import lp
from .core import (
    ConstraintSpec,
    EmptyPlausibilitySetError,
    IdentificationInterval,
    InvalidInputError,
    Sample,
    WeightSolution,
    as_sample,
    weight_solution,
)
from .dist import delta_gamma_n, normal_cdf, sigma_gamma_sq, zeta_gamma_alpha
from .envelope import ks_lower_envelope, ks_offset, log_concave_majorant, u_lower_bound

log = logging.getLogger(__name__)

DEFAULT_M_GRID = 101
DEFAULT_THETA_GRID = (21, 21)
MAX_LC_GRID = 200
SCREEN_TOL = 1e-9

KS_OFFSET_NOTE = (
    "log-concave envelope lowers the ECDF by the Kolmogorov-distribution quantile "
    "at 1 - 1/sqrt(n), divided by sqrt(n)"
)


# ---------------------------------------------------------------------------
# unconstrained bounds


def _threshold_scan(y: np.ndarray, gamma: float, upper: bool) -> tuple[np.ndarray, int]:
    n = y.size
    k = np.arange(n + 1)
    cs = np.concatenate([[0.0], np.cumsum(y)])
    total = cs[-1]
    # weights: `below` on the k smallest values, `above` on the rest
    below, above = (1.0, gamma) if upper else (gamma, 1.0)
    den = below * k + above * (n - k)
    val = (below * cs + above * (total - cs)) / den
    best = int(np.argmax(val) if upper else np.argmin(val))
    w = np.where(np.arange(n) < best, below, above) / den[best]
    return w, best


def al_scan(sample, gamma: float) -> tuple[WeightSolution, WeightSolution]:
    """Extreme two-level weightings; returns (minimising, maximising) solutions."""
    s = as_sample(sample)
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    if s.n < 2:
        raise InvalidInputError("need at least two observations")
    out = []
    for upper in (False, True):
        w, k = _threshold_scan(s.values, gamma, upper)
        out.append(weight_solution(s.values, w, grid_point=k))
    return out[0], out[1]


def al_lp(sample, gamma: float, method: str = "simplex") -> tuple[WeightSolution, WeightSolution]:
    """Same optimum as :func:`al_scan`, through the weight-space LP."""
    s = as_sample(sample)
    out = []
    for sense in ("min", "max"):
        res = lp.solve(lp.build_weight_lp(s, gamma, sense=sense), method)
        if res.status != lp.OPTIMAL:
            raise lp.SolverError(f"unconstrained weight LP returned {res.status}")
        w = lp.polish_weights(res.solution[: s.n], gamma)
        out.append(weight_solution(s.values, w))
    return out[0], out[1]


def al_bounds(sample, gamma: float) -> IdentificationInterval:
    s = as_sample(sample)
    lo, hi = al_scan(s, gamma)
    return IdentificationInterval(lo.objective, hi.objective, lo, hi, ConstraintSpec(gamma=gamma))


# ---------------------------------------------------------------------------
# grid-search engine


@dataclass
class GridOutcome:
    best: Optional[WeightSolution] = None
    best_index: int = -1
    diagnostics: list = field(default_factory=list)


def ratio_box(n: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Range of C_k = w_1 + ... + w_k over all ratio-feasible weightings."""
    k = np.arange(n + 1, dtype=float)
    lo = k / (k + gamma * (n - k))
    hi = gamma * k / (gamma * k + (n - k))
    return lo, hi


def screen_rows(rows: lp.CdfRows, box: tuple[np.ndarray, np.ndarray]) -> bool:
    """False when some row cannot hold anywhere in the ratio box (a proof of infeasibility)."""
    if not len(rows):
        return True
    lo, hi = box
    pos = rows.coef.maximum(0)
    neg = rows.coef.minimum(0)
    least = pos @ lo + neg @ hi
    return bool(np.all(least <= rows.rhs + SCREEN_TOL))


def _solve_point(s: Sample, gamma: float, rows: lp.CdfRows, sense: str, solver: str):
    if gamma == 1.0:
        w = np.full(s.n, 1.0 / s.n)
        return (w, "optimal") if rows.violation(w) <= SCREEN_TOL else (None, "infeasible")
    res = lp.solve(lp.build_cdf_lp(s, gamma, rows, sense), solver)
    if res.status != lp.OPTIMAL:
        return None, res.status
    w = lp.weights_from_cdf_solution(res.solution, s.n)
    return lp.polish_weights(w, gamma), "optimal"


def grid_search(
    sample: Sample,
    gamma: float,
    grid: Iterable,
    rows_for: Callable[[object], Optional[lp.CdfRows]],
    sense: str,
    solver: str = "highs",
    incumbent: Optional[WeightSolution] = None,
) -> GridOutcome:
    """Optimise over the union of per-grid-point feasible sets.

    ``rows_for`` returns the CDF rows for a grid point, or ``None`` when the
    point is infeasible on its own (e.g. a failed tail check). Ties keep the
    smallest grid index.

    ``incumbent`` is the unconstrained optimum for ``sense``. No grid point
    can beat it, so the search stops at the first point whose rows it
    satisfies.
    """
    out = GridOutcome()
    box = ratio_box(sample.n, gamma)
    sign = 1.0 if sense == "max" else -1.0
    for idx, point in enumerate(grid):
        rows = rows_for(point)
        if rows is None or not screen_rows(rows, box):
            out.diagnostics.append({"sense": sense, "gridPoint": point, "status": "screened"})
            continue
        if incumbent is not None and rows.violation(incumbent.weights) <= SCREEN_TOL:
            sol = weight_solution(sample.values, incumbent.weights, grid_point=point)
            out.diagnostics.append({"sense": sense, "gridPoint": point, "status": "unconstrained-optimum",
                                    "value": sol.objective})
            if out.best is None or sign * sol.objective > sign * out.best.objective:
                out.best, out.best_index = sol, idx
            break
        w, status = _solve_point(sample, gamma, rows, sense, solver)
        if w is None:
            out.diagnostics.append({"sense": sense, "gridPoint": point, "status": status})
            continue
        sol = weight_solution(sample.values, w, grid_point=point)
        out.diagnostics.append({"sense": sense, "gridPoint": point, "status": "optimal", "value": sol.objective})
        if out.best is None or sign * sol.objective > sign * out.best.objective:
            out.best, out.best_index = sol, idx
    return out


def _degenerate(s: Sample, spec: ConstraintSpec) -> Optional[IdentificationInterval]:
    if s.values[0] != s.values[-1]:
        return None
    sol = weight_solution(s.values, np.full(s.n, 1.0 / s.n))
    v = float(s.values[0])
    return IdentificationInterval(v, v, sol, sol, spec, notes=["all observations equal"])


def _finish(spec, lower: GridOutcome, upper: GridOutcome, constants, notes=()) -> IdentificationInterval:
    if lower.best is None or upper.best is None:
        raise EmptyPlausibilitySetError(
            f"no grid point is compatible with family={spec.family} at gamma={spec.gamma}"
        )
    return IdentificationInterval(
        lower.best.objective,
        upper.best.objective,
        lower.best,
        upper.best,
        spec,
        constants,
        lower.diagnostics + upper.diagnostics,
        list(notes),
    )


def _check_family(spec: ConstraintSpec, family: str):
    if spec.family != family:
        raise InvalidInputError(f"expected family={family!r}, got {spec.family!r}")


# ---------------------------------------------------------------------------
# parametric (Gaussian) family


def default_theta_grid(s: Sample, gamma: float, shape=DEFAULT_THETA_GRID) -> list[tuple[float, float]]:
    """Locations span the unconstrained interval widened by 3 standard errors;
    scales span [0.5, 2] x the sample standard deviation."""
    n_loc, n_scale = shape
    sd = float(np.std(s.values, ddof=1))
    se = sd / np.sqrt(s.n)
    lo, hi = al_scan(s, gamma)
    locs = np.linspace(lo.objective - 3 * se, hi.objective + 3 * se, n_loc)
    scales = np.linspace(0.5 * sd, 2.0 * sd, n_scale)
    return [(float(a), float(b)) for a in locs for b in scales]


def ks_band_rows(s: Sample, cdf: np.ndarray, radius: float) -> Optional[lp.CdfRows]:
    """Rows for sup_y |H_w(y) - F(y)| <= radius given F at the distinct values.

    Returns ``None`` when a tail check (which involves no weights) fails.
    """
    uniq, ends = s.distinct()
    if cdf[0] > radius + SCREEN_TOL or 1.0 - cdf[-1] > radius + SCREEN_TOL:
        return None
    k = uniq.size
    idx = ends[: k - 1]
    up_rhs = cdf[: k - 1] + radius
    dn_rhs = radius - cdf[1:]
    # C lies in [0, 1], so rows with up_rhs >= 1 or dn_rhs >= 0 are vacuous
    up = up_rhs < 1.0
    dn = dn_rhs < 0.0
    nu, nd = int(up.sum()), int(dn.sum())
    return lp.CdfRows.from_terms(
        s.n,
        [
            (np.arange(nu), idx[up], np.ones(nu), up_rhs[up]),
            (np.arange(nd), idx[dn], -np.ones(nd), dn_rhs[dn]),
        ],
    )


def parametric_bounds(sample, spec: ConstraintSpec, solver: str = "highs") -> IdentificationInterval:
    _check_family(spec, "parametric-gaussian")
    s = as_sample(sample)
    if s.n < 2:
        raise InvalidInputError("need at least two observations")
    if (deg := _degenerate(s, spec)) is not None:
        return deg
    gamma = spec.gamma
    delta = delta_gamma_n(gamma, s.n)
    radius = delta + spec.delta_star
    if spec.theta_grid is None or (len(spec.theta_grid) == 2 and np.ndim(spec.theta_grid[0]) == 0):
        grid = default_theta_grid(s, gamma, spec.theta_grid or DEFAULT_THETA_GRID)
    else:
        grid = [(float(a), float(b)) for a, b in spec.theta_grid]
    uniq, _ = s.distinct()

    def rows_for(theta):
        loc, scale = theta
        if scale <= 0:
            return None
        return ks_band_rows(s, normal_cdf((uniq - loc) / scale), radius)

    al_lo, al_hi = al_scan(s, gamma)
    lower = grid_search(s, gamma, grid, rows_for, "min", solver, al_lo)
    upper = grid_search(s, gamma, grid, rows_for, "max", solver, al_hi)
    constants = {"delta": delta, "band": radius, "sigmaSq": sigma_gamma_sq(gamma).sigma_sq}
    return _finish(spec, lower, upper, constants)


# ---------------------------------------------------------------------------
# symmetry


def _pareto(pairs: np.ndarray, maximal: bool) -> np.ndarray:
    """Drop pairs dominated componentwise (C is nondecreasing in its index)."""
    sign = -1 if maximal else 1
    order = np.lexsort((sign * pairs[:, 1], sign * pairs[:, 0]))
    keep = []
    best = None
    for i in order:
        c = pairs[i, 1]
        if best is None or (c > best if maximal else c < best):
            keep.append(i)
            best = c
    return pairs[np.sort(keep)]


def symmetry_pairs(s: Sample, m: float) -> np.ndarray:
    """Index pairs (a, c) such that H(m + y) + H(m - y) takes the values C_a + C_c."""
    b = np.unique(np.concatenate([[0.0], np.abs(s.values - m)]))
    a = s.count_le(m + b)
    right = s.count_le(m - b)
    left = s.count_lt(m - b)
    return np.unique(np.concatenate([np.column_stack([a, right]), np.column_stack([a, left])]), axis=0)


def symmetry_rows(s: Sample, m: float, band: float) -> lp.CdfRows:
    """Rows for |H_w(m + y) + H_w(m - y) - 1| <= band over all real y."""
    pairs = symmetry_pairs(s, m)
    hi = _pareto(pairs, maximal=True)
    lo = _pareto(pairs, maximal=False)
    nh, nl = len(hi), len(lo)
    return lp.CdfRows.from_terms(
        s.n,
        [
            (np.repeat(np.arange(nh), 2), hi.ravel(), np.ones(2 * nh), np.full(nh, 1.0 + band)),
            (np.repeat(np.arange(nl), 2), lo.ravel(), -np.ones(2 * nl), np.full(nl, band - 1.0)),
        ],
    )


def symmetric_band(gamma: float, alpha: float, n: int, delta_star: float = 0.0) -> float:
    return zeta_gamma_alpha(gamma, alpha) / np.sqrt(n) + delta_star


def default_m_grid(s: Sample, size: int = DEFAULT_M_GRID) -> np.ndarray:
    return np.linspace(s.values[0], s.values[-1], size)


def symmetric_bounds(sample, spec: ConstraintSpec, solver: str = "highs") -> IdentificationInterval:
    _check_family(spec, "symmetric")
    s = as_sample(sample)
    if s.n < 2:
        raise InvalidInputError("need at least two observations")
    if (deg := _degenerate(s, spec)) is not None:
        return deg
    alpha = spec.resolved_alpha(s.n)
    band = symmetric_band(spec.gamma, alpha, s.n, spec.delta_star)
    if spec.m_grid is None or isinstance(spec.m_grid, (int, np.integer)):
        grid = default_m_grid(s, spec.m_grid or DEFAULT_M_GRID)
    else:
        grid = np.asarray(spec.m_grid, dtype=float)
    grid = [float(m) for m in grid]

    def rows_for(m):
        return symmetry_rows(s, m, band)

    al_lo, al_hi = al_scan(s, spec.gamma)
    lower = grid_search(s, spec.gamma, grid, rows_for, "min", solver, al_lo)
    upper = grid_search(s, spec.gamma, grid, rows_for, "max", solver, al_hi)
    constants = {"zeta": zeta_gamma_alpha(spec.gamma, alpha), "band": band, "alpha": alpha}
    return _finish(spec, lower, upper, constants)


# ---------------------------------------------------------------------------
# log-concavity


def default_lc_grid(s: Sample, cap: int = MAX_LC_GRID) -> np.ndarray:
    uniq, _ = s.distinct()
    if uniq.size <= cap:
        return uniq
    idx = np.unique(np.round(np.linspace(0, uniq.size - 1, cap)).astype(int))
    return uniq[idx]


@dataclass(frozen=True)
class EnvelopeArtifacts:
    m: float
    u: object
    majorant: object
    rows: lp.CdfRows


def log_concave_envelope(s: Sample, gamma: float, m: float, sks=None) -> EnvelopeArtifacts:
    """Lower-bound rows H_w(Y_(k)) >= L_m(Y_(k+1)) for one switch point ``m``."""
    sks = ks_lower_envelope(s) if sks is None else sks
    u = u_lower_bound(sks, gamma, m)
    if not np.any(u.levels > 0):
        return EnvelopeArtifacts(m, u, None, lp.CdfRows.empty(s.n))
    major = log_concave_majorant(u)
    uniq, ends = s.distinct()
    start = np.searchsorted(uniq, major.knots[0])
    # interval [v_j, v_{j+1}) inside the majorant's domain: C_{e_j} >= L(v_{j+1})
    j = np.arange(start, uniq.size - 1)
    need = major(uniq[j + 1])
    live = need > 0
    nr = int(live.sum())
    rows = lp.CdfRows.from_terms(s.n, [(np.arange(nr), ends[j[live]], -np.ones(nr), -need[live])])
    return EnvelopeArtifacts(m, u, major, rows)


def _lc_upper(s: Sample, gamma: float, grid, solver: str) -> GridOutcome:
    sks = ks_lower_envelope(s)
    _, al_hi = al_scan(s, gamma)
    rows_for = lambda m: log_concave_envelope(s, gamma, m, sks).rows  # noqa: E731
    return grid_search(s, gamma, grid, rows_for, "max", solver, al_hi)


def log_concave_bounds(sample, spec: ConstraintSpec, solver: str = "highs") -> IdentificationInterval:
    _check_family(spec, "log-concave")
    s = as_sample(sample)
    if s.n < 2:
        raise InvalidInputError("need at least two observations")
    if (deg := _degenerate(s, spec)) is not None:
        return deg
    neg = s.negated()
    if spec.m_grid is None or isinstance(spec.m_grid, (int, np.integer)):
        cap = spec.m_grid or MAX_LC_GRID
        grid_hi, grid_lo = default_lc_grid(s, cap), default_lc_grid(neg, cap)
    else:
        grid_hi = np.asarray(spec.m_grid, dtype=float)
        grid_lo = -grid_hi
    upper = _lc_upper(s, spec.gamma, [float(m) for m in grid_hi], solver)
    flipped = _lc_upper(neg, spec.gamma, [float(m) for m in grid_lo], solver)
    lower = GridOutcome(diagnostics=[{**d, "sense": "min", "gridPoint": -d["gridPoint"]} for d in flipped.diagnostics])
    if flipped.best is not None:
        w = flipped.best.weights[::-1]
        lower.best = weight_solution(s.values, w, grid_point=-flipped.best.grid_point)
        lower.best_index = flipped.best_index
    for d in lower.diagnostics:
        if "value" in d:
            d["value"] = -d["value"]
    constants = {"ksOffset": ks_offset(s.n)}
    return _finish(spec, lower, upper, constants, notes=[KS_OFFSET_NOTE])


# ---------------------------------------------------------------------------
# dispatcher


def compute_bounds(sample, spec: ConstraintSpec, solver: str = "highs") -> IdentificationInterval:
    s = as_sample(sample)
    if s.n < 2:
        raise InvalidInputError("need at least two observations")
    if spec.family == "none":
        lo, hi = al_scan(s, spec.gamma)
        return IdentificationInterval(lo.objective, hi.objective, lo, hi, spec)
    if spec.family == "parametric-gaussian":
        return parametric_bounds(s, spec, solver)
    if spec.family == "symmetric":
        return symmetric_bounds(s, spec, solver)
    return log_concave_bounds(s, spec, solver)


def endpoint_problems(sample, interval: IdentificationInterval) -> dict:
    """Rebuild the LPs solved at the grid points that produced each endpoint."""
    s = as_sample(sample)
    spec = interval.spec
    gamma = spec.gamma
    out = {}
    for key, sol, sense in (("lower", interval.lower_solution, "min"), ("upper", interval.upper_solution, "max")):
        point = sol.grid_point
        if spec.family == "none" or s.values[0] == s.values[-1]:
            out[key] = lp.build_weight_lp(s, gamma, sense=sense)
        elif spec.family == "parametric-gaussian":
            uniq, _ = s.distinct()
            radius = delta_gamma_n(gamma, s.n) + spec.delta_star
            rows = ks_band_rows(s, normal_cdf((uniq - point[0]) / point[1]), radius)
            out[key] = lp.build_cdf_lp(s, gamma, rows, sense)
        elif spec.family == "symmetric":
            band = symmetric_band(gamma, spec.resolved_alpha(s.n), s.n, spec.delta_star)
            out[key] = lp.build_cdf_lp(s, gamma, symmetry_rows(s, point, band), sense)
        elif key == "upper":
            out[key] = lp.build_cdf_lp(s, gamma, log_concave_envelope(s, gamma, point).rows, "max")
        else:
            neg = s.negated()
            out[key] = lp.build_cdf_lp(neg, gamma, log_concave_envelope(neg, gamma, -point).rows, "max")
    return out
