"""Biased-sampling generator and Monte Carlo coverage harness.

Randomness: every draw comes from numpy's PCG64 bit generator seeded through
``SeedSequence``. A scenario's own sample uses ``SeedSequence(seed)``;
replication ``r`` of a coverage experiment uses
``SeedSequence(seed, spawn_key=(r,))``, the same child that
``SeedSequence(seed).spawn`` would hand out at position ``r``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from .bounds import compute_bounds
from .core import ConstraintSpec, EmptyPlausibilitySetError, InvalidInputError, Sample, hajek_estimate

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy PCG64; scenario stream SeedSequence(seed); replication r stream SeedSequence(seed, spawn_key=(r,))"
STALL_PROPOSALS = 1_000_000


class ConfigurationError(InvalidInputError):
    pass


@dataclass(frozen=True)
class Population:
    """Outcome distribution: normal(loc, scale), logistic(loc, scale), gamma(shape, scale) or uniform(a, b)."""

    name: str = "normal"
    params: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.name not in ("normal", "logistic", "gamma", "uniform"):
            raise ConfigurationError(f"unknown population {self.name!r}")
        a, b = map(float, self.params)
        if self.name == "uniform" and not a < b:
            raise ConfigurationError("uniform population needs a < b")
        if self.name != "uniform" and b <= 0:
            raise ConfigurationError(f"{self.name} population needs a positive scale")
        if self.name == "gamma" and a <= 0:
            raise ConfigurationError("gamma population needs a positive shape")
        object.__setattr__(self, "params", (a, b))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        a, b = self.params
        return {
            "normal": lambda: rng.normal(a, b, size),
            "logistic": lambda: rng.logistic(a, b, size),
            "gamma": lambda: rng.gamma(a, b, size),
            "uniform": lambda: rng.uniform(a, b, size),
        }[self.name]()

    def frozen(self):
        a, b = self.params
        return {
            "normal": lambda: stats.norm(a, b),
            "logistic": lambda: stats.logistic(a, b),
            "gamma": lambda: stats.gamma(a, scale=b),
            "uniform": lambda: stats.uniform(a, b - a),
        }[self.name]()

    @property
    def mean(self) -> float:
        a, b = self.params
        return {"normal": a, "logistic": a, "gamma": a * b, "uniform": 0.5 * (a + b)}[self.name]

    @property
    def center(self) -> float:
        return self.frozen().median()

    @property
    def spread(self) -> float:
        return float(self.frozen().std())

    def satisfies(self, family: str) -> bool:
        if family in ("none",):
            return True
        if family == "parametric-gaussian":
            return self.name == "normal"
        if family == "symmetric":
            return self.name != "gamma"
        return self.name != "gamma" or self.params[0] >= 1


@dataclass(frozen=True)
class LogisticSelection:
    """pi(y) = pi_min (1 + (gamma_true - 1) expit(slope (y - center))).

    Probabilities lie in [pi_max / gamma_true, pi_max]; a positive slope
    favours large outcomes.
    """

    gamma_true: float = 1.0
    center: float = 0.0
    slope: float = 1.0
    pi_max: float = 1.0

    def __post_init__(self):
        if self.gamma_true < 1:
            raise ConfigurationError("gamma_true must be >= 1")
        if not 0 < self.pi_max <= 1:
            raise ConfigurationError("pi_max must lie in (0, 1]")

    @property
    def pi_min(self) -> float:
        return self.pi_max / self.gamma_true

    def __call__(self, y):
        return self.pi_min * (1.0 + (self.gamma_true - 1.0) * special.expit(self.slope * (np.asarray(y) - self.center)))


@dataclass(frozen=True)
class Scenario:
    population: Population = field(default_factory=Population)
    selection: LogisticSelection = field(default_factory=LogisticSelection)
    n: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("n must be >= 2")
        if self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")

    @classmethod
    def standard(cls, population: Population, gamma_true: float, n: int, seed: int, pi_max: float = 1.0):
        """Logistic selection centred on the population median, slope 1/sd."""
        sel = LogisticSelection(gamma_true, population.center, 1.0 / population.spread, pi_max)
        return cls(population, sel, n, seed)

    def describe(self) -> dict:
        return {
            "population": self.population.name,
            "populationParams": list(self.population.params),
            "populationMean": self.population.mean,
            "gammaTrue": self.selection.gamma_true,
            "selectionCenter": float(self.selection.center),
            "selectionSlope": float(self.selection.slope),
            "piMax": self.selection.pi_max,
            "n": self.n,
            "seed": self.seed,
        }


def scenario_rng(seed: int, rep: Optional[int] = None) -> np.random.Generator:
    ss = np.random.SeedSequence(seed) if rep is None else np.random.SeedSequence(seed, spawn_key=(rep,))
    return np.random.Generator(np.random.PCG64(ss))


def draw_biased_sample(scenario: Scenario, rng: Optional[np.random.Generator] = None) -> tuple[Sample, np.ndarray]:
    """Accept-reject draw of ``n`` outcomes; returns the sorted sample and the true
    selection probabilities aligned to it."""
    rng = scenario_rng(scenario.seed) if rng is None else rng
    n = scenario.n
    batch = max(1024, int(2 * n * scenario.selection.gamma_true))
    ys, ps = [], []
    got = proposals = 0
    while got < n:
        y = scenario.population.draw(rng, batch)
        p = scenario.selection(y)
        keep = rng.random(batch) < p
        proposals += batch
        ys.append(y[keep])
        ps.append(p[keep])
        got += int(keep.sum())
        if proposals >= STALL_PROPOSALS and got * STALL_PROPOSALS / proposals < 1:
            raise ConfigurationError(f"acceptance stalled: {got} acceptances in {proposals} proposals")
    y = np.concatenate(ys)[:n]
    p = np.concatenate(ps)[:n]
    order = np.argsort(y, kind="stable")
    return Sample(y[order]), p[order]


@dataclass
class CoverageReport:
    rows: list
    summary: dict

    COLUMNS = ("rep", "status", "lower", "upper", "width", "mu", "muCovered", "distance", "hajek", "hajekCovered")


def coverage_experiment(
    scenario: Scenario, spec: ConstraintSpec, reps: int, solver: str = "highs", tol: float = 1e-9
) -> CoverageReport:
    """Repeatedly draw, bound, and score against the truth and the oracle estimate."""
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    if spec.gamma < scenario.selection.gamma_true:
        log.warning("analysis gamma %.3g is below the true ratio %.3g", spec.gamma, scenario.selection.gamma_true)
    if not scenario.population.satisfies(spec.family):
        log.warning("population %s does not satisfy family %s", scenario.population.name, spec.family)
    mu = scenario.population.mean
    rows = []
    for rep in range(reps):
        sample, probs = draw_biased_sample(scenario, scenario_rng(scenario.seed, rep))
        oracle = hajek_estimate(sample, probs)
        try:
            iv = compute_bounds(sample, spec, solver)
        except EmptyPlausibilitySetError:
            nan = float("nan")
            rows.append([rep, "empty", nan, nan, nan, mu, 0, nan, oracle, 0])
            continue
        rows.append([
            rep, "ok", iv.lower, iv.upper, iv.width, mu,
            int(iv.contains(mu, tol)), iv.distance(mu), oracle, int(iv.contains(oracle, tol)),
        ])
    return CoverageReport(rows, summarize(rows, scenario, spec))


def summarize(rows: list, scenario: Scenario, spec: ConstraintSpec) -> dict:
    reps = len(rows)
    ok = [r for r in rows if r[1] == "ok"]
    widths = np.array([r[4] for r in ok])
    dist = np.array([r[7] for r in ok])

    def q(a, p):
        return float(np.quantile(a, p)) if a.size else float("nan")

    return {
        "schemaVersion": 1,
        "reps": reps,
        "completed": len(ok),
        "emptyPlausibilitySet": reps - len(ok),
        "coverageMu": sum(r[6] for r in rows) / reps,
        "coverageHajek": sum(r[9] for r in rows) / reps,
        "meanWidth": float(widths.mean()) if widths.size else float("nan"),
        "medianWidth": q(widths, 0.5),
        "distance": {"mean": float(dist.mean()) if dist.size else float("nan"), "q50": q(dist, 0.5),
                     "q90": q(dist, 0.9), "max": float(dist.max()) if dist.size else float("nan")},
        "scenario": scenario.describe(),
        "spec": spec.to_dict(),
        "rng": RNG_ALGORITHM,
    }
