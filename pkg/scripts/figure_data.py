"""Export CDF curves for plotting.

Writes long-format CSV with the sample ECDF, the weighted ECDFs at the upper
endpoint for each family, and the log-concave lower envelope (U_m and its
log-concave majorant) at the maximising switch point.

    python scripts/figure_data.py --seed 0 --out cdf_curves.csv
"""

import argparse
import sys

import numpy as np

from shapebounds.bounds import compute_bounds, log_concave_envelope
from shapebounds.core import ConstraintSpec, Sample, ecdf, weighted_ecdf
from shapebounds.serialize import csv_text

from application import synthetic_scores


def curves(sample: Sample, gamma: float) -> list:
    rows = [[float(y), float(v), "ecdf"] for y, v in zip(*_steps(ecdf(sample)))]
    for family in ("none", "symmetric", "log-concave"):
        iv = compute_bounds(sample, ConstraintSpec(gamma=gamma, family=family))
        f = weighted_ecdf(sample, iv.upper_solution.weights)
        rows += [[float(y), float(v), f"upper:{family}"] for y, v in zip(*_steps(f))]
        if family == "log-concave":
            art = log_concave_envelope(sample, gamma, iv.upper_solution.grid_point)
            rows += [[float(y), float(v), "envelope:U"] for y, v in zip(*_steps(art.u))]
            ys = np.linspace(art.majorant.knots[0], art.majorant.knots[-1], 400)
            rows += [[float(y), float(v), "envelope:majorant"] for y, v in zip(ys, art.majorant(ys))]
    return rows


def _steps(f):
    return f.breakpoints, f.levels


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=9.0)
    p.add_argument("--out", default="-")
    a = p.parse_args()
    text = csv_text(["y", "level", "series"], curves(Sample.from_values(synthetic_scores(a.seed)), a.gamma))
    if a.out == "-":
        sys.stdout.write(text)
    else:
        with open(a.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
