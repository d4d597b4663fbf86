"""Dense two-phase simplex and builders for weight-optimisation LPs.

Two formulations of the same feasible set are provided.

* :func:`build_weight_lp` works directly on the weights ``w_1..w_n`` plus an
  auxiliary ``s`` standing for ``min(w)``, so the ratio bound becomes the
  linear rows ``s <= w_i <= gamma * s``.
* :func:`build_cdf_lp` uses the cumulative weights ``C_k = w_1 + ... + w_k``
  as variables. CDF constraints then touch one or two variables each, which
  keeps the matrix sparse for the shape-constrained problems.

Extra constraints are expressed once, as :class:`CdfRows` over
``C_0..C_n`` (``C_0 = 0``, ``C_n = 1``), and can be lowered to either form.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import InvalidInputError, Sample, SolverError

log = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-7
MAX_PIVOTS = 1_000_000
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9}


@dataclass
class LpProblem:
    objective: np.ndarray
    sense: str = "max"
    a_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    a_le: Optional[object] = None
    b_le: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    offset: float = 0.0

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        nv = self.objective.size
        if self.sense not in ("max", "min"):
            raise InvalidInputError(f"sense must be 'max' or 'min', got {self.sense!r}")
        for a_name, b_name in (("a_eq", "b_eq"), ("a_le", "b_le")):
            a, b = getattr(self, a_name), getattr(self, b_name)
            if a is None:
                setattr(self, a_name, np.zeros((0, nv)))
                setattr(self, b_name, np.zeros(0))
                continue
            if not sparse.issparse(a):
                a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if a.shape[1] != nv or a.shape[0] != b.size:
                raise InvalidInputError(f"{a_name} has shape {a.shape}, expected (len({b_name}), {nv})")
            if not np.all(np.isfinite(b)):
                raise InvalidInputError(f"{b_name} must be finite")
            setattr(self, a_name, a)
            setattr(self, b_name, b)
        self.lower = np.zeros(nv) if self.lower is None else np.asarray(self.lower, dtype=float)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def dense(self, name: str) -> np.ndarray:
        a = getattr(self, name)
        return a.toarray() if sparse.issparse(a) else a

    def max_violation(self, x) -> float:
        """Largest constraint violation, scaled by 1 + |rhs|."""
        x = np.asarray(x, dtype=float)
        worst = float(np.max(np.maximum(self.lower - x, 0.0), initial=0.0))
        if self.b_eq.size:
            worst = max(worst, float(np.max(np.abs(self.a_eq @ x - self.b_eq) / (1 + np.abs(self.b_eq)))))
        if self.b_le.size:
            worst = max(worst, float(np.max(np.maximum(self.a_le @ x - self.b_le, 0) / (1 + np.abs(self.b_le)))))
        return worst

    def value(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float)) + self.offset


@dataclass
class LpResult:
    status: str
    solution: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    pivots: int = 0
    info: dict = field(default_factory=dict)


def solve(problem: LpProblem, method: str = "simplex") -> LpResult:
    """Solve ``problem`` with the dense simplex (default) or with HiGHS."""
    if method == "simplex":
        return _solve_simplex(problem)
    if method == "highs":
        return _solve_highs(problem)
    raise InvalidInputError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# dense two-phase simplex


class _Tableau:
    """Rows ``0..m-1`` hold B^-1 [A | b]; row ``m`` holds reduced costs."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: list[int]):
        m, nv = a.shape
        self.t = np.zeros((m + 1, nv + 1))
        self.t[:m, :nv] = a
        self.t[:m, nv] = b
        self.basis = basis
        self.pivots = 0

    @property
    def m(self):
        return self.t.shape[0] - 1

    def set_costs(self, c: np.ndarray):
        t = self.t
        t[-1, :] = 0.0
        t[-1, : c.size] = c
        for i, j in enumerate(self.basis):
            if t[-1, j] != 0.0:
                t[-1] -= t[-1, j] * t[i]

    def pivot(self, r: int, c: int):
        t = self.t
        t[r] /= t[r, c]
        col = t[:, c].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        t[:, c] = 0.0
        t[r, c] = 1.0
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed: np.ndarray) -> str:
        """Minimise the current cost row over columns in ``allowed``."""
        t = self.t
        degenerate = 0
        bland = False
        limit = 10 * (self.m + t.shape[1])
        while True:
            if self.pivots >= MAX_PIVOTS:
                raise SolverError(f"simplex pivot cap ({MAX_PIVOTS}) reached")
            red = np.where(allowed, t[-1, :-1], 0.0)
            candidates = np.flatnonzero(red < -PIVOT_TOL)
            if candidates.size == 0:
                return OPTIMAL
            enter = candidates[0] if bland else candidates[np.argmin(red[candidates])]
            column = t[:-1, enter]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = t[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1 + abs(best))]
            leave = min(tied, key=lambda i: self.basis[i])
            if best <= 1e-12:
                degenerate += 1
                if degenerate > limit:
                    bland = True
            else:
                degenerate = 0
            self.pivot(leave, enter)


def _solve_simplex(problem: LpProblem) -> LpResult:
    nv = problem.n_vars
    c = problem.objective if problem.sense == "min" else -problem.objective
    a_eq, a_le = problem.dense("a_eq"), problem.dense("a_le")
    # shift x = lower + x', x' >= 0
    b_eq = problem.b_eq - a_eq @ problem.lower
    b_le = problem.b_le - a_le @ problem.lower
    m_eq, m_le = a_eq.shape[0], a_le.shape[0]
    m = m_eq + m_le
    n_slack = m_le

    rows = np.zeros((m, nv + n_slack))
    rhs = np.zeros(m)
    rows[:m_eq, :nv] = a_eq
    rhs[:m_eq] = b_eq
    rows[m_eq:, :nv] = a_le
    rows[m_eq:, nv:] = np.eye(m_le)
    rhs[m_eq:] = b_le
    flip = rhs < 0
    rows[flip] *= -1
    rhs[flip] *= -1

    basis: list[int] = []
    need_art = []
    for i in range(m):
        if i >= m_eq and not flip[i]:
            basis.append(nv + (i - m_eq))
        else:
            basis.append(-1)
            need_art.append(i)
    n_art = len(need_art)
    total = nv + n_slack + n_art
    a_full = np.zeros((m, total))
    a_full[:, : nv + n_slack] = rows
    for k, i in enumerate(need_art):
        a_full[i, nv + n_slack + k] = 1.0
        basis[i] = nv + n_slack + k

    tab = _Tableau(a_full, rhs, basis)
    is_art = np.zeros(total, dtype=bool)
    is_art[nv + n_slack:] = True

    if n_art:
        tab.set_costs(is_art.astype(float))
        tab.run(np.ones(total, dtype=bool))
        if -tab.t[-1, -1] > PHASE1_TOL:
            return LpResult(INFEASIBLE, pivots=tab.pivots)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(tab.m):
            if not is_art[tab.basis[i]]:
                keep.append(i)
                continue
            row = tab.t[i, : nv + n_slack]
            j = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if j.size:
                tab.pivot(i, int(j[np.argmax(np.abs(row[j]))]))
                keep.append(i)
        if len(keep) < tab.m:
            tab.t = np.vstack([tab.t[keep], tab.t[-1:]])
            tab.basis = [tab.basis[i] for i in keep]

    cost = np.zeros(total)
    cost[:nv] = c
    tab.set_costs(cost)
    status = tab.run(~is_art)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, pivots=tab.pivots)
    x = np.zeros(total)
    for i, j in enumerate(tab.basis):
        x[j] = tab.t[i, -1]
    sol = x[:nv] + problem.lower
    return LpResult(OPTIMAL, sol, problem.value(sol), tab.pivots)


def _solve_highs(problem: LpProblem) -> LpResult:
    c = problem.objective if problem.sense == "min" else -problem.objective
    kw = {}
    if problem.b_eq.size:
        kw.update(A_eq=problem.a_eq, b_eq=problem.b_eq)
    if problem.b_le.size:
        kw.update(A_ub=problem.a_le, b_ub=problem.b_le)
    bounds = np.column_stack([problem.lower, np.full(problem.n_vars, np.inf)])
    res = linprog(c, bounds=bounds, method="highs", options=HIGHS_OPTIONS, **kw)
    info = {}
    if res.status == 4:
        # presolve can stall on nearly infeasible models; retry without it
        info["retry"] = res.message
        res = linprog(c, bounds=bounds, method="highs", options=dict(HIGHS_OPTIONS, presolve=False), **kw)
    if res.status == 4:
        log.warning("HiGHS reported numerical trouble twice; falling back to the dense simplex")
        out = _solve_simplex(problem)
        out.info = dict(info, fallback="simplex")
        return out
    info["message"] = res.message
    if res.status == 2:
        return LpResult(INFEASIBLE, info=info)
    if res.status == 3:
        return LpResult(UNBOUNDED, info=info)
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    sol = np.asarray(res.x)
    return LpResult(OPTIMAL, sol, problem.value(sol), int(getattr(res, "nit", 0)), info)


# ---------------------------------------------------------------------------
# weight-space builders


@dataclass
class CdfRows:
    """Linear rows ``coef @ C <= rhs`` over cumulative weights ``C_0..C_n``."""

    n: int
    coef: sparse.csr_matrix
    rhs: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "CdfRows":
        return cls(n, sparse.csr_matrix((0, n + 1)), np.zeros(0))

    @classmethod
    def from_terms(cls, n: int, terms: list[tuple]) -> "CdfRows":
        """Build from COO blocks ``(rows, cols, vals, rhs)``.

        ``rows`` index into the block's own ``rhs``; ``cols`` index ``C_0..C_n``.
        """
        all_r, all_c, all_v, all_b = [], [], [], []
        offset = 0
        for rows, cols, vals, rhs in terms:
            all_r.append(np.asarray(rows) + offset)
            all_c.append(np.asarray(cols))
            all_v.append(np.asarray(vals, dtype=float))
            all_b.append(np.asarray(rhs, dtype=float))
            offset += len(rhs)
        if offset == 0:
            return cls.empty(n)
        coef = sparse.csr_matrix(
            (np.concatenate(all_v), (np.concatenate(all_r), np.concatenate(all_c))), shape=(offset, n + 1)
        )
        return cls(n, coef, np.concatenate(all_b))

    def __len__(self):
        return self.rhs.size

    def stack(self, other: "CdfRows") -> "CdfRows":
        return CdfRows(self.n, sparse.vstack([self.coef, other.coef]).tocsr(), np.concatenate([self.rhs, other.rhs]))

    def to_weight_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Rewrite as dense rows over ``w_1..w_n`` (C_k = sum of w_j for j <= k)."""
        a = self.coef.toarray()[:, 1:]
        return np.cumsum(a[:, ::-1], axis=1)[:, ::-1], self.rhs.copy()

    def violation(self, weights) -> float:
        c = np.concatenate([[0.0], np.cumsum(weights)])
        if not len(self):
            return 0.0
        return float(np.max(self.coef @ c - self.rhs, initial=0.0))


def build_weight_lp(sample: Sample, gamma: float, extra_le=None, sense: str = "max") -> LpProblem:
    """LP over ``(w_1..w_n, s)`` maximising or minimising ``sum w_i Y_i``.

    ``extra_le`` is ``(A, b)`` with rows linear in ``w`` or a :class:`CdfRows`.
    """
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    n = sample.n
    eye = np.eye(n)
    ones = np.ones((n, 1))
    a_le = [np.hstack([-eye, ones]), np.hstack([eye, -gamma * ones])]
    b_le = [np.zeros(2 * n)]
    if extra_le is not None:
        a_x, b_x = extra_le.to_weight_rows() if isinstance(extra_le, CdfRows) else extra_le
        a_x = np.atleast_2d(np.asarray(a_x, dtype=float)).reshape(-1, n)
        a_le.append(np.hstack([a_x, np.zeros((a_x.shape[0], 1))]))
        b_le.append(np.asarray(b_x, dtype=float))
    return LpProblem(
        objective=np.concatenate([sample.values, [0.0]]),
        sense=sense,
        a_eq=np.concatenate([np.ones(n), [0.0]])[None, :],
        b_eq=np.array([1.0]),
        a_le=np.vstack(a_le),
        b_le=np.concatenate(b_le),
    )


def build_cdf_lp(sample: Sample, gamma: float, rows: Optional[CdfRows] = None, sense: str = "max") -> LpProblem:
    """LP over ``(C_1..C_{n-1}, s)``; weights are recovered as ``diff(C)``."""
    if gamma < 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma!r}")
    n = sample.n
    y = sample.values
    s_col = n - 1
    j = np.arange(1, n + 1)
    r_idx, c_idx, vals = [], [], []
    rhs = np.zeros(2 * n)
    # block 0: s - (C_j - C_{j-1}) <= 0 ; block 1: (C_j - C_{j-1}) - gamma s <= 0
    for base, sign, s_coef in ((0, -1.0, 1.0), (n, 1.0, -gamma)):
        inner = j < n
        r_idx += [base + j[inner] - 1]
        c_idx += [j[inner] - 1]
        vals += [np.full(inner.sum(), sign)]
        rhs[base + n - 1] -= sign
        prev = j > 1
        r_idx += [base + j[prev] - 1]
        c_idx += [j[prev] - 2]
        vals += [np.full(prev.sum(), -sign)]
        r_idx += [base + j - 1]
        c_idx += [np.full(n, s_col)]
        vals += [np.full(n, s_coef)]
    ratio = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(r_idx), np.concatenate(c_idx))), shape=(2 * n, n)
    )
    blocks, rhs_blocks = [ratio], [rhs]
    if rows is not None and len(rows):
        coef = rows.coef.tocsc()
        inner = coef[:, 1:n]
        const = np.asarray(coef[:, n].todense()).ravel()
        blocks.append(sparse.hstack([inner, sparse.csr_matrix((len(rows), 1))]))
        rhs_blocks.append(rows.rhs - const)
    objective = np.zeros(n)
    objective[: n - 1] = y[:-1] - y[1:]
    return LpProblem(
        objective=objective,
        sense=sense,
        a_le=sparse.vstack(blocks).tocsr(),
        b_le=np.concatenate(rhs_blocks),
        offset=float(y[-1]),
    )


def weights_from_cdf_solution(x: np.ndarray, n: int) -> np.ndarray:
    c = np.concatenate([[0.0], x[: n - 1], [1.0]])
    return np.diff(c)


def polish_weights(w: np.ndarray, gamma: float) -> np.ndarray:
    """Remove solver-tolerance violations of positivity and the ratio bound.

    Small weights are raised to ``max(w) / gamma`` and the vector is
    renormalised; the ratio bound then holds to rounding error.
    """
    w = np.asarray(w, dtype=float)
    w = np.maximum(w, np.max(w) / gamma)
    return w / w.sum()


# ---------------------------------------------------------------------------
# plain-text dump


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sparse_row(row) -> str:
    if sparse.issparse(row):
        row = row.tocoo()
        pairs = sorted(zip(row.col, row.data))
    else:
        nz = np.flatnonzero(row)
        pairs = zip(nz, row[nz])
    return " ".join(f"{int(j)}:{_fmt(v)}" for j, v in pairs)


def dump_lp(problem: LpProblem) -> str:
    """Row-oriented text: one constraint per line, ``index:coef`` terms."""
    out = io.StringIO()
    out.write(f"lp vars={problem.n_vars} sense={problem.sense} offset={_fmt(problem.offset)}\n")
    out.write("obj " + _sparse_row(problem.objective) + "\n")
    out.write("lower " + " ".join(_fmt(v) for v in problem.lower) + "\n")
    for tag, a, b in (("eq", problem.a_eq, problem.b_eq), ("le", problem.a_le, problem.b_le)):
        a = a.tocsr() if sparse.issparse(a) else a
        for i in range(b.size):
            out.write(f"{tag} {_sparse_row(a[i])} rhs {_fmt(b[i])}\n")
    return out.getvalue()


def load_lp(text: str) -> LpProblem:
    lines = text.splitlines()
    head = dict(tok.split("=") for tok in lines[0].split()[1:])
    nv = int(head["vars"])

    def parse(tokens):
        row = np.zeros(nv)
        for tok in tokens:
            j, v = tok.split(":")
            row[int(j)] = float(v)
        return row

    objective = parse(lines[1].split()[1:])
    lower = np.array([float(v) for v in lines[2].split()[1:]])
    rows = {"eq": ([], []), "le": ([], [])}
    for line in lines[3:]:
        tag, *rest = line.split()
        k = rest.index("rhs")
        rows[tag][0].append(parse(rest[:k]))
        rows[tag][1].append(float(rest[k + 1]))

    def mat(tag):
        a, b = rows[tag]
        return (np.array(a).reshape(-1, nv), np.array(b)) if a else (None, None)

    a_eq, b_eq = mat("eq")
    a_le, b_le = mat("le")
    return LpProblem(objective, head["sense"], a_eq, b_eq, a_le, b_le, lower, float(head["offset"]))
