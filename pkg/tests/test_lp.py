import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapebounds import lp
from shapebounds.core import InvalidInputError, Sample, SolverError


def vertex_oracle(c, a, b):
    """max c.x over {a x <= b, x >= 0} by enumerating every basic solution."""
    nv = c.size
    full_a = np.vstack([a, -np.eye(nv)])
    full_b = np.concatenate([b, np.zeros(nv)])
    best = None
    for idx in itertools.combinations(range(full_a.shape[0]), nv):
        sub = full_a[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, full_b[list(idx)])
        if np.all(full_a @ x <= full_b + 1e-9):
            v = c @ x
            best = v if best is None else max(best, v)
    return best


def random_lp(rng, feasible_origin):
    nv = 5
    a = rng.uniform(-1, 1, (4, nv))
    b = rng.uniform(0.1, 2.0, 4) if feasible_origin else rng.uniform(-1.0, 1.0, 4)
    # box rows keep the polytope bounded
    a = np.vstack([a, np.eye(nv)])
    b = np.concatenate([b, rng.uniform(0.5, 3.0, nv)])
    return rng.normal(size=nv), a, b


def test_simplex_matches_vertex_enumeration():
    rng = np.random.default_rng(7)
    n_infeasible = 0
    for k in range(120):
        c, a, b = random_lp(rng, feasible_origin=k % 2 == 0)
        expected = vertex_oracle(c, a, b)
        for method in ("simplex", "highs"):
            res = lp.solve(lp.LpProblem(c, "max", a_le=a, b_le=b), method)
            if expected is None:
                assert res.status == lp.INFEASIBLE
            else:
                assert res.status == lp.OPTIMAL
                assert res.objective_value == pytest.approx(expected, abs=1e-8)
        n_infeasible += expected is None
    assert 0 < n_infeasible < 60


def test_simplex_equalities_and_lower_bounds():
    # min x0 + 2 x1 s.t. x0 + x1 = 3, x0 <= 2, x >= (0.5, 0.5)
    p = lp.LpProblem([1.0, 2.0], "min", a_eq=[[1, 1]], b_eq=[3], a_le=[[1, 0]], b_le=[2], lower=[0.5, 0.5])
    res = lp.solve(p)
    np.testing.assert_allclose(res.solution, [2.0, 1.0], atol=1e-12)
    assert res.objective_value == pytest.approx(4.0)


def test_simplex_redundant_equalities():
    p = lp.LpProblem([1.0, 1.0], "max", a_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    res = lp.solve(p)
    assert res.status == lp.OPTIMAL and res.objective_value == pytest.approx(1.0)


def test_simplex_unbounded_and_infeasible():
    assert lp.solve(lp.LpProblem([1.0, 0.0], "max", a_le=[[0, 1]], b_le=[1])).status == lp.UNBOUNDED
    assert lp.solve(lp.LpProblem([1.0], "max", a_le=[[1]], b_le=[-1])).status == lp.INFEASIBLE


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule without an anti-cycling fallback
    c = np.array([0.75, -150, 0.02, -6])
    a = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1.0])
    res = lp.solve(lp.LpProblem(c, "max", a_le=a, b_le=b))
    assert res.objective_value == pytest.approx(0.05, abs=1e-12)


def test_pivot_cap(monkeypatch):
    monkeypatch.setattr(lp, "MAX_PIVOTS", 0)
    with pytest.raises(SolverError):
        lp.solve(lp.LpProblem([1.0, 1.0], "max", a_le=[[1, 1]], b_le=[1]))


def test_bad_problem_shapes():
    with pytest.raises(InvalidInputError):
        lp.LpProblem([1.0, 1.0], "max", a_le=[[1, 1, 1]], b_le=[1])
    with pytest.raises(InvalidInputError):
        lp.LpProblem([1.0], "up")
    with pytest.raises(InvalidInputError):
        lp.solve(lp.LpProblem([1.0]), "cplex")


def test_three_point_fixture_both_formulations():
    s = Sample.from_values([0.0, 1.0, 2.0])
    for build in (lp.build_weight_lp, lp.build_cdf_lp):
        for method in ("simplex", "highs"):
            hi = lp.solve(build(s, 2.0, sense="max"), method)
            lo = lp.solve(build(s, 2.0, sense="min"), method)
            assert hi.objective_value == pytest.approx(1.25, abs=1e-12)
            assert lo.objective_value == pytest.approx(0.75, abs=1e-12)
    hi = lp.solve(lp.build_weight_lp(s, 2.0, sense="max"))
    np.testing.assert_allclose(hi.solution[:3], [0.25, 0.25, 0.5], atol=1e-12)


def test_cdf_rows_lowering_agrees():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(3, 8))
        s = Sample.from_values(rng.normal(size=n))
        # C_k >= lo_k, C_k <= hi_k on a couple of interior k
        ks = rng.choice(np.arange(1, n), size=2, replace=False)
        lo_, hi_ = rng.uniform(0, 0.5, 2), rng.uniform(0.5, 1, 2)
        rows = lp.CdfRows.from_terms(n, [
            (np.arange(2), ks, -np.ones(2), -lo_),
            (np.arange(2), ks, np.ones(2), hi_),
        ])
        for sense in ("max", "min"):
            a = lp.solve(lp.build_cdf_lp(s, 3.0, rows, sense), "highs")
            b = lp.solve(lp.build_weight_lp(s, 3.0, rows, sense), "simplex")
            assert a.status == b.status
            if a.status == lp.OPTIMAL:
                assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)
                w = lp.weights_from_cdf_solution(a.solution, n)
                assert rows.violation(w) <= 1e-8


def test_rows_touching_fixed_endpoints():
    n = 4
    s = Sample.from_values([0.0, 1.0, 2.0, 3.0])
    # C_4 - C_2 <= 0.3 reads as -C_2 <= -0.7 once C_4 = 1 is folded in
    rows = lp.CdfRows.from_terms(n, [([0, 0], [4, 2], [1.0, -1.0], [0.3])])
    a = lp.solve(lp.build_cdf_lp(s, 10.0, rows, "max"), "highs")
    b = lp.solve(lp.build_weight_lp(s, 10.0, rows, "max"), "simplex")
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-9)


def test_polish_weights():
    w = lp.polish_weights(np.array([0.5, 0.25 - 1e-11, 0.25 + 1e-11]), 2.0)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert w.max() / w.min() <= 2.0 + 1e-12


@given(st.integers(2, 7), st.floats(1.0, 20.0), st.integers(0, 2**32 - 1))
def test_dump_roundtrip(n, gamma, seed):
    s = Sample.from_values(np.random.default_rng(seed).normal(size=n))
    for build in (lp.build_weight_lp, lp.build_cdf_lp):
        p = build(s, gamma, sense="min")
        text = lp.dump_lp(p)
        q = lp.load_lp(text)
        assert lp.dump_lp(q) == text
        assert lp.solve(q).objective_value == lp.solve(p).objective_value


def test_highs_presolve_stall_is_recovered():
    # symmetric-family LP from a coverage replication; HiGHS presolve returns
    # an unknown model status on it
    import gzip
    from pathlib import Path

    text = gzip.open(Path(__file__).parent / "data" / "presolve_stall.lp.gz", "rt").read()
    p = lp.load_lp(text)
    res = lp.solve(p, "highs")
    assert res.status == lp.INFEASIBLE
    assert "retry" in res.info
    assert lp.solve(p, "simplex").status == lp.INFEASIBLE
