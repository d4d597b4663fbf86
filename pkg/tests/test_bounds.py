import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapebounds import bounds, lp
from shapebounds.core import (
    ConstraintSpec,
    EmptyPlausibilitySetError,
    InvalidInputError,
    Sample,
    ks_distance,
    weighted_ecdf,
)
from shapebounds.dist import delta_gamma_n, normal_cdf
from shapebounds.envelope import ks_lower_envelope

from oracles import brute_force

FAMILIES = ("none", "parametric-gaussian", "symmetric", "log-concave")


def small_spec(family, gamma, **kw):
    if family == "parametric-gaussian":
        kw.setdefault("theta_grid", (5, 5))
    elif family == "symmetric":
        kw.setdefault("m_grid", 15)
    elif family == "log-concave":
        kw.setdefault("m_grid", 15)
    return ConstraintSpec(gamma=gamma, family=family, **kw)


def sym_violation(values, w, m):
    """sup_y |H(m+y) + H(m-y) - 1| evaluated on a dense set of y, H the weighted ECDF."""
    h = weighted_ecdf(values, w)
    d = np.abs(values - m)
    ys = np.concatenate([[0.0], d, np.maximum(d - 1e-9, 0), d + 1e-9, np.linspace(0, d.max() + 1, 2001)])
    return np.max(np.abs(h(m + ys) + h(m - ys) - 1.0))


# ---------------------------------------------------------------------------
# unconstrained


def test_three_point_fixture():
    iv = bounds.al_bounds([0.0, 1.0, 2.0], 2.0)
    assert iv.lower == pytest.approx(0.75, abs=1e-9)
    assert iv.upper == pytest.approx(1.25, abs=1e-9)
    np.testing.assert_allclose(iv.upper_solution.weights, [0.25, 0.25, 0.5], atol=1e-12)
    np.testing.assert_allclose(iv.lower_solution.weights, [0.5, 0.25, 0.25], atol=1e-12)


def test_scan_matches_lp():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(3, 30))
        y = Sample.from_values(rng.normal(size=n) * rng.uniform(0.1, 10))
        gamma = float(rng.choice([1.5, 2, 5, 9]))
        lo, hi = bounds.al_scan(y, gamma)
        for method in ("simplex", "highs"):
            lo2, hi2 = bounds.al_lp(y, gamma, method)
            assert abs(lo.objective - lo2.objective) <= 1e-8 * max(1, np.abs(y.values).max())
            assert abs(hi.objective - hi2.objective) <= 1e-8 * max(1, np.abs(y.values).max())
        lo.check(y.values, gamma)
        hi.check(y.values, gamma)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_scan_matches_brute_force(n):
    rng = np.random.default_rng(n)
    for gamma in (1.5, 2.0, 5.0):
        y = np.sort(rng.normal(size=n))
        lo, hi = bounds.al_scan(y, gamma)
        blo, bhi = brute_force(y, gamma)
        res = (y[-1] - y[0]) * n / 60
        assert lo.objective <= blo + 1e-12 and blo - lo.objective <= res
        assert bhi <= hi.objective + 1e-12 and hi.objective - bhi <= res


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.floats(1, 50), st.floats(1, 3))
def test_al_monotone_in_gamma(vals, gamma, factor):
    a = bounds.al_bounds(vals, gamma)
    b = bounds.al_bounds(vals, gamma * factor)
    assert a.contained_in(b, 1e-9)
    assert a.contains(np.mean(vals), 1e-9)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.floats(1, 50), st.floats(-50, 50))
def test_al_translation(vals, gamma, c):
    a = bounds.al_bounds(vals, gamma)
    b = bounds.al_bounds(np.asarray(vals) + c, gamma)
    assert b.lower == pytest.approx(a.lower + c, abs=1e-9)
    assert b.upper == pytest.approx(a.upper + c, abs=1e-9)


# ---------------------------------------------------------------------------
# shared behaviour


@pytest.mark.parametrize("family", FAMILIES)
def test_gamma_one_is_the_mean(family):
    y = np.random.default_rng(5).normal(size=25)
    iv = bounds.compute_bounds(y, small_spec(family, 1.0))
    assert iv.lower == pytest.approx(y.mean(), abs=1e-9)
    assert iv.upper == pytest.approx(y.mean(), abs=1e-9)


@pytest.mark.parametrize("family", FAMILIES)
def test_constant_sample(family):
    iv = bounds.compute_bounds([3.0] * 6, small_spec(family, 4.0))
    assert iv.lower == iv.upper == 3.0


@pytest.mark.parametrize("family", FAMILIES)
def test_rejects_single_observation(family):
    with pytest.raises(InvalidInputError):
        bounds.compute_bounds([1.0], small_spec(family, 2.0))


@pytest.mark.parametrize("family", FAMILIES[1:])
@given(seed=st.integers(0, 2**32 - 1), gamma=st.sampled_from([1.5, 3.0, 9.0]))
def test_nesting_property(family, seed, gamma):
    rng = np.random.default_rng(seed)
    y = np.round(rng.normal(size=int(rng.integers(8, 40))), 1)
    al = bounds.al_bounds(y, gamma)
    try:
        iv = bounds.compute_bounds(y, small_spec(family, gamma))
    except EmptyPlausibilitySetError:
        return
    assert iv.contained_in(al, 1e-9)
    iv.lower_solution.check(np.sort(y), gamma)
    iv.upper_solution.check(np.sort(y), gamma)


@pytest.mark.parametrize("family", FAMILIES[1:])
def test_own_simplex_matches_highs(family):
    rng = np.random.default_rng(17)
    for _ in range(3):
        y = np.round(rng.normal(size=12), 1)
        spec = small_spec(family, 4.0, **({"m_grid": 5} if family != "parametric-gaussian" else {"theta_grid": (3, 3)}))
        a = bounds.compute_bounds(y, spec, solver="highs")
        b = bounds.compute_bounds(y, spec, solver="simplex")
        assert a.lower == pytest.approx(b.lower, abs=1e-7)
        assert a.upper == pytest.approx(b.upper, abs=1e-7)


def test_incumbent_shortcut_matches_full_search():
    rng = np.random.default_rng(2)
    s = Sample.from_values(rng.normal(size=30))
    band = bounds.symmetric_band(5.0, 0.2, s.n)
    grid = [float(m) for m in bounds.default_m_grid(s, 21)]
    rows_for = lambda m: bounds.symmetry_rows(s, m, band)  # noqa: E731
    lo, hi = bounds.al_scan(s, 5.0)
    for sense, inc in (("max", hi), ("min", lo)):
        a = bounds.grid_search(s, 5.0, grid, rows_for, sense, incumbent=inc)
        b = bounds.grid_search(s, 5.0, grid, rows_for, sense)
        assert a.best.objective == pytest.approx(b.best.objective, abs=1e-8)


def test_grid_ties_keep_first_point():
    s = Sample.from_values([0.0, 1.0, 2.0])
    out = bounds.grid_search(s, 2.0, ["a", "b"], lambda p: lp.CdfRows.empty(3), "max")
    assert out.best_index == 0 and out.best.grid_point == "a"


def test_ratio_box_screening():
    n, gamma = 5, 2.0
    lo, hi = bounds.ratio_box(n, gamma)
    assert lo[0] == hi[0] == 0 and lo[-1] == hi[-1] == 1
    # the box is attained: threshold weights hit each end
    for k in range(1, n):
        w_hi = np.where(np.arange(n) < k, gamma, 1.0)
        assert np.cumsum(w_hi / w_hi.sum())[k - 1] == pytest.approx(hi[k])
    s = Sample.from_values(np.arange(5.0))
    # C_2 >= hi_2 + 0.01 cannot hold
    rows = lp.CdfRows.from_terms(n, [([0], [2], [-1.0], [-(hi[2] + 0.01)])])
    assert not bounds.screen_rows(rows, (lo, hi))
    assert lp.solve(lp.build_cdf_lp(s, gamma, rows), "highs").status == lp.INFEASIBLE


# ---------------------------------------------------------------------------
# parametric


def test_parametric_endpoints_satisfy_band():
    rng = np.random.default_rng(8)
    y = rng.normal(10, 2, size=60)
    spec = ConstraintSpec(gamma=3.0, family="parametric-gaussian", theta_grid=(7, 7))
    iv = bounds.parametric_bounds(y, spec)
    radius = delta_gamma_n(3.0, 60)
    assert iv.constants["band"] == radius
    for sol in (iv.lower_solution, iv.upper_solution):
        loc, scale = sol.grid_point
        d = ks_distance(weighted_ecdf(np.sort(y), sol.weights), lambda t: normal_cdf((t - loc) / scale))
        assert d <= radius + 1e-7


def test_parametric_far_grid_is_empty():
    spec = ConstraintSpec(gamma=2.0, family="parametric-gaussian", theta_grid=[(1000.0, 1.0)])
    with pytest.raises(EmptyPlausibilitySetError):
        bounds.parametric_bounds(np.random.default_rng(0).normal(size=40), spec)


def test_parametric_delta_star_widens():
    y = np.random.default_rng(9).normal(size=50)
    a = bounds.parametric_bounds(y, ConstraintSpec(gamma=4.0, family="parametric-gaussian", theta_grid=(5, 5)))
    b = bounds.parametric_bounds(
        y, ConstraintSpec(gamma=4.0, family="parametric-gaussian", theta_grid=(5, 5), delta_star=0.05)
    )
    assert a.contained_in(b, 1e-9)


def test_ks_band_rows_match_ks_distance():
    # rows hold exactly when the weighted ECDF is inside the band
    rng = np.random.default_rng(4)
    for _ in range(200):
        s = Sample.from_values(np.round(rng.normal(size=8), 1))
        w = rng.dirichlet(np.ones(8))
        uniq, _ = s.distinct()
        radius = rng.uniform(0.05, 0.4)
        rows = bounds.ks_band_rows(s, normal_cdf(uniq), radius)
        d = ks_distance(weighted_ecdf(s, w), normal_cdf)
        inside = rows is not None and rows.violation(w) <= 1e-12
        if abs(d - radius) > 1e-9:
            assert inside == (d <= radius)


# ---------------------------------------------------------------------------
# symmetry


def test_symmetric_sample_contains_mean():
    y = np.array([-3.0, -1.5, -0.2, 0.2, 1.5, 3.0])
    iv = bounds.symmetric_bounds(y, ConstraintSpec(gamma=3.0, family="symmetric", m_grid=[0.0]))
    assert iv.contains(0.0)
    h = weighted_ecdf(y, np.full(6, 1 / 6))
    ys = np.setdiff1d(np.linspace(0, 4, 401), np.abs(y))
    np.testing.assert_allclose(h(ys) + h(-ys) - 1.0, 0.0, atol=1e-15)


def test_symmetry_rows_match_dense_evaluation():
    rng = np.random.default_rng(6)
    for _ in range(200):
        s = Sample.from_values(np.round(rng.normal(size=7)))
        w = rng.dirichlet(np.ones(7))
        m = float(rng.choice([0.0, 0.5, s.values[3], rng.normal()]))
        band = rng.uniform(0.05, 0.5)
        rows = bounds.symmetry_rows(s, m, band)
        dense = sym_violation(s.values, w, m)
        if abs(dense - band) > 1e-9:
            assert (rows.violation(w) <= 1e-12) == (dense <= band)


@pytest.mark.parametrize("n", [3, 4])
def test_symmetric_brute_force(n):
    rng = np.random.default_rng(30 + n)
    for _ in range(3):
        y = np.sort(rng.normal(size=n))
        m = float(np.median(y))
        band = 0.3
        spec = ConstraintSpec(gamma=3.0, family="symmetric", m_grid=[m], alpha=0.5)
        band = bounds.symmetric_band(3.0, 0.5, n)
        try:
            iv = bounds.symmetric_bounds(y, spec)
        except EmptyPlausibilitySetError:
            iv = None
        blo, bhi = brute_force(y, 3.0, lambda w: sym_violation(y, w, m) <= band)
        if iv is None:
            assert np.isinf(bhi)
            continue
        assert iv.lower <= blo + 1e-9 and bhi <= iv.upper + 1e-9
        for sol in (iv.lower_solution, iv.upper_solution):
            assert sym_violation(y, sol.weights, m) <= band + 1e-7


@given(st.integers(0, 2**32 - 1), st.floats(-20, 20))
def test_symmetric_translation(seed, c):
    y = np.random.default_rng(seed).normal(size=20)
    spec = ConstraintSpec(gamma=4.0, family="symmetric", m_grid=11)
    a = bounds.symmetric_bounds(y, spec)
    b = bounds.symmetric_bounds(y + c, spec)
    assert b.lower == pytest.approx(a.lower + c, abs=1e-6)
    assert b.upper == pytest.approx(a.upper + c, abs=1e-6)


# ---------------------------------------------------------------------------
# log-concavity


def test_log_concave_endpoints_dominate_envelope():
    rng = np.random.default_rng(12)
    s = Sample.from_values(np.round(rng.normal(size=80), 1))
    spec = ConstraintSpec(gamma=9.0, family="log-concave", m_grid=25)
    iv = bounds.log_concave_bounds(s, spec)
    assert iv.contained_in(bounds.al_bounds(s, 9.0), 1e-9)
    hi = iv.upper_solution
    art = bounds.log_concave_envelope(s, 9.0, hi.grid_point)
    h = weighted_ecdf(s, hi.weights)
    uniq, _ = s.distinct()
    ys = np.linspace(art.majorant.knots[0], uniq[-1] - 1e-9, 5001)
    assert np.all(h(ys) >= art.majorant(ys) - 1e-7)
    # lower endpoint: same check on the reflected sample
    lo = iv.lower_solution
    neg = s.negated()
    art = bounds.log_concave_envelope(neg, 9.0, -lo.grid_point)
    h = weighted_ecdf(neg, lo.weights[::-1])
    ys = np.linspace(art.majorant.knots[0], -uniq[0] - 1e-9, 5001)
    assert np.all(h(ys) >= art.majorant(ys) - 1e-7)


def test_log_concave_envelope_rows_are_lower_bounds():
    s = Sample.from_values(np.round(np.random.default_rng(13).normal(size=50), 1))
    art = bounds.log_concave_envelope(s, 3.0, 0.0, ks_lower_envelope(s))
    assert art.rows.coef.nnz == len(art.rows)
    assert np.all(art.rows.coef.data == -1.0) and np.all(art.rows.rhs < 0)


@given(st.integers(0, 2**32 - 1), st.floats(-20, 20))
def test_log_concave_translation(seed, c):
    y = np.round(np.random.default_rng(seed).normal(size=25), 2)
    spec = ConstraintSpec(gamma=9.0, family="log-concave")
    a = bounds.log_concave_bounds(y, spec)
    b = bounds.log_concave_bounds(y + c, spec)
    assert b.lower == pytest.approx(a.lower + c, abs=1e-6)
    assert b.upper == pytest.approx(a.upper + c, abs=1e-6)


def test_family_mismatch():
    with pytest.raises(InvalidInputError):
        bounds.symmetric_bounds([1.0, 2.0], ConstraintSpec(gamma=2.0))


def test_endpoint_problems_reproduce_interval():
    y = np.round(np.random.default_rng(14).normal(size=30), 1)
    for family in FAMILIES:
        iv = bounds.compute_bounds(y, small_spec(family, 4.0))
        probs = bounds.endpoint_problems(y, iv)
        hi = lp.solve(probs["upper"], "highs").objective_value
        lo = lp.solve(probs["lower"], "highs").objective_value
        assert hi == pytest.approx(iv.upper, abs=1e-7)
        expected_lo = -iv.lower if family == "log-concave" else iv.lower
        assert lo == pytest.approx(expected_lo, abs=1e-7)
