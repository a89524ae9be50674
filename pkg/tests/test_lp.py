import numpy as np
import pytest

from oracles import vertex_enum
from pathway_events.lp import (
    LPBuilder,
    LPIterationLimit,
    LPUnbounded,
    lp_solve,
)

METHODS = ("highs", "simplex")


def _lp(c, rows, lb=None, ub=None):
    b = LPBuilder()
    idx = [b.var(f"x{j}", lb=(lb or [0.0] * len(c))[j], ub=(ub or [np.inf] * len(c))[j], cost=cj)
           for j, cj in enumerate(c)]
    for k, (coefs, sense, rhs) in enumerate(rows):
        b.row(f"r{k}", {idx[j]: a for j, a in enumerate(coefs)}, sense, rhs)
    return b.build()


@pytest.mark.parametrize("method", METHODS)
def test_trivial_minimum(method):
    # min x + y s.t. x + y >= 1
    res = lp_solve(_lp([1, 1], [([1, 1], ">", 1)]), method=method)
    assert res.optimal
    assert res.objective == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_textbook_maximum(method):
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    p = _lp([-3, -5], [([1, 0], "<", 4), ([0, 2], "<", 12), ([3, 2], "<", 18)])
    res = lp_solve(p, method=method)
    assert res.objective == pytest.approx(-36.0, abs=1e-9)
    assert res.x == pytest.approx([2.0, 6.0], abs=1e-9)
    assert p.residuals(res.x) <= 1e-9


@pytest.mark.parametrize("method", METHODS)
def test_equality_and_bounds(method):
    p = _lp([1, 2, 0], [([1, 1, 1], "=", 5)], lb=[1, 0, 0], ub=[np.inf, np.inf, 2])
    res = lp_solve(p, method=method)
    assert res.objective == pytest.approx(3.0, abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_infeasible_is_a_result(method):
    res = lp_solve(_lp([1], [([1], "<", 1), ([1], ">", 2)]), method=method)
    assert res.status == "infeasible"
    assert res.x is None and res.objective is None


@pytest.mark.parametrize("method", METHODS)
def test_unbounded_raises(method):
    with pytest.raises(LPUnbounded):
        lp_solve(_lp([-1, 0], [([1, -1], "<", 1)]), method=method)


def test_iteration_limit_raises():
    rng = np.random.default_rng(3)
    n = 30
    rows = [(list(rng.uniform(0.1, 1, n)), ">", 1.0) for _ in range(30)]
    p = _lp(list(rng.uniform(0.5, 1, n)), rows)
    with pytest.raises(LPIterationLimit):
        lp_solve(p, method="simplex", max_iter=2)


def test_unknown_method():
    with pytest.raises(ValueError):
        lp_solve(_lp([1], [([1], ">", 0)]), method="interior")


def test_builder_rejects_duplicates():
    b = LPBuilder()
    b.var("x")
    with pytest.raises(ValueError):
        b.var("x")
    b.row("r", {0: 1.0}, ">", 0)
    with pytest.raises(ValueError):
        b.row("r", {0: 1.0}, ">", 0)
    with pytest.raises(ValueError):
        b.row("s", {0: 1.0}, ">=", 0)


def test_row_view():
    p = _lp([1, 1], [([2, 0], "<", 4)])
    assert p.row("r0") == ({"x0": 2.0}, "<", 4.0)


def _random_lp(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    A = np.round(rng.uniform(-2, 3, (m, n)), 2)
    b = np.round(rng.uniform(-1, 6, m), 2)
    senses = list(rng.choice(["<", ">", "="], m, p=[0.5, 0.35, 0.15]))
    # a box keeps every instance bounded
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, 10.0)
    senses.append("<")
    c = np.round(rng.uniform(-3, 3, n), 2)
    return c, A, senses, b


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("method", METHODS)
def test_random_lps_match_vertex_enumeration(seed, method):
    c, A, senses, b = _random_lp(seed)
    expected = vertex_enum.solve(c, A, senses, b)
    res = lp_solve(_lp(list(c), [(list(r), s, v) for r, s, v in zip(A, senses, b)]), method=method)
    if expected is None:
        assert res.status == "infeasible"
    else:
        assert res.optimal
        assert res.objective == pytest.approx(expected[0], abs=1e-7)


def test_random_batch_has_both_outcomes():
    found = {vertex_enum.solve(*_random_lp(s)) is None for s in range(20)}
    assert found == {True, False}
