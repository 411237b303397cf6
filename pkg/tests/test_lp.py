from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from bellcomm.lp import LinearProgram, check_certificate, membership, solve
from bellcomm.models import ModelSpec, build_strategy_matrix
from bellcomm.scenario import Scenario, make_pr_box, mix, uniform_behavior

S22 = Scenario.uniform(2, 2)


@st.composite
def small_lps(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 4))
    ints = st.integers(-4, 4)
    A = [[draw(ints) for _ in range(n)] for _ in range(m)]
    b = [draw(ints) for _ in range(m)]
    c = [draw(ints) for _ in range(n)]
    rel = [draw(st.sampled_from(["<=", ">=", "="])) for _ in range(m)]
    # keep most programs bounded by a box on a random subset of variables
    bounds = [(0, draw(st.sampled_from([None, 3, 5]))) for _ in range(n)]
    sense = draw(st.sampled_from(["min", "max"]))
    return LinearProgram(c, A, rel, b, bounds, sense)


def _scipy(lp: LinearProgram):
    A = np.array([[float(v) for v in row] for row in lp.A], dtype=float)
    sign = 1 if lp.sense == "min" else -1
    c = sign * np.array([float(v) for v in lp.c])
    ub, ubb, eq, eqb = [], [], [], []
    for row, r, bi in zip(A, lp.relations, lp.b):
        if r == "<=":
            ub.append(row), ubb.append(float(bi))
        elif r == ">=":
            ub.append(-row), ubb.append(-float(bi))
        else:
            eq.append(row), eqb.append(float(bi))
    bounds = [(None if lo is None else float(lo), None if hi is None else float(hi)) for lo, hi in lp.bounds]
    kw = dict(A_ub=ub or None, b_ub=ubb or None, A_eq=eq or None, b_eq=eqb or None, bounds=bounds, method="highs")
    res = linprog(c, **kw)
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[res.status]
    # HiGHS presolve can report an unbounded program as infeasible; a feasibility solve settles it
    if status == "infeasible" and linprog(np.zeros_like(c), **kw).status == 0:
        status = "unbounded"
    return status, (sign * res.fun if status == "optimal" else None)


@settings(max_examples=150, deadline=None)
@given(small_lps())
def test_matches_scipy_and_certifies(lp):
    want_status, want_value = _scipy(lp)
    res = solve(lp)
    assert res.status == want_status
    if want_status == "optimal":
        assert float(res.value) == pytest.approx(want_value, abs=1e-7)
    assert check_certificate(lp, res)


@settings(max_examples=60, deadline=None)
@given(small_lps())
def test_pivoting_rules_agree(lp):
    a = solve(lp)
    b = solve(lp, warm_start=False)
    c = solve(lp, warm_start=False, rule="bland")
    assert a.status == b.status == c.status
    if a.status == "optimal":
        assert a.value == b.value == c.value


def test_farkas_certificate():
    # x + y <= 1 and x + y >= 2
    lp = LinearProgram([0, 0], [[1, 1], [1, 1]], ["<=", ">="], [1, 2])
    res = solve(lp)
    assert res.status == "infeasible"
    f = res.farkas
    A = [[1, 1], [1, 1]]
    # f.A >= 0, f.b < 0, f >= 0 on '<=' rows, f <= 0 on '>=' rows
    assert all(sum(f[i] * A[i][j] for i in range(2)) >= 0 for j in range(2))
    assert f[0] * 1 + f[1] * 2 < 0
    assert f[0] >= 0 and f[1] <= 0
    assert check_certificate(lp, res)


def test_unbounded_ray():
    # the constraint caps x - y but not x + y
    lp = LinearProgram([1, -1], [[1, -1]], ["<="], [1], sense="max")
    res = solve(lp)
    assert res.status == "optimal" and res.value == 1
    lp = LinearProgram([1, 1], [[1, -1]], ["<="], [1], sense="max")
    res = solve(lp)
    assert res.status == "unbounded"
    assert check_certificate(lp, res)


def test_exact_rational_optimum():
    # max x + y s.t. 3x + y <= 1, x + 3y <= 1 -> x = y = 1/4
    lp = LinearProgram([1, 1], [[3, 1], [1, 3]], ["<=", "<="], [1, 1], sense="max")
    res = solve(lp)
    assert res.value == Fraction(1, 2)
    assert res.x == [Fraction(1, 4), Fraction(1, 4)]
    assert res.duals == [Fraction(1, 4), Fraction(1, 4)]


def test_dual_is_rhs_slope():
    base = LinearProgram([1, 1], [[3, 1], [1, 3]], ["<=", "<="], [1, 1], sense="max")
    bumped = LinearProgram([1, 1], [[3, 1], [1, 3]], ["<=", "<="], [1 + Fraction(1, 100), 1], sense="max")
    r0, r1 = solve(base), solve(bumped)
    assert (r1.value - r0.value) * 100 == r0.duals[0]


def test_fractional_rows():
    lp = LinearProgram([1], [[Fraction(1, 3)]], [">="], [Fraction(1, 7)])
    assert solve(lp).value == Fraction(3, 7)


def test_membership_pr_box_lhv():
    m = ModelSpec.lhv(S22)
    T = build_strategy_matrix(m)
    pr = make_pr_box()
    res = membership(pr, m, T=T)
    assert not res.member
    cert = res.certificate
    assert cert.violation > 0
    for j in range(T.shape[1]):
        assert cert.evaluate(T.column(j)) <= cert.bound
    assert cert.evaluate(pr) == cert.value
    # half-noise PR box is on the CHSH facet: local
    inside = membership(mix(pr, uniform_behavior(S22), Fraction(1, 2)), m, T=T)
    assert inside.member
    assert sum(inside.weights.values()) == 1


def test_membership_weights_reproduce():
    m = ModelSpec.cod(S22)
    T = build_strategy_matrix(m)
    pr = make_pr_box()
    res = membership(pr, m, T=T)
    assert res.member
    acc = [Fraction(0)] * S22.size
    for lab, w in res.weights.items():
        col = T.column(int(T.column_of[lab]))
        acc = [a + w * p for a, p in zip(acc, col.probs)]
    assert tuple(acc) == pr.probs


def test_validation_errors():
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<"], [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<="], [1], bounds=[(2, 1)])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<="], [1], sense="maximize")


def test_unbounded_despite_tight_pair():
    # x4 is pinned to within 1 of x1 + x2, and both grow freely
    lp = LinearProgram([0, 0, 0, 1], [[0, 0, 0, 0], [1, 1, 0, -1], [-1, -1, 0, 1]], ["<=", ">=", ">="], [0, 0, -1],
                       [(0, None)] * 4, "max")
    res = solve(lp)
    assert res.status == "unbounded" and check_certificate(lp, res)
