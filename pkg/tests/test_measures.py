import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from bellcomm.inequalities import evaluate, get_functional, max_over_forms, relabeled_forms
from bellcomm.lp import membership
from bellcomm.measures import (
    InfeasibleQuery,
    ValueTarget,
    curve_csv,
    format_number,
    max_value_in_model,
    mcpd_table,
    message_polytope,
    min_average_communication,
    min_causal_influence,
    min_causal_influence_given_value,
    min_message_entropy,
    value_curve_breakpoints,
)
from bellcomm.models import ModelDomainError, ModelSpec, enumerate_strategies
from bellcomm.scenario import (
    Behavior,
    Scenario,
    make_I3322_pr,
    make_pr_box,
    mix,
    relabel,
    uniform_behavior,
)

from conftest import random_ns_behavior

S22 = Scenario.uniform(2, 2)
S33 = Scenario.uniform(3, 2)


# ---------------------------------------------------------------------------
# independent float oracle built from the definition


def _oracle_influence(b: Behavior, m: ModelSpec) -> float:
    """min_q max_tau sum_lambda q_lambda |p(b|do(u),y,lambda) - p(b|do(u'),y,lambda)| with scipy."""
    s = b.scenario
    strats = enumerate_strategies(m)
    cols = np.array([st_.behavior().to_array() for st_ in strats]).T
    n = cols.shape[1]
    sources = range(s.n_a) if m.kind.value == "cpd" else range(s.max_out_a)
    rows = []
    for y in range(s.n_b):
        for u in sources:
            for v in sources:
                if u >= v:
                    continue
                for bb in range(s.outputs_b[y]):
                    rows.append([abs(int(st_.bob[u, y] == bb) - int(st_.bob[v, y] == bb)) for st_ in strats])
    D = np.array(rows, dtype=float)
    c = np.zeros(n + 1)
    c[-1] = 1
    A_ub = np.hstack([D, -np.ones((len(D), 1))])
    A_eq = np.vstack([np.hstack([cols, np.zeros((cols.shape[0], 1))]), np.r_[np.ones(n), 0][None, :]])
    b_eq = np.r_[b.to_array(), 1]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(len(D)), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (n + 1), method="highs")
    assert res.status == 0
    return res.fun


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["cpd", "cod"]))
def test_influence_matches_oracle(seed, kind):
    b = random_ns_behavior(random.Random(seed))
    m = ModelSpec.cpd(S22) if kind == "cpd" else ModelSpec.cod(S22)
    r = min_causal_influence(b, m)
    assert float(r.value) == pytest.approx(_oracle_influence(b, m), abs=1e-8)


def test_pr_box_influence():
    pr = make_pr_box()
    assert min_causal_influence(pr, ModelSpec.cpd(S22)).value == Fraction(1, 2)
    assert min_causal_influence(pr, ModelSpec.cod(S22)).value == 1
    assert min_causal_influence(pr, ModelSpec.cpd(S22, "ba")).value == Fraction(1, 2)


def test_influence_result_fields():
    r = min_causal_influence(make_pr_box(), ModelSpec.cpd(S22))
    assert r.measure == "C_X->B"
    assert sum(r.weights.values()) == 1
    assert max(r.tuples.values()) == r.value
    r = min_causal_influence(make_pr_box(), ModelSpec.cod(S22))
    assert r.measure == "C_A->B"


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_influence_nonnegative_and_zero_iff_local(seed):
    b = random_ns_behavior(random.Random(seed))
    v = min_causal_influence(b, ModelSpec.cpd(S22)).value
    assert v >= 0
    local = membership(b, ModelSpec.lhv(S22)).member
    assert (v == 0) == local


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.booleans(), st.booleans())
def test_influence_bob_relabel_invariance(seed, f0, f1):
    b = random_ns_behavior(random.Random(seed))
    ob = [[1, 0] if f0 else [0, 1], [1, 0] if f1 else [0, 1]]
    m = ModelSpec.cpd(S22)
    assert min_causal_influence(b, m).value == min_causal_influence(relabel(b, outputs_b=ob), m).value


def test_influence_alice_input_relabel_invariance():
    b = random_ns_behavior(random.Random(11))
    m = ModelSpec.cpd(S22)
    assert min_causal_influence(b, m).value == min_causal_influence(relabel(b, inputs_a=[1, 0]), m).value


def test_influence_rejects():
    s = S22
    signalling = Behavior.from_function(s, lambda x, y, a, bb: int(a == 0 and bb == x))
    with pytest.raises(ValueError):
        min_causal_influence(signalling, ModelSpec.cpd(s))
    with pytest.raises(ModelDomainError):
        min_causal_influence(make_pr_box(), ModelSpec.lhv(s))


def test_value_only_examples():
    f = get_functional("I3322")
    m = ModelSpec.cpd(S33)
    assert min_causal_influence_given_value(f, Fraction(1, 2), m).value == Fraction(1, 5)
    assert min_causal_influence_given_value(f, Fraction(5, 7), m).value == Fraction(2, 7)
    assert min_causal_influence_given_value(f, 1, m).value == Fraction(1, 2)
    assert min_causal_influence_given_value(f, Fraction(-1, 2), m).value == 0
    r = min_causal_influence_given_value(get_functional("CHSH"), Fraction(1, 4), ModelSpec.cpd(S22))
    assert r.value == Fraction(1, 4)
    # the optimizing behavior really has the requested value
    assert evaluate(get_functional("CHSH"), r.behavior) == Fraction(1, 4)


def test_value_only_below_full():
    # imposing only the value can only lower the minimum
    f = get_functional("I3322")
    m = ModelSpec.cpd(S33)
    for v in (Fraction(3, 5), Fraction(4, 5)):
        full = min_causal_influence(make_I3322_pr(v), m).value
        part = min_causal_influence_given_value(f, evaluate(f, make_I3322_pr(v)), m).value
        assert part <= full


def test_breakpoints():
    f = get_functional("I3322")
    bps = value_curve_breakpoints(f, ModelSpec.cpd(S33), Fraction(-1, 2), 1)
    assert bps == [(Fraction(-1, 2), 0), (0, 0), (Fraction(5, 7), Fraction(2, 7)), (1, Fraction(1, 2))]
    bps = value_curve_breakpoints(get_functional("CHSH"), ModelSpec.cpd(S22), 0, Fraction(1, 2))
    assert bps == [(0, 0), (Fraction(1, 2), Fraction(1, 2))]


def test_value_infeasible():
    with pytest.raises(InfeasibleQuery):
        min_causal_influence_given_value(get_functional("CHSH"), 1, ModelSpec.cpd(S22))


# ---------------------------------------------------------------------------
# communication


def _oracle_communication(b: Behavior, d: int) -> float:
    strats = enumerate_strategies(ModelSpec.mcpd(b.scenario, d))
    cols = np.array([s.behavior().to_array() for s in strats]).T
    cost = np.array([math.log2(len(set(s.message.values()))) for s in strats])
    A_eq = np.vstack([cols, np.ones(len(strats))])
    res = linprog(cost, A_eq=A_eq, b_eq=np.r_[b.to_array(), 1], bounds=[(0, None)] * len(strats), method="highs")
    assert res.status == 0
    return res.fun


def test_communication_pr_box():
    pr = make_pr_box()
    r = min_average_communication(pr, 2)
    assert r.exact_value == 1
    assert r.value == pytest.approx(_oracle_communication(pr, 2), abs=1e-9)
    assert min_average_communication(pr, 3).value == pytest.approx(1.0)
    with pytest.raises(InfeasibleQuery) as exc:
        min_average_communication(pr, 1)
    assert exc.value.certificate is not None and exc.value.certificate.violation > 0


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6))
def test_communication_matches_oracle(seed):
    b = random_ns_behavior(random.Random(seed))
    r = min_average_communication(b, 2)
    assert r.value == pytest.approx(_oracle_communication(b, 2), abs=1e-8)
    assert sum(r.weight_by_messages.values()) == 1


def test_communication_local_is_zero():
    b = mix(make_pr_box(), uniform_behavior(S22), Fraction(1, 2))
    assert min_average_communication(b, 2).value == 0


def test_communication_ba():
    assert min_average_communication(make_pr_box(), 2, "ba").exact_value == 1


def test_communication_three_messages():
    # the noise-free I3322 target needs all three messages on every strategy
    r = min_average_communication(make_I3322_pr(1), 3)
    assert r.exact_value is None
    assert r.weight_by_messages == {3: 1}
    assert r.value == pytest.approx(math.log2(3), abs=1e-12)
    assert r.value == pytest.approx(_oracle_communication(make_I3322_pr(1), 3), abs=1e-8)


# ---------------------------------------------------------------------------
# message polytope and entropy


def _oracle_interval(b: Behavior):
    strats = enumerate_strategies(ModelSpec.mcpd(b.scenario, 2))
    cols = np.array([s.behavior().to_array() for s in strats]).T
    p1 = np.array([sum(s.message[x] for x in range(b.scenario.n_a)) / b.scenario.n_a for s in strats])
    A_eq = np.vstack([cols, np.ones(len(strats))])
    out = []
    for sgn in (1, -1):
        res = linprog(sgn * p1, A_eq=A_eq, b_eq=np.r_[b.to_array(), 1], bounds=[(0, None)] * len(strats), method="highs")
        out.append(sgn * res.fun)
    return tuple(out)


def test_pr_polytopes():
    pr = make_pr_box()
    p2 = message_polytope(pr, 2)
    assert p2.vertices == [(Fraction(1, 2), Fraction(1, 2))]
    assert p2.dimension == 0
    p3 = message_polytope(pr, 3)
    assert p3.dimension == 2
    assert sorted(p3.vertices) == sorted({(Fraction(1, 2), Fraction(1, 2), 0), (Fraction(1, 2), 0, Fraction(1, 2)),
                                          (0, Fraction(1, 2), Fraction(1, 2))})
    assert min_message_entropy(pr, 3).value == pytest.approx(1.0)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10**6))
def test_interval_matches_oracle(seed):
    b = random_ns_behavior(random.Random(seed))
    lo, hi = message_polytope(b, 2).interval()
    olo, ohi = _oracle_interval(b)
    assert float(lo) == pytest.approx(olo, abs=1e-8)
    assert float(hi) == pytest.approx(ohi, abs=1e-8)


def test_local_polytope_contains_trivial_message():
    b = mix(make_pr_box(), uniform_behavior(S22), Fraction(3, 4))
    poly = message_polytope(b, 2)
    assert (1, 0) in poly.vertices and (0, 1) in poly.vertices
    assert min_message_entropy(b, 2).value == 0


def test_canonical_closure_equals_full():
    b = random_ns_behavior(random.Random(4))
    full = message_polytope(b, 3)
    can = message_polytope(b, 3, canonical=True)
    import itertools

    images = set()
    for v in can.vertices:
        for p in itertools.permutations(range(3)):
            images.add(tuple(v[p[i]] for i in range(3)))
    # an extreme point of the hull of the images is a vertex of one image
    assert set(full.vertices) <= images
    assert min(full.entropies()) == pytest.approx(min(can.entropies()), abs=1e-12)
    assert full.dimension == 2


def test_entropy_monotone_in_d():
    f = get_functional("CHSH")
    t = ValueTarget(f, Fraction(3, 10))
    h = [min_message_entropy(t, d).value for d in (2, 3, 4)]
    assert h[0] >= h[1] - 1e-12 >= h[2] - 2e-12


def test_entropy_with_input_distribution():
    pr = make_pr_box()
    r = min_message_entropy(pr, 2, input_distribution=[Fraction(1, 4), Fraction(3, 4)])
    assert r.value == pytest.approx(-(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75)))


def test_mcpd_table_features():
    tab = mcpd_table(S22, 2)
    canon = mcpd_table(S22, 2, canonical=True)
    assert len(canon) < len(tab)
    assert set(map(tuple, tab.features[:, -1:].tolist())) == {(1,), (2,)}
    assert all(sum(row[:2]) == 2 for row in tab.features.tolist())


def test_max_value_in_model():
    f = get_functional("I3322")
    assert max_value_in_model(f, ModelSpec.mcpd(S33, 2)) == Fraction(2, 3)
    assert max_value_in_model(f, ModelSpec.mcpd(S33, 3)) == 1
    assert max_value_in_model(get_functional("CHSH"), ModelSpec.lhv(S22)) == 0


def test_chsh_max_over_forms_example():
    forms = relabeled_forms(get_functional("CHSH"))
    b = mix(make_pr_box(), uniform_behavior(S22), Fraction(1, 4))
    assert max_over_forms(forms, b) == Fraction(1, 4)


def test_csv_format():
    text = curve_csv([(Fraction(1, 2), Fraction(1, 3), "H_min", "m", 2), {"param": 0.25, "value": 1}])
    lines = text.splitlines()
    assert lines[0] == "param,value,measure,model,d"
    assert lines[1] == "1/2,1/3,H_min,m,2"
    assert lines[2] == "0.25,1,,,"
    assert format_number(Fraction(4)) == "4"
