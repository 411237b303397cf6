import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellcomm.inequalities import (
    catalog,
    evaluate,
    evaluate_float,
    format_functional,
    from_correlators,
    get_functional,
    make_chained,
    make_Mnd,
    max_over_forms,
    mnd_formula,
    model_bound,
    model_bound_exhaustive,
    ns_max,
    relabel_functional,
    relabeled_forms,
    staircase_matrix,
    swap_functional,
)
from bellcomm.models import ModelSpec, encode_strategy, enumerate_strategies
from bellcomm.scenario import Scenario, make_I3322_pr, make_pr_box, relabel, swap_parties, uniform_behavior

from conftest import random_ns_behavior

S22 = Scenario.uniform(2, 2)
S33 = Scenario.uniform(3, 2)


def test_catalog_names():
    names = catalog()
    for n in ("CHSH", "I3322", "I2233_ns", "I_AB", "chained3", "chained3_cod", "chained5_cod", "M332"):
        assert n in names
        assert get_functional(n).name
    assert get_functional("chained7").scenario == Scenario.uniform(7, 2)
    assert get_functional("M4_3").scenario == Scenario.uniform(4, 2)
    with pytest.raises(KeyError):
        get_functional("nope")


def test_chsh_values():
    f = get_functional("CHSH")
    assert evaluate(f, make_pr_box()) == Fraction(1, 2)
    assert evaluate(f, uniform_behavior(S22)) == Fraction(-1, 2)
    assert model_bound(f, ModelSpec.lhv(S22)).value == 0
    assert ns_max(f) == Fraction(1, 2)


def test_chsh_forms_agree_on_ns():
    f, g = get_functional("CHSH"), get_functional("CHSH_ns")
    rng = random.Random(1)
    for _ in range(20):
        b = random_ns_behavior(rng)
        assert evaluate(f, b) == evaluate(g, b)


def test_eight_chsh_forms():
    forms = relabeled_forms(get_functional("CHSH"))
    assert len(forms) == 8
    # each nonlocal vertex violates exactly one form
    from bellcomm.polytope import ns_vertices

    for v in ns_vertices(S22).nonlocal_():
        assert sum(evaluate(g, v) > 0 for g in forms) == 1
        assert max_over_forms(forms, v) == Fraction(1, 2)


def test_i3322_family():
    f = get_functional("I3322")
    # I3322 = 2v - 1 along the PR-type family; pure noise (v = 0) gives -1
    for v in (0, Fraction(1, 4), Fraction(3, 4), 1):
        assert evaluate(f, make_I3322_pr(v)) == 2 * v - 1
    assert model_bound(f, ModelSpec.lhv(S33)).value == 0
    assert evaluate(get_functional("I3322_ns"), make_I3322_pr(Fraction(1, 3))) == Fraction(-1, 3)


def test_i2233_ns_bound():
    f = get_functional("I2233_ns")
    assert model_bound(f, ModelSpec.lhv(f.scenario)).value == 0
    assert ns_max(f) == Fraction(2, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_correlator_form_matches_coefficients(seed):
    rng = random.Random(seed)
    M = [[rng.randint(-2, 2) for _ in range(3)] for _ in range(3)]
    f = from_correlators("rand", S33, M, 0)
    b = make_I3322_pr(Fraction(rng.randint(0, 8), 8))
    assert evaluate(f, b) == f.correlator_value(b)
    assert evaluate_float(f, b.to_array()) == pytest.approx(float(evaluate(f, b)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.permutations([0, 1]), st.permutations([0, 1]), st.booleans(), st.booleans())
def test_relabel_functional_covariance(seed, ia, ib, fa, fb):
    b = random_ns_behavior(random.Random(seed))
    f = get_functional("CHSH")
    oa = [[1, 0] if fa else [0, 1], [0, 1]]
    ob = [[0, 1], [1, 0] if fb else [0, 1]]
    g = relabel_functional(f, ia, ib, oa, ob)
    assert evaluate(g, relabel(b, ia, ib, oa, ob)) == evaluate(f, b)
    assert evaluate(swap_functional(f), swap_parties(b)) == evaluate(f, b)


def test_format_functional():
    text = format_functional(get_functional("CHSH_ns"))
    assert text.startswith("functional: CHSH_ns\n")
    assert "0 0 0 0 -1" in text


def _exhaustive(f, m):
    """Independent bound: evaluate every enumerated strategy's behavior."""
    vals = [evaluate(f, s.behavior(), reference=(0, 0)) for s in enumerate_strategies(m)]
    return max(vals) if f.sense == "<=" else min(vals)


def test_chained3_bounds():
    f = make_chained(3)
    assert model_bound(f, ModelSpec.lhv(S33)).value == 4
    r = model_bound(f, ModelSpec.cod(S33))
    assert r.value == 6 == _exhaustive(f, ModelSpec.cod(S33))
    assert evaluate(f, r.witness.behavior()) == 6


@pytest.mark.parametrize("b11", [0, 1])
def test_chained3_stated_witness(b11):
    # a = 1 only at x = 0; b = 0 when a = 0, b = 1 at (a, y) = (1, 0), b = 0 at (1, 2)
    m = ModelSpec.cod(S33)
    s = encode_strategy(
        m,
        {0: 1, 1: 0, 2: 0},
        {(0, 0): 0, (0, 1): 0, (0, 2): 0, (1, 0): 1, (1, 1): b11, (1, 2): 0},
    )
    assert evaluate(make_chained(3), s.behavior()) == 6


@pytest.mark.parametrize("model", ["ab", "ba", "mix"])
def test_i_ab_bound(model):
    f = get_functional("I_AB")
    m = ModelSpec.cod_mix(S33) if model == "mix" else ModelSpec.cod(S33, model)
    r = model_bound(f, m)
    assert r.value == 4
    assert model_bound_exhaustive(f, m).value == 4
    assert evaluate(f, r.witness.behavior()) == 4


def test_cod_valid_chained3():
    f = make_chained(3, "cod_valid")
    assert f.sense == ">="
    r = model_bound(f, ModelSpec.cod(S33))
    assert r.value == 1 == _exhaustive(f, ModelSpec.cod(S33))
    # correlator form is consistent with the bracket form
    b = make_I3322_pr(Fraction(1, 2))
    assert evaluate(f, b) == f.corr_offset + f.corr_scale * f.correlator_value(b)


def test_staircase():
    assert staircase_matrix(3) == [[1, 1, 1], [1, 1, -1], [1, -1, 0]]
    assert mnd_formula(3, 2) == 6
    f = make_Mnd(3, 2, normalized=False)
    assert f.bound == 6
    assert make_Mnd(3, 2).bound == 1


def test_m332_bounds():
    f = get_functional("M332")
    assert model_bound(f, ModelSpec.mcpd(S33, 2)).value == 6
    assert model_bound_exhaustive(f, ModelSpec.mcpd(S33, 2)).value == 6
    assert model_bound(f, ModelSpec.lhv(S33)).value == 4
    assert ns_max(f) == 8


def test_bound_monotone_in_model():
    f = get_functional("M332")
    vals = [model_bound(f, ModelSpec.mcpd(S33, d)).value for d in (1, 2, 3)]
    assert vals == sorted(vals)
    assert vals[0] == model_bound(f, ModelSpec.lhv(S33)).value
    # algebraic maximum: 8 nonzero +-1 entries
    assert vals[-1] <= 8


def test_best_response_matches_exhaustive():
    rng = np.random.default_rng(5)
    for kind in ("lhv", "cpd", "cod", "mcpd2", "cod_ba", "mcpd2_ba"):
        M = rng.integers(-2, 3, size=(3, 3)).tolist()
        f = from_correlators("r", S33, M, 0)
        m = {
            "lhv": ModelSpec.lhv(S33), "cpd": ModelSpec.cpd(S33), "cod": ModelSpec.cod(S33),
            "mcpd2": ModelSpec.mcpd(S33, 2), "cod_ba": ModelSpec.cod(S33, "ba"),
            "mcpd2_ba": ModelSpec.mcpd(S33, 2, "ba"),
        }[kind]
        a, b = model_bound(f, m), model_bound_exhaustive(f, m)
        assert a.value == b.value
        assert evaluate(f, a.witness.behavior()) == a.value
