from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellcomm.models import (
    BudgetExceeded,
    ModelDomainError,
    ModelKind,
    ModelSpec,
    bits_required,
    build_strategy_matrix,
    decode_strategy,
    encode_strategy,
    enumerate_strategies,
    strategy_count,
)
from bellcomm.scenario import Scenario

S22 = Scenario.uniform(2, 2)
S32 = Scenario((3, 2), (2, 2, 2))

MODELS_22 = [
    (ModelSpec.lhv(S22), 16),
    (ModelSpec.cpd(S22), 4 * 16),
    (ModelSpec.cpd(S22, "ba"), 4 * 16),
    (ModelSpec.cod(S22), 4 * 16),
    (ModelSpec.cod(S22, "ba"), 4 * 16),
    (ModelSpec.cod_mix(S22), 128),
    (ModelSpec.mcpd(S22, 2), 4 * 4 * 16),
    (ModelSpec.cpd_two_way(S22), 16 * 16),
]


@pytest.mark.parametrize("m,count", MODELS_22, ids=lambda v: str(v))
def test_strategy_counts(m, count):
    assert strategy_count(m) == count
    T = build_strategy_matrix(m, dedup=False)
    assert T.shape == (16, count)


def test_count_unequal_outputs():
    # Alice: 3 * 2 outputs; Bob's COD table is keyed by (a, y) with a < max_out_a = 3
    m = ModelSpec.cod(S32)
    assert strategy_count(m) == 6 * 2 ** 9
    assert strategy_count(ModelSpec.lhv(S32)) == 6 * 8


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([m for m, _ in MODELS_22] + [ModelSpec.cod(S32)]), st.data())
def test_encode_decode_roundtrip(m, data):
    lab = data.draw(st.integers(0, strategy_count(m) - 1))
    s = decode_strategy(m, lab)
    again = encode_strategy(m, s.alice, s.bob, s.message, s.component)
    assert again.label == lab
    # the column of the strategy matrix reproduces the strategy's own behavior
    T = build_strategy_matrix(m, dedup=False)
    assert T.column(lab) == s.behavior()


def test_dedup_column_map():
    m = ModelSpec.mcpd(S22, 2)
    T = build_strategy_matrix(m)
    full = build_strategy_matrix(m, dedup=False)
    assert T.shape[1] < full.shape[1]
    for lab in range(0, strategy_count(m), 7):
        assert T.column(int(T.column_of[lab])) == full.column(lab)


def _column_set(T):
    return {T.column(j).probs for j in range(T.shape[1])}


def test_trivial_message_is_local():
    assert _column_set(build_strategy_matrix(ModelSpec.mcpd(S22, 1))) == _column_set(build_strategy_matrix(ModelSpec.lhv(S22)))


def test_model_inclusions_on_columns():
    lhv = _column_set(build_strategy_matrix(ModelSpec.lhv(S22)))
    cod = _column_set(build_strategy_matrix(ModelSpec.cod(S22)))
    cpd = _column_set(build_strategy_matrix(ModelSpec.cpd(S22)))
    mix = _column_set(build_strategy_matrix(ModelSpec.cod_mix(S22)))
    two = _column_set(build_strategy_matrix(ModelSpec.cpd_two_way(S22)))
    assert lhv < cod <= cpd
    assert cod <= mix <= two


def test_budget():
    m = ModelSpec.mcpd(Scenario.uniform(5, 2), 3)
    with pytest.raises(BudgetExceeded):
        enumerate_strategies(m, budget=1000)
    with pytest.raises(BudgetExceeded):
        build_strategy_matrix(m, budget=1000)


def test_bits_required():
    m = ModelSpec.mcpd(Scenario.uniform(3, 2), 3)
    one = encode_strategy(m, {}, {}, {0: 1, 1: 1, 2: 1})
    two = encode_strategy(m, {}, {}, {0: 0, 1: 1, 2: 1})
    three = encode_strategy(m, {}, {}, {0: 0, 1: 1, 2: 2})
    assert bits_required(one) == 0
    assert bits_required(two) == Fraction(1)
    assert bits_required(three) == pytest.approx(np.log2(3))
    with pytest.raises(ModelDomainError):
        bits_required(decode_strategy(ModelSpec.lhv(S22), 0))


def test_outcome_semantics():
    m = ModelSpec.cod(S22)
    # Alice outputs x, Bob outputs a xor y
    s = encode_strategy(m, {0: 0, 1: 1}, {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0})
    assert [s.outcome(x, y) for x in range(2) for y in range(2)] == [(0, 0), (0, 1), (1, 1), (1, 0)]
    m = ModelSpec.mcpd(S22, 2, "ba")
    s = encode_strategy(m, {(1, 0): 1}, {0: 1, 1: 0}, {0: 1, 1: 0})
    assert s.outcome(0, 0) == (1, 1)
    assert s.outcome(0, 1) == (0, 0)


def test_modelspec_validation():
    with pytest.raises(ValueError):
        ModelSpec(ModelKind.COD, S22, "xy")
    with pytest.raises(ValueError):
        ModelSpec.mcpd(S22, 0)
    assert ModelSpec.lhv(S22).direction == "ab"
    assert str(ModelSpec.mcpd(S22, 2)) == "mcpd(ab,d=2)[(2,2)(2,2)]"
