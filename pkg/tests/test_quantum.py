import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellcomm.inequalities import evaluate_float, get_functional, make_chained, model_bound
from bellcomm.models import ModelSpec
from bellcomm.quantum import (
    X,
    Z,
    QubitPairState,
    augmented_protocol_value,
    binary_entropy,
    born_behavior,
    chained_optimal_behavior,
    chsh_optimal_behavior,
    entropy,
    max_correlator_value,
    observable,
    phi_plus,
    product_state,
)
from bellcomm.scenario import Scenario


def test_entropies():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0) == binary_entropy(1) == 0.0
    assert entropy([1, 0]) == 0.0
    assert entropy([0.25] * 4) == pytest.approx(2.0)
    assert binary_entropy(1 / 3) == pytest.approx(0.9182958340544896)


def test_state_validation():
    with pytest.raises(ValueError):
        QubitPairState(np.eye(4))
    with pytest.raises(ValueError):
        QubitPairState(np.diag([1.5, -0.5, 0, 0]))
    rho = phi_plus().rho
    assert np.trace(rho).real == pytest.approx(1)


def test_observable_checks():
    with pytest.raises(ValueError):
        born_behavior(phi_plus(), [np.eye(2) * 2], [Z])
    assert np.allclose(observable([0, 0, 3]), Z)


def test_chsh_tsirelson():
    fb = chsh_optimal_behavior()
    E = [[fb.correlator(x, y) for y in range(2)] for x in range(2)]
    assert E[0][0] + E[0][1] + E[1][0] - E[1][1] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert fb.max_signalling() < 1e-12
    # probability form: (2 sqrt 2 - 2)/4 > 0
    assert evaluate_float(get_functional("CHSH"), fb.probs) == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-12)


def test_product_state_is_local():
    up = [1, 0]
    fb = born_behavior(product_state(up, up), [Z, X], [Z, X])
    E = [[fb.correlator(x, y) for y in range(2)] for x in range(2)]
    assert abs(E[0][0] + E[0][1] + E[1][0] - E[1][1]) <= 2 + 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_chained_canonical_value(n):
    fb = chained_optimal_behavior(n)
    f = make_chained(n)
    val = sum(float(w) * fb.correlator(x, y) for (x, y), w in f.correlators.items())
    assert val == pytest.approx(2 * n * math.cos(math.pi / (2 * n)), abs=1e-12)


def test_chained_cod_valid_violated():
    fb = chained_optimal_behavior(3, "cod_valid")
    f = make_chained(3, "cod_valid")
    val = sum(float(w) * fb.correlator(x, y) for (x, y), w in f.correlators.items())
    assert val == pytest.approx(3 * math.sqrt(3), abs=1e-9)
    # bracket form drops below its COD bound of 1
    bracket = float(f.corr_offset) + float(f.corr_scale) * val
    assert bracket == pytest.approx(3 - 3 * math.sqrt(3) / 2, abs=1e-9)
    assert bracket < 1
    assert model_bound(f, ModelSpec.cod(f.scenario)).value == 1
    assert evaluate_float(f, fb.probs) == pytest.approx(bracket, abs=1e-9)


def test_augmented_protocol():
    r = augmented_protocol_value()
    assert r.value == pytest.approx(4 + 2 * math.sqrt(2), abs=1e-10)
    assert r.branch_values[0] == pytest.approx(3, abs=1e-12)
    assert r.branch_values[1] == pytest.approx(2 * math.sqrt(2) + 1, abs=1e-12)
    assert r.message_distribution == (1 / 3, 2 / 3)
    assert r.message_entropy == pytest.approx(binary_entropy(1 / 3), abs=1e-12)
    bound = model_bound(get_functional("M332"), ModelSpec.mcpd(Scenario.uniform(3, 2), 2)).value
    assert bound == 6 and r.value > bound


def test_heuristic_quantum_maximum():
    M = [[1, 1], [1, -1]]
    assert max_correlator_value(M, restarts=5) == pytest.approx(2 * math.sqrt(2), abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_born_is_normalized_ns(t1, p1, t2, p2):
    n1 = [math.sin(t1) * math.cos(p1), math.sin(t1) * math.sin(p1), math.cos(t1)]
    n2 = [math.sin(t2) * math.cos(p2), math.sin(t2) * math.sin(p2), math.cos(t2)]
    fb = born_behavior(phi_plus(), [observable(n1), Z], [observable(n2), X])
    assert fb.max_normalization_error() < 1e-12
    assert fb.max_signalling() < 1e-12
    # <A B> = n1 . (n2 with y flipped) for Phi+
    expect = n1[0] * n2[0] - n1[1] * n2[1] + n1[2] * n2[2]
    assert fb.correlator(0, 0) == pytest.approx(expect, abs=1e-12)
    b = fb.to_behavior()
    assert all(p >= 0 for p in b.probs)
    assert sum(b.block(0, 0)) == Fraction(1)
