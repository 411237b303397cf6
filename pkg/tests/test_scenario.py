import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellcomm.scenario import (
    Behavior,
    BehaviorFormatError,
    Scenario,
    format_behavior,
    is_no_signalling,
    make_I3322_pr,
    make_pr_box,
    mix,
    parse_behavior,
    read_behavior,
    relabel,
    relabel_permutation,
    permute_behavior,
    swap_parties,
    uniform_behavior,
    validate_behavior,
    write_behavior,
)

from conftest import random_ns_behavior

scenarios = st.tuples(
    st.lists(st.integers(1, 3), min_size=1, max_size=3),
    st.lists(st.integers(1, 3), min_size=1, max_size=3),
).map(lambda t: Scenario(tuple(t[0]), tuple(t[1])))


def test_parse_forms():
    s = Scenario.parse("[(3,3,3)(3,2)]")
    assert s.outputs_a == (3, 3, 3) and s.outputs_b == (3, 2)
    assert Scenario.parse("[(333)(32)]") == s
    assert Scenario.parse("[(3 3 3)(3 2)]") == s
    assert str(s) == "[(3,3,3)(3,2)]"
    with pytest.raises(ValueError):
        Scenario.parse("(2,2)(2,2)")


@given(scenarios)
def test_index_is_bijection(s):
    idx = [s.index(*c) for c in s.coords]
    assert idx == list(range(s.size))
    assert s.size == sum(s.outputs_a[x] * s.outputs_b[y] for x, y in s.blocks)


def test_index_order_x_slowest():
    s = Scenario.uniform(2, 2)
    assert s.coords[:5] == ((0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0), (0, 0, 1, 1), (0, 1, 0, 0))
    with pytest.raises(IndexError):
        s.index(0, 0, 2, 0)


def test_pr_box_properties():
    pr = make_pr_box()
    assert validate_behavior(pr).valid
    assert is_no_signalling(pr).ok
    assert pr.correlators() == [[1, 1], [1, -1]]
    assert sum(pr.probs) == 4


def test_validity_reports_bad_blocks():
    s = Scenario.uniform(2, 2)
    probs = list(uniform_behavior(s).probs)
    probs[0] += Fraction(1, 8)
    rep = validate_behavior(Behavior(s, tuple(probs)))
    assert not rep.valid
    assert (0, 0) in rep.bad_blocks
    probs[0] = Fraction(-1, 4)
    probs[1] = Fraction(3, 4)
    rep = validate_behavior(Behavior(s, tuple(probs)))
    assert not rep.valid and rep.out_of_range


def test_signalling_detected():
    s = Scenario.uniform(2, 2)
    # Bob copies Alice's input: signalling
    b = Behavior.from_function(s, lambda x, y, a, bb: int(a == 0 and bb == x))
    assert validate_behavior(b).valid
    rep = is_no_signalling(b)
    assert not rep.ok and rep.violations


def test_i3322_family_is_ns():
    for v in (0, Fraction(1, 3), 1):
        b = make_I3322_pr(v)
        assert validate_behavior(b).valid and is_no_signalling(b).ok
    with pytest.raises(ValueError):
        make_I3322_pr(2)


def test_mix_endpoints():
    pr, u = make_pr_box(), uniform_behavior(Scenario.uniform(2, 2))
    assert mix(pr, u, 0) == pr
    assert mix(pr, u, 1) == u
    assert mix(pr, u, Fraction(1, 2))[0, 0, 0, 0] == Fraction(3, 8)


def test_text_roundtrip(tmp_path):
    rng = random.Random(3)
    b = random_ns_behavior(rng)
    assert parse_behavior(format_behavior(b)) == b
    p = tmp_path / "b.txt"
    write_behavior(b, p)
    assert read_behavior(p) == b


@pytest.mark.parametrize(
    "text",
    [
        "0 0 0 0 1/2\n",
        "scenario: [(2,2)(2,2)]\n0 0 0 1/2\n",
        "scenario: [(2,2)(2,2)]\n0 0 5 0 1/2\n",
        "scenario: [(2,2)(2,2)]\n0 0 0 0 1/2\n0 0 0 0 1/2\n",
        "scenario: [(2,2)(2,2)]\n0 0 0 0 1/0\n",
        "",
    ],
)
def test_malformed_files(text):
    with pytest.raises(BehaviorFormatError):
        parse_behavior(text)


def test_relabel_and_swap():
    pr = make_pr_box()
    swapped = swap_parties(pr)
    assert swap_parties(swapped) == pr
    # the PR box is symmetric under exchange
    assert swapped == pr
    # flipping Bob's output at y = 1 turns a xor b = xy into a xor b = xy xor y
    q = relabel(pr, outputs_b=[[0, 1], [1, 0]])
    assert q[0, 1, 0, 1] == Fraction(1, 2) and q[1, 1, 0, 0] == Fraction(1, 2)
    with pytest.raises(ValueError):
        relabel(pr, inputs_a=[0, 0])


def test_swap_asymmetric_scenario():
    s = Scenario((3, 2), (2, 2, 2))
    b = uniform_behavior(s)
    sw = swap_parties(b)
    assert sw.scenario == Scenario((2, 2, 2), (3, 2))
    assert swap_parties(sw) == b


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.permutations([0, 1]), st.permutations([0, 1]), st.booleans())
def test_relabel_permutation_matches_relabel(seed, ia, ib, flip):
    b = random_ns_behavior(random.Random(seed))
    oa = [[1, 0] if flip else [0, 1], [0, 1]]
    direct = relabel(b, ia, ib, oa, None)
    perm = relabel_permutation(b.scenario, ia, ib, oa, None)
    assert permute_behavior(b, perm) == direct
    assert is_no_signalling(direct).ok


def test_from_floats_renormalizes():
    s = Scenario.uniform(2, 2)
    b = Behavior.from_floats(s, [0.25 + 1e-12] * s.size)
    assert validate_behavior(b).valid
