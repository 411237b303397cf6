import random
from fractions import Fraction

import pytest

from bellcomm.polytope import ns_vertices
from bellcomm.scenario import Behavior, Scenario

_ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    """Register one part of an acceptance criterion; parts sharing a name print as one line."""
    _ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


@pytest.fixture
def acceptance():
    return record


def _criterion_key(name: str):
    head = name.split()[0]
    return (int(head), name) if head.isdigit() else (10**9, name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=_criterion_key):
        parts = _ACCEPTANCE[name]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts if d)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


S22 = Scenario.uniform(2, 2)


def random_ns_behavior(rng: random.Random, s: Scenario = S22, max_den: int = 12) -> Behavior:
    """Random rational mixture of NS vertices, biased so that about half are nonlocal."""
    verts = ns_vertices(s).vertices
    nonlocal_ = [v for v in verts if not v.is_deterministic()]
    local = [v for v in verts if v.is_deterministic()]
    picks = rng.sample(local, 3)
    if nonlocal_:
        picks.append(rng.choice(nonlocal_))
    w = [Fraction(rng.randint(1, max_den)) for _ in picks]
    if nonlocal_:
        w[-1] *= rng.choice([0, 1, 2, 4])
    tot = sum(w)
    probs = [sum((wi * v.probs[i] for wi, v in zip(w, picks)), Fraction(0)) / tot for i in range(s.size)]
    return Behavior(s, tuple(probs))
