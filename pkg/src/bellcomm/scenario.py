"""Bell scenarios, behaviors and the named distribution families.

A behavior p(a,b|x,y) is stored as a flat tuple of exact fractions indexed
by (x, y, a, b) in lexicographic order, x slowest. Every other module in
the package relies on this convention.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from numbers import Rational

import numpy as np

__all__ = [
    "Scenario",
    "Behavior",
    "ShapeError",
    "BehaviorFormatError",
    "ValidityReport",
    "NoSignallingReport",
    "validate_behavior",
    "is_no_signalling",
    "make_pr_box",
    "make_I3322_pr",
    "uniform_behavior",
    "deterministic_behavior",
    "mix",
    "relabel",
    "swap_parties",
    "relabel_permutation",
    "permute_behavior",
    "to_fraction",
    "format_behavior",
    "parse_behavior",
    "read_behavior",
    "write_behavior",
]


class ShapeError(ValueError):
    """Behavior vector does not match its scenario."""


class BehaviorFormatError(ValueError):
    """Malformed behavior file."""


def to_fraction(value) -> Fraction:
    """Convert ints, fractions and 'p/q' strings to Fraction; floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if hasattr(value, "p") and hasattr(value, "q"):  # flint.fmpq, gmpy2.mpq
        return Fraction(int(value.p), int(value.q))
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {value!r} ({type(value).__name__}) to an exact fraction")


_SCENARIO_RE = re.compile(r"^\s*\[\s*\(([^()]*)\)\s*\(([^()]*)\)\s*\]\s*$")


def _parse_cardinalities(group: str) -> tuple[int, ...]:
    group = group.strip()
    if not group:
        raise ValueError("empty output list")
    if re.search(r"[,\s]", group):
        parts = [p for p in re.split(r"[,\s]+", group) if p]
    else:
        # compact form "(333)": one digit per input
        parts = list(group)
    return tuple(int(p) for p in parts)


@dataclass(frozen=True)
class Scenario:
    """Output cardinalities per input for Alice and Bob."""

    outputs_a: tuple[int, ...]
    outputs_b: tuple[int, ...]

    def __post_init__(self):
        oa = tuple(int(o) for o in self.outputs_a)
        ob = tuple(int(o) for o in self.outputs_b)
        if not oa or not ob:
            raise ValueError("each party needs at least one input")
        if min(oa) < 1 or min(ob) < 1:
            raise ValueError("output cardinalities must be positive")
        object.__setattr__(self, "outputs_a", oa)
        object.__setattr__(self, "outputs_b", ob)

    @classmethod
    def uniform(cls, n_a: int, o_a: int, n_b: int | None = None, o_b: int | None = None) -> "Scenario":
        n_b = n_a if n_b is None else n_b
        o_b = o_a if o_b is None else o_b
        return cls((o_a,) * n_a, (o_b,) * n_b)

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        """Parse "[(2,2)(2,2)]", "[(2 2)(3 3 3)]" or the compact "[(333)(32)]"."""
        m = _SCENARIO_RE.match(text)
        if not m:
            raise ValueError(f"not a scenario: {text!r}")
        return cls(_parse_cardinalities(m.group(1)), _parse_cardinalities(m.group(2)))

    def __str__(self) -> str:
        a = ",".join(map(str, self.outputs_a))
        b = ",".join(map(str, self.outputs_b))
        return f"[({a})({b})]"

    @property
    def n_a(self) -> int:
        return len(self.outputs_a)

    @property
    def n_b(self) -> int:
        return len(self.outputs_b)

    @property
    def max_out_a(self) -> int:
        return max(self.outputs_a)

    @property
    def max_out_b(self) -> int:
        return max(self.outputs_b)

    @property
    def is_binary(self) -> bool:
        return all(o == 2 for o in self.outputs_a + self.outputs_b)

    @cached_property
    def blocks(self) -> tuple[tuple[int, int], ...]:
        return tuple(product(range(self.n_a), range(self.n_b)))

    @cached_property
    def _offsets(self) -> dict[tuple[int, int], int]:
        offsets, pos = {}, 0
        for x, y in self.blocks:
            offsets[x, y] = pos
            pos += self.outputs_a[x] * self.outputs_b[y]
        return offsets

    @cached_property
    def size(self) -> int:
        return sum(self.outputs_a[x] * self.outputs_b[y] for x, y in self.blocks)

    def offset(self, x: int, y: int) -> int:
        return self._offsets[x, y]

    def block_size(self, x: int, y: int) -> int:
        return self.outputs_a[x] * self.outputs_b[y]

    def block_slice(self, x: int, y: int) -> slice:
        start = self._offsets[x, y]
        return slice(start, start + self.block_size(x, y))

    def index(self, x: int, y: int, a: int, b: int) -> int:
        if not (0 <= a < self.outputs_a[x] and 0 <= b < self.outputs_b[y]):
            raise IndexError(f"outcome ({a},{b}) out of range for inputs ({x},{y})")
        return self._offsets[x, y] + a * self.outputs_b[y] + b

    @cached_property
    def coords(self) -> tuple[tuple[int, int, int, int], ...]:
        """All (x, y, a, b) in vector order."""
        return tuple(
            (x, y, a, b)
            for x, y in self.blocks
            for a in range(self.outputs_a[x])
            for b in range(self.outputs_b[y])
        )

    def swapped(self) -> "Scenario":
        return Scenario(self.outputs_b, self.outputs_a)

    @cached_property
    def swap_permutation(self) -> np.ndarray:
        """perm[i] = index in the swapped scenario of coordinate i."""
        sw = self.swapped()
        return np.array([sw.index(y, x, b, a) for x, y, a, b in self.coords], dtype=np.int64)


@dataclass(frozen=True)
class Behavior:
    """Conditional distribution p(a,b|x,y) with exact rational entries."""

    scenario: Scenario
    probs: tuple[Fraction, ...] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(to_fraction(p) for p in self.probs))

    @classmethod
    def from_function(cls, scenario: Scenario, fn) -> "Behavior":
        """Build from fn(x, y, a, b) -> probability."""
        return cls(scenario, tuple(fn(*c) for c in scenario.coords))

    @classmethod
    def from_floats(cls, scenario: Scenario, values, max_denominator: int = 10**9) -> "Behavior":
        """Round floating probabilities to fractions and renormalize every block exactly.

        Each entry is replaced by its best rational approximation with
        denominator at most ``max_denominator``; the rounding residue of a
        block is then absorbed by its largest entry.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (scenario.size,):
            raise ShapeError(f"expected {scenario.size} entries, got {values.shape}")
        out = [Fraction(0)] * scenario.size
        for x, y in scenario.blocks:
            sl = scenario.block_slice(x, y)
            block = [Fraction(max(v, 0.0)).limit_denominator(max_denominator) for v in values[sl]]
            residue = 1 - sum(block)
            k = max(range(len(block)), key=lambda i: block[i])
            block[k] += residue
            if block[k] < 0:
                raise ValueError("block too far from normalized to renormalize")
            out[sl] = block
        return cls(scenario, tuple(out))

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, key) -> Fraction:
        x, y, a, b = key
        return self.probs[self.scenario.index(x, y, a, b)]

    def block(self, x: int, y: int) -> tuple[Fraction, ...]:
        return self.probs[self.scenario.block_slice(x, y)]

    def marginal_a(self, x: int, a: int, y: int = 0) -> Fraction:
        ob = self.scenario.outputs_b[y]
        return sum((self[x, y, a, b] for b in range(ob)), Fraction(0))

    def marginal_b(self, y: int, b: int, x: int = 0) -> Fraction:
        oa = self.scenario.outputs_a[x]
        return sum((self[x, y, a, b] for a in range(oa)), Fraction(0))

    def correlator(self, x: int, y: int) -> Fraction:
        """<A_x B_y> = sum_{a,b} (-1)^(a+b) p(a,b|x,y); binary outputs only."""
        s = self.scenario
        if s.outputs_a[x] != 2 or s.outputs_b[y] != 2:
            raise ValueError(f"correlator needs binary outputs at inputs ({x},{y})")
        return self[x, y, 0, 0] - self[x, y, 0, 1] - self[x, y, 1, 0] + self[x, y, 1, 1]

    def correlators(self) -> list[list[Fraction]]:
        return [[self.correlator(x, y) for y in range(self.scenario.n_b)] for x in range(self.scenario.n_a)]

    def to_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def is_deterministic(self) -> bool:
        return all(p in (0, 1) for p in self.probs)


@dataclass
class ValidityReport:
    valid: bool
    block_sums: dict[tuple[int, int], Fraction]
    bad_blocks: list[tuple[int, int]]
    out_of_range: list[tuple[int, int, int, int]]

    def __bool__(self) -> bool:
        return self.valid


def validate_behavior(b: Behavior) -> ValidityReport:
    """Check entries lie in [0,1] and every (x,y) block sums to exactly 1.

    Raises ShapeError when the vector length does not match the scenario.
    """
    s = b.scenario
    if len(b.probs) != s.size:
        raise ShapeError(f"scenario {s} needs {s.size} entries, behavior has {len(b.probs)}")
    sums, bad = {}, []
    for x, y in s.blocks:
        tot = sum(b.block(x, y), Fraction(0))
        sums[x, y] = tot
        if tot != 1:
            bad.append((x, y))
    oob = [c for c, p in zip(s.coords, b.probs) if p < 0 or p > 1]
    return ValidityReport(not bad and not oob, sums, bad, oob)


def _require_valid(b: Behavior) -> None:
    rep = validate_behavior(b)
    if not rep.valid:
        raise ValueError(f"invalid behavior: unnormalized blocks {rep.bad_blocks}, out of range {rep.out_of_range}")


@dataclass
class NoSignallingReport:
    ok: bool
    violations: list[str]

    def __bool__(self) -> bool:
        return self.ok


def is_no_signalling(b: Behavior) -> NoSignallingReport:
    """Exact check that each party's marginal ignores the other party's input."""
    _require_valid(b)
    s = b.scenario
    violations = []
    for x in range(s.n_a):
        for a in range(s.outputs_a[x]):
            ref = b.marginal_a(x, a, 0)
            for y in range(1, s.n_b):
                val = b.marginal_a(x, a, y)
                if val != ref:
                    violations.append(f"p_A({a}|{x}) differs: y=0 gives {ref}, y={y} gives {val}")
    for y in range(s.n_b):
        for bb in range(s.outputs_b[y]):
            ref = b.marginal_b(y, bb, 0)
            for x in range(1, s.n_a):
                val = b.marginal_b(y, bb, x)
                if val != ref:
                    violations.append(f"p_B({bb}|{y}) differs: x=0 gives {ref}, x={x} gives {val}")
    return NoSignallingReport(not violations, violations)


def make_pr_box() -> Behavior:
    """PR box on [(2,2)(2,2)]: a xor b = x*y, each consistent pair with weight 1/2."""
    half = Fraction(1, 2)
    return Behavior.from_function(
        Scenario((2, 2), (2, 2)), lambda x, y, a, b: half if (a ^ b) == x * y else 0
    )


def make_I3322_pr(v) -> Behavior:
    """v * p_PR + (1 - v) * p_W on [(2,2,2)(2,2,2)].

    p_PR anti-correlates the outputs when x + y = 3 and correlates them
    otherwise; p_W is uniform noise.
    """
    v = to_fraction(v)
    if not 0 <= v <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    half, quarter = Fraction(1, 2), Fraction(1, 4)

    def p(x, y, a, b):
        want = 1 if x + y == 3 else 0
        pr = half if (a + b) % 2 == want else 0
        return v * pr + (1 - v) * quarter

    return Behavior.from_function(Scenario((2, 2, 2), (2, 2, 2)), p)


def uniform_behavior(s: Scenario) -> Behavior:
    """p(a,b|x,y) = 1/(o^A_x o^B_y)."""
    return Behavior.from_function(s, lambda x, y, a, b: Fraction(1, s.outputs_a[x] * s.outputs_b[y]))


def deterministic_behavior(s: Scenario, fa, fb) -> Behavior:
    """Local deterministic point with a = fa[x], b = fb[y]."""
    return Behavior.from_function(s, lambda x, y, a, b: int(a == fa[x] and b == fb[y]))


def mix(b1: Behavior, b2: Behavior, w) -> Behavior:
    """(1 - w) * b1 + w * b2."""
    if b1.scenario != b2.scenario:
        raise ValueError("behaviors live in different scenarios")
    w = to_fraction(w)
    if not 0 <= w <= 1:
        raise ValueError("mixing weight must lie in [0, 1]")
    return Behavior(b1.scenario, tuple((1 - w) * p + w * q for p, q in zip(b1.probs, b2.probs)))


def relabel(
    b: Behavior,
    inputs_a=None,
    inputs_b=None,
    outputs_a=None,
    outputs_b=None,
) -> Behavior:
    """Apply a local relabeling.

    ``inputs_a[x]`` is the new label of Alice's input x; ``outputs_a[x][a]``
    is the new label of output a at (old) input x. Bob's arguments work the
    same way. The result is q(a',b'|x',y') = p(a,b|x,y).
    """
    s = b.scenario
    ia = list(inputs_a) if inputs_a is not None else list(range(s.n_a))
    ib = list(inputs_b) if inputs_b is not None else list(range(s.n_b))
    oa = [list(outputs_a[x]) if outputs_a is not None else list(range(s.outputs_a[x])) for x in range(s.n_a)]
    ob = [list(outputs_b[y]) if outputs_b is not None else list(range(s.outputs_b[y])) for y in range(s.n_b)]
    if sorted(ia) != list(range(s.n_a)) or sorted(ib) != list(range(s.n_b)):
        raise ValueError("input relabelings must be permutations")
    for x in range(s.n_a):
        if sorted(oa[x]) != list(range(s.outputs_a[x])):
            raise ValueError(f"output relabeling for Alice's input {x} is not a permutation")
    for y in range(s.n_b):
        if sorted(ob[y]) != list(range(s.outputs_b[y])):
            raise ValueError(f"output relabeling for Bob's input {y} is not a permutation")
    new_oa = [0] * s.n_a
    new_ob = [0] * s.n_b
    for x in range(s.n_a):
        new_oa[ia[x]] = s.outputs_a[x]
    for y in range(s.n_b):
        new_ob[ib[y]] = s.outputs_b[y]
    ns = Scenario(tuple(new_oa), tuple(new_ob))
    out = [Fraction(0)] * ns.size
    for (x, y, a, bb), p in zip(s.coords, b.probs):
        out[ns.index(ia[x], ib[y], oa[x][a], ob[y][bb])] = p
    return Behavior(ns, tuple(out))


def swap_parties(b: Behavior) -> Behavior:
    """Exchange the roles of Alice and Bob."""
    sw = b.scenario.swapped()
    out = [Fraction(0)] * sw.size
    for i, j in enumerate(b.scenario.swap_permutation):
        out[j] = b.probs[i]
    return Behavior(sw, tuple(out))


def relabel_permutation(s: Scenario, inputs_a=None, inputs_b=None, outputs_a=None, outputs_b=None) -> np.ndarray:
    """Coordinate form of :func:`relabel`: ``perm[i]`` is the new index of coordinate i.

    Only relabelings mapping the scenario onto itself have a coordinate form.
    """
    probe = Behavior(s, tuple(Fraction(0) for _ in range(s.size)))
    ia = list(inputs_a) if inputs_a is not None else list(range(s.n_a))
    ib = list(inputs_b) if inputs_b is not None else list(range(s.n_b))
    # validation is shared with relabel()
    target = relabel(probe, inputs_a, inputs_b, outputs_a, outputs_b).scenario
    if target != s:
        raise ValueError("relabeling changes the scenario")
    oa = [list(outputs_a[x]) if outputs_a is not None else list(range(s.outputs_a[x])) for x in range(s.n_a)]
    ob = [list(outputs_b[y]) if outputs_b is not None else list(range(s.outputs_b[y])) for y in range(s.n_b)]
    return np.array([s.index(ia[x], ib[y], oa[x][a], ob[y][b]) for x, y, a, b in s.coords], dtype=np.int64)


def permute_behavior(b: Behavior, perm) -> Behavior:
    """Move coordinate i of b to position perm[i]."""
    out = [Fraction(0)] * len(b.probs)
    for i, j in enumerate(perm):
        out[int(j)] = b.probs[i]
    return Behavior(b.scenario, tuple(out))


# ---------------------------------------------------------------------------
# Text format: "scenario: [(..)(..)]" then "x y a b p/q" per nonzero entry.


def format_behavior(b: Behavior) -> str:
    lines = [f"scenario: {b.scenario}"]
    for (x, y, a, bb), p in zip(b.scenario.coords, b.probs):
        if p != 0:
            lines.append(f"{x} {y} {a} {bb} {p.numerator}/{p.denominator}")
    return "\n".join(lines) + "\n"


def parse_behavior(text: str) -> Behavior:
    scenario = None
    entries: dict[int, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if scenario is None:
            if not line.lower().startswith("scenario:"):
                raise BehaviorFormatError(f"line {lineno}: expected 'scenario: [(..)(..)]' header")
            try:
                scenario = Scenario.parse(line.split(":", 1)[1])
            except ValueError as exc:
                raise BehaviorFormatError(f"line {lineno}: {exc}") from None
            continue
        parts = line.split()
        if len(parts) != 5:
            raise BehaviorFormatError(f"line {lineno}: expected 'x y a b p/q', got {raw!r}")
        try:
            x, y, a, bb = (int(t) for t in parts[:4])
            idx = scenario.index(x, y, a, bb)
            p = Fraction(parts[4])
        except (ValueError, IndexError, KeyError, ZeroDivisionError) as exc:
            raise BehaviorFormatError(f"line {lineno}: {exc}") from None
        if idx in entries:
            raise BehaviorFormatError(f"line {lineno}: duplicate entry for ({x},{y},{a},{bb})")
        entries[idx] = p
    if scenario is None:
        raise BehaviorFormatError("missing scenario header")
    return Behavior(scenario, tuple(entries.get(i, Fraction(0)) for i in range(scenario.size)))


def read_behavior(path) -> Behavior:
    with open(path, encoding="utf-8") as fh:
        return parse_behavior(fh.read())


def write_behavior(b: Behavior, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_behavior(b))
