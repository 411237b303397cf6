"""Deterministic strategies of the causal models and their strategy matrices.

Every model is described by a list of response-table fields, ordered
Alice's entries first, then the message function, then Bob's entries,
each group sorted by key. A strategy label is the mixed-radix number whose
digits are the table entries in that order, first field most significant,
so labels enumerate in the same order as ``itertools.product``.

Table keys per model (direction 'ab' means the arrow points from Alice to Bob):

========  =========  =================  ===========
kind      direction  Alice keys         Bob keys
========  =========  =================  ===========
lhv       --         x                  y
cpd       ab         x                  (x, y)
cpd       ba         (x, y)             y
cpd2      --         (x, y)             (x, y)
cod       ab         x                  (a, y)
cod       ba         (b, x)             y
mcpd      ab         x  (+ message x)   (m, y)
mcpd      ba         (m, x)             y  (+ message y)
========  =========  =================  ===========

``cod_mix`` is the union of the two one-way COD strategy sets; its labels
run over the 'ab' strategies first and continue with the 'ba' ones.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .scenario import Behavior, Scenario

__all__ = [
    "ModelKind",
    "ModelSpec",
    "DeterministicStrategy",
    "StrategyMatrix",
    "BudgetExceeded",
    "ModelDomainError",
    "strategy_count",
    "enumerate_strategies",
    "decode_strategy",
    "encode_strategy",
    "build_strategy_matrix",
    "bits_required",
    "default_budget",
    "set_default_budget",
    "export_sparse",
]

_DEFAULT_BUDGET = int(os.environ.get("BELLCOMM_BUDGET", 2_000_000))
_CHUNK = 1 << 17


def default_budget() -> int:
    return _DEFAULT_BUDGET


def set_default_budget(n: int) -> None:
    global _DEFAULT_BUDGET
    _DEFAULT_BUDGET = int(n)


class BudgetExceeded(RuntimeError):
    """Enumeration refused because it would exceed the configured size budget."""


class ModelDomainError(ValueError):
    """Operation not defined for this model or strategy."""


class ModelKind(str, Enum):
    LHV = "lhv"
    CPD = "cpd"
    CPD_TWO_WAY = "cpd2"
    COD = "cod"
    COD_MIX = "cod_mix"
    MCPD = "mcpd"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    scenario: Scenario
    direction: str = "ab"
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.direction not in ("ab", "ba"):
            raise ValueError("direction must be 'ab' or 'ba'")
        if self.kind is ModelKind.MCPD and self.d < 1:
            raise ValueError("message dimension must be at least 1")
        if self.kind in (ModelKind.LHV, ModelKind.CPD_TWO_WAY, ModelKind.COD_MIX):
            object.__setattr__(self, "direction", "ab")
        if self.kind is not ModelKind.MCPD:
            object.__setattr__(self, "d", 1)

    @classmethod
    def lhv(cls, s):
        return cls(ModelKind.LHV, s)

    @classmethod
    def cpd(cls, s, direction="ab"):
        return cls(ModelKind.CPD, s, direction)

    @classmethod
    def cpd_two_way(cls, s):
        return cls(ModelKind.CPD_TWO_WAY, s)

    @classmethod
    def cod(cls, s, direction="ab"):
        return cls(ModelKind.COD, s, direction)

    @classmethod
    def cod_mix(cls, s):
        return cls(ModelKind.COD_MIX, s)

    @classmethod
    def mcpd(cls, s, d, direction="ab"):
        return cls(ModelKind.MCPD, s, direction, d)

    def __str__(self) -> str:
        if self.kind in (ModelKind.LHV, ModelKind.CPD_TWO_WAY, ModelKind.COD_MIX):
            return f"{self.kind.value}{self.scenario}"
        extra = f",d={self.d}" if self.kind is ModelKind.MCPD else ""
        return f"{self.kind.value}({self.direction}{extra}){self.scenario}"

    @property
    def components(self) -> tuple["ModelSpec", ...]:
        if self.kind is ModelKind.COD_MIX:
            return (ModelSpec.cod(self.scenario, "ab"), ModelSpec.cod(self.scenario, "ba"))
        return (self,)

    @property
    def has_cross_arrow(self) -> bool:
        return not (self.kind is ModelKind.LHV or (self.kind is ModelKind.MCPD and self.d == 1))


@dataclass(frozen=True)
class _Field:
    party: str  # "alice", "message" or "bob"
    key: object
    radix: int


def _layout(m: ModelSpec) -> tuple[_Field, ...]:
    if m.kind is ModelKind.COD_MIX:
        raise ModelDomainError("a convex mixture has no single table layout")
    s = m.scenario
    oa, ob = s.outputs_a, s.outputs_b
    xs, ys = range(s.n_a), range(s.n_b)
    xy = [(x, y) for x in xs for y in ys]
    k, dirn = m.kind, m.direction
    alice: list[_Field]
    bob: list[_Field]
    msg: list[_Field] = []
    if k is ModelKind.LHV:
        alice = [_Field("alice", x, oa[x]) for x in xs]
        bob = [_Field("bob", y, ob[y]) for y in ys]
    elif k is ModelKind.CPD_TWO_WAY:
        alice = [_Field("alice", (x, y), oa[x]) for x, y in xy]
        bob = [_Field("bob", (x, y), ob[y]) for x, y in xy]
    elif k is ModelKind.CPD and dirn == "ab":
        alice = [_Field("alice", x, oa[x]) for x in xs]
        bob = [_Field("bob", (x, y), ob[y]) for x, y in xy]
    elif k is ModelKind.CPD:
        alice = [_Field("alice", (x, y), oa[x]) for x, y in xy]
        bob = [_Field("bob", y, ob[y]) for y in ys]
    elif k is ModelKind.COD and dirn == "ab":
        alice = [_Field("alice", x, oa[x]) for x in xs]
        bob = [_Field("bob", (a, y), ob[y]) for a in range(s.max_out_a) for y in ys]
    elif k is ModelKind.COD:
        alice = [_Field("alice", (b, x), oa[x]) for b in range(s.max_out_b) for x in xs]
        bob = [_Field("bob", y, ob[y]) for y in ys]
    elif k is ModelKind.MCPD and dirn == "ab":
        alice = [_Field("alice", x, oa[x]) for x in xs]
        msg = [_Field("message", x, m.d) for x in xs]
        bob = [_Field("bob", (mm, y), ob[y]) for mm in range(m.d) for y in ys]
    else:
        alice = [_Field("alice", (mm, x), oa[x]) for mm in range(m.d) for x in xs]
        msg = [_Field("message", y, m.d) for y in ys]
        bob = [_Field("bob", y, ob[y]) for y in ys]
    return tuple(alice + msg + bob)


def strategy_count(m: ModelSpec) -> int:
    """Number of deterministic strategies (before any deduplication)."""
    if m.kind is ModelKind.COD_MIX:
        return sum(strategy_count(c) for c in m.components)
    return math.prod(f.radix for f in _layout(m))


def _check_budget(m: ModelSpec, budget: int | None) -> int:
    budget = _DEFAULT_BUDGET if budget is None else budget
    n = strategy_count(m)
    if n > budget:
        raise BudgetExceeded(f"{m} has {n:,} deterministic strategies, above the budget of {budget:,}")
    return n


@dataclass(frozen=True, eq=False)
class DeterministicStrategy:
    """Explicit response tables of one deterministic strategy."""

    model: ModelSpec
    label: int
    alice: dict
    bob: dict
    message: dict | None = None
    component: ModelSpec | None = None

    @property
    def kind_spec(self) -> ModelSpec:
        return self.component or self.model

    def outcome(self, x: int, y: int) -> tuple[int, int]:
        m = self.kind_spec
        k, dirn = m.kind, m.direction
        if k is ModelKind.LHV:
            return self.alice[x], self.bob[y]
        if k is ModelKind.CPD_TWO_WAY:
            return self.alice[x, y], self.bob[x, y]
        if k is ModelKind.CPD:
            if dirn == "ab":
                return self.alice[x], self.bob[x, y]
            return self.alice[x, y], self.bob[y]
        if k is ModelKind.COD:
            if dirn == "ab":
                a = self.alice[x]
                return a, self.bob[a, y]
            b = self.bob[y]
            return self.alice[b, x], b
        if dirn == "ab":
            mm = self.message[x]
            return self.alice[x], self.bob[mm, y]
        mm = self.message[y]
        return self.alice[mm, x], self.bob[y]

    def behavior(self) -> Behavior:
        s = self.model.scenario
        table = {xy: self.outcome(*xy) for xy in s.blocks}
        return Behavior.from_function(s, lambda x, y, a, b: int(table[x, y] == (a, b)))

    def __eq__(self, other):
        return (
            isinstance(other, DeterministicStrategy)
            and self.model == other.model
            and self.label == other.label
        )

    def __hash__(self):
        return hash((self.model, self.label))


def _digits_of(label: int, radices) -> list[int]:
    out = []
    for r in reversed(radices):
        label, dgt = divmod(label, r)
        out.append(dgt)
    if label:
        raise ValueError("label out of range")
    return out[::-1]


def decode_strategy(m: ModelSpec, label: int) -> DeterministicStrategy:
    """Rebuild a strategy's tables from its label."""
    if m.kind is ModelKind.COD_MIX:
        ab, ba = m.components
        n_ab = strategy_count(ab)
        comp, local = (ab, label) if label < n_ab else (ba, label - n_ab)
        inner = decode_strategy(comp, local)
        return DeterministicStrategy(m, label, inner.alice, inner.bob, None, comp)
    fields = _layout(m)
    digits = _digits_of(label, [f.radix for f in fields])
    tables: dict[str, dict] = {"alice": {}, "bob": {}, "message": {}}
    for f, dgt in zip(fields, digits):
        tables[f.party][f.key] = dgt
    return DeterministicStrategy(
        m, label, tables["alice"], tables["bob"], tables["message"] if m.kind is ModelKind.MCPD else None
    )


def encode_strategy(m: ModelSpec, alice: dict, bob: dict, message: dict | None = None, component=None) -> DeterministicStrategy:
    """Inverse of :func:`decode_strategy`: tables in, labelled strategy out.

    Table entries the layout does not mention are ignored; missing ones
    default to 0.
    """
    if m.kind is ModelKind.COD_MIX:
        if component is None or component not in m.components:
            raise ModelDomainError("a mixture strategy needs its component model")
        inner = encode_strategy(component, alice, bob)
        offset = 0 if component.direction == "ab" else strategy_count(m.components[0])
        return DeterministicStrategy(m, inner.label + offset, inner.alice, inner.bob, None, component)
    tables = {"alice": alice, "bob": bob, "message": message or {}}
    label = 0
    for f in _layout(m):
        dgt = int(tables[f.party].get(f.key, 0))
        if not 0 <= dgt < f.radix:
            raise ValueError(f"{f.party} entry {f.key} = {dgt} out of range")
        label = label * f.radix + dgt
    return decode_strategy(m, label)


def enumerate_strategies(m: ModelSpec, budget: int | None = None) -> list[DeterministicStrategy]:
    """All deterministic strategies in label order; refuses above the budget."""
    n = _check_budget(m, budget)
    return [decode_strategy(m, lab) for lab in range(n)]


# ---------------------------------------------------------------------------
# vectorized evaluation


def _label_digits(radices, labels: np.ndarray) -> np.ndarray:
    """Mixed-radix digits (N x F) of the given labels."""
    if not radices:
        return np.zeros((len(labels), 0), dtype=np.int64)
    return np.stack(np.unravel_index(labels, tuple(radices)), axis=1).astype(np.int64)


def _eval_outcomes(m: ModelSpec, digits: np.ndarray) -> np.ndarray:
    """Block-local outcome index a * o^B_y + b for every strategy row and block."""
    fields = _layout(m)
    s = m.scenario
    col = {(f.party, f.key): i for i, f in enumerate(fields)}
    n = digits.shape[0]
    rows = np.arange(n)
    k, dirn = m.kind, m.direction
    out = np.empty((n, len(s.blocks)), dtype=np.int32)

    def lookup(party, keys_by_value, values):
        # digits[r, col[party, keys_by_value[values[r]]]]
        table = np.array([col[party, kk] for kk in keys_by_value])
        return digits[rows, table[values]]

    for j, (x, y) in enumerate(s.blocks):
        if k is ModelKind.LHV:
            a, b = digits[:, col["alice", x]], digits[:, col["bob", y]]
        elif k is ModelKind.CPD_TWO_WAY:
            a, b = digits[:, col["alice", (x, y)]], digits[:, col["bob", (x, y)]]
        elif k is ModelKind.CPD and dirn == "ab":
            a, b = digits[:, col["alice", x]], digits[:, col["bob", (x, y)]]
        elif k is ModelKind.CPD:
            a, b = digits[:, col["alice", (x, y)]], digits[:, col["bob", y]]
        elif k is ModelKind.COD and dirn == "ab":
            a = digits[:, col["alice", x]]
            b = lookup("bob", [(aa, y) for aa in range(s.max_out_a)], a)
        elif k is ModelKind.COD:
            b = digits[:, col["bob", y]]
            a = lookup("alice", [(bb, x) for bb in range(s.max_out_b)], b)
        elif dirn == "ab":
            a = digits[:, col["alice", x]]
            mm = digits[:, col["message", x]]
            b = lookup("bob", [(q, y) for q in range(m.d)], mm)
        else:
            b = digits[:, col["bob", y]]
            mm = digits[:, col["message", y]]
            a = lookup("alice", [(q, x) for q in range(m.d)], mm)
        out[:, j] = a * s.outputs_b[y] + b
    return out


def strategy_arrays(m: ModelSpec, budget: int | None = None):
    """(labels, digits, outcomes) for every strategy of a one-way or local model, in label order."""
    if m.kind is ModelKind.COD_MIX:
        raise ModelDomainError("enumerate the components of a mixture separately")
    n = _check_budget(m, budget)
    radices = [f.radix for f in _layout(m)]
    labels = np.arange(n, dtype=np.int64)
    chunks_d, chunks_o = [], []
    for start in range(0, n, _CHUNK):
        dg = _label_digits(radices, labels[start:start + _CHUNK])
        chunks_d.append(dg.astype(np.int16))
        chunks_o.append(_eval_outcomes(m, dg))
    return labels, np.concatenate(chunks_d), np.concatenate(chunks_o)


@dataclass(frozen=True, eq=False)
class StrategyMatrix:
    """0/1 matrix T whose columns are the behaviors of deterministic strategies.

    ``outcomes[j, k]`` is the local outcome index of column j in block k,
    ``labels[j]`` a representative strategy label, and ``column_of[l]`` the
    column reproducing strategy label l.
    """

    model: ModelSpec
    outcomes: np.ndarray
    labels: np.ndarray
    column_of: np.ndarray

    @property
    def scenario(self) -> Scenario:
        return self.model.scenario

    @property
    def shape(self) -> tuple[int, int]:
        return self.scenario.size, self.outcomes.shape[0]

    @cached_property
    def row_index(self) -> np.ndarray:
        """(ncols x nblocks) global row of the unit entry of each column in each block."""
        s = self.scenario
        offs = np.array([s.offset(x, y) for x, y in s.blocks], dtype=np.int64)
        return self.outcomes.astype(np.int64) + offs

    def to_sparse(self) -> sp.csc_matrix:
        ncols, nb = self.outcomes.shape
        rows = self.row_index.ravel()
        cols = np.repeat(np.arange(ncols), nb)
        data = np.ones(rows.size, dtype=np.int64)
        return sp.csc_matrix((data, (rows, cols)), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray().astype(np.int8)

    def column(self, j: int) -> Behavior:
        vec = [0] * self.scenario.size
        for r in self.row_index[j]:
            vec[r] = 1
        return Behavior(self.scenario, tuple(vec))

    def strategy(self, j: int) -> DeterministicStrategy:
        return decode_strategy(self.model, int(self.labels[j]))


def build_strategy_matrix(m: ModelSpec, budget: int | None = None, dedup: bool = True) -> StrategyMatrix:
    """Strategy matrix of a model; identical columns are merged when ``dedup``."""
    outs, labs = [], []
    offset = 0
    for comp in m.components:
        labels, _, outcomes = strategy_arrays(comp, budget)
        outs.append(outcomes)
        labs.append(labels + offset)
        offset += len(labels)
    outcomes = np.concatenate(outs)
    labels = np.concatenate(labs)
    if not dedup:
        return StrategyMatrix(m, outcomes, labels, np.arange(len(labels)))
    uniq, first, inverse = np.unique(outcomes, axis=0, return_index=True, return_inverse=True)
    # keep columns ordered by first occurrence so column order follows label order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return StrategyMatrix(m, uniq[order], labels[first[order]], rank[inverse.ravel()])


def bits_required(s: DeterministicStrategy):
    """Message cost of an MCPD strategy: log2 of the number of distinct message values used.

    Returned as an exact Fraction when that number is a power of two,
    otherwise as a float.
    """
    if s.kind_spec.kind is not ModelKind.MCPD:
        raise ModelDomainError("only message (MCPD) strategies have a message cost")
    k = len(set(s.message.values()))
    if k & (k - 1) == 0:
        return Fraction(k.bit_length() - 1)
    return math.log2(k)


def export_sparse(t: StrategyMatrix, path, labels_path=None) -> None:
    """Write T as 'row col value' lines, plus an optional column-label sidecar."""
    rows, ncols = t.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {t.model} rows={rows} cols={ncols}\n")
        for j in range(ncols):
            for r in sorted(t.row_index[j]):
                fh.write(f"{r} {j} 1\n")
    if labels_path is not None:
        with open(labels_path, "w", encoding="utf-8") as fh:
            for j, lab in enumerate(t.labels):
                fh.write(f"{j} {int(lab)}\n")
