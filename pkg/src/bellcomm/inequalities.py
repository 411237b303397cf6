"""Bell functionals, their catalog, and bounds over causal-model strategy sets.

A functional is stored over behavior coordinates. Marginal terms such as
p_A(0|0) are kept apart and expanded at a reference input of the other
party when the functional is evaluated; that expansion is only meaningful
for no-signalling behaviors, so evaluation refuses signalling input unless
a reference is given explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from .lp import LinearProgram, solve
from .models import (
    DeterministicStrategy,
    ModelKind,
    ModelSpec,
    build_strategy_matrix,
    encode_strategy,
)
from .scenario import Behavior, Scenario, is_no_signalling, to_fraction

__all__ = [
    "LinearFunctional",
    "BoundResult",
    "evaluate",
    "model_bound",
    "model_bound_exhaustive",
    "ns_max",
    "relabel_functional",
    "swap_functional",
    "from_correlators",
    "make_chained",
    "make_Mnd",
    "staircase_matrix",
    "mnd_formula",
    "catalog",
    "relabeled_forms",
    "max_over_forms",
    "get_functional",
    "format_functional",
]


@dataclass(frozen=True)
class LinearFunctional:
    """sum_i c_i p_i + sum marginal terms, compared to ``bound`` with ``sense``.

    ``marginals_a`` holds (x, a, coef) for p_A(a|x); ``marginals_b`` holds
    (y, b, coef) for p_B(b|y). ``correlators`` (x, y) -> M_xy is kept when the
    functional was defined as sum M_xy <A_x B_y>; then
    value = corr_offset + corr_scale * sum M_xy <A_x B_y> on normalized behaviors.
    """

    name: str
    scenario: Scenario
    coefficients: tuple
    bound: Fraction
    sense: str = "<="
    bound_model: str = "LHV"
    marginals_a: tuple = ()
    marginals_b: tuple = ()
    correlators: dict | None = field(default=None, compare=False)
    corr_offset: Fraction = Fraction(0)
    corr_scale: Fraction = Fraction(1)
    normalization: Fraction = Fraction(1)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(to_fraction(c) for c in self.coefficients))
        object.__setattr__(self, "bound", to_fraction(self.bound))
        if len(self.coefficients) != self.scenario.size:
            raise ValueError("coefficient vector does not match the scenario")
        if self.sense not in ("<=", ">="):
            raise ValueError("sense must be '<=' or '>='")

    @property
    def uses_marginals(self) -> bool:
        return bool(self.marginals_a or self.marginals_b)

    def full_coefficients(self, reference=(0, 0)) -> tuple[Fraction, ...]:
        """Coordinates with marginals expanded at (y_ref for Alice, x_ref for Bob)."""
        s = self.scenario
        y_ref, x_ref = reference
        c = list(self.coefficients)
        for x, a, w in self.marginals_a:
            for b in range(s.outputs_b[y_ref]):
                c[s.index(x, y_ref, a, b)] += to_fraction(w)
        for y, b, w in self.marginals_b:
            for a in range(s.outputs_a[x_ref]):
                c[s.index(x_ref, y, a, b)] += to_fraction(w)
        return tuple(c)

    def integer_coefficients(self, reference=(0, 0)) -> tuple[np.ndarray, int]:
        c = self.full_coefficients(reference)
        den = 1
        for v in c:
            den = math.lcm(den, v.denominator)
        return np.array([int(v * den) for v in c], dtype=object), den

    def unnormalized_bound(self) -> Fraction:
        return self.bound / self.normalization

    def satisfied_by(self, value) -> bool:
        return value <= self.bound if self.sense == "<=" else value >= self.bound

    def correlator_value(self, b: Behavior):
        if self.correlators is None:
            raise ValueError(f"{self.name} has no correlator form")
        return sum((w * b.correlator(x, y) for (x, y), w in self.correlators.items() if w), Fraction(0))


def evaluate(f: LinearFunctional, b: Behavior, reference=None) -> Fraction:
    """Exact value of f on b."""
    if b.scenario != f.scenario:
        raise ValueError("functional and behavior live in different scenarios")
    if f.uses_marginals and reference is None:
        if not is_no_signalling(b).ok:
            raise ValueError(f"{f.name} uses marginal terms; give a reference input for signalling behaviors")
        reference = (0, 0)
    c = f.full_coefficients(reference or (0, 0))
    return sum((ci * pi for ci, pi in zip(c, b.probs) if ci and pi), Fraction(0))


def evaluate_float(f: LinearFunctional, probs, reference=(0, 0)) -> float:
    c = np.array([float(v) for v in f.full_coefficients(reference)])
    return float(c @ np.asarray(probs, dtype=float))


# ---------------------------------------------------------------------------
# construction helpers


def _coords_from_terms(s: Scenario, terms) -> list[Fraction]:
    c = [Fraction(0)] * s.size
    for (x, y, a, b), w in terms:
        c[s.index(x, y, a, b)] += to_fraction(w)
    return c


def from_correlators(name, s: Scenario, M, bound, bound_model="LHV", normalization=1, description="") -> LinearFunctional:
    """sum M[x][y] <A_x B_y> on a binary scenario."""
    if not s.is_binary:
        raise ValueError("correlator form needs binary outputs")
    norm = to_fraction(normalization)
    corr = {}
    c = [Fraction(0)] * s.size
    for x in range(s.n_a):
        for y in range(s.n_b):
            w = to_fraction(M[x][y]) * norm
            if w:
                corr[x, y] = w
                for a, b in product(range(2), range(2)):
                    c[s.index(x, y, a, b)] += w * (-1) ** (a + b)
    return LinearFunctional(
        name, s, tuple(c), to_fraction(bound), "<=", bound_model,
        correlators=corr, normalization=norm, description=description,
    )


def relabel_functional(f: LinearFunctional, inputs_a=None, inputs_b=None, outputs_a=None, outputs_b=None, name=None):
    """Image of f under a local relabeling, so that evaluate(g, relabel(b)) = evaluate(f, b)."""
    s = f.scenario
    ia = list(inputs_a) if inputs_a is not None else list(range(s.n_a))
    ib = list(inputs_b) if inputs_b is not None else list(range(s.n_b))
    oa = [list(outputs_a[x]) if outputs_a is not None else list(range(s.outputs_a[x])) for x in range(s.n_a)]
    ob = [list(outputs_b[y]) if outputs_b is not None else list(range(s.outputs_b[y])) for y in range(s.n_b)]
    new_oa = [0] * s.n_a
    new_ob = [0] * s.n_b
    for x in range(s.n_a):
        new_oa[ia[x]] = s.outputs_a[x]
    for y in range(s.n_b):
        new_ob[ib[y]] = s.outputs_b[y]
    ns = Scenario(tuple(new_oa), tuple(new_ob))
    c = [Fraction(0)] * ns.size
    for (x, y, a, b), w in zip(s.coords, f.coefficients):
        c[ns.index(ia[x], ib[y], oa[x][a], ob[y][b])] = w
    ma = tuple((ia[x], oa[x][a], w) for x, a, w in f.marginals_a)
    mb = tuple((ib[y], ob[y][b], w) for y, b, w in f.marginals_b)
    corr = None
    if f.correlators is not None and ns.is_binary:
        corr = {}
        for (x, y), w in f.correlators.items():
            sign = (1 if oa[x][0] == 0 else -1) * (1 if ob[y][0] == 0 else -1)
            corr[ia[x], ib[y]] = sign * w
    return replace(f, name=name or f.name + "'", scenario=ns, coefficients=tuple(c),
                   marginals_a=ma, marginals_b=mb, correlators=corr)


def swap_functional(f: LinearFunctional, name=None) -> LinearFunctional:
    s = f.scenario
    sw = s.swapped()
    c = [Fraction(0)] * sw.size
    for (x, y, a, b), w in zip(s.coords, f.coefficients):
        c[sw.index(y, x, b, a)] = w
    corr = None if f.correlators is None else {(y, x): w for (x, y), w in f.correlators.items()}
    return replace(
        f, name=name or f.name + "^T", scenario=sw, coefficients=tuple(c),
        marginals_a=tuple(f.marginals_b), marginals_b=tuple(f.marginals_a), correlators=corr,
    )


def format_functional(f: LinearFunctional, reference=(0, 0)) -> str:
    """Sparse coefficient table: header, then 'x y a b coef' per nonzero coefficient."""
    lines = [f"functional: {f.name}", f"scenario: {f.scenario}", f"bound: {f.sense} {f.bound} ({f.bound_model})"]
    for (x, y, a, b), w in zip(f.scenario.coords, f.full_coefficients(reference)):
        if w:
            lines.append(f"{x} {y} {a} {b} {w}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# chained and staircase families


def make_chained(n: int, variant: str = "canonical") -> LinearFunctional:
    """Chained functional with n inputs per party.

    canonical: sum_k <A_k B_k> + sum_k <A_{k+1} B_k> - <A_0 B_{n-1}> <= 2n - 2.
    cod_valid: sum of brackets [a_x - b_y] over the chain, closed by
    [b_n - a_1 - 1], >= 1, with Alice's outputs swapped at every second input
    (odd x counting from 0).
    """
    if n < 2:
        raise ValueError("chained functionals need n >= 2")
    s = Scenario.uniform(n, 2)
    if variant == "canonical":
        M = [[0] * n for _ in range(n)]
        for k in range(n):
            M[k][k] += 1
        for k in range(n - 1):
            M[k + 1][k] += 1
        M[0][n - 1] -= 1
        return from_correlators(f"chained{n}", s, M, 2 * n - 2, "LHV", description="chained Bell functional")
    if variant != "cod_valid":
        raise ValueError("variant must be 'canonical' or 'cod_valid'")
    terms = []
    chain = [(k, k) for k in range(n)] + [(k + 1, k) for k in range(n - 1)]
    for x, y in chain:
        terms += [((x, y, a, b), 1) for a in range(2) for b in range(2) if a != b]
    terms += [((0, n - 1, a, a), 1) for a in range(2)]
    base = LinearFunctional(f"chained{n}_raw", s, tuple(_coords_from_terms(s, terms)), 1, ">=", "COD")
    flip = [[1, 0] if x % 2 == 1 else [0, 1] for x in range(n)]
    f = relabel_functional(base, outputs_a=flip, name=f"chained{n}_cod")
    M = [[0] * n for _ in range(n)]
    for x, y in chain:
        M[x][y] += -1 if x % 2 else 1
    M[0][n - 1] -= 1
    corr = {(x, y): Fraction(M[x][y]) for x in range(n) for y in range(n) if M[x][y]}
    return replace(
        f, correlators=corr, corr_offset=Fraction(n), corr_scale=Fraction(-1, 2),
        description="chained brackets made valid for output communication",
    )


def staircase_matrix(n: int) -> list[list[int]]:
    """Row 0 all ones; row i >= 1 has ones left of column n-i, -1 at n-i, zeros after."""
    M = [[1] * n]
    for i in range(1, n):
        M.append([1] * (n - i) + [-1] + [0] * (i - 1))
    return M


def mnd_formula(n: int, d: int) -> Fraction:
    """Unnormalized bound stated for the staircase family."""
    return Fraction(n * (n - 1) + d + d * d, 2)


def make_Mnd(n: int, d: int, normalized: bool = True) -> LinearFunctional:
    """Staircase correlator functional, scaled by 2/(n(n-1)+d+d^2) when normalized (bound 1)."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    s = Scenario.uniform(n, 2)
    K = mnd_formula(n, d)
    norm = 1 / K if normalized else Fraction(1)
    return from_correlators(
        f"M{n}_{d}", s, staircase_matrix(n), 1 if normalized else K, f"MCPD({d})",
        normalization=norm, description="staircase correlator functional",
    )


# ---------------------------------------------------------------------------
# catalog


def _chsh_marg() -> LinearFunctional:
    s = Scenario.uniform(2, 2)
    terms = [((0, 0, 0, 0), 1), ((0, 1, 0, 0), 1), ((1, 0, 0, 0), 1), ((1, 1, 0, 0), -1)]
    return LinearFunctional("CHSH", s, tuple(_coords_from_terms(s, terms)), 0, "<=", "LHV",
                            marginals_a=((0, 0, -1),), marginals_b=((0, 0, -1),),
                            description="CHSH in probability form with marginals")


def _i3322_marg() -> LinearFunctional:
    s = Scenario.uniform(3, 2)
    plus = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]
    minus = [(1, 2), (2, 1)]
    terms = [((x, y, 0, 0), 1) for x, y in plus] + [((x, y, 0, 0), -1) for x, y in minus]
    return LinearFunctional("I3322", s, tuple(_coords_from_terms(s, terms)), 0, "<=", "LHV",
                            marginals_a=((0, 0, -2), (1, 0, -1)), marginals_b=((0, 0, -1),),
                            description="I3322 in probability form with marginals")


def _chsh_ns() -> LinearFunctional:
    s = Scenario.uniform(2, 2)
    terms = [((0, 0, 0, 0), -1), ((0, 1, 0, 0), 1), ((1, 0, 0, 0), 1), ((1, 1, 0, 0), -1),
             ((0, 0, 0, 1), -1), ((0, 0, 1, 0), -1)]
    return LinearFunctional("CHSH_ns", s, tuple(_coords_from_terms(s, terms)), 0, "<=", "LHV",
                            description="CHSH written without marginal terms")


def _i3322_ns() -> LinearFunctional:
    s = Scenario.uniform(3, 2)
    terms = [((0, 0, 0, 0), -2), ((0, 2, 0, 0), 1), ((1, 0, 0, 0), 1), ((1, 1, 0, 0), 1),
             ((1, 2, 0, 0), -1), ((2, 0, 0, 0), 1), ((2, 1, 0, 0), -1), ((0, 0, 0, 1), -1),
             ((0, 0, 1, 0), -2), ((0, 1, 1, 0), -1)]
    return LinearFunctional("I3322_ns", s, tuple(_coords_from_terms(s, terms)), 0, "<=", "LHV",
                            description="I3322 written without marginal terms")


def _i2233_ns() -> LinearFunctional:
    s = Scenario.uniform(2, 3)
    t = {
        ((0, 0), (0, 0)): -1, ((0, 1), (0, 0)): -1, ((0, 1), (0, 1)): 1, ((0, 1), (1, 0)): 1,
        ((0, 1), (1, 1)): -1, ((0, 2), (0, 0)): -1, ((1, 0), (0, 0)): -1, ((1, 0), (0, 1)): 1,
        ((1, 0), (1, 0)): 1, ((1, 0), (1, 1)): -1, ((1, 1), (0, 0)): -2, ((1, 1), (0, 1)): 1,
        ((1, 1), (1, 0)): 1, ((1, 1), (1, 1)): -1, ((1, 2), (0, 0)): -1, ((2, 0), (0, 0)): -1,
        ((2, 1), (0, 0)): -1,
    }
    terms = [((x, y, a, b), w) for ((a, b), (x, y)), w in t.items()]
    return LinearFunctional("I2233_ns", s, tuple(_coords_from_terms(s, terms)), 0, "<=", "LHV",
                            description="I2233 written without marginal terms")


def _i_ab() -> LinearFunctional:
    M = [[1, 0, -1], [0, -1, 1], [-1, 1, 0]]
    return from_correlators("I_AB", Scenario.uniform(3, 2), M, 4, "COD",
                            description="chained relabeling valid for output communication")


def _m332() -> LinearFunctional:
    return from_correlators("M332", Scenario.uniform(3, 2), staircase_matrix(3), 6, "MCPD(2)",
                            description="staircase functional, unnormalized")


_CATALOG = {
    "CHSH": _chsh_marg,
    "CHSH_ns": _chsh_ns,
    "I3322": _i3322_marg,
    "I3322_ns": _i3322_ns,
    "I2233_ns": _i2233_ns,
    "I_AB": _i_ab,
    "chained3": lambda: make_chained(3, "canonical"),
    "chained3_cod": lambda: make_chained(3, "cod_valid"),
    "chained5_cod": lambda: make_chained(5, "cod_valid"),
    "M332": _m332,
    "M3_2": lambda: make_Mnd(3, 2),
}


def relabeled_forms(f: LinearFunctional, probes=None) -> list[LinearFunctional]:
    """Distinct images of f under local relabelings (input and output permutations).

    Two forms count as equal when they agree on every probe behavior; the
    default probes are the no-signalling vertices, so forms equal on the
    no-signalling polytope are merged.
    """
    from .polytope import ns_vertices

    s = f.scenario
    if probes is None:
        probes = ns_vertices(s).vertices
    seen, out = set(), []
    perms_x = [p for p in permutations(range(s.n_a)) if all(s.outputs_a[p[x]] == s.outputs_a[x] for x in range(s.n_a))]
    perms_y = [p for p in permutations(range(s.n_b)) if all(s.outputs_b[p[y]] == s.outputs_b[y] for y in range(s.n_b))]
    out_a = product(*[list(permutations(range(o))) for o in s.outputs_a])
    out_a = list(out_a)
    out_b = list(product(*[list(permutations(range(o))) for o in s.outputs_b]))
    for ia, ib, oa, ob in product(perms_x, perms_y, out_a, out_b):
        g = relabel_functional(f, ia, ib, oa, ob, name=f"{f.name}[{len(out)}]")
        key = tuple(evaluate(g, b) for b in probes)
        if key not in seen:
            seen.add(key)
            out.append(g)
    return out


def max_over_forms(forms, b: Behavior) -> Fraction:
    return max(evaluate(g, b) for g in forms)


def catalog() -> list[str]:
    return list(_CATALOG)


def get_functional(name: str) -> LinearFunctional:
    """Catalog entry by name; 'chained<n>', 'chained<n>_cod' and 'M<n>_<d>' are generated on demand."""
    if name in _CATALOG:
        return _CATALOG[name]()
    import re

    m = re.fullmatch(r"chained(\d+)(_cod)?", name)
    if m:
        return make_chained(int(m.group(1)), "cod_valid" if m.group(2) else "canonical")
    m = re.fullmatch(r"M(\d+)_(\d+)", name)
    if m:
        return make_Mnd(int(m.group(1)), int(m.group(2)))
    raise KeyError(f"unknown functional {name!r}; known: {', '.join(_CATALOG)}")


# ---------------------------------------------------------------------------
# bounds


@dataclass
class BoundResult:
    value: Fraction
    witness: DeterministicStrategy | None
    sense: str  # 'max' or 'min'

    @property
    def unnormalized(self):
        return self.value


_BIG = 1 << 40


def _padded(c_int: np.ndarray, s: Scenario) -> np.ndarray:
    C = np.zeros((s.n_a, s.n_b, s.max_out_a, s.max_out_b), dtype=np.int64)
    for (x, y, a, b), v in zip(s.coords, c_int):
        C[x, y, a, b] = int(v)
    return C


def _best_response_ab(C: np.ndarray, s: Scenario, kind: ModelKind, d: int = 1, chunk: int = 1 << 14):
    """max over the sender part, with Bob's best response per key.

    Returns (value, alice table {x: a}, message table {x: m} or None, bob table {(key, y): b}).
    """
    na, nb = s.n_a, s.n_b
    oa, ob = s.outputs_a, s.outputs_b
    penalty = np.zeros((nb, s.max_out_b), dtype=np.int64)
    for y in range(nb):
        penalty[y, ob[y]:] = -_BIG
    if kind is ModelKind.LHV:
        nkeys = 1
    elif kind is ModelKind.CPD:
        nkeys = na
    elif kind is ModelKind.COD:
        nkeys = s.max_out_a
    elif kind is ModelKind.MCPD:
        nkeys = d
    else:
        raise ValueError(f"no best-response form for {kind}")
    fa_space = list(product(*[range(o) for o in oa]))
    msg_space = list(product(range(d), repeat=na)) if kind is ModelKind.MCPD else [None]
    xs = np.arange(na)
    best = None
    senders = product(fa_space, msg_space)
    while True:
        blk = list(_take(senders, chunk))
        if not blk:
            break
        FA = np.array([f for f, _ in blk], dtype=np.int64)
        if kind is ModelKind.LHV:
            K = np.zeros_like(FA)
        elif kind is ModelKind.CPD:
            K = np.broadcast_to(xs, FA.shape)
        elif kind is ModelKind.COD:
            K = FA
        else:
            K = np.array([m for _, m in blk], dtype=np.int64)
        V = C[xs[None, :], :, FA, :]  # (S, na, nb, maxB)
        onehot = (K[:, :, None] == np.arange(nkeys)[None, None, :]).astype(np.int64)
        G = np.einsum("sxk,sxyb->skyb", onehot, V) + penalty[None, None]
        score = G.max(axis=3).sum(axis=(1, 2))
        i = int(np.argmax(score))
        if best is None or score[i] > best[0]:
            g = G[i].argmax(axis=2)
            best = (int(score[i]), blk[i], g, K[i])
    val, (fa, fm), g, K = best
    alice = {x: int(fa[x]) for x in range(na)}
    message = {x: int(fm[x]) for x in range(na)} if fm is not None else None
    bob = {(k, y): int(g[k, y]) for k in range(nkeys) for y in range(nb)}
    return val, alice, message, bob


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def _transpose(C: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(C.transpose(1, 0, 3, 2))


def _bound_max(C: np.ndarray, m: ModelSpec):
    """(value, witness) for the max of sum C over the model's deterministic strategies."""
    s = m.scenario
    k = m.kind
    if k is ModelKind.COD_MIX:
        ab, ba = m.components
        v1, w1 = _bound_max(C, ab)
        v2, w2 = _bound_max(C, ba)
        v, w = (v1, w1) if v1 >= v2 else (v2, w2)
        return v, encode_strategy(m, w.alice, w.bob, None, w.model)
    if k is ModelKind.CPD_TWO_WAY:
        alice, bob, total = {}, {}, 0
        for x, y in s.blocks:
            sub = C[x, y, : s.outputs_a[x], : s.outputs_b[y]]
            a, b = np.unravel_index(int(np.argmax(sub)), sub.shape)
            alice[x, y], bob[x, y] = int(a), int(b)
            total += int(sub[a, b])
        return total, encode_strategy(m, alice, bob)
    if k is ModelKind.MCPD and m.d == 1:
        k = ModelKind.LHV
    if m.direction == "ba" and k is not ModelKind.LHV:
        sw = s.swapped()
        val, alice_t, msg_t, bob_t = _best_response_ab(_transpose(C), sw, k, m.d)
        # tables of the swapped problem, mapped back to the original layout
        bob = {y: a for y, a in alice_t.items()}
        if k is ModelKind.CPD:
            alice = {(x, y): bval for (y, x), bval in bob_t.items()}
        else:
            alice = {(key, x): bval for (key, x), bval in bob_t.items()}
        return val, encode_strategy(m, alice, bob, msg_t)
    val, alice, msg, bob_t = _best_response_ab(C, s, k, m.d)
    if k is ModelKind.LHV:
        bob = {y: b for (_, y), b in bob_t.items()}
        if m.kind is ModelKind.LHV:
            return val, encode_strategy(m, alice, bob)
        # message of dimension 1
        if m.direction == "ab":
            return val, encode_strategy(m, alice, bob_t, {x: 0 for x in alice})
        return val, encode_strategy(m, {(0, x): a for x, a in alice.items()}, bob, {y: 0 for y in bob})
    return val, encode_strategy(m, alice, bob_t, msg)


def model_bound(f: LinearFunctional, m: ModelSpec, reference=(0, 0)) -> BoundResult:
    """Extremal value of f over the model's strategies: max for '<=' functionals, min for '>='.

    The convex hull of the strategy columns has the same extremum, so this is
    the model's bound. Computed exactly by enumerating the sending party's
    tables and the receiver's best response per key.
    """
    if m.scenario != f.scenario:
        raise ValueError("model and functional live in different scenarios")
    c, den = f.integer_coefficients(reference)
    sign = 1 if f.sense == "<=" else -1
    C = _padded(sign * c, f.scenario)
    val, w = _bound_max(C, m)
    return BoundResult(Fraction(sign * val, den), w, "max" if sign == 1 else "min")


def model_bound_exhaustive(f: LinearFunctional, m: ModelSpec, reference=(0, 0), budget=None) -> BoundResult:
    """Same as model_bound, by evaluating every column of the strategy matrix."""
    T = build_strategy_matrix(m, budget=budget)
    c, den = f.integer_coefficients(reference)
    sign = 1 if f.sense == "<=" else -1
    vals = (sign * c).astype(np.int64) @ T.to_sparse()
    vals = np.asarray(vals).ravel()
    j = int(np.argmax(vals))
    return BoundResult(Fraction(sign * int(vals[j]), den), T.strategy(j), "max" if sign == 1 else "min")


def ns_max(f: LinearFunctional, reference=(0, 0)) -> Fraction:
    """Extremal value of f over the no-signalling polytope (exact LP)."""
    from .polytope import ns_polytope

    h = ns_polytope(f.scenario)
    c = f.full_coefficients(reference)
    lp = LinearProgram(list(c), [list(r) for r in h.eq_rows], ["="] * len(h.eq_rows), list(h.eq_rhs),
                       sense="max" if f.sense == "<=" else "min")
    res = solve(lp)
    return res.value
