"""Relaxation measures: direct causal influence, average communication and message entropy.

Every measure is the optimum of an exact LP over weights q on deterministic
strategies. Queries come in two flavours: a full behavior (T q = p) or only
the value of a Bell functional, in which case T q is constrained to the
no-signalling polytope and to f(T q) = value.
"""
from __future__ import annotations

import csv
import decimal
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import flint
import numpy as np
import scipy.sparse as sp

from .inequalities import LinearFunctional, swap_functional
from .lp import LinearProgram, LPError, LPResult, Separation, parallel_map, solve
from .models import ModelDomainError, ModelKind, ModelSpec, StrategyMatrix, _layout, strategy_arrays
from .polytope import _integer_nullspace, double_description, ns_polytope
from .quantum import entropy
from .scenario import Behavior, Scenario, is_no_signalling, swap_parties, to_fraction

__all__ = [
    "InfeasibleQuery",
    "ValueTarget",
    "MeasureResult",
    "CommunicationResult",
    "MessagePolytope",
    "EntropyResult",
    "influence_table",
    "mcpd_table",
    "min_causal_influence",
    "min_causal_influence_given_value",
    "min_average_communication",
    "message_polytope",
    "min_message_entropy",
    "max_value_in_model",
    "piecewise_linear",
    "value_curve_breakpoints",
    "format_number",
    "curve_csv",
    "sweep",
]

_LOG_DIGITS = 60


class InfeasibleQuery(ValueError):
    """The target cannot be reproduced by the model; ``certificate`` separates it."""

    def __init__(self, message: str, certificate: Separation | None = None, lp: LPResult | None = None):
        super().__init__(message)
        self.certificate = certificate
        self.lp = lp


@dataclass(frozen=True)
class ValueTarget:
    """Only the value of a functional is imposed (plus no-signalling and normalization)."""

    functional: LinearFunctional
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", to_fraction(self.value))

    @property
    def scenario(self) -> Scenario:
        return self.functional.scenario


def _swap_target(target):
    if isinstance(target, Behavior):
        return swap_parties(target)
    return ValueTarget(swap_functional(target.functional), target.value)


# ---------------------------------------------------------------------------
# strategy tables


@dataclass(frozen=True, eq=False)
class _Table:
    """Deduplicated strategy columns with per-column feature vectors."""

    model: ModelSpec
    outcomes: np.ndarray  # (ncols, nblocks)
    labels: np.ndarray  # representative strategy label of each column (-1 when not encodable)
    features: np.ndarray  # (ncols, nfeatures) integer
    keys: tuple  # description of each feature

    @property
    def matrix(self) -> StrategyMatrix:
        return StrategyMatrix(self.model, self.outcomes, self.labels, np.arange(len(self.labels)))

    def __len__(self) -> int:
        return len(self.labels)


def _dedup(model, outcomes, labels, features, keys) -> _Table:
    key = np.hstack([outcomes.astype(np.int64), features.astype(np.int64)])
    _, first = np.unique(key, axis=0, return_index=True)
    first = np.sort(first)
    return _Table(model, outcomes[first], labels[first], features[first], tuple(keys))


def influence_table(m: ModelSpec, budget: int | None = None) -> _Table:
    """Columns with the intervention features D_lambda(tau) of a one-way model (direction A->B).

    CPD: tau = (b, y, x, x'), D = |[b = g(x,y)] - [b = g(x',y)]|.
    COD: tau = (b, y, a, a'), D = |[b = g(a,y)] - [b = g(a',y)]|, including
    outputs a that Alice never produces under lambda, since do(a) may force them.
    """
    if m.direction != "ab" or m.kind not in (ModelKind.CPD, ModelKind.COD):
        raise ModelDomainError("causal influence needs a one-way CPD or COD model (direction ab)")
    s = m.scenario
    labels, digits, outcomes = strategy_arrays(m, budget)
    col = {(f.party, f.key): i for i, f in enumerate(_layout(m))}
    if m.kind is ModelKind.CPD:
        sources = range(s.n_a)
        g = lambda u, y: digits[:, col["bob", (u, y)]]  # noqa: E731
    else:
        sources = range(s.max_out_a)
        g = lambda u, y: digits[:, col["bob", (u, y)]]  # noqa: E731
    feats, keys = [], []
    for y in range(s.n_b):
        for u, v in itertools.combinations(sources, 2):
            gu, gv = g(u, y), g(v, y)
            differ = gu != gv
            for b in range(s.outputs_b[y]):
                feats.append(differ & ((gu == b) | (gv == b)))
                keys.append((b, y, u, v))
    F = np.stack(feats, axis=1).astype(np.int8) if feats else np.zeros((len(labels), 0), np.int8)
    return _dedup(m, outcomes, labels, F, keys)


def _restricted_growth(seq) -> bool:
    nxt = 0
    for v in seq:
        if v > nxt:
            return False
        if v == nxt:
            nxt += 1
    return True


def mcpd_table(s: Scenario, d: int, canonical: bool = False) -> _Table:
    """MCPD(d) (direction A->B) strategies with Bob's entries for unused messages fixed to 0.

    Features are the message counts #{x : f_m(x) = m} for m < d followed by
    the number of distinct messages used. With ``canonical`` only message
    functions in restricted-growth form are kept (first use of each message
    in increasing order), which preserves every column and every permutation
    class of message distributions.
    """
    m = ModelSpec.mcpd(s, d)
    fields = _layout(m)
    radices = [f.radix for f in fields]
    col = {(f.party, f.key): i for i, f in enumerate(fields)}
    na, nb = s.n_a, s.n_b
    alice = np.array(list(itertools.product(*[range(o) for o in s.outputs_a])), dtype=np.int64).reshape(-1, na)
    outs, digs, feats = [], [], []
    for fm in itertools.product(range(d), repeat=na):
        if canonical and not _restricted_growth(fm):
            continue
        used = sorted(set(fm))
        bkeys = [(q, y) for q in used for y in range(nb)]
        bob = np.array(list(itertools.product(*[range(s.outputs_b[y]) for _, y in bkeys])), dtype=np.int64)
        bob = bob.reshape(-1, len(bkeys))
        A = np.repeat(alice, len(bob), axis=0)
        B = np.tile(bob, (len(alice), 1))
        n = len(A)
        D = np.zeros((n, len(fields)), dtype=np.int64)
        for x in range(na):
            D[:, col["alice", x]] = A[:, x]
            D[:, col["message", x]] = fm[x]
        bpos = {k: i for i, k in enumerate(bkeys)}
        for k, i in bpos.items():
            D[:, col["bob", k]] = B[:, i]
        out = np.empty((n, len(s.blocks)), dtype=np.int32)
        for j, (x, y) in enumerate(s.blocks):
            out[:, j] = A[:, x] * s.outputs_b[y] + B[:, bpos[fm[x], y]]
        counts = [sum(1 for v in fm if v == q) for q in range(d)] + [len(used)]
        outs.append(out)
        digs.append(D)
        feats.append(np.tile(np.array(counts, dtype=np.int64), (n, 1)))
    outcomes = np.concatenate(outs)
    digits = np.concatenate(digs)
    if math.prod(radices) < 2**62:
        labels = np.ravel_multi_index(tuple(digits.T), tuple(radices)).astype(np.int64)
    else:
        labels = np.full(len(digits), -1, dtype=np.int64)
    keys = [("count", q) for q in range(d)] + [("used",)]
    return _dedup(m, outcomes, labels, np.concatenate(feats), keys)


# ---------------------------------------------------------------------------
# weight programs


def _target_blocks(target, T: sp.csc_matrix, nvar: int):
    """Constraint blocks over the first T.shape[1] variables (padded to nvar)."""
    ncols = T.shape[1]
    pad = nvar - ncols

    def padded(M):
        M = sp.csr_matrix(M)
        if pad:
            M = sp.hstack([M, sp.csr_matrix((M.shape[0], pad), dtype=M.dtype)], format="csr")
        return M

    blocks = [(padded(np.ones((1, ncols), dtype=np.int64)), "=", [1])]
    if isinstance(target, Behavior):
        blocks.insert(0, (padded(T), "=", list(target.probs)))
        return blocks
    h = ns_polytope(target.scenario)
    E = sp.csr_matrix(np.array(h.eq_rows, dtype=np.int64))
    blocks.insert(0, (padded(E @ T), "=", list(h.eq_rhs)))
    c = target.functional.full_coefficients((0, 0))
    fT = _row_times(c, T)
    blocks.append(([{j: v for j, v in enumerate(fT) if v}], "=", [target.value]))
    return blocks


def _row_times(c, T: sp.csc_matrix) -> list[Fraction]:
    """Exact c^T T for a rational row c and a 0/1 matrix T."""
    den = 1
    for v in c:
        den = math.lcm(den, Fraction(v).denominator)
    ci = np.array([int(Fraction(v) * den) for v in c], dtype=object)
    Tc = T.tocsc()
    out = []
    for j in range(Tc.shape[1]):
        rows = Tc.indices[Tc.indptr[j]:Tc.indptr[j + 1]]
        out.append(Fraction(int(ci[rows].sum()), den))
    return out


def _check_target(target, m: ModelSpec):
    if target.scenario != m.scenario:
        raise ValueError("target and model live in different scenarios")
    if isinstance(target, Behavior) and not is_no_signalling(target).ok:
        raise ValueError("the measures are defined for no-signalling behaviors")


def _infeasible(res: LPResult, target, T: sp.csc_matrix, what: str) -> InfeasibleQuery:
    cert = None
    if isinstance(target, Behavior) and res.farkas is not None:
        N = T.shape[0]
        coeffs = [-v for v in res.farkas[:N]]
        bound = res.farkas[N]
        value = sum((c * p for c, p in zip(coeffs, target.probs) if c), Fraction(0))
        cert = Separation(coeffs, bound, value)
    return InfeasibleQuery(f"{what}: target is not reproducible by the model", cert, res)


def _column_behavior(T: sp.csc_matrix, q, scenario: Scenario) -> Behavior:
    vec = [Fraction(0)] * T.shape[0]
    Tc = T.tocsc()
    for j, w in enumerate(q):
        if w:
            for r in Tc.indices[Tc.indptr[j]:Tc.indptr[j + 1]]:
                vec[r] += w
    return Behavior(scenario, tuple(vec))


@dataclass
class MeasureResult:
    value: Fraction
    measure: str
    model: ModelSpec
    weights: dict  # strategy label (of the A->B model used) -> weight
    behavior: Behavior | None
    tuples: dict = field(default_factory=dict)  # intervention tuple -> its value at the optimum
    lp: LPResult | None = field(default=None, repr=False)


def _influence(target, m: ModelSpec, budget=None) -> MeasureResult:
    _check_target(target, m)
    if m.kind not in (ModelKind.CPD, ModelKind.COD):
        raise ModelDomainError("causal influence needs a CPD or COD model")
    if m.direction == "ba":
        r = _influence(_swap_target(target), ModelSpec(m.kind, m.scenario.swapped(), "ab"), budget)
        r.model = m
        if r.behavior is not None:
            r.behavior = swap_parties(r.behavior)
        return r
    tab = influence_table(m, budget)
    T = tab.matrix.to_sparse()
    n = T.shape[1]
    blocks = _target_blocks(target, T, n + 1)
    F = sp.csr_matrix(tab.features.T.astype(np.int64))
    blocks.append((sp.hstack([F, -sp.csr_matrix(np.ones((F.shape[0], 1), dtype=np.int64))], format="csr"),
                   "<=", [0] * F.shape[0]))
    lp = LinearProgram.from_blocks([0] * n + [1], blocks)
    res = solve(lp)
    arrow = "X->B" if m.kind is ModelKind.CPD else "A->B"
    if res.status == "infeasible":
        raise _infeasible(res, target, T, f"causal influence {arrow}")
    if res.status != "optimal":
        raise LPError(f"causal influence program reported {res.status}")
    q = res.x[:n]
    weights = {int(tab.labels[j]): w for j, w in enumerate(q) if w}
    tuples = {}
    for i, k in enumerate(tab.keys):
        tuples[k] = sum((q[j] for j in np.nonzero(tab.features[:, i])[0] if q[j]), Fraction(0))
    beh = target if isinstance(target, Behavior) else _column_behavior(T, q, m.scenario)
    return MeasureResult(res.value, f"C_{arrow}", m, weights, beh, tuples, res)


def min_causal_influence(b: Behavior, m: ModelSpec, budget=None) -> MeasureResult:
    """min over decompositions of max over intervention tuples (single epigraph LP).

    CPD models measure X->B (or Y->A), COD models A->B (or B->A).
    """
    return _influence(b, m, budget)


def min_causal_influence_given_value(f: LinearFunctional, value, m: ModelSpec, budget=None) -> MeasureResult:
    """Minimum of the measure over all no-signalling behaviors with f = value."""
    return _influence(ValueTarget(f, value), m, budget)


# ---------------------------------------------------------------------------
# communication


def _log2_fraction(k: int) -> Fraction:
    """log2(k) exactly for powers of two, else rounded to _LOG_DIGITS significant digits."""
    if k & (k - 1) == 0:
        return Fraction(k.bit_length() - 1)
    with decimal.localcontext() as ctx:
        ctx.prec = _LOG_DIGITS
        return Fraction(decimal.Decimal(k).ln() / decimal.Decimal(2).ln())


@dataclass
class CommunicationResult:
    value: float
    exact_value: Fraction | None  # set when every used cost is a whole number of bits
    weight_by_messages: dict  # number of distinct messages used -> total weight
    weights: dict
    model: ModelSpec
    lp: LPResult | None = field(default=None, repr=False)


def min_average_communication(target, d: int, direction: str = "ab") -> CommunicationResult:
    """min sum_lambda q_lambda log2(#messages used by lambda) over MCPD(d) decompositions.

    Costs log2(k) for k not a power of two are irrational; they enter the
    LP as 60-digit rationals, so ``value`` is then a float and
    ``exact_value`` is None.
    """
    m = ModelSpec.mcpd(target.scenario, d, direction)
    _check_target(target, m)
    if direction == "ba":
        r = min_average_communication(_swap_target(target), d, "ab")
        r.model = m
        return r
    tab = mcpd_table(target.scenario, d, canonical=True)
    T = tab.matrix.to_sparse()
    used = tab.features[:, -1]
    cost = [_log2_fraction(int(k)) for k in used]
    lp = LinearProgram.from_blocks(cost, _target_blocks(target, T, T.shape[1]))
    res = solve(lp)
    if res.status == "infeasible":
        raise _infeasible(res, target, T, "average communication")
    if res.status != "optimal":
        raise LPError(f"communication program reported {res.status}")
    byk: dict[int, Fraction] = {}
    for j, w in enumerate(res.x):
        if w:
            byk[int(used[j])] = byk.get(int(used[j]), Fraction(0)) + w
    exact = all(k & (k - 1) == 0 for k in byk)
    value = sum(float(w) * math.log2(k) for k, w in byk.items())
    weights = {int(tab.labels[j]): w for j, w in enumerate(res.x) if w}
    return CommunicationResult(value, res.value if exact else None, byk, weights, m, res)


# ---------------------------------------------------------------------------
# projection polytopes


class _Projection:
    """Optimizes linear objectives over P q for q in a fixed weight polytope."""

    def __init__(self, blocks, P: list[list[Fraction]], nvar: int):
        self.blocks = blocks
        self.P = P  # d rows over nvar columns
        self.nvar = nvar
        self.lps = 0

    def point(self, x) -> tuple[Fraction, ...]:
        return tuple(sum((row[j] * x[j] for j in range(self.nvar) if x[j] and row[j]), Fraction(0)) for row in self.P)

    def optimize(self, c, sense: str):
        obj = [sum((ci * row[j] for ci, row in zip(c, self.P) if ci), Fraction(0)) for j in range(self.nvar)]
        res = solve(LinearProgram.from_blocks(obj, self.blocks, sense=sense))
        self.lps += 1
        if res.status != "optimal":
            raise LPError(f"projection program reported {res.status}")
        return res.value, self.point(res.x)

    def feasible_point(self):
        res = solve(LinearProgram.from_blocks([0] * self.nvar, self.blocks))
        self.lps += 1
        return res


def _rank(rows) -> int:
    if not rows:
        return 0
    M = flint.fmpq_mat(len(rows), len(rows[0]))
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            if v:
                M[i, j] = flint.fmpq(Fraction(v).numerator, Fraction(v).denominator)
    return M.rank()


def _integral(row) -> list[int]:
    den = 1
    for v in row:
        den = math.lcm(den, Fraction(v).denominator)
    return [int(Fraction(v) * den) for v in row]


def _dot(c, v) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(c, v) if a and b), Fraction(0))


def _project_vertices(proj: _Projection, v0) -> tuple[list, int]:
    """Vertices and dimension of the projection (affine hull by LPs, then beneath-beyond)."""
    dim = len(v0)
    pts = [tuple(v0)]
    while True:
        U = [[p - q for p, q in zip(pt, v0)] for pt in pts[1:]]
        comp = _integer_nullspace([_integral(r) for r in U] + [[1] * dim], dim)
        grew = False
        for c in comp:
            base = _dot(c, v0)
            for sense in ("max", "min"):
                val, pt = proj.optimize(c, sense)
                if val != base:
                    pts.append(pt)
                    grew = True
                    break
            if grew:
                break
        if not grew:
            break
    k = len(pts) - 1
    if k == 0:
        return pts, 0
    # project onto k coordinates that are independent on the affine hull
    U = [[p - q for p, q in zip(pt, v0)] for pt in pts[1:]]
    M = flint.fmpq_mat(k, dim)
    for i, r in enumerate(U):
        for j, v in enumerate(r):
            if v:
                M[i, j] = flint.fmpq(v.numerator, v.denominator)
    R, rank = M.rref()
    piv, r = [], 0
    for j in range(dim):
        if r < rank and R[r, j] != 0:
            piv.append(j)
            r += 1

    def z(pt):
        return [pt[j] for j in piv]

    confirmed: set = set()
    while True:
        facets = _hull_facets([z(p) for p in pts])
        new = None
        for c0, c in facets:
            key = (c0, tuple(c))
            if key in confirmed:
                continue
            full = [Fraction(0)] * dim
            for j, cj in zip(piv, c):
                full[j] = Fraction(cj)
            val, pt = proj.optimize(full, "min")
            if val < -c0:
                new = pt
                break
            confirmed.add(key)
        if new is None:
            break
        pts.append(new)
    # keep points where the tight facet normals have full rank
    verts = []
    for p in dict.fromkeys(pts):
        tight = [list(c) for c0, c in facets if c0 + _dot(c, z(p)) == 0]
        if _rank(tight) == k:
            verts.append(p)
    return sorted(verts), k


def _hull_facets(points) -> list[tuple[int, tuple[int, ...]]]:
    """Facets c0 + c.z >= 0 of the convex hull of full-dimensional rational points."""
    H = []
    for p in points:
        den = 1
        for v in p:
            den = math.lcm(den, Fraction(v).denominator)
        H.append([den] + [int(Fraction(v) * den) for v in p])
    rays = double_description(H)
    return [(int(r[0]), tuple(int(v) for v in r[1:])) for r in rays]


@dataclass
class MessagePolytope:
    """Feasible message distributions p(m) (uniform inputs) of a target under MCPD(d)."""

    d: int
    vertices: list  # tuples of Fractions summing to 1
    dimension: int
    model: ModelSpec
    lp_count: int = 0

    def interval(self) -> tuple[Fraction, Fraction]:
        """Range of p(m = 1); the whole polytope when d = 2."""
        vals = [v[1] for v in self.vertices]
        return min(vals), max(vals)

    def entropies(self) -> list[float]:
        return [entropy(v) for v in self.vertices]


def _message_projection(target, d: int, canonical: bool, input_distribution=None):
    s = target.scenario
    tab = mcpd_table(s, d, canonical=canonical)
    T = tab.matrix.to_sparse()
    n = T.shape[1]
    px = [Fraction(1, s.n_a)] * s.n_a if input_distribution is None else [to_fraction(v) for v in input_distribution]
    if len(px) != s.n_a or sum(px) != 1 or min(px) < 0:
        raise ValueError("input distribution must be a probability vector over Alice's inputs")
    uniform = len(set(px)) == 1
    if uniform:
        P = [[Fraction(int(c), s.n_a) for c in tab.features[:, q]] for q in range(d)]
    else:
        # counts are not enough: recover the message function from the strategy labels
        from .models import decode_strategy

        P = [[Fraction(0)] * n for _ in range(d)]
        for j, lab in enumerate(tab.labels):
            st = decode_strategy(tab.model, int(lab))
            for x, mm in st.message.items():
                P[mm][j] += px[x]
    blocks = _target_blocks(target, T, n)
    return _Projection(blocks, P, n), T


def message_polytope(target, d: int, direction: str = "ab", canonical: bool = False,
                     input_distribution=None) -> MessagePolytope:
    """Vertices of {p(m)} over all MCPD(d) decompositions of the target.

    ``canonical`` restricts to restricted-growth message functions; the
    result is then a polytope whose images under message permutations
    cover the full one (enough for any permutation-invariant objective).
    """
    m = ModelSpec.mcpd(target.scenario, d, direction)
    _check_target(target, m)
    if direction == "ba":
        r = message_polytope(_swap_target(target), d, "ab", canonical, input_distribution)
        r.model = m
        return r
    proj, T = _message_projection(target, d, canonical, input_distribution)
    res = proj.feasible_point()
    if res.status == "infeasible":
        raise _infeasible(res, target, T, "message polytope")
    verts, k = _project_vertices(proj, proj.point(res.x))
    return MessagePolytope(d, verts, k, m, proj.lps)


@dataclass
class EntropyResult:
    value: float
    vertices: list  # every vertex attaining the minimum (relative tolerance 1e-12)
    polytope: MessagePolytope


def min_message_entropy(target, d: int, direction: str = "ab", reduce_symmetry: bool = True,
                        input_distribution=None) -> EntropyResult:
    """Minimum of H(p(m)) over the message polytope, attained at one of its vertices.

    With ``reduce_symmetry`` (uniform inputs only) the canonical sub-polytope
    is used; its images under message permutations cover the full polytope
    and H is permutation invariant.
    """
    canonical = reduce_symmetry and input_distribution is None
    poly = message_polytope(target, d, direction, canonical=canonical, input_distribution=input_distribution)
    hs = poly.entropies()
    best = min(hs)
    tol = 1e-12 * max(1.0, abs(best))
    tied = [v for v, h in zip(poly.vertices, hs) if h - best <= tol]
    return EntropyResult(best, tied, poly)


def max_value_in_model(f: LinearFunctional, m: ModelSpec, sense: str = "max") -> Fraction:
    """Extremal value of f over no-signalling behaviors reproducible by the model."""
    if m.kind is ModelKind.MCPD and m.direction == "ab":
        T = mcpd_table(m.scenario, m.d, canonical=True).matrix.to_sparse()
    elif m.direction == "ba":
        ms = ModelSpec(m.kind, m.scenario.swapped(), "ab", m.d)
        return max_value_in_model(swap_functional(f), ms, sense)
    else:
        from .models import build_strategy_matrix

        T = build_strategy_matrix(m).to_sparse()
    n = T.shape[1]
    h = ns_polytope(m.scenario)
    E = sp.csr_matrix(np.array(h.eq_rows, dtype=np.int64))
    c = _row_times(f.full_coefficients((0, 0)), T)
    blocks = [(E @ T, "=", list(h.eq_rhs)), (np.ones((1, n), dtype=np.int64), "=", [1])]
    res = solve(LinearProgram.from_blocks(c, blocks, sense=sense))
    if res.status != "optimal":
        raise LPError(f"value program reported {res.status}")
    return res.value


# ---------------------------------------------------------------------------
# piecewise-linear structure of value-only curves


def _value_and_slope(f: LinearFunctional, value, m: ModelSpec) -> tuple[Fraction, Fraction]:
    r = min_causal_influence_given_value(f, value, m)
    # row of the f(Tq) = value constraint: NS equalities, normalization, then this one
    ne = len(ns_polytope(m.scenario).eq_rows) if m.direction == "ab" else len(
        ns_polytope(m.scenario.swapped()).eq_rows)
    return r.value, r.lp.duals[ne + 1]


def piecewise_linear(g, lo, hi, max_depth: int = 40) -> list[tuple[Fraction, Fraction]]:
    """Breakpoints of a convex piecewise-linear function on [lo, hi].

    ``g(t)`` returns (value, subgradient) exactly. Returns the sorted list of
    (t, g(t)) at lo, every breakpoint and hi. Supporting lines at the ends
    of an interval are intersected; if g meets them there, g is their max.
    """
    lo, hi = to_fraction(lo), to_fraction(hi)
    cache = {}

    def ev(t):
        if t not in cache:
            cache[t] = tuple(to_fraction(v) for v in g(t))
        return cache[t]

    pts = {lo: ev(lo)[0], hi: ev(hi)[0]}

    def rec(a, b, depth):
        (ga, sa), (gb, sb) = ev(a), ev(b)
        if sa == sb or depth > max_depth:
            return
        t = (gb - ga + sa * a - sb * b) / (sa - sb)
        if not a < t < b:
            return
        gt, _ = ev(t)
        line = ga + sa * (t - a)
        if gt == line:
            pts[t] = gt
            return
        pts[t] = gt
        rec(a, t, depth + 1)
        rec(t, b, depth + 1)

    rec(lo, hi, 0)
    # drop points where the function is locally linear
    ts = sorted(pts)
    keep = [ts[0]]
    for i in range(1, len(ts) - 1):
        a, t, b = keep[-1], ts[i], ts[i + 1]
        if (pts[t] - pts[a]) * (b - a) != (pts[b] - pts[a]) * (t - a):
            keep.append(t)
    keep.append(ts[-1])
    return [(t, pts[t]) for t in keep]


def value_curve_breakpoints(f: LinearFunctional, m: ModelSpec, lo, hi):
    """Exact breakpoints of t -> min causal influence given f = t."""
    return piecewise_linear(lambda t: _value_and_slope(f, t, m), lo, hi)


# ---------------------------------------------------------------------------
# curve output


def format_number(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


CSV_COLUMNS = ("param", "value", "measure", "model", "d")


def curve_csv(rows) -> str:
    """CSV with columns param,value,measure,model,d (rows as dicts or tuples)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        if isinstance(r, dict):
            r = [r.get(k, "") for k in CSV_COLUMNS]
        w.writerow([format_number(v) if isinstance(v, (Fraction, float, int, np.integer)) else v for v in r])
    return buf.getvalue()


def sweep(fn, params, workers: int | None = None) -> list:
    """Evaluate fn at every parameter (in parallel when workers > 1), preserving order."""
    return parallel_map(fn, list(params), workers)
