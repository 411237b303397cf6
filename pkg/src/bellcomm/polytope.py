"""No-signalling polytopes: H-representation, exact vertex enumeration, sweeps.

Vertices are computed by the double description method on the
homogenized cone of the polytope's affine-hull parametrization. All
arithmetic is on integers (numpy int64 while the entries are provably
small, Python ints otherwise), so the vertex list is exact.
"""
from __future__ import annotations

import itertools
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import flint
import numpy as np

from .lp import LinearProgram, membership, parallel_map, solve
from .models import BudgetExceeded, ModelKind, ModelSpec, build_strategy_matrix
from .scenario import (
    Behavior,
    Scenario,
    is_no_signalling,
    mix,
    permute_behavior,
    relabel_permutation,
    to_fraction,
    uniform_behavior,
)

__all__ = [
    "HPolytope",
    "VertexSet",
    "ns_polytope",
    "enumerate_vertices",
    "enumerate_vertices_bruteforce",
    "double_description",
    "ns_vertices",
    "cache_dir",
    "format_table",
    "format_vertices",
    "parse_vertices",
    "symmetry_generators",
    "VertexReport",
    "SweepReport",
    "cod_reproducibility_sweep",
    "ThresholdResult",
    "noise_threshold",
    "exact_noise_threshold",
    "UniformMarginalDecomposition",
    "simulate_uniform_marginal_vertex",
    "injective_functions",
]

DEFAULT_MAX_RAYS = 2_000_000
DEFAULT_MAX_ROWS = 640


# ---------------------------------------------------------------------------
# H-representation


@dataclass(frozen=True)
class HPolytope:
    """{p : E p = e, G p >= g} over behavior coordinates."""

    scenario: Scenario
    eq_rows: tuple
    eq_rhs: tuple
    ineq_rows: tuple
    ineq_rhs: tuple

    @property
    def n_coords(self) -> int:
        return self.scenario.size

    @property
    def dimension(self) -> int:
        """Affine dimension (equalities are independent by construction)."""
        return self.n_coords - len(self.eq_rows)

    def equality_residuals(self, b: Behavior) -> list[Fraction]:
        return [
            sum((c * p for c, p in zip(row, b.probs) if c), Fraction(0)) - r
            for row, r in zip(self.eq_rows, self.eq_rhs)
        ]

    def violated_equalities(self, b: Behavior) -> list[int]:
        return [i for i, v in enumerate(self.equality_residuals(b)) if v != 0]

    def violated_inequalities(self, b: Behavior) -> list[int]:
        out = []
        for i, (row, r) in enumerate(zip(self.ineq_rows, self.ineq_rhs)):
            if sum((c * p for c, p in zip(row, b.probs) if c), Fraction(0)) < r:
                out.append(i)
        return out

    def contains(self, b: Behavior) -> bool:
        return not self.violated_equalities(b) and not self.violated_inequalities(b)


def _independent_rows(rows: list[list], rhs: list) -> tuple[list, list]:
    """Keep the first maximal independent subset of the augmented rows [row | rhs]."""
    if not rows:
        return [], []
    ncol = len(rows[0]) + 1
    T = flint.fmpq_mat(ncol, len(rows))
    for i, (row, r) in enumerate(zip(rows, rhs)):
        for j, v in enumerate(row):
            if v:
                T[j, i] = int(v)
        if r:
            T[ncol - 1, i] = int(r)
    R, rank = T.rref()
    keep, r = [], 0
    for k in range(len(rows)):
        if r < rank and R[r, k] != 0:
            keep.append(k)
            r += 1
    return [rows[k] for k in keep], [rhs[k] for k in keep]


def ns_polytope(s: Scenario) -> HPolytope:
    """Normalization, no-signalling equalities and nonnegativity, redundancies removed."""
    N = s.size
    rows, rhs = [], []
    for x, y in s.blocks:
        v = [0] * N
        for i in range(s.block_slice(x, y).start, s.block_slice(x, y).stop):
            v[i] = 1
        rows.append(v)
        rhs.append(1)
    for x in range(s.n_a):
        for a in range(s.outputs_a[x]):
            for y in range(1, s.n_b):
                v = [0] * N
                for b in range(s.outputs_b[0]):
                    v[s.index(x, 0, a, b)] += 1
                for b in range(s.outputs_b[y]):
                    v[s.index(x, y, a, b)] -= 1
                rows.append(v)
                rhs.append(0)
    for y in range(s.n_b):
        for b in range(s.outputs_b[y]):
            for x in range(1, s.n_a):
                v = [0] * N
                for a in range(s.outputs_a[0]):
                    v[s.index(0, y, a, b)] += 1
                for a in range(s.outputs_a[x]):
                    v[s.index(x, y, a, b)] -= 1
                rows.append(v)
                rhs.append(0)
    rows, rhs = _independent_rows(rows, rhs)
    ineq = tuple(tuple(1 if j == i else 0 for j in range(N)) for i in range(N))
    return HPolytope(
        s,
        tuple(tuple(r) for r in rows),
        tuple(Fraction(v) for v in rhs),
        ineq,
        tuple(Fraction(0) for _ in range(N)),
    )


# ---------------------------------------------------------------------------
# double description on integer cones


def _integer_nullspace(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Integer basis (as columns, returned as a list of vectors) of {w : rows . w = 0}."""
    if rows:
        M = flint.fmpq_mat(len(rows), ncols)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v:
                    M[i, j] = v
        R, rank = M.rref()
    else:
        rank = 0
    piv, r = [], 0
    for k in range(ncols):
        if r < rank and R[r, k] != 0:
            piv.append(k)
            r += 1
    pivset = set(piv)
    basis = []
    for f in (k for k in range(ncols) if k not in pivset):
        z = [Fraction(0)] * ncols
        z[f] = Fraction(1)
        for i, pk in enumerate(piv):
            z[pk] = -Fraction(int(R[i, f].p), int(R[i, f].q))
        den = 1
        for v in z:
            den = math.lcm(den, v.denominator)
        zi = [int(v * den) for v in z]
        g = math.gcd(*zi)
        basis.append([v // g for v in zi])
    return basis


def _bit_width(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(int(v)).bit_length() for v in a.ravel())
    return int(np.abs(a).max()).bit_length()


def _normalize_rows(M: np.ndarray) -> np.ndarray:
    if M.dtype == object:
        out = M.copy()
        for i in range(out.shape[0]):
            g = math.gcd(*(int(v) for v in out[i]))
            if g > 1:
                out[i] = [int(v) // g for v in out[i]]
        return out
    g = np.gcd.reduce(np.abs(M), axis=1)
    g[g == 0] = 1
    return M // g[:, None]


def _bitmask(indices_per_ray, nbits: int) -> np.ndarray:
    W = max(1, (nbits + 63) // 64)
    Z = np.zeros((len(indices_per_ray), W), dtype=np.uint64)
    for k, idx in enumerate(indices_per_ray):
        for r in idx:
            Z[k, r // 64] |= np.uint64(1) << np.uint64(r % 64)
    return Z


def double_description(H, max_rays: int = DEFAULT_MAX_RAYS, order=None) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed full-dimensional cone {z : H z >= 0}.

    ``H`` is an integer matrix (R x D). Rows are inserted in index order
    (or ``order``) after an initial simplicial cone built from the first
    independent rows. Adjacency uses the exact combinatorial test on zero
    sets. Raises BudgetExceeded if the intermediate ray count passes
    ``max_rays``.
    """
    H = np.array([[int(v) for v in row] for row in H], dtype=object)
    R, D = H.shape
    if order is None:
        order = list(range(R))
    else:
        order = [int(i) for i in order]
        if sorted(order) != list(range(R)):
            raise ValueError("order must be a permutation of the rows")
    # initial simplicial cone from the first independent rows in insertion order
    Ht = flint.fmpq_mat(D, R)
    for k, i in enumerate(order):
        for j in range(D):
            if H[i, j]:
                Ht[j, k] = int(H[i, j])
    Rr, rank = Ht.rref()
    if rank < D:
        raise ValueError("cone is not pointed / full-dimensional (rank deficient)")
    init, r = [], 0
    for k in range(R):
        if r < rank and Rr[r, k] != 0:
            init.append(order[k])
            r += 1
    HS = flint.fmpq_mat(D, D)
    for a, i in enumerate(init):
        for j in range(D):
            if H[i, j]:
                HS[a, j] = int(H[i, j])
    inv = HS.inv()
    rays = []
    for j in range(D):
        col = [Fraction(int(inv[i, j].p), int(inv[i, j].q)) for i in range(D)]
        den = 1
        for v in col:
            den = math.lcm(den, v.denominator)
        rays.append([int(v * den) for v in col])
    Rm = _normalize_rows(np.array(rays, dtype=object))
    Z = _bitmask([[init[a] for a in range(D) if a != j] for j in range(D)], R)
    W = Z.shape[1]
    use_int = True
    hbits = _bit_width(H)
    if _bit_width(Rm) + hbits + D.bit_length() > 60:
        use_int = False
    Rm = Rm.astype(np.int64) if use_int else Rm
    Hn = H.astype(np.int64) if use_int and hbits < 62 else H
    inset = set(init)

    for i in order:
        if i in inset:
            continue
        h = Hn[i] if use_int else H[i]
        if use_int and _bit_width(Rm) + hbits + D.bit_length() > 60:
            use_int = False
            Rm = Rm.astype(object)
            h = H[i]
        vals = Rm @ (h if not use_int else h.astype(np.int64))
        vals = np.asarray(vals)
        pos = np.flatnonzero(vals > 0)
        neg = np.flatnonzero(vals < 0)
        zer = np.flatnonzero(vals == 0)
        bit_word, bit = i // 64, np.uint64(1) << np.uint64(i % 64)
        if neg.size == 0:
            Z[zer, bit_word] |= bit
            continue
        pi_, nj_, inter = _adjacent_pairs(Z, pos, neg, D)
        if pi_.size:
            vp = vals[pi_]
            vn = -vals[nj_]
            if use_int and _bit_width(vals) + _bit_width(Rm) + 1 > 62:
                use_int = False
                Rm = Rm.astype(object)
                vals = vals.astype(object)
                vp, vn = vals[pi_], -vals[nj_]
            new = vp[:, None] * Rm[nj_] + vn[:, None] * Rm[pi_]
            new = _normalize_rows(new)
            inter[:, bit_word] |= bit
        else:
            new = np.zeros((0, D), dtype=Rm.dtype)
            inter = np.zeros((0, W), dtype=np.uint64)
        Zz = Z[zer].copy()
        Zz[:, bit_word] |= bit
        Rm = np.concatenate([Rm[pos], Rm[zer], new.astype(Rm.dtype)])
        Z = np.concatenate([Z[pos], Zz, inter])
        if Rm.shape[0] > max_rays:
            raise BudgetExceeded(
                f"double description exceeded {max_rays} intermediate rays "
                f"({Rm.shape[0]} after inserting {order.index(i) + 1}/{R} constraints)"
            )
    return [tuple(int(v) for v in row) for row in Rm]


def _adjacent_pairs(Z: np.ndarray, pos: np.ndarray, neg: np.ndarray, D: int):
    """Pairs (p, n) of adjacent rays across the hyperplane, by the combinatorial test."""
    nr = Z.shape[0]
    if pos.size <= neg.size:
        outer, inner = pos, neg
    else:
        outer, inner = neg, pos
    is_inner = np.zeros(nr, dtype=bool)
    is_inner[inner] = True
    pairs_o, pairs_i, inters = [], [], []
    need = D - 2
    bs = max(1, min(256, 4_000_000 // max(1, nr * Z.shape[1])))
    for start in range(0, outer.size, bs):
        blk = outer[start:start + bs]
        common = np.bitwise_count(Z[blk][:, None, :] & Z[None, :, :]).sum(axis=2)
        near = common >= need
        for k, o in enumerate(blk):
            nb = np.flatnonzero(near[k])
            cand = nb[is_inner[nb]]
            if cand.size == 0:
                continue
            others = nb[nb != o]
            I = Z[o][None, :] & Z[cand]
            cont = np.all((Z[others][None, :, :] & I[:, None, :]) == I[:, None, :], axis=2)
            ok = cont.sum(axis=1) == 1  # only the partner itself contains the intersection
            if ok.any():
                sel = cand[ok]
                pairs_o.append(np.full(sel.size, o, dtype=np.int64))
                pairs_i.append(sel)
                inters.append(I[ok])
    if not pairs_o:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, Z.shape[1]), dtype=np.uint64)
    po = np.concatenate(pairs_o)
    pin = np.concatenate(pairs_i)
    inter = np.concatenate(inters)
    if outer is pos:
        return po, pin, inter
    return pin, po, inter


def _homogeneous_cone(h: HPolytope):
    """(K, H): w = K z parametrizes {(p, t): E p = e t}; H z >= 0 encodes G p >= g t and t >= 0."""
    N = h.n_coords
    rows = [list(r) + [-int(v)] for r, v in zip(h.eq_rows, h.eq_rhs)]
    for r in rows:
        for v in r:
            if Fraction(v).denominator != 1:
                raise ValueError("equality data must be integral")
    basis = _integer_nullspace(rows, N + 1)
    K = np.array(basis, dtype=object).T  # (N+1) x D
    Hrows = []
    for g, gv in zip(h.ineq_rows, h.ineq_rhs):
        den = 1
        for v in list(g) + [gv]:
            den = math.lcm(den, Fraction(v).denominator)
        vec = [int(Fraction(v) * den) for v in g] + [-int(Fraction(gv) * den)]
        Hrows.append([sum(vec[k] * K[k, j] for k in range(N + 1) if vec[k]) for j in range(K.shape[1])])
    Hrows.append(list(K[N]))  # t >= 0
    H = []
    seen = set()
    for row in Hrows:
        g = math.gcd(*row)
        if g == 0:
            continue
        key = tuple(v // g for v in row)
        if key not in seen:
            seen.add(key)
            H.append(list(key))
    return K, H


def _rays_to_vertices(h: HPolytope, K: np.ndarray, rays) -> list[Behavior]:
    N = h.n_coords
    out = []
    for z in rays:
        w = [sum(int(K[i, j]) * z[j] for j in range(len(z)) if z[j]) for i in range(N + 1)]
        t = w[N]
        if t <= 0:
            raise ValueError("polytope is unbounded")
        out.append(Behavior(h.scenario, tuple(Fraction(v, t) for v in w[:N])))
    return out


def _canonical(vertices) -> tuple:
    return tuple(sorted(set(vertices), key=lambda b: b.probs))


@dataclass(frozen=True)
class VertexSet:
    scenario: Scenario
    vertices: tuple
    dimension: int

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def local(self) -> list[Behavior]:
        return [v for v in self.vertices if v.is_deterministic()]

    def nonlocal_(self) -> list[Behavior]:
        return [v for v in self.vertices if not v.is_deterministic()]

    def index_of(self, b: Behavior) -> int | None:
        for i, v in enumerate(self.vertices):
            if v == b:
                return i
        return None


def enumerate_vertices(
    h: HPolytope, max_rays: int = DEFAULT_MAX_RAYS, max_rows: int = DEFAULT_MAX_ROWS, verify: bool = False
) -> VertexSet:
    """All vertices of a bounded H-polytope, canonically sorted."""
    K, H = _homogeneous_cone(h)
    if len(H) > max_rows:
        raise BudgetExceeded(f"{len(H)} inequality rows exceed the budget of {max_rows}")
    rays = double_description(H, max_rays=max_rays)
    verts = _canonical(_rays_to_vertices(h, K, rays))
    vs = VertexSet(h.scenario, verts, h.dimension)
    if verify:
        _verify_vertices(h, vs)
    return vs


def _verify_vertices(h: HPolytope, vs: VertexSet) -> None:
    """Each vertex is feasible and its tight rows have rank equal to the ambient dimension."""
    N = h.n_coords
    for v in vs.vertices:
        if not h.contains(v):
            raise AssertionError("vertex violates a constraint")
        tight = [list(r) for r in h.eq_rows]
        for row, r in zip(h.ineq_rows, h.ineq_rhs):
            if sum((c * p for c, p in zip(row, v.probs) if c), Fraction(0)) == r:
                tight.append(list(row))
        M = flint.fmpq_mat(len(tight), N)
        for i, row in enumerate(tight):
            for j, c in enumerate(row):
                if c:
                    M[i, j] = flint.fmpq(Fraction(c).numerator, Fraction(c).denominator)
        if M.rank() != N:
            raise AssertionError("point is not a vertex (active set rank deficient)")


def enumerate_vertices_bruteforce(h: HPolytope) -> VertexSet:
    """Oracle: solve every square active set of the homogenized cone and keep feasible points.

    Exponential in the number of inequalities; intended for tiny polytopes.
    """
    K, H = _homogeneous_cone(h)
    Hm = np.array(H, dtype=object)
    R, D = Hm.shape
    if math.comb(R, D - 1) > 2_000_000:
        raise BudgetExceeded(f"brute force needs {math.comb(R, D - 1)} active sets")
    found = set()
    for S in itertools.combinations(range(R), D - 1):
        M = flint.fmpq_mat(D - 1, D)
        for a, i in enumerate(S):
            for j in range(D):
                if Hm[i, j]:
                    M[a, j] = int(Hm[i, j])
        if M.rank() != D - 1:
            continue
        ns = _integer_nullspace([[int(Hm[i, j]) for j in range(D)] for i in S], D)
        z = ns[0]
        vals = [sum(int(Hm[i, j]) * z[j] for j in range(D)) for i in range(R)]
        if all(v >= 0 for v in vals):
            found.add(tuple(z))
        elif all(v <= 0 for v in vals):
            found.add(tuple(-v for v in z))
    verts = _canonical(_rays_to_vertices(h, K, sorted(found)))
    return VertexSet(h.scenario, verts, h.dimension)


# ---------------------------------------------------------------------------
# cache and text formats


def cache_dir(path=None) -> Path:
    if path is None:
        path = os.environ.get("BELLCOMM_CACHE_DIR") or Path.home() / ".cache" / "bellcomm"
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def format_vertices(vs: VertexSet) -> str:
    lines = [f"scenario: {vs.scenario}", f"dimension: {vs.dimension}", f"count: {len(vs)}"]
    for v in vs.vertices:
        lines.append(" ".join(str(p) for p in v.probs))
    return "\n".join(lines) + "\n"


def parse_vertices(text: str) -> VertexSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    s = Scenario.parse(lines[0].split(":", 1)[1])
    dim = int(lines[1].split(":", 1)[1])
    count = int(lines[2].split(":", 1)[1])
    verts = tuple(Behavior(s, tuple(Fraction(t) for t in ln.split())) for ln in lines[3:])
    if len(verts) != count:
        raise ValueError("vertex file is truncated")
    return VertexSet(s, verts, dim)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _cache_name(s: Scenario) -> str:
    tag = "_".join("".join(str(o) for o in g) for g in (s.outputs_a, s.outputs_b))
    return f"ns_vertices_{tag}.txt"


def ns_vertices(s: Scenario, cache=True, cache_path=None, max_rays: int = DEFAULT_MAX_RAYS) -> VertexSet:
    """Vertices of the NS polytope of s, read from / written to the disk cache.

    A scenario whose swapped version is cached is served by swapping parties.
    """
    from .scenario import swap_parties

    if cache:
        d = cache_dir(cache_path)
        f = d / _cache_name(s)
        if f.exists():
            vs = parse_vertices(f.read_text())
            if vs.scenario == s:
                return vs
        fs = d / _cache_name(s.swapped())
        if s.swapped() != s and fs.exists():
            vs = parse_vertices(fs.read_text())
            verts = _canonical(swap_parties(v) for v in vs.vertices)
            return VertexSet(s, verts, vs.dimension)
    vs = enumerate_vertices(ns_polytope(s), max_rays=max_rays)
    if cache:
        _atomic_write(cache_dir(cache_path) / _cache_name(s), format_vertices(vs))
    return vs


def format_table(b: Behavior) -> str:
    """Per-(x,y) block layout: one line per (x, a), columns grouped by y then b."""
    s = b.scenario
    head = ["x a |"] + [" ".join(f"y{y}b{bb}" for bb in range(s.outputs_b[y])) + " |" for y in range(s.n_b)]
    lines = [" ".join(head)]
    for x in range(s.n_a):
        for a in range(s.outputs_a[x]):
            cells = [f"{x} {a} |"]
            for y in range(s.n_b):
                cells.append(" ".join(str(b[x, y, a, bb]) for bb in range(s.outputs_b[y])) + " |")
            lines.append(" ".join(cells))
        lines.append("-" * 8)
    return "\n".join(lines[:-1]) + "\n"


# ---------------------------------------------------------------------------
# symmetry and reproducibility sweeps


def _candidate_relabelings(s: Scenario):
    """Generators of the local relabeling group mapping s to itself, tagged by type."""
    na, nb = s.n_a, s.n_b
    for y in range(nb):
        for b in range(s.outputs_b[y] - 1):
            ob = [list(range(o)) for o in s.outputs_b]
            ob[y][b], ob[y][b + 1] = b + 1, b
            yield "bob-output", dict(outputs_b=ob)
    for y in range(nb - 1):
        if s.outputs_b[y] == s.outputs_b[y + 1]:
            ib = list(range(nb))
            ib[y], ib[y + 1] = y + 1, y
            yield "bob-input", dict(inputs_b=ib)
    for x in range(na):
        for a in range(s.outputs_a[x] - 1):
            oa = [list(range(o)) for o in s.outputs_a]
            oa[x][a], oa[x][a + 1] = a + 1, a
            yield "alice-output", dict(outputs_a=oa)
    for a in range(s.max_out_a - 1):
        if all(o > a + 1 or o <= a for o in s.outputs_a):
            oa = []
            for o in s.outputs_a:
                perm = list(range(o))
                if o > a + 1:
                    perm[a], perm[a + 1] = a + 1, a
                oa.append(perm)
            yield "alice-global-output", dict(outputs_a=oa)
    for b in range(s.max_out_b - 1):
        if all(o > b + 1 or o <= b for o in s.outputs_b):
            ob = []
            for o in s.outputs_b:
                perm = list(range(o))
                if o > b + 1:
                    perm[b], perm[b + 1] = b + 1, b
                ob.append(perm)
            yield "bob-global-output", dict(outputs_b=ob)
    for x in range(na - 1):
        if s.outputs_a[x] == s.outputs_a[x + 1]:
            ia = list(range(na))
            ia[x], ia[x + 1] = x + 1, x
            yield "alice-input", dict(inputs_a=ia)


def symmetry_generators(m: ModelSpec, T=None) -> list[np.ndarray]:
    """Coordinate permutations that map the model's column set onto itself.

    Candidates are local relabelings; each is kept only after checking the
    column set is invariant, so the result is correct for any model.
    """
    if T is None:
        T = build_strategy_matrix(m)
    s = m.scenario
    cols = {col.tobytes() for col in _columns_as_rows(T)}
    gens = []
    for _, kw in _candidate_relabelings(s):
        perm = relabel_permutation(s, **kw)
        if _maps_columns(T, perm, cols):
            gens.append(perm)
    return gens


def _columns_as_rows(T) -> np.ndarray:
    return np.ascontiguousarray(T.to_dense().T.astype(np.int8))


def _maps_columns(T, perm: np.ndarray, cols: set) -> bool:
    D = _columns_as_rows(T)
    img = np.zeros_like(D)
    img[:, perm] = D
    return all(row.tobytes() in cols for row in img)


@dataclass
class VertexReport:
    index: int
    local: bool
    member: bool
    method: str  # 'local', 'uniform-marginal', 'lp', 'orbit:<rep index>'
    certificate: object = None


@dataclass
class SweepReport:
    scenario: Scenario
    model: ModelSpec
    reports: list
    orbits: int

    @property
    def all_reproducible(self) -> bool:
        return all(r.member for r in self.reports)

    @property
    def failures(self) -> list[int]:
        return [r.index for r in self.reports if not r.member]

    def summary(self) -> dict:
        counts = {}
        for r in self.reports:
            key = r.method.split(":")[0]
            counts[key] = counts.get(key, 0) + 1
        return {
            "scenario": str(self.scenario),
            "model": str(self.model),
            "vertices": len(self.reports),
            "orbits": self.orbits,
            "irreproducible": len(self.failures),
            "methods": counts,
        }


_WORKER_STATE: dict = {}


def _member_task(args):
    b, m = args
    key = (m.kind, m.direction, m.d, m.scenario)
    T = _WORKER_STATE.get(key)
    if T is None:
        T = _WORKER_STATE[key] = build_strategy_matrix(m)
    res = membership(b, m, T=T)
    return res.member, (res.certificate if not res.member else None)


def _try_uniform_marginal(b: Behavior, m: ModelSpec) -> bool:
    if m.kind != ModelKind.COD or m.direction != "ab":
        return False
    try:
        dec = simulate_uniform_marginal_vertex(b)
    except ValueError:
        return False
    return dec.reproduces(b)


def cod_reproducibility_sweep(
    s: Scenario, m: ModelSpec | None = None, vertices: VertexSet | None = None, workers=None, use_symmetry=True
) -> SweepReport:
    """Check every NS vertex against the model.

    Local vertices are reproducible trivially. Vertices are grouped into
    orbits under verified model symmetries and one representative per
    orbit is decided: by the explicit uniform-marginal construction when it
    applies, otherwise by exact LP membership.
    """
    if m is None:
        m = ModelSpec.cod(s)
    if vertices is None:
        vertices = ns_vertices(s)
    verts = list(vertices.vertices)
    T = build_strategy_matrix(m)
    gens = symmetry_generators(m, T) if use_symmetry else []
    pos = {v.probs: i for i, v in enumerate(verts)}
    parent = list(range(len(verts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for g in gens:
        for i, v in enumerate(verts):
            j = pos.get(permute_behavior(v, g).probs)
            if j is None:
                raise AssertionError("vertex set not closed under a model symmetry")
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    reps = sorted({find(i) for i in range(len(verts))})
    decided: dict[int, VertexReport] = {}
    lp_jobs = []
    for r in reps:
        v = verts[r]
        if v.is_deterministic():
            decided[r] = VertexReport(r, True, True, "local")
        elif _try_uniform_marginal(v, m):
            decided[r] = VertexReport(r, False, True, "uniform-marginal")
        else:
            lp_jobs.append(r)
    _WORKER_STATE[(m.kind, m.direction, m.d, m.scenario)] = T
    results = parallel_map(_member_task, [(verts[r], m) for r in lp_jobs], workers=workers)
    for r, (mem, cert) in zip(lp_jobs, results):
        decided[r] = VertexReport(r, False, mem, "lp", cert)
    reports = []
    for i, v in enumerate(verts):
        r = find(i)
        base = decided[r]
        if r == i:
            reports.append(base)
        else:
            det = v.is_deterministic()
            reports.append(VertexReport(i, det, base.member, "local" if det else f"orbit:{r}"))
    return SweepReport(s, m, reports, len(reps))


# ---------------------------------------------------------------------------
# noise thresholds


@dataclass
class ThresholdResult:
    lo: Fraction
    hi: Fraction
    probes: list = field(default_factory=list)  # (eps, member)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, value) -> bool:
        return self.lo <= to_fraction(value) <= self.hi


def noise_threshold(b_vtx: Behavior, b_noise: Behavior, m: ModelSpec, precision=Fraction(1, 100), T=None):
    """Bracket [lo, hi] of the critical weight where (1-eps) b_vtx + eps b_noise becomes a member.

    Binary search over the grid eps = k * precision (1/precision must be an
    integer), so the bracket endpoints are consecutive grid points. Every
    probe is an exact membership LP; lo is a probed non-member (or 0 when
    the vertex itself is a member) and hi a probed member.
    """
    precision = to_fraction(precision)
    if precision <= 0 or (1 / precision).denominator != 1:
        raise ValueError("precision must be 1/k for a positive integer k")
    if T is None:
        T = build_strategy_matrix(m)
    probes = []
    if not membership(b_noise, m, T=T).member:
        raise ValueError("noise behavior is not reproducible by the model; membership is not monotone")
    probes.append((Fraction(1), True))
    if membership(b_vtx, m, T=T).member:
        probes.append((Fraction(0), True))
        return ThresholdResult(Fraction(0), Fraction(0), probes)
    probes.append((Fraction(0), False))
    lo, hi = 0, int(1 / precision)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        eps = mid * precision
        ok = membership(mix(b_vtx, b_noise, eps), m, T=T).member
        probes.append((eps, ok))
        if ok:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(lo * precision, hi * precision, probes)


def exact_noise_threshold(b_vtx: Behavior, b_noise: Behavior, m: ModelSpec, T=None) -> Fraction:
    """The critical weight itself, as one LP: min eps s.t. (1-eps) b_vtx + eps b_noise = T q."""
    import scipy.sparse as sp

    if T is None:
        T = build_strategy_matrix(m)
    A = T.to_sparse()
    n = A.shape[1]
    diff = [u - v for u, v in zip(b_noise.probs, b_vtx.probs)]
    # T q - eps (noise - vtx) = vtx
    rows = []
    Ad = A.tocsr()
    for i in range(A.shape[0]):
        lo, hi = Ad.indptr[i], Ad.indptr[i + 1]
        row = {int(j): int(v) for j, v in zip(Ad.indices[lo:hi], Ad.data[lo:hi])}
        if diff[i]:
            row[n] = -diff[i]
        rows.append(row)
    rows.append({j: 1 for j in range(n)})
    lp = LinearProgram([0] * n + [1], rows, ["="] * len(rows), list(b_vtx.probs) + [1],
                       bounds=[(0, None)] * n + [(0, 1)])
    res = solve(lp)
    if res.status != "optimal":
        raise ValueError("noise behavior is not reproducible by the model")
    return res.value


# ---------------------------------------------------------------------------
# uniform-marginal construction


def injective_functions(n: int, support) -> list[tuple[int, ...]]:
    """All injective maps {0..n-1} -> support, in lexicographic order."""
    return list(itertools.permutations(sorted(support), n))


@dataclass
class UniformMarginalDecomposition:
    """Uniform mixture over injective f: Alice outputs f(x); Bob uses p(b | a, x, y)."""

    scenario: Scenario
    functions: list
    bob_response: dict  # (x, a, y) -> tuple of p(b|a,x,y)

    def behavior(self) -> Behavior:
        s = self.scenario
        w = Fraction(1, len(self.functions))
        acc = [Fraction(0)] * s.size
        for f in self.functions:
            for x, y in s.blocks:
                a = f[x]
                for b, pb in enumerate(self.bob_response[x, a, y]):
                    if pb:
                        acc[s.index(x, y, a, b)] += w * pb
        return Behavior(s, tuple(acc))

    def reproduces(self, b: Behavior) -> bool:
        return self.behavior() == b

    def cod_weights(self) -> dict:
        """Deterministic COD (A->B) decomposition as {(f, g): weight}.

        Bob's randomness is split into deterministic responses g[(a, y)] by
        aligning cumulative distributions (a comonotone coupling) for each f,
        which is exact because for fixed f the key (a, y) determines x.
        """
        s = self.scenario
        w = Fraction(1, len(self.functions))
        out = {}
        for f in self.functions:
            inv = {a: x for x, a in enumerate(f)}
            keys = [(a, y) for a in sorted(inv) for y in range(s.n_b)]
            cdfs = []
            cuts = {Fraction(0), Fraction(1)}
            for a, y in keys:
                probs = self.bob_response[inv[a], a, y]
                c, acc = [], Fraction(0)
                for pb in probs:
                    acc += pb
                    c.append(acc)
                    cuts.add(acc)
                cdfs.append(c)
            cuts = sorted(cuts)
            for lo, hi in zip(cuts, cuts[1:]):
                u = (lo + hi) / 2
                g = tuple(next(b for b, cv in enumerate(c) if u < cv) for c in cdfs)
                key = (f, tuple(zip(keys, g)))
                out[key] = out.get(key, Fraction(0)) + w * (hi - lo)
        return out


def simulate_uniform_marginal_vertex(b: Behavior) -> UniformMarginalDecomposition:
    """COD A->B simulation of a behavior whose Alice marginal is uniform on a common support."""
    s = b.scenario
    if not is_no_signalling(b).ok:
        raise ValueError("behavior is signalling; Alice's marginal is not well defined")
    supports = []
    for x in range(s.n_a):
        marg = [b.marginal_a(x, a) for a in range(s.outputs_a[x])]
        sup = tuple(a for a, p in enumerate(marg) if p)
        k = len(sup)
        if any(marg[a] != Fraction(1, k) for a in sup):
            raise ValueError(f"Alice's marginal at input {x} is not uniform on its support")
        supports.append(sup)
    if len(set(supports)) != 1:
        raise ValueError("Alice's support differs between inputs")
    support = supports[0]
    k = len(support)
    if k < s.n_a:
        raise ValueError(f"effective output count {k} is smaller than the number of inputs {s.n_a}")
    funcs = injective_functions(s.n_a, support)
    resp = {}
    for x in range(s.n_a):
        for a in support:
            pa = b.marginal_a(x, a)
            for y in range(s.n_b):
                resp[x, a, y] = tuple(b[x, y, a, bb] / pa for bb in range(s.outputs_b[y]))
    return UniformMarginalDecomposition(s, funcs, resp)
