"""Exact rational linear programming and polytope membership.

Programs are solved by a revised primal simplex over exact rationals
(python-flint ``fmpq_mat`` for the basis inverse). A floating-point HiGHS
solve may supply a starting basis; its answer is never trusted, every
status is established by the exact iterations and the returned
certificates check out in exact arithmetic.

Pivoting: Dantzig's rule, falling back to Bland's rule after a run of
degenerate pivots (``rule="bland"`` uses Bland throughout). Both are
deterministic and terminate.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import flint
import numpy as np
import scipy.sparse as sp

from .scenario import Behavior, to_fraction

try:  # optional warm start
    import highspy
except ImportError:  # pragma: no cover
    highspy = None

__all__ = [
    "LinearProgram",
    "LPResult",
    "LPError",
    "solve",
    "check_certificate",
    "Separation",
    "MembershipResult",
    "membership",
    "lp_to_text",
    "parallel_map",
]

_DEGENERATE_SWITCH = 50
_MAX_PIVOTS = 1_000_000
_INT64_BITS = 62


class LPError(RuntimeError):
    """Internal failure of the exact solver (never a statement about the program)."""


def _fq(v) -> flint.fmpq:
    f = to_fraction(v)
    return flint.fmpq(f.numerator, f.denominator)


def _frac(v: flint.fmpq) -> Fraction:
    return Fraction(int(v.p), int(v.q))


def _lcm_den(values) -> int:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


def _to_int_rows(A, m: int, n: int) -> tuple[sp.csr_matrix, list[int]]:
    """Scale every row of A to integers: returns (S A as int64 csr, scales S)."""
    if sp.issparse(A) or (isinstance(A, np.ndarray) and A.dtype != object):
        M = sp.csr_matrix(A)
        if M.shape != (m, n):
            raise ValueError(f"constraint matrix has shape {M.shape}, expected {(m, n)}")
        if M.dtype.kind in "iub":
            return M.astype(np.int64), [1] * m
        if M.dtype.kind == "f":
            if not np.all(np.mod(M.data, 1) == 0):
                raise TypeError("non-integral float constraint data; pass exact fractions")
            return M.astype(np.int64), [1] * m
        A = M.toarray().tolist()
    rows = list(A)
    if len(rows) != m:
        raise ValueError(f"constraint matrix has {len(rows)} rows, expected {m}")
    ri, ci, vals, scales = [], [], [], []
    for i, row in enumerate(rows):
        items = row.items() if isinstance(row, dict) else enumerate(row)
        entries = [(int(j), to_fraction(v)) for j, v in items]
        entries = [(j, v) for j, v in entries if v != 0]
        if len(row) != n and not isinstance(row, dict):
            raise ValueError(f"row {i} has {len(row)} entries, expected {n}")
        den = _lcm_den(v for _, v in entries)
        scales.append(den)
        for j, v in entries:
            if not 0 <= j < n:
                raise ValueError(f"column index {j} out of range in row {i}")
            iv = int(v * den)
            if abs(iv).bit_length() > _INT64_BITS:
                raise OverflowError("constraint coefficients too large for the integer kernel")
            ri.append(i)
            ci.append(j)
            vals.append(iv)
    M = sp.csr_matrix((np.array(vals, dtype=np.int64), (ri, ci)), shape=(m, n))
    return M, scales


@dataclass
class LinearProgram:
    """min/max c.x subject to A x (<=|=|>=) b and per-variable bounds.

    ``A`` may be a scipy sparse / numpy integer matrix, or a list of rows
    (dense lists or {column: value} dicts) with exact rational entries.
    ``bounds`` defaults to x >= 0 for every variable; use None for an
    infinite side.
    """

    c: list
    A: object
    relations: list
    b: list
    bounds: list | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = [to_fraction(v) for v in self.c]
        self.b = [to_fraction(v) for v in self.b]
        n, m = len(self.c), len(self.b)
        if n < 1:
            raise ValueError("a linear program needs at least one variable")
        rel = []
        for r in self.relations:
            r = {"<=": "<=", "le": "<=", "=": "=", "==": "=", "eq": "=", ">=": ">=", "ge": ">="}.get(r)
            if r is None:
                raise ValueError(f"unknown relation {r!r}")
            rel.append(r)
        if len(rel) != m:
            raise ValueError(f"{len(rel)} relations for {m} constraints")
        self.relations = rel
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if self.bounds is None:
            self.bounds = [(Fraction(0), None)] * n
        else:
            if len(self.bounds) != n:
                raise ValueError(f"{len(self.bounds)} bounds for {n} variables")
            self.bounds = [
                (None if lo is None else to_fraction(lo), None if hi is None else to_fraction(hi))
                for lo, hi in self.bounds
            ]
            for lo, hi in self.bounds:
                if lo is not None and hi is not None and lo > hi:
                    raise ValueError("empty variable bound interval")
        self._Aint, self._scale = _to_int_rows(self.A, m, n)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_constraints(self) -> int:
        return len(self.b)

    @classmethod
    def from_blocks(cls, c, blocks, bounds=None, sense="min") -> "LinearProgram":
        """Stack constraint blocks given as (matrix, relation, rhs list).

        Integer matrices stay sparse; rational blocks go through the row path.
        """
        n = len(c)
        mats, rels, rhs = [], [], []
        for A, rel, b in blocks:
            b = list(b)
            if sp.issparse(A) or (isinstance(A, np.ndarray) and A.dtype != object):
                M = sp.csr_matrix(A)
                if M.dtype.kind == "f":
                    if not np.all(np.mod(M.data, 1) == 0):
                        raise TypeError("non-integral float constraint data; pass exact fractions")
                    M = M.astype(np.int64)
                mats.append(M.astype(np.int64))
            else:
                # scaled rows need scaled right-hand sides
                M, scales = _to_int_rows(A, len(b), n)
                b = [bi * s for bi, s in zip((to_fraction(v) for v in b), scales)]
                mats.append(M)
            if mats[-1].shape != (len(b), n):
                raise ValueError(f"block shape {mats[-1].shape} does not match ({len(b)}, {n})")
            rels += [rel] * len(b) if isinstance(rel, str) else list(rel)
            rhs += b
        A = sp.vstack(mats, format="csr") if mats else sp.csr_matrix((0, n), dtype=np.int64)
        return cls(c, A, rels, rhs, bounds, sense)


@dataclass
class LPResult:
    """Outcome of :func:`solve`.

    ``duals`` and ``farkas`` refer to the constraints as written. For an
    infeasible program with all variables in [0, inf), ``farkas`` = f
    satisfies f.A >= 0 entrywise, f.b < 0, f_i >= 0 on '<=' rows and
    f_i <= 0 on '>=' rows.
    """

    status: str
    value: Fraction | None = None
    x: list | None = None
    duals: list | None = None
    farkas: list | None = None
    farkas_bounds: list | None = None
    ray: list | None = None
    pivots: int = 0
    warm_started: bool = False
    _std: object = field(default=None, repr=False)
    _xs: object = field(default=None, repr=False)
    _ys: object = field(default=None, repr=False)


class _Std:
    """Standard form min c.x, A x = b (b >= 0), x >= 0 with integer A."""

    def __init__(self, lp: LinearProgram):
        Ai, scale = lp._Aint, lp._scale
        m, n = Ai.shape
        sign = -1 if lp.sense == "max" else 1
        c = [sign * v for v in lp.c]
        b = [bi * s for bi, s in zip(lp.b, scale)]

        cols_p, cols_sign, shift, self.var_cols = [], [], [], []
        bound_rows = []  # (std column, rhs)
        k = 0
        for j, (lo, hi) in enumerate(lp.bounds):
            if lo is not None:
                self.var_cols.append([(k, 1)])
                cols_p.append(j)
                cols_sign.append(1)
                shift.append(lo)
                if hi is not None:
                    bound_rows.append((k, hi - lo))
                k += 1
            elif hi is not None:
                self.var_cols.append([(k, -1)])
                cols_p.append(j)
                cols_sign.append(-1)
                shift.append(hi)
                k += 1
            else:
                self.var_cols.append([(k, 1), (k + 1, -1)])
                cols_p += [j, j]
                cols_sign += [1, -1]
                shift.append(Fraction(0))
                k += 2
        self.shift = shift
        P = sp.csr_matrix((np.array(cols_sign, dtype=np.int64), (cols_p, range(k))), shape=(n, k))
        Astruct = (Ai @ P).tocsr()
        Acsc = Ai.tocsc()
        for j, s in enumerate(shift):
            if s:
                lo_, hi_ = Acsc.indptr[j], Acsc.indptr[j + 1]
                for r, v in zip(Acsc.indices[lo_:hi_], Acsc.data[lo_:hi_]):
                    b[r] -= int(v) * s
        self.c0 = sum((c[j] * s for j, s in enumerate(shift) if s), Fraction(0))
        cstd = [Fraction(0)] * k
        for j, entries in enumerate(self.var_cols):
            for col, sg in entries:
                cstd[col] = sg * c[j]

        rel = list(lp.relations) + ["<="] * len(bound_rows)
        m2 = m + len(bound_rows)
        if bound_rows:
            Bm = sp.csr_matrix(
                (np.ones(len(bound_rows), dtype=np.int64), (range(len(bound_rows)), [col for col, _ in bound_rows])),
                shape=(len(bound_rows), k),
            )
            Astruct = sp.vstack([Astruct, Bm], format="csr")
            b += [r for _, r in bound_rows]
        slack_rows = [i for i, r in enumerate(rel) if r != "="]
        slack_vals = [1 if rel[i] == "<=" else -1 for i in slack_rows]
        S = sp.csr_matrix(
            (np.array(slack_vals, dtype=np.int64), (slack_rows, range(len(slack_rows)))),
            shape=(m2, len(slack_rows)),
        )
        A = sp.hstack([Astruct, S], format="csr")
        cstd += [Fraction(0)] * len(slack_rows)
        flip = np.array([-1 if bi < 0 else 1 for bi in b], dtype=np.int64)
        A = (sp.diags(flip) @ A).tocsc().astype(np.int64)
        A.eliminate_zeros()
        self.A = A
        self.b = [bi * int(f) for bi, f in zip(b, flip)]
        self.c = cstd
        self.m, self.n = A.shape
        self.m_orig, self.n_orig = m, n
        self.n_struct = k
        self.flip = flip
        self.scale = list(scale) + [1] * len(bound_rows)
        self.sense_sign = sign
        self.relations = rel

    def recover_x(self, xs) -> list[Fraction]:
        out = []
        for j, entries in enumerate(self.var_cols):
            out.append(self.shift[j] + sum((sg * xs[col] for col, sg in entries), Fraction(0)))
        return out

    def row_multipliers(self, ys) -> list[Fraction]:
        """Map std-form row multipliers to the rows as written (undoing scaling and flips)."""
        return [int(self.flip[i]) * self.scale[i] * ys[i] for i in range(self.m)]


class _Core:
    """Revised simplex on A x = b, x >= 0, with m artificial unit columns n..n+m-1."""

    def __init__(self, A: sp.csc_matrix, b: list[Fraction]):
        self.A = A
        self.AT = A.T.tocsr()
        self.m, self.n = A.shape
        self.bvec = flint.fmpq_mat(self.m, 1, [_fq(v) for v in b])
        colsum = np.asarray(abs(A).sum(axis=0)).ravel() if self.n else np.zeros(1)
        kmax = int(colsum.max()) if colsum.size else 1
        self.limb_bits = max(8, _INT64_BITS - max(kmax, 1).bit_length() - 1)
        self.pivots = 0

    # -- linear algebra helpers -------------------------------------------
    def column(self, j: int) -> flint.fmpq_mat:
        vals = [0] * self.m
        if j >= self.n:
            vals[j - self.n] = 1
        else:
            lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
            for r, v in zip(self.A.indices[lo:hi], self.A.data[lo:hi]):
                vals[r] = int(v)
        return flint.fmpq_mat(self.m, 1, vals)

    def basis_matrix(self, basis) -> flint.fmpq_mat:
        M = flint.fmpq_mat(self.m, self.m)
        for k, j in enumerate(basis):
            if j >= self.n:
                M[j - self.n, k] = 1
            else:
                lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
                for r, v in zip(self.A.indices[lo:hi], self.A.data[lo:hi]):
                    M[int(r), k] = int(v)
        return M

    def aty(self, Y: list[int]) -> np.ndarray:
        """A^T Y exactly for an integer vector Y (object array of Python ints if needed)."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        bits = max((abs(v).bit_length() for v in Y), default=0)
        B = self.limb_bits
        if bits <= B:
            return self.AT @ np.array(Y, dtype=np.int64)
        mask = (1 << B) - 1
        total = np.zeros(self.n, dtype=object)
        absY = [abs(v) for v in Y]
        sgn = [1 if v >= 0 else -1 for v in Y]
        shift = 0
        while shift < bits:
            limb = np.array([s * ((a >> shift) & mask) for s, a in zip(sgn, absY)], dtype=np.int64)
            part = (self.AT @ limb).astype(object)
            total = total + np.array([int(p) << shift for p in part], dtype=object)
            shift += B
        return total

    def complete_basis(self, cols) -> list[int] | None:
        """Select m independent columns, preferring ``cols`` in order, padding with artificials."""
        cols = [j for j in dict.fromkeys(cols)]
        mat = flint.fmpq_mat(self.m, len(cols) + self.m)
        for k, j in enumerate(cols):
            col = self.column(j)
            for r in range(self.m):
                if col[r, 0] != 0:
                    mat[r, k] = col[r, 0]
        for r in range(self.m):
            mat[r, len(cols) + r] = 1
        R, rank = mat.rref()
        pivots, r = [], 0
        for k in range(mat.ncols()):
            if r < rank and R[r, k] != 0:
                pivots.append(k)
                r += 1
        allc = cols + [self.n + i for i in range(self.m)]
        out = [allc[k] for k in pivots]
        return out if len(out) == self.m else None

    # -- main loop ------------------------------------------------------------
    def run(self, cost: list[Fraction], basis: list[int], allow_artificial: bool, rule: str = "dantzig"):
        """Iterate from a basis whose solution is nonnegative.

        ``cost`` covers the n structural columns followed by the m
        artificials. When ``allow_artificial`` is False artificial columns
        never enter and basic artificials are held at zero.
        Returns (status, basis, Binv, xB, entering column for unbounded).
        """
        m, n = self.m, self.n
        den = _lcm_den(cost)
        cnum = np.array([int(v * den) for v in cost], dtype=object)
        cbits = max((abs(int(v)).bit_length() for v in cnum), default=0)
        cstruct = cnum[:n]
        cart = cnum[n:]
        if cbits < 30:
            cstruct = cstruct.astype(np.int64)
        basis = list(basis)
        B = self.basis_matrix(basis)
        try:
            Binv = B.inv()
        except ZeroDivisionError:
            raise LPError("starting basis is singular") from None
        xB = Binv * self.bvec
        for i in range(m):
            if xB[i, 0] < 0 or (not allow_artificial and basis[i] >= n and xB[i, 0] != 0):
                raise LPError("starting basis is not primal feasible")
        degenerate_run = 0
        local_rule = rule
        while True:
            if self.pivots > _MAX_PIVOTS:
                raise LPError("pivot limit exceeded")
            cB = flint.fmpq_mat(1, m, [flint.fmpq(int(cnum[j]), den) for j in basis])
            yT = cB * Binv
            Ynum, Yden = yT.numer_denom()
            Y = [int(v) for v in Ynum.entries()]
            Dy = int(Yden)
            aty = self.aty(Y)
            ybits = max((abs(v).bit_length() for v in Y), default=0)
            if (
                isinstance(cstruct.dtype, np.dtype) and cstruct.dtype == np.int64 and aty.dtype == np.int64
                and cbits + Dy.bit_length() < 61 and den.bit_length() + ybits + self.limb_bits < 120
                and den.bit_length() + int(np.abs(aty).max(initial=0)).bit_length() < 61
            ):
                red = cstruct * Dy - den * aty
            else:
                red = cstruct.astype(object) * Dy - den * aty.astype(object)
            if allow_artificial:
                rart = np.array([int(cart[i]) * Dy - den * Y[i] for i in range(m)], dtype=object)
                red = np.concatenate([np.asarray(red, dtype=object), rart])
            else:
                red = np.concatenate([np.asarray(red), np.zeros(m, dtype=np.asarray(red).dtype)])
            red[basis] = 0
            neg = np.flatnonzero(red < 0)
            cand = None
            if neg.size:
                if local_rule == "bland":
                    cand = int(neg[0])
                else:
                    cand = int(neg[int(np.argmin(red[neg]))])
            if cand is None:
                return "optimal", basis, Binv, xB, None
            j = cand
            alpha = Binv * self.column(j)
            r_best, t_best = None, None
            for i in range(m):
                a = alpha[i, 0]
                if a == 0:
                    continue
                if not allow_artificial and basis[i] >= n:
                    t = flint.fmpq(0)
                elif a > 0:
                    t = xB[i, 0] / a
                else:
                    continue
                if t_best is None or t < t_best or (t == t_best and basis[i] < basis[r_best]):
                    r_best, t_best = i, t
            if r_best is None:
                return "unbounded", basis, Binv, xB, (j, alpha)
            r = r_best
            # rank-one update of the basis inverse
            ar = alpha[r, 0]
            row = flint.fmpq_mat(1, m, [Binv[r, k] / ar for k in range(m)])
            w = flint.fmpq_mat(alpha)
            w[r, 0] = w[r, 0] - 1
            Binv = Binv - w * row
            xB = xB - alpha * t_best
            xB[r, 0] = t_best
            basis[r] = j
            self.pivots += 1
            if t_best == 0:
                degenerate_run += 1
                if degenerate_run >= _DEGENERATE_SWITCH:
                    local_rule = "bland"
            else:
                degenerate_run = 0
                local_rule = rule


def _highs_basis(core: _Core, cost: list[Fraction], with_artificials: bool):
    """Float solve to propose a starting basis. Returns (status, basis list) or (status, None)."""
    if highspy is None:
        return "unavailable", None
    m, n = core.m, core.n
    A = core.A
    if with_artificials:
        A = sp.hstack([A, sp.identity(m, dtype=np.int64, format="csc")], format="csc")
    ncol = A.shape[1]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    lp = highspy.HighsLp()
    lp.num_col_ = ncol
    lp.num_row_ = m
    lp.col_cost_ = np.array([float(v) for v in cost[:ncol]], dtype=float)
    lp.col_lower_ = np.zeros(ncol)
    lp.col_upper_ = np.full(ncol, highspy.kHighsInf)
    bf = np.array([float(v) for v in core.bvec.entries()], dtype=float)
    lp.row_lower_ = bf
    lp.row_upper_ = bf
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = A.indices.astype(np.int32)
    lp.a_matrix_.value_ = A.data.astype(float)
    h.passModel(lp)
    h.run()
    st = h.getModelStatus()
    MS = highspy.HighsModelStatus
    if st == MS.kOptimal:
        status = "optimal"
    elif st == MS.kInfeasible:
        status = "infeasible"
    elif st in (MS.kUnbounded, MS.kUnboundedOrInfeasible):
        status = "unbounded"
    else:
        return "unknown", None
    basis = h.getBasis()
    if not basis.valid:
        return status, None
    BS = highspy.HighsBasisStatus
    cols = [j for j, s in enumerate(basis.col_status) if s == BS.kBasic]
    rows = [core.n + i for i, s in enumerate(basis.row_status) if s == BS.kBasic]
    # artificial columns appended to the model play the role of row slacks
    cols = [j if j < n else n + (j - n) for j in cols]
    return status, cols + rows


def _try_basis(core: _Core, cols, allow_artificial: bool):
    if cols is None:
        return None
    basis = core.complete_basis(cols)
    if basis is None:
        return None
    Binv = core.basis_matrix(basis).inv()
    xB = Binv * core.bvec
    for i in range(core.m):
        v = xB[i, 0]
        if v < 0 or (not allow_artificial and basis[i] >= core.n and v != 0):
            return None
    return basis


def solve(lp: LinearProgram, warm_start: bool = True, rule: str = "dantzig") -> LPResult:
    """Solve exactly. Status is one of 'optimal', 'infeasible', 'unbounded'."""
    if rule not in ("dantzig", "bland"):
        raise ValueError("rule must be 'dantzig' or 'bland'")
    std = _Std(lp)
    core = _Core(std.A, std.b)
    m, n = core.m, core.n
    cost2 = list(std.c) + [Fraction(0)] * m
    cost1 = [Fraction(0)] * n + [Fraction(1)] * m
    use_warm = warm_start and highspy is not None and m > 0
    warm_used = False

    basis2 = None
    if use_warm:
        status, cols = _highs_basis(core, cost2, with_artificials=False)
        if status == "optimal":
            basis2 = _try_basis(core, cols, allow_artificial=False)
            warm_used = basis2 is not None
    if basis2 is None:
        start = [n + i for i in range(m)]
        if use_warm:
            _, cols1 = _highs_basis(core, cost1, with_artificials=True)
            b1 = _try_basis(core, cols1, allow_artificial=True)
            if b1 is not None:
                start, warm_used = b1, True
        status1, basis1, Binv1, xB1, _ = core.run(cost1, start, allow_artificial=True, rule=rule)
        value1 = sum((xB1[i, 0] for i in range(m) if basis1[i] >= n), flint.fmpq(0))
        if value1 > 0:
            cB = flint.fmpq_mat(1, m, [1 if j >= n else 0 for j in basis1])
            w = [_frac(v) for v in (cB * Binv1).entries()]
            ystd = [-v for v in w]  # A^T y >= 0, b.y < 0
            mult = std.row_multipliers(ystd)
            res = LPResult(
                "infeasible",
                farkas=mult[: std.m_orig],
                farkas_bounds=mult[std.m_orig:],
                pivots=core.pivots,
                warm_started=warm_used,
                _std=std,
                _ys=ystd,
            )
            _verify_farkas(std, ystd)
            return res
        basis2 = basis1

    status, basis, Binv, xB, extra = core.run(cost2, basis2, allow_artificial=False, rule=rule)
    xs = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            xs[j] = _frac(xB[i, 0])
    if status == "unbounded":
        j, alpha = extra
        ray_std = [Fraction(0)] * n
        ray_std[j] = Fraction(1)
        for i, bj in enumerate(basis):
            if bj < n:
                ray_std[bj] = -_frac(alpha[i, 0])
        ray = []
        for entries in std.var_cols:
            ray.append(sum((sg * ray_std[col] for col, sg in entries), Fraction(0)))
        return LPResult(
            "unbounded", x=std.recover_x(xs), ray=ray, pivots=core.pivots, warm_started=warm_used, _std=std, _xs=xs
        )
    cB = flint.fmpq_mat(1, m, [_fq(cost2[j]) for j in basis])
    ystd = [_frac(v) for v in (cB * Binv).entries()]
    value_std = sum((std.c[j] * xs[j] for j in range(n) if xs[j]), Fraction(0))
    value = std.sense_sign * (value_std + std.c0)
    duals = [std.sense_sign * v for v in std.row_multipliers(ystd)[: std.m_orig]]
    res = LPResult(
        "optimal",
        value=value,
        x=std.recover_x(xs),
        duals=duals,
        pivots=core.pivots,
        warm_started=warm_used,
        _std=std,
        _xs=xs,
        _ys=ystd,
    )
    _verify_optimal(std, xs, ystd)
    return res


def _aty_exact(A: sp.csc_matrix, y: list[Fraction]) -> list[Fraction]:
    out = []
    for j in range(A.shape[1]):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        out.append(sum((int(v) * y[r] for r, v in zip(A.indices[lo:hi], A.data[lo:hi])), Fraction(0)))
    return out


def _ax_exact(A: sp.csc_matrix, x: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * A.shape[0]
    for j, xj in enumerate(x):
        if xj:
            lo, hi = A.indptr[j], A.indptr[j + 1]
            for r, v in zip(A.indices[lo:hi], A.data[lo:hi]):
                out[r] += int(v) * xj
    return out


def _verify_farkas(std: _Std, y: list[Fraction]) -> None:
    if any(v < 0 for v in _aty_exact(std.A, y)):
        raise LPError("Farkas certificate fails A^T y >= 0")
    if not sum((bi * yi for bi, yi in zip(std.b, y)), Fraction(0)) < 0:
        raise LPError("Farkas certificate fails b.y < 0")


def _verify_optimal(std: _Std, xs, ys) -> None:
    if any(v < 0 for v in xs) or _ax_exact(std.A, xs) != list(std.b):
        raise LPError("primal solution infeasible")
    red = [c - v for c, v in zip(std.c, _aty_exact(std.A, ys))]
    if any(v < 0 for v in red):
        raise LPError("dual solution infeasible")
    if sum((c * x for c, x in zip(std.c, xs)), Fraction(0)) != sum((b * y for b, y in zip(std.b, ys)), Fraction(0)):
        raise LPError("duality gap")


def check_certificate(lp: LinearProgram, res: LPResult) -> bool:
    """Independently re-verify a result in exact arithmetic."""
    std = _Std(lp)
    if res.status == "infeasible":
        ys = res._ys
        try:
            _verify_farkas(std, ys)
        except LPError:
            return False
        return True
    if res.status == "optimal":
        # primal feasibility in the original form
        x = res.x
        for (lo, hi), xi in zip(lp.bounds, x):
            if (lo is not None and xi < lo) or (hi is not None and xi > hi):
                return False
        Ac = lp._Aint.tocsc()
        ax = _ax_exact(Ac, x)
        for i, rel in enumerate(lp.relations):
            lhs, rhs = ax[i], lp.b[i] * lp._scale[i]
            if (rel == "=" and lhs != rhs) or (rel == "<=" and lhs > rhs) or (rel == ">=" and lhs < rhs):
                return False
        if sum((c * xi for c, xi in zip(lp.c, x)), Fraction(0)) != res.value:
            return False
        try:
            _verify_optimal(std, res._xs, res._ys)
        except LPError:
            return False
        return True
    if res.status == "unbounded":
        Ac = lp._Aint.tocsc()
        ar = _ax_exact(Ac, res.ray)
        for i, rel in enumerate(lp.relations):
            if (rel == "=" and ar[i] != 0) or (rel == "<=" and ar[i] > 0) or (rel == ">=" and ar[i] < 0):
                return False
        for (lo, hi), r in zip(lp.bounds, res.ray):
            if (lo is not None and r < 0) or (hi is not None and r > 0):
                return False
        slope = sum((c * r for c, r in zip(lp.c, res.ray)), Fraction(0))
        return slope < 0 if lp.sense == "min" else slope > 0
    return False


def lp_to_text(lp: LinearProgram) -> str:
    """CPLEX-LP style text with coefficients written as exact fractions."""

    def term(v, j):
        s = "-" if v < 0 else "+"
        return f"{s} {abs(v)} x{j}"

    lines = ["\\ exact rational coefficients", "Minimize" if lp.sense == "min" else "Maximize"]
    obj = " ".join(term(v, j) for j, v in enumerate(lp.c) if v) or "0 x0"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    A = lp._Aint
    for i in range(lp.n_constraints):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        s = lp._scale[i]
        terms = " ".join(term(Fraction(int(v), s), int(j)) for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        lines.append(f" c{i}: {terms or '0 x0'} {lp.relations[i]} {lp.b[i]}")
    lines.append("Bounds")
    for j, (lo, hi) in enumerate(lp.bounds):
        los = "-inf" if lo is None else str(lo)
        his = "+inf" if hi is None else str(hi)
        lines.append(f" {los} <= x{j} <= {his}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def parallel_map(fn, items, workers: int | None = None):
    """Map in a process pool (or serially); results keep the input order."""
    items = list(items)
    if workers is None:
        workers = int(os.environ.get("BELLCOMM_WORKERS", 1))
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# membership


@dataclass
class Separation:
    """Functional G over behavior coordinates with G(column) <= bound for every
    strategy column and G(target) > bound."""

    coefficients: list[Fraction]
    bound: Fraction
    value: Fraction

    @property
    def violation(self) -> Fraction:
        return self.value - self.bound

    def evaluate(self, b: Behavior) -> Fraction:
        return sum((c * p for c, p in zip(self.coefficients, b.probs) if c), Fraction(0))


@dataclass
class MembershipResult:
    member: bool
    weights: dict | None = None  # strategy label -> weight
    certificate: Separation | None = None
    lp: LPResult | None = None

    def __bool__(self) -> bool:
        return self.member


def membership(b: Behavior, m, T=None, budget=None, warm_start: bool = True) -> MembershipResult:
    """Decide whether b = T q for a probability vector q over the model's strategies."""
    from .models import build_strategy_matrix

    if b.scenario != m.scenario:
        raise ValueError("behavior and model live in different scenarios")
    if T is None:
        T = build_strategy_matrix(m, budget=budget)
    A = T.to_sparse()
    ncols = A.shape[1]
    ones = sp.csr_matrix(np.ones((1, ncols), dtype=np.int64))
    lp = LinearProgram.from_blocks(
        [0] * ncols,
        [(A, "=", b.probs), (ones, "=", [1])],
    )
    res = solve(lp, warm_start=warm_start)
    if res.status == "optimal":
        weights = {int(T.labels[j]): q for j, q in enumerate(res.x) if q}
        return MembershipResult(True, weights=weights, lp=res)
    if res.status != "infeasible":
        raise LPError(f"membership program reported {res.status}")
    f = res.farkas
    y_p, y0 = f[:-1], f[-1]
    # f_p.T_j + f_0 >= 0 for all columns and f_p.b + f_0 < 0: negate to a '<=' functional
    coeffs = [-v for v in y_p]
    bound = y0
    value = sum((c * p for c, p in zip(coeffs, b.probs) if c), Fraction(0))
    sep = Separation(coeffs, bound, value)
    return MembershipResult(False, certificate=sep, lp=res)
