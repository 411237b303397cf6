"""Registered experiments: causal-influence and entropy curves, and the COD-irreproducible vertex."""
from __future__ import annotations

import csv
import itertools
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .inequalities import get_functional
from .measures import (
    CSV_COLUMNS,
    InfeasibleQuery,
    ValueTarget,
    curve_csv,
    format_number,
    min_causal_influence,
    min_causal_influence_given_value,
    min_message_entropy,
    sweep,
)
from .models import ModelSpec, build_strategy_matrix
from .lp import membership
from .polytope import cod_reproducibility_sweep, exact_noise_threshold, noise_threshold, ns_vertices
from .scenario import Behavior, Scenario, make_I3322_pr, relabel_permutation, uniform_behavior

__all__ = [
    "DEFAULT_POINTS",
    "FIGURES",
    "REPRODUCIBLE_SCENARIOS",
    "TABLE1_SCENARIO",
    "grid",
    "table1_vertex",
    "figure_rows",
    "run_figure",
    "find_up_to_relabeling",
    "Table1Report",
    "table1",
    "reproducibility_list",
]

DEFAULT_POINTS = 101
TABLE1_SCENARIO = Scenario.parse("[(3,3,3)(3,2)]")
REPRODUCIBLE_SCENARIOS = ("[(2,2)(3,3)]", "[(2,2)(2,2,2)]", "[(3,2)(2,2,2)]", "[(2,2)(3,3,3)]", "[(3,2)(3,3,3)]")

# entries equal to 1/2, keyed (x, y, a, b)
_TABLE1_SUPPORT = (
    (0, 0, 2, 1), (0, 0, 2, 2), (0, 1, 2, 0), (0, 1, 2, 1),
    (1, 0, 1, 2), (1, 0, 2, 1), (1, 1, 1, 1), (1, 1, 2, 0),
    (2, 0, 1, 2), (2, 0, 2, 1), (2, 1, 1, 0), (2, 1, 2, 1),
)


def table1_vertex() -> Behavior:
    """The COD-irreproducible vertex of the [(3,3,3)(3,2)] no-signalling polytope."""
    sup = set(_TABLE1_SUPPORT)
    return Behavior.from_function(TABLE1_SCENARIO, lambda x, y, a, b: Fraction(1, 2) if (x, y, a, b) in sup else 0)


def grid(lo, hi, points: int) -> list[Fraction]:
    """Evenly spaced exact grid including both ends."""
    lo, hi = Fraction(lo), Fraction(hi)
    if points < 2:
        return [lo]
    return [lo + (hi - lo) * k / (points - 1) for k in range(points)]


# ---------------------------------------------------------------------------
# figures


@dataclass(frozen=True)
class _Figure:
    functional: str
    lo: Fraction
    hi: Fraction
    kind: str  # 'influence' or 'entropy'
    ds: tuple = ()


FIGURES = {
    "fig2": _Figure("I3322", Fraction(0), Fraction(1), "influence"),
    "fig3a": _Figure("CHSH", Fraction(0), Fraction(1, 2), "entropy", (2, 3, 4)),
    "fig3b": _Figure("I3322", Fraction(0), Fraction(1), "entropy", (2, 3, 4)),
    "fig3c": _Figure("I2233_ns", Fraction(0), Fraction(2, 3), "entropy", (2, 3, 4)),
}


def _tasks(name: str, points: int):
    fig = FIGURES[name]
    ts = grid(fig.lo, fig.hi, points)
    if fig.kind == "influence":
        return [(name, "full", t, None) for t in ts] + [(name, "value", t, None) for t in ts]
    return [(name, "entropy", t, d) for d in fig.ds for t in ts]


def _run_task(task):
    """One CSV row (or None when the value is not reachable) for a figure task."""
    name, what, t, d = task
    fig = FIGURES[name]
    f = get_functional(fig.functional)
    s = f.scenario
    if what == "full":
        # family p = v PR-type + (1 - v) noise with I3322 = 2v - 1
        m = ModelSpec.cpd(s)
        r = min_causal_influence(make_I3322_pr((t + 1) / 2), m)
        return (t, r.value, "C_X->B_full", str(m), "")
    if what == "value":
        m = ModelSpec.cpd(s)
        r = min_causal_influence_given_value(f, t, m)
        return (t, r.value, "C_X->B_value", str(m), "")
    m = ModelSpec.mcpd(s, d)
    try:
        r = min_message_entropy(ValueTarget(f, t), d)
    except InfeasibleQuery:
        return None
    return (t, r.value, "H_min", str(m), d)


def figure_rows(name: str, points: int = DEFAULT_POINTS, workers=None) -> list[tuple]:
    """All rows of a figure, in deterministic order (unreachable points omitted)."""
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; known: {', '.join(FIGURES)}")
    return [r for r in sweep(_run_task, _tasks(name, points), workers) if r is not None]


def _format_row(row, exact: bool) -> list[str]:
    out = []
    for v in row:
        if isinstance(v, Fraction) and not exact:
            out.append(repr(float(v)))
        elif isinstance(v, (Fraction, float, int)):
            out.append(format_number(v))
        else:
            out.append("" if v is None else str(v))
    return out


def run_figure(name: str, points: int = DEFAULT_POINTS, path=None, workers=None, exact: bool = False) -> str:
    """CSV text of a figure; with ``path`` results are appended as they finish and
    an interrupted run resumes from the rows already on disk."""
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; known: {', '.join(FIGURES)}")
    tasks = _tasks(name, points)
    done: dict[tuple, list[str]] = {}
    partial = None
    if path is not None:
        path = Path(path)
        partial = path.with_name(path.name + ".partial")
        if partial.exists():
            with open(partial, newline="") as fh:
                for rec in csv.reader(fh):
                    if rec and rec[0] != "param":
                        done[(rec[0], rec[2], rec[4])] = rec
    todo = [t for t in tasks if _task_key(t, exact) not in done]
    fh = None
    if partial is not None:
        fresh = not partial.exists()
        fh = open(partial, "a", newline="")
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(CSV_COLUMNS)
    try:
        chunk = max(1, int(workers or os.environ.get("BELLCOMM_WORKERS", 1) or 1))
        for i in range(0, len(todo), chunk):
            part = todo[i:i + chunk]
            for task, row in zip(part, sweep(_run_task, part, workers)):
                rec = _format_row(row, exact) if row is not None else _skip_record(task, exact)
                done[_task_key(task, exact)] = rec
                if fh is not None:
                    w.writerow(rec)
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()
    rows = [done[_task_key(t, exact)] for t in tasks]
    rows = [r for r in rows if r[1] != ""]
    text = curve_csv(rows)
    if path is not None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as out:
            out.write(text)
        os.replace(tmp, path)
        partial.unlink(missing_ok=True)
    return text


_MEASURE_OF = {"full": "C_X->B_full", "value": "C_X->B_value", "entropy": "H_min"}


def _task_key(task, exact: bool) -> tuple:
    _, what, t, d = task
    p = format_number(t) if exact else repr(float(t))
    return (p, _MEASURE_OF[what], "" if d is None else str(d))


def _skip_record(task, exact: bool) -> list[str]:
    # unreachable value: recorded in the partial file with an empty value so resumes skip it
    p, meas, dd = _task_key(task, exact)
    return [p, "", meas, "", dd]


# ---------------------------------------------------------------------------
# the irreproducible [(3,3,3)(3,2)] vertex


def _relabelings(s: Scenario):
    perms_x = [p for p in itertools.permutations(range(s.n_a)) if all(s.outputs_a[p[x]] == s.outputs_a[x] for x in range(s.n_a))]
    perms_y = [p for p in itertools.permutations(range(s.n_b)) if all(s.outputs_b[p[y]] == s.outputs_b[y] for y in range(s.n_b))]
    out_a = list(itertools.product(*[list(itertools.permutations(range(o))) for o in s.outputs_a]))
    out_b = list(itertools.product(*[list(itertools.permutations(range(o))) for o in s.outputs_b]))
    return itertools.product(perms_x, perms_y, out_a, out_b)


def find_up_to_relabeling(b: Behavior, vertices) -> tuple[int, tuple] | None:
    """(index, relabeling) of a vertex equal to a local relabeling of b, or None."""
    index = {v.probs: i for i, v in enumerate(vertices)}
    s = b.scenario
    for rl in _relabelings(s):
        perm = relabel_permutation(s, *rl)
        probs = [None] * s.size
        for i, j in enumerate(perm):
            probs[j] = b.probs[i]
        i = index.get(tuple(probs))
        if i is not None:
            return i, rl
    return None


@dataclass
class Table1Report:
    vertex: Behavior
    found_index: int | None
    relabeling: tuple | None
    n_vertices: int
    member: bool
    certificate_violation: Fraction | None
    threshold_lo: Fraction
    threshold_hi: Fraction
    exact_threshold: Fraction
    sweeps: list = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [
            f"scenario {TABLE1_SCENARIO}: {self.n_vertices} no-signalling vertices",
            f"table vertex found: {self.found_index is not None} (index {self.found_index}, relabeling {self.relabeling})",
            f"COD A->B member: {self.member}",
        ]
        if self.certificate_violation is not None:
            out.append(f"separating functional violation: {format_number(self.certificate_violation)}")
        out.append(f"noise threshold bracket: [{format_number(self.threshold_lo)}, {format_number(self.threshold_hi)}]"
                   f" = [{float(self.threshold_lo):.4f}, {float(self.threshold_hi):.4f}]")
        out.append(f"exact critical noise weight: {format_number(self.exact_threshold)} = {float(self.exact_threshold):.6f}")
        for rep in self.sweeps:
            out.append(f"sweep {rep['scenario']}: {rep}")
        return out


def table1(precision=Fraction(1, 100), sweep_all: bool = False, workers=None) -> Table1Report:
    """Locate the vertex, decide COD (A->B) membership and bracket the white-noise threshold."""
    s = TABLE1_SCENARIO
    v = table1_vertex()
    vs = ns_vertices(s)
    found = find_up_to_relabeling(v, vs.vertices)
    m = ModelSpec.cod(s, "ab")
    T = build_strategy_matrix(m)
    res = membership(v, m, T=T)
    viol = res.certificate.violation if res.certificate is not None else None
    u = uniform_behavior(s)
    th = noise_threshold(v, u, m, precision=precision, T=T)
    ex = exact_noise_threshold(v, u, m, T=T)
    sweeps = reproducibility_list(workers) if sweep_all else []
    return Table1Report(v, found[0] if found else None, found[1] if found else None, len(vs.vertices),
                        res.member, viol, th.lo, th.hi, ex, sweeps)


def reproducibility_list(workers=None) -> list[dict]:
    """COD (A->B) reproducibility summaries of every vertex in the listed scenarios."""
    out = []
    for text in REPRODUCIBLE_SCENARIOS:
        s = Scenario.parse(text)
        out.append(cod_reproducibility_sweep(s, ModelSpec.cod(s), workers=workers).summary())
    return out
