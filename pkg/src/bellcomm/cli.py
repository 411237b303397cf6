"""Command-line interface (``bellcomm``)."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2

_KINDS = ("lhv", "cpd", "cpd2", "cod", "cod_mix", "mcpd")


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, dict):
        return {str(k): _jsonable(w) for k, w in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(w) for w in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def _emit(args, payload: dict, lines: list[str] | None = None):
    if args.format == "json":
        print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    else:
        for line in lines if lines is not None else [f"{k},{_jsonable(v)}" for k, v in payload.items()]:
            print(line)


def _model(args, scenario):
    from .models import ModelSpec

    return ModelSpec(args.model, scenario, getattr(args, "direction", "ab"), getattr(args, "d", 1) or 1)


def _add_model_flags(p, default="lhv", kinds=_KINDS):
    p.add_argument("--model", choices=kinds, default=default)
    p.add_argument("--direction", choices=("ab", "ba"), default="ab")
    p.add_argument("--d", type=int, default=2, help="message dimension (mcpd)")


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    from .scenario import is_no_signalling, read_behavior, validate_behavior

    b = read_behavior(args.file)
    v = validate_behavior(b)
    ns = is_no_signalling(b)
    payload = {"scenario": str(b.scenario), "valid": bool(v), "no_signalling": bool(ns),
               "bad_blocks": [list(k) for k in v.bad_blocks], "out_of_range": [list(k) for k in v.out_of_range],
               "signalling": list(ns.violations)}
    lines = [f"scenario {b.scenario}", f"valid: {bool(v)}", f"no-signalling: {bool(ns)}"]
    lines += [f"  block {x},{y} sums to {v.block_sums[x, y]}" for x, y in v.bad_blocks]
    lines += [f"  entry {k} outside [0, 1]" for k in v.out_of_range]
    lines += [f"  {e}" for e in ns.violations]
    _emit(args, payload, lines)
    return EXIT_OK if v and ns else EXIT_NO


def cmd_membership(args) -> int:
    from .lp import membership
    from .scenario import read_behavior

    b = read_behavior(args.file)
    m = _model(args, b.scenario)
    res = membership(b, m, budget=args.budget)
    from .models import decode_strategy

    if res.member:
        lines = [f"member of {m}"]
        wts = {}
        for lab, w in sorted(res.weights.items()):
            st = decode_strategy(m, lab)
            desc = f"alice={st.alice} bob={st.bob}" + (f" message={st.message}" if st.message else "")
            lines.append(f"  {w}  strategy {lab}: {desc}")
            wts[lab] = w
        _emit(args, {"model": str(m), "member": True, "weights": wts}, lines)
        return EXIT_OK
    cert = res.certificate
    coords = {f"{x} {y} {a} {bb}": c for (x, y, a, bb), c in zip(b.scenario.coords, cert.coefficients) if c}
    lines = [f"not a member of {m}",
             f"separating functional G with G(strategy) <= {cert.bound} and G(behavior) = {cert.value}:"]
    lines += [f"  {k} {v}" for k, v in coords.items()]
    _emit(args, {"model": str(m), "member": False, "bound": cert.bound, "value": cert.value, "coefficients": coords},
          lines)
    return EXIT_NO


def cmd_measure(args) -> int:
    from .inequalities import get_functional
    from .measures import (
        ValueTarget,
        message_polytope,
        min_average_communication,
        min_causal_influence,
        min_message_entropy,
    )
    from .models import ModelSpec
    from .scenario import read_behavior, to_fraction

    if (args.file is None) == (args.functional is None):
        raise ValueError("give either a behavior file or --functional with --value")
    if args.functional is not None:
        if args.value is None:
            raise ValueError("--functional needs --value")
        target = ValueTarget(get_functional(args.functional), to_fraction(args.value))
    else:
        target = read_behavior(args.file)
    s = target.scenario
    what = args.measure
    if what == "influence":
        kind = args.model if args.model in ("cpd", "cod") else "cpd"
        m = ModelSpec(kind, s, args.direction)
        r = min_causal_influence(target, m) if args.functional is None else None
        if r is None:
            from .measures import min_causal_influence_given_value

            r = min_causal_influence_given_value(target.functional, target.value, m)
        _emit(args, {"measure": r.measure, "model": str(m), "value": r.value},
              [f"{r.measure} under {m}: {r.value}"])
    elif what == "communication":
        r = min_average_communication(target, args.d, args.direction)
        val = r.exact_value if r.exact_value is not None else r.value
        _emit(args, {"measure": "average_communication", "model": str(r.model), "value": val,
                     "weight_by_messages": r.weight_by_messages},
              [f"average communication under {r.model}: {_jsonable(val)} bits"])
    elif what == "entropy":
        r = min_message_entropy(target, args.d, args.direction)
        _emit(args, {"measure": "message_entropy", "value": r.value, "vertices": r.vertices},
              [f"min H(m) for d={args.d}: {r.value!r} bits"] + [f"  at p(m) = {_jsonable(v)}" for v in r.vertices])
    else:
        P = message_polytope(target, args.d, args.direction)
        _emit(args, {"measure": "message_polytope", "dimension": P.dimension, "vertices": P.vertices},
              [f"message polytope (d={args.d}), dimension {P.dimension}, {len(P.vertices)} vertices"]
              + [f"  {_jsonable(v)}" for v in P.vertices])
    return EXIT_OK


def cmd_ineq(args) -> int:
    from .inequalities import catalog, evaluate, format_functional, get_functional, model_bound, ns_max
    from .scenario import read_behavior

    if args.ineq_cmd == "list":
        rows = []
        for name in catalog():
            f = get_functional(name)
            rows.append({"name": name, "scenario": str(f.scenario), "bound": f.bound, "sense": f.sense,
                         "model": f.bound_model})
        _emit(args, {"functionals": rows},
              [f"{r['name']}\t{r['scenario']}\t{r['sense']} {r['bound']}\t{r['model']}" for r in rows])
        return EXIT_OK
    f = get_functional(args.name)
    if args.ineq_cmd == "show":
        print(format_functional(f), end="")
        return EXIT_OK
    if args.ineq_cmd == "bound":
        if args.model == "ns":
            v = ns_max(f)
            _emit(args, {"functional": f.name, "model": "ns", "value": v}, [f"{f.name} over NS: {v}"])
            return EXIT_OK
        m = _model(args, f.scenario)
        r = model_bound(f, m)
        w = r.witness
        lines = [f"{f.name} {r.sense} under {m}: {r.value}"]
        if w is not None:
            lines.append(f"  witness alice={w.alice} bob={w.bob}" + (f" message={w.message}" if w.message else ""))
        _emit(args, {"functional": f.name, "model": str(m), "value": r.value, "sense": r.sense,
                     "witness": None if w is None else w.label}, lines)
        return EXIT_OK
    b = read_behavior(args.file)
    v = evaluate(f, b)
    ok = f.satisfied_by(v)
    _emit(args, {"functional": f.name, "value": v, "bound": f.bound, "satisfied": ok},
          [f"{f.name} = {v} ({'satisfies' if ok else 'violates'} {f.sense} {f.bound})"])
    return EXIT_OK if ok else EXIT_NO


def cmd_vertices(args) -> int:
    from .polytope import format_vertices, ns_vertices
    from .scenario import Scenario

    s = Scenario.parse(args.scenario)
    vs = ns_vertices(s)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(format_vertices(vs))
    _emit(args, {"scenario": str(s), "dimension": vs.dimension, "vertices": len(vs.vertices),
                 "local": len(vs.local()), "nonlocal": len(vs.nonlocal_())},
          [f"{s}: dimension {vs.dimension}, {len(vs.vertices)} vertices "
           f"({len(vs.local())} local, {len(vs.nonlocal_())} nonlocal)"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .models import ModelSpec
    from .polytope import cod_reproducibility_sweep
    from .scenario import Scenario

    s = Scenario.parse(args.scenario)
    m = ModelSpec(args.model, s, args.direction)
    rep = cod_reproducibility_sweep(s, m, workers=args.workers)
    summ = rep.summary()
    summ["failures"] = rep.failures
    _emit(args, summ, [f"{k}: {_jsonable(v)}" for k, v in summ.items()])
    return EXIT_OK if rep.all_reproducible else EXIT_NO


def cmd_figure(args) -> int:
    from .experiments import run_figure

    text = run_figure(args.name, args.points, path=args.out, workers=args.workers, exact=args.exact)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_table1(args) -> int:
    from .experiments import table1

    r = table1(precision=Fraction(args.precision), sweep_all=args.sweep_all, workers=args.workers)
    payload = {"found": r.found_index is not None, "index": r.found_index, "member": r.member,
               "threshold_lo": r.threshold_lo, "threshold_hi": r.threshold_hi,
               "exact_threshold": r.exact_threshold, "vertices": r.n_vertices, "sweeps": r.sweeps}
    _emit(args, payload, r.lines())
    return EXIT_OK


def cmd_quantum(args) -> int:
    from .inequalities import evaluate, get_functional, make_chained
    from .quantum import augmented_protocol_value, chained_optimal_behavior, chsh_optimal_behavior

    if args.what == "chsh":
        fb = chsh_optimal_behavior()
        v = fb.correlator(0, 0) + fb.correlator(0, 1) + fb.correlator(1, 0) - fb.correlator(1, 1)
        _emit(args, {"chsh_correlator_value": v, "tsirelson": 2 * math.sqrt(2)}, [f"<CHSH> = {v!r}"])
    elif args.what == "chained":
        fb = chained_optimal_behavior(args.n, "canonical")
        f = make_chained(args.n, "canonical")
        v = sum(w * fb.correlator(x, y) for (x, y), w in f.correlators.items())
        g = make_chained(args.n, "cod_valid")
        bv = evaluate(g, chained_optimal_behavior(args.n, "cod_valid").to_behavior())
        _emit(args, {"n": args.n, "chained_value": v, "cod_valid_value": float(bv), "cod_valid_bound": g.bound},
              [f"chained n={args.n}: correlator sum {v!r} (2n cos(pi/2n) = {2 * args.n * math.cos(math.pi / (2 * args.n))!r})",
               f"cod-valid form: {float(bv)!r} ({g.sense} {g.bound} classically)"])
    else:
        r = augmented_protocol_value()
        bound = get_functional("M332").bound
        _emit(args, {"value": r.value, "branch_values": r.branch_values, "message_entropy": r.message_entropy,
                     "classical_bound": bound},
              [f"M332 value {r.value!r} (4 + 2 sqrt 2 = {4 + 2 * math.sqrt(2)!r}); classical MCPD(2) bound {bound}",
               f"branches {r.branch_values}", f"message entropy {r.message_entropy!r} bits"])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellcomm", description="Bell scenarios with relaxed locality")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--budget", type=int, default=None, help="maximum number of strategies to enumerate")
    p.add_argument("--cache-dir", default=None, help="vertex cache (also BELLCOMM_CACHE_DIR)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (also BELLCOMM_WORKERS)")
    sub = p.add_subparsers(dest="cmd", required=True)

    q = sub.add_parser("validate", help="check normalization, positivity and no-signalling")
    q.add_argument("file")
    q.set_defaults(fn=cmd_validate)

    q = sub.add_parser("membership", help="exact membership LP (exit 0 member, 1 non-member)")
    q.add_argument("file")
    _add_model_flags(q)
    q.set_defaults(fn=cmd_membership)

    q = sub.add_parser("measure", help="causal influence, communication, message entropy or polytope")
    q.add_argument("file", nargs="?")
    q.add_argument("--functional")
    q.add_argument("--value")
    q.add_argument("--measure", choices=("influence", "communication", "entropy", "polytope"), default="influence")
    _add_model_flags(q, default="cpd")
    q.set_defaults(fn=cmd_measure)

    q = sub.add_parser("ineq", help="inequality catalog")
    isub = q.add_subparsers(dest="ineq_cmd", required=True)
    isub.add_parser("list").set_defaults(fn=cmd_ineq)
    r = isub.add_parser("show")
    r.add_argument("name")
    r.set_defaults(fn=cmd_ineq)
    r = isub.add_parser("bound")
    r.add_argument("name")
    _add_model_flags(r, kinds=_KINDS + ("ns",))
    r.set_defaults(fn=cmd_ineq)
    r = isub.add_parser("eval")
    r.add_argument("name")
    r.add_argument("file")
    r.set_defaults(fn=cmd_ineq)

    q = sub.add_parser("vertices", help="enumerate no-signalling vertices")
    q.add_argument("scenario")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_vertices)

    q = sub.add_parser("sweep", help="reproducibility of every NS vertex by a model")
    q.add_argument("scenario")
    _add_model_flags(q, default="cod")
    q.set_defaults(fn=cmd_sweep)

    q = sub.add_parser("figure", help="curve CSV (param,value,measure,model,d)")
    q.add_argument("name", choices=("fig2", "fig3a", "fig3b", "fig3c"))
    q.add_argument("--points", type=int, default=101)
    q.add_argument("--out")
    q.add_argument("--exact", action="store_true", help="write rationals as p/q")
    q.set_defaults(fn=cmd_figure)

    q = sub.add_parser("table1", help="the COD-irreproducible [(3,3,3)(3,2)] vertex: location, membership, noise threshold")
    q.add_argument("--precision", default="1/100")
    q.add_argument("--sweep-all", action="store_true", help="also run the reproducibility list")
    q.set_defaults(fn=cmd_table1)

    q = sub.add_parser("quantum", help="quantum values")
    q.add_argument("what", choices=("chsh", "chained", "augmented"))
    q.add_argument("--n", type=int, default=3)
    q.set_defaults(fn=cmd_quantum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    from .models import default_budget, set_default_budget

    # global flags apply to this invocation only
    saved_env = {k: os.environ.get(k) for k in ("BELLCOMM_CACHE_DIR", "BELLCOMM_WORKERS")}
    saved_budget = default_budget()
    if args.cache_dir:
        os.environ["BELLCOMM_CACHE_DIR"] = args.cache_dir
    if args.budget is not None:
        set_default_budget(args.budget)
    if args.workers is not None:
        os.environ["BELLCOMM_WORKERS"] = str(args.workers)
    try:
        return args.fn(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        set_default_budget(saved_budget)
        for k, v in saved_env.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v

if __name__ == "__main__":
    sys.exit(main())
