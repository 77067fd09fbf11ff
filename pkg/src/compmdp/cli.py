"""Command-line front end: ``compmdp solve|check|gen|flatten|selftest``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import diagram as d
from .algebra import flatten
from .dsl import Program, parse_component, parse_diagram, tokenize
from .errors import (
    ActionSetMismatch,
    ArityMismatch,
    CompMDPError,
    DiagramSyntaxError,
    FrozenMultiExit,
    FrozenNotAlmostSure,
    MalformedModel,
    SchedulerExplosion,
    UnboundName,
    ValidationError,
    WireCycle,
)
from .semantics import EvalConfig, Evaluator, extract_optimal, scheduler_from_tag

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2  # syntax, validation, unbound names, unreadable files
EXIT_SHAPE = 3  # arity mismatches and cycles of bare wires
EXIT_SOLVE = 4  # scheduler explosion, bad freeze

ERROR_CODES = (
    ((DiagramSyntaxError, ValidationError, UnboundName, MalformedModel, OSError), EXIT_INPUT),
    ((ArityMismatch, WireCycle, ActionSetMismatch), EXIT_SHAPE),
    ((SchedulerExplosion, FrozenMultiExit, FrozenNotAlmostSure), EXIT_SOLVE),
)


def fmt(x: float) -> str:
    return f"{x:.12f}"


# ------------------------------------------------------------------- loading


def is_component_text(text: str) -> bool:
    toks = tokenize(text)
    return bool(toks) and toks[0].text in ("mdp", "omdp")


def load_program(path: str | Path) -> Program:
    """A diagram file, or a single component file wrapped as ``solve C``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if is_component_text(text):
        comp = parse_component(text)
        return Program({}, d.prim(path.name, comp), 1, 1)
    return parse_diagram(text, base_dir=path.parent)


def _top(prog: Program, path) -> d.Expr:
    if prog.expr is None:
        raise DiagramSyntaxError(0, 0, "a 'solve' clause", f"no expression to solve in {path}")
    return prog.expr


# ------------------------------------------------------------------ commands


def cmd_solve(args) -> int:
    prog = load_program(args.file)
    expr = _top(prog, args.file)
    i = args.entrance or prog.entrance or 1
    j = args.exit or prog.exit or 1
    m, n = expr.sig.body
    if not (1 <= i <= m and 1 <= j <= n):
        print(f"error: entrance/exit ({i},{j}) outside the diagram's {m} entrances and {n} exits", file=sys.stderr)
        return EXIT_INPUT
    cfg = EvalConfig(max_schedulers=args.max_schedulers, prune=not args.no_prune, prune_eps=args.prune_eps)
    runs = 5 if args.bench else 1
    times = []
    for _ in range(runs):
        ev = Evaluator(prog.bindings, cfg, threads=args.threads)
        t0 = time.perf_counter()
        front = ev.evaluate(expr)
        times.append(time.perf_counter() - t0)
    p, r, tag = extract_optimal(front, i, j)
    print(f"p={fmt(p)} r={fmt(r)}")
    stats = ev.stats.as_dict()
    stats["wallTime"] = sum(times) / len(times)
    stats["runs"] = runs
    if args.bench:
        print(f"time={stats['wallTime']:.6f}s mean of {runs} runs")
    if args.all:
        print("entrance\texit\tp\tr")
        for a in range(1, m + 1):
            for b in range(1, n + 1):
                pa, ra, _ = extract_optimal(front, a, b)
                print(f"{a}\t{b}\t{fmt(pa)}\t{fmt(ra)}")
    if args.stats:
        stats.update({"entrance": i, "exit": j, "p": p, "r": r, "frontSize": len(front)})
        Path(args.stats).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.scheduler_out:
        sched = scheduler_from_tag(tag)
        order = flatten(expr, prog.bindings).body.positions
        lines = [f"{q} {sched[q]}" for q in order if q in sched]
        Path(args.scheduler_out).write_text("".join(x + "\n" for x in lines), encoding="utf-8")
    if args.plot:
        from .plotting import plot_front

        plot_front(front, i, j, args.plot, stats["frontSizes"])
    return EXIT_OK


def cmd_check(args) -> int:
    from .randgen import terminates

    prog = load_program(args.file)  # parsing validates every loaded component
    comps = d.components(prog.expr, prog.bindings) if prog.expr is not None else []
    for name in prog.bindings:
        for c in d.components(d.var(name, prog.bindings), prog.bindings):
            if c not in comps:
                comps.append(c)
    print(f"ok: {len(comps)} component(s) valid")
    if args.termination and prog.expr is not None:
        flat = flatten(prog.expr, prog.bindings)
        if terminates(flat):
            print("terminating: every scheduler reaches an exit almost surely")
        else:
            print("WARNING: some scheduler can avoid every exit forever; "
                  "memoryless optimality is not guaranteed for this model")
    return EXIT_OK


def cmd_gen(args) -> int:
    from .generators import generate_packets, generate_patrol, generate_wholesale

    if args.family == "patrol":
        g = generate_patrol(args.tasks, args.rooms, args.floors, args.buildings, di=args.di, seed=args.seed)
    elif args.family == "wholesale":
        g = generate_wholesale(args.stages, args.hubs, args.regions, di=args.di, seed=args.seed)
    else:
        g = generate_packets(args.steps, args.blocks, args.variants, fz=args.fz, di=args.di, seed=args.seed)
    paths = g.write(args.output)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_flatten(args) -> int:
    from .export import to_native, to_prism

    prog = load_program(args.file)
    flat = flatten(_top(prog, args.file), prog.bindings)
    if args.format == "prism":
        text = to_prism(flat, args.entrance or prog.entrance or 1)
    else:
        text = to_native(flat, args.name)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"{args.output}: {len(flat.body.positions)} positions")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .axioms import run_axioms

    failed = 0
    for res in run_axioms(args.seed, args.cases):
        status = "PASS" if res.ok else "FAIL"
        failed += not res.ok
        print(f"{status} {res.name}: {res.instances} instances, "
              f"{res.structural_failures} structural and {res.semantic_failures} semantic failures")
    print("all axioms hold" if not failed else f"{failed} axiom(s) failed")
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="compmdp", description="Compositional solving of open MDP string diagrams.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal (p, r) at one entrance/exit pair")
    s.add_argument("file")
    s.add_argument("--entrance", type=int, default=None)
    s.add_argument("--exit", type=int, default=None)
    s.add_argument("--max-schedulers", type=int, default=EvalConfig.max_schedulers)
    s.add_argument("--no-prune", action="store_true")
    s.add_argument("--prune-eps", type=float, default=0.0)
    s.add_argument("--stats", metavar="OUT.json")
    s.add_argument("--scheduler-out", metavar="OUT.sched")
    s.add_argument("--plot", metavar="OUT.png", help="render the front at (entrance, exit)")
    s.add_argument("--all", action="store_true", help="also print a tab-separated table of every pair")
    s.add_argument("--bench", action="store_true", help="average wall time over five runs")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="validate components, optionally check termination")
    c.add_argument("file")
    c.add_argument("--termination", action="store_true")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("gen", help="generate a benchmark family")
    g.add_argument("family", choices=["patrol", "wholesale", "packets"])
    g.add_argument("-o", "--output", default=".")
    g.add_argument("--di", choices=["high", "mid", "low"], default="high")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tasks", type=int, default=2)
    g.add_argument("--rooms", type=int, default=2)
    g.add_argument("--floors", type=int, default=1)
    g.add_argument("--buildings", type=int, default=1)
    g.add_argument("--stages", type=int, default=2)
    g.add_argument("--hubs", type=int, default=2)
    g.add_argument("--regions", type=int, default=4)
    g.add_argument("--steps", type=int, default=100)
    g.add_argument("--blocks", type=int, default=50)
    g.add_argument("--variants", type=int, default=3)
    g.add_argument("--fz", choices=["none", "int"], default="none")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("flatten", help="export the monolithic model")
    f.add_argument("file")
    f.add_argument("-o", "--output")
    f.add_argument("--format", choices=["native", "prism"], default="native")
    f.add_argument("--entrance", type=int, default=None, help="initial entrance for prism output")
    f.add_argument("--name", default="flat")
    f.set_defaults(func=cmd_flatten)

    t = sub.add_parser("selftest", help="check the monoidal axioms on seeded random instances")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--cases", type=int, default=100)
    t.set_defaults(func=cmd_selftest)
    return ap


def exit_code(err: BaseException) -> int:
    for types, code in ERROR_CODES:
        if isinstance(err, types):
            return code
    return EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CompMDPError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code(err)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
