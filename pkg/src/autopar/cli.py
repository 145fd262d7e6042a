"""Command line: analyze, parallelize, run and bench ``.mpl`` programs."""

from __future__ import annotations

import argparse
import json
import os
import sys

from autopar import corpus
from autopar.deciders import DEFAULT, parse_decider
from autopar.errors import Diagnostic, MplRuntimeError
from autopar.frontend import ast as A, format_program, parse_program
from autopar.parallelizer import DEFAULT_THRESHOLD
from autopar.pipeline import PAR, SEQ, RunConfig, load_externals_file, plan_program, run_program
from autopar.profiler import emit
from autopar.runtime import STEAL_POLICIES

EXIT_DIAGNOSTIC = 2
EXIT_RUNTIME = 3


def load_source(path):
    """A file path, or the name of a bundled corpus program."""
    if not os.path.exists(path):
        name = os.path.splitext(os.path.basename(path))[0]
        try:
            prog = corpus.get(name)
        except KeyError:
            raise FileNotFoundError(f"{path}: no such file or corpus program") from None
        return prog.load()
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), path)


def parse_args_for(fn: A.FunctionDecl, raw):
    if len(raw) != len(fn.params):
        raise ValueError(f"'{fn.name}' expects {len(fn.params)} argument(s), got {len(raw)}")
    values = []
    for p, text in zip(fn.params, raw):
        if p.type == A.INT:
            values.append(int(text))
        elif p.type == A.FLOAT:
            values.append(float(text))
        elif p.type == A.BOOL:
            if text not in ("true", "false"):
                raise ValueError(f"parameter '{p.name}' expects true or false")
            values.append(text == "true")
        else:
            raise ValueError(f"parameter '{p.name}' of type {p.type} cannot come from the command line")
    return values


def externals_of(ns):
    return load_externals_file(ns.externals, not ns.externals_only)


def _externals_flags(p):
    p.add_argument("--externals", help="signature file for external functions")
    p.add_argument("--externals-only", action="store_true",
                   help="use only the --externals file, without the bundled builtin signatures")


def cmd_analyze(ns, out):
    program = load_source(ns.path)
    table, _ = plan_program(program, externals_of(ns), ns.threshold)

    def note(node):
        tokens = table.display.get(node.nid)
        return ", ".join(tokens) if tokens else None

    out.write(format_program(program, note))
    return 0


def cmd_parallelize(ns, out):
    program = load_source(ns.path)
    _, plan = plan_program(program, externals_of(ns), ns.threshold)
    out.write(plan.format())
    return 0


def config_from(ns) -> RunConfig:
    parse_decider(ns.decider, ns.atc_invert)  # fail early on a bad spec
    return RunConfig(
        workers=ns.workers, steal=ns.steal, split=ns.split, pps=ns.pps, decider=ns.decider,
        seed=ns.seed, atc_invert=ns.atc_invert, threshold=ns.threshold,
        profile=True,
    )


def cmd_run(ns, out):
    program = load_source(ns.path)
    args = parse_args_for(program.function(program.entry), ns.args)
    config = config_from(ns)
    result = run_program(program, args, ns.mode, config, externals_of(ns))
    for line in result.output:
        out.write(line + "\n")
    if ns.mode == PAR:
        stats = result.stats
        stats.config.update({"program": ns.path, "args": args, "mode": ns.mode})
        if ns.profile:
            with open(ns.profile, "w", encoding="utf-8") as fh:
                fh.write(emit(stats, "json") + "\n")
        if ns.stats:
            sys.stderr.write(emit(stats, "table") + "\n")
    return 0


def _csv_ints(text):
    return tuple(int(x) for x in text.split(",") if x)


def cmd_bench(ns, out):
    from autopar.bench import DEFAULT_DECIDERS, BenchProgram, BenchSpec, run_bench
    from autopar.report import write_report

    names = ns.programs or corpus.names()
    programs = []
    for name in names:
        cp = corpus.get(name)
        args = cp.small_args if ns.size == "small" else cp.default_args
        programs.append(BenchProgram(name, cp.load(), tuple(args)))
    for d in ns.decider or ():
        parse_decider(d)
    spec = BenchSpec(
        programs=programs,
        workers=_csv_ints(ns.workers_list),
        deciders=tuple(ns.decider) if ns.decider else DEFAULT_DECIDERS,
        split=(ns.split, ns.pps),
        reps=ns.reps,
        timeout=ns.timeout,
        steal=ns.steal,
        seed=ns.seed,
        threshold=ns.threshold,
        compare_splits=not ns.no_split_compare,
    )
    progress = (lambda msg: sys.stderr.write(msg + "\n")) if ns.verbose else None
    result = run_bench(spec, progress)
    paths = write_report(result, ns.out)
    with open(paths["summary.txt"], encoding="utf-8") as fh:
        out.write(fh.read())
    if ns.profile:
        with open(ns.profile, "w", encoding="utf-8") as fh:
            json.dump([r["profile"] for r in result.records if r["profile"]], fh, indent=2)
    out.write(f"\nwrote {len(paths)} files to {ns.out}\n")
    return 0


def _runtime_flags(p, include_workers=True):
    if include_workers:
        p.add_argument("--workers", type=int, default=0,
                       help="worker threads (default: hardware threads)")
    p.add_argument("--steal", choices=STEAL_POLICIES, default="random")
    p.add_argument("--split", choices=("binary", "lazy"), default="lazy")
    p.add_argument("--pps", type=int, default=3, help="iterations between lazy split checks")
    p.add_argument("--seed", type=int, default=0, help="seed for the random steal policy")
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD,
                   help="statements a method needs before it is parallelized")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autopar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print statements with their access signatures")
    p.add_argument("path")
    _externals_flags(p)
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("parallelize", help="print the parallel plan")
    p.add_argument("path")
    _externals_flags(p)
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_parallelize)

    p = sub.add_parser("run", help="run a program sequentially or in parallel")
    p.add_argument("path")
    p.add_argument("args", nargs="*", help="arguments for main")
    p.add_argument("--mode", choices=(SEQ, PAR), default=PAR)
    _externals_flags(p)
    _runtime_flags(p)
    p.add_argument("--decider", default=DEFAULT, help="e.g. maxlevel:12, surplus:3, combo:stack:64+maxtasks:24")
    p.add_argument("--atc-invert", action="store_true",
                   help="ATC creates tasks for subtrees predicted under 1 ms instead of over")
    p.add_argument("--profile", metavar="OUT.json", help="write run statistics as JSON")
    p.add_argument("--stats", action="store_true", help="print run statistics to stderr")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="speedup sweep over the corpus")
    p.add_argument("programs", nargs="*", help="corpus programs (default: all)")
    p.add_argument("--size", choices=("small", "default"), default="default")
    p.add_argument("--workers", dest="workers_list", default="1,2,4")
    p.add_argument("--decider", action="append", help="repeat to sweep several deciders")
    _runtime_flags(p, include_workers=False)
    p.add_argument("--reps", type=int, default=7)
    p.add_argument("--timeout", type=float, default=300.0, help="seconds per run")
    p.add_argument("--out", default="bench-out")
    p.add_argument("--profile", metavar="OUT.json", help="write every cell's statistics")
    p.add_argument("--no-split-compare", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns, out)
    except MplRuntimeError as exc:
        for line in exc.output or ():
            out.write(line + "\n")
        sys.stderr.write(f"{exc}\n")
        return EXIT_RUNTIME
    except Diagnostic as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_DIAGNOSTIC
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
