"""Command-line driver: compile, run, bench, emit.

Exit codes: 0 success, 1 runtime error in the interpreted program, 2 usage
error (bad flags, missing inputs, unknown names), 3 internal invariant
violation.  All output is deterministic for identical invocations.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from . import add as add_mod
from . import exprdag
from .errors import (AggcError, AggregationConflictError, BottomReachedError,
                     InternalInvariantError, MissingInputError)
from .runtime import (DEFAULT_SEED_COUNT, CompileConfig, bench,
                      compile_program, default_seed_count, load_artifact,
                      run_aggregated, save_artifact, write_csv,
                      _artifact_roots)


class UsageError(Exception):
    pass


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (UsageError, MissingInputError)):
        return 2
    if isinstance(exc, (BottomReachedError, AggregationConflictError,
                        InternalInvariantError)):
        return 3
    if isinstance(exc, AggcError):
        return 1
    raise exc


def _read_source(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror)) \
            from None


def _parse_inputs(pairs: Sequence[str] | None) -> dict[str, int]:
    env: dict[str, int] = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise UsageError("--input expects name=value, got %r" % pair)
        try:
            env[name] = int(value)
        except ValueError:
            raise UsageError("input %s needs an integer, got %r"
                             % (name, value)) from None
    return env


def _config_from_args(args: argparse.Namespace) -> CompileConfig:
    try:
        return CompileConfig(unroll=args.unroll, order=args.order,
                             seed=args.seed, normalize=args.normalize,
                             eliminate=args.eliminate,
                             cutpoints=args.cutpoints, budget=args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


_FLAG_VALUES = {"on": True, "true": True, "1": True,
                "off": False, "false": False, "0": False}


def _parse_config_spec(spec: str) -> tuple[str, CompileConfig | None]:
    """``NAME`` or ``NAME=key[=value],...``; the name ``original`` (with no
    spec) selects the uncompiled program."""
    name, sep, rest = spec.partition("=")
    if not name:
        raise UsageError("--config needs a name, got %r" % spec)
    if "," in name:
        raise UsageError("config name %r must not contain commas" % name)
    if not sep:
        if name == "original":
            return name, None
        return name, CompileConfig()
    fields: dict[str, object] = {}
    for token in rest.split(","):
        key, ksep, value = token.partition("=")
        if key in ("normalize", "eliminate"):
            if not ksep:
                fields[key] = True
            elif value in _FLAG_VALUES:
                fields[key] = _FLAG_VALUES[value]
            else:
                raise UsageError("bad flag value %r in config %s"
                                 % (token, name))
        elif key in ("unroll", "seed", "budget"):
            try:
                fields[key] = int(value)
            except ValueError:
                raise UsageError("%s needs an integer in config %s"
                                 % (key, name)) from None
        elif key in ("order", "cutpoints"):
            fields[key] = value
        else:
            raise UsageError("unknown config key %r in config %s"
                             % (key, name))
    try:
        return name, CompileConfig(**fields)  # type: ignore[arg-type]
    except ValueError as exc:
        raise UsageError("config %s: %s" % (name, exc)) from None


# -- subcommands -------------------------------------------------------------

def cmd_compile(args: argparse.Namespace) -> int:
    source = _read_source(args.file)
    config = _config_from_args(args)
    program = compile_program(source, config)
    diag = program.diagnostics
    print("compiled %d cut points; ED nodes total %d, artifact %d"
          % (len(program.cut_nodes), diag["ed_total"], diag["ed_artifact"]))
    for name in program.cut_names:
        stats = diag["cuts"][name]
        print("cut %s: paths %d, nodes %d -> %d, depth %d -> %d, bottom %s"
              % (name, stats["paths"], stats["nodes_before"],
                 stats["nodes_after"], stats["depth_before"],
                 stats["depth_after"],
                 "present" if stats["contains_bottom"] else "absent"))
    out = args.output or os.path.splitext(args.file)[0] + ".aggc.json"
    save_artifact(program, out)
    print("wrote %s" % out)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    program = _load(args.artifact)
    env = _parse_inputs(args.input)
    missing = [name for name in program.free_vars if name not in env]
    if missing:
        raise UsageError("missing input variable%s: %s"
                         % ("s" if len(missing) > 1 else "",
                            ", ".join(missing)))
    state, report = run_aggregated(program, env, budget=args.budget)
    for name in sorted(state):
        print("%s=%d" % (name, state[name]))
    if args.cost:
        print("cost: %s" % report)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    source = _read_source(args.file)
    if args.step <= 0:
        raise UsageError("--step must be positive")
    if args.to < getattr(args, "from"):
        raise UsageError("--to must not be below --from")
    values = list(range(getattr(args, "from"), args.to + 1, args.step))
    configs: dict[str, CompileConfig | None] = {}
    for spec in args.config:
        name, config = _parse_config_spec(spec)
        if name in configs:
            raise UsageError("duplicate config name %r" % name)
        configs[name] = config
    seed_count = args.seeds if args.seeds is not None else \
        default_seed_count()
    if seed_count <= 0:
        raise UsageError("--seeds must be positive")
    rows = bench(source, args.var, values, configs, seed_count=seed_count,
                 base_env=_parse_inputs(args.input))
    write_csv(rows, args.out)
    print("wrote %s (%d rows)" % (args.out, len(rows)))
    if args.svg:
        _write_svg(rows, list(configs), args.svg)
        print("wrote %s" % args.svg)
    return 0


def _write_svg(rows, config_names: list[str], path: str) -> None:
    try:
        import matplotlib
    except ImportError:
        raise UsageError("--svg needs matplotlib (install the plot extra)") \
            from None
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "aggc"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in config_names:
        xs = [r.n for r in rows if r.config == name and not r.error]
        ys = [r.cost_total for r in rows if r.config == name and not r.error]
        ax.plot(xs, ys, label=name)
    ax.set_xlabel("input")
    ax.set_ylabel("cost")
    ax.legend()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _load(path: str):
    try:
        return load_artifact(path)
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror)) \
            from None
    except (ValueError, KeyError) as exc:
        raise UsageError("bad artifact %s: %s" % (path, exc)) from None


def cmd_emit(args: argparse.Namespace) -> int:
    program = _load(args.artifact)
    if not args.dot_add and not args.dot_ed:
        raise UsageError("nothing to emit; pass --dot-add and/or --dot-ed")
    os.makedirs(args.out_dir, exist_ok=True)
    for cut in args.dot_add or ():
        try:
            diagram = program.add_for(cut)
        except KeyError:
            raise UsageError("unknown cut point %r" % cut) from None
        path = os.path.join(args.out_dir, "add_%s.dot" % cut)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(add_mod.to_dot(diagram, namer=program.namer,
                                    name="add_%s" % cut))
        print("wrote %s" % path)
    if args.dot_ed:
        roots = sorted(_artifact_roots(program))
        path = os.path.join(args.out_dir, "ed.dot")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(exprdag.to_dot(program.dag, roots))
        print("wrote %s" % path)
    return 0


# -- parser ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggc",
        description="Aggregate while-programs into decision diagrams "
                    "and execute them cut point to cut point.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a .while file to an artifact")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="artifact path "
                   "(default: <file>.aggc.json)")
    p.add_argument("--unroll", type=int, default=0, metavar="K")
    p.add_argument("--order", default="occurrence",
                   choices=("occurrence", "random", "deepest"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--eliminate", action="store_true")
    p.add_argument("--cutpoints", default="back-edge",
                   choices=("back-edge", "condition"))
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="run a compiled artifact")
    p.add_argument("artifact")
    p.add_argument("--input", action="append", metavar="NAME=VALUE")
    p.add_argument("--cost", action="store_true",
                   help="print the cost report")
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="cost table over a range of inputs")
    p.add_argument("file")
    p.add_argument("--var", required=True)
    p.add_argument("--from", type=int, required=True)
    p.add_argument("--to", type=int, required=True)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--config", action="append", required=True,
                   metavar="NAME[=KEY[=VALUE],...]")
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=None,
                   help="seed count for random-order configs "
                        "(default $AGGC_BENCH_SEEDS or %d)"
                        % DEFAULT_SEED_COUNT)
    p.add_argument("--svg", default=None, metavar="FILE")
    p.add_argument("--input", action="append", metavar="NAME=VALUE",
                   help="fix additional input variables")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("emit", help="emit DOT renderings from an artifact")
    p.add_argument("artifact")
    p.add_argument("--dot-add", action="append", metavar="CUT",
                   help="write the decision diagram of one cut point")
    p.add_argument("--dot-ed", action="store_true",
                   help="write the shared expression store")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_emit)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 2
    except AggcError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
