"""Compilation driver, aggregated execution, artifacts, and benchmarking.

``compile_program`` runs the whole pipeline: parse, build the program
graph, select cut points, enumerate contracted paths per cut point, and
aggregate them into one decision diagram each.  The result executes cut
point to cut point under the unit cost model and serializes to a
versioned JSON artifact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

from ._kernel import get_kernel
from ._kernel.tables import AddTable, GraphTable
from .add import (BOTTOM, TOP, Add, DiagramManager, Leaf, PredOrder,
                  aggregate, choose_order, eliminate_infeasible)
from .errors import AggcError
from .exprdag import (ADD, AND, CONST, DIV, EQ, FALSE, LT, MUL, NOT, OR,
                      SUB, TRUE, VAR, ExprDag, ExprId, SymbolicState)
from .frontend import (build_program_graph, free_variables, parse_program,
                       select_cut_points)
from .simplify import LinearFeasibilityChecker, Normalizer
from .symexec import enumerate_paths, run_concrete

ORDER_STRATEGIES = ("occurrence", "random", "deepest")
CUT_STRATEGIES = ("back-edge", "condition")

ARTIFACT_FORMAT = "aggc.compiled"
ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class CompileConfig:
    """Knobs of one compilation.

    ``seed`` is required for (and only allowed with) the random predicate
    order; ``budget`` caps fragment steps at run time, None meaning
    unlimited.
    """

    unroll: int = 0
    order: str = "occurrence"
    seed: int | None = None
    normalize: bool = False
    eliminate: bool = False
    cutpoints: str = "back-edge"
    budget: int | None = None

    def __post_init__(self) -> None:
        if self.unroll < 0:
            raise ValueError("unroll count must be nonnegative")
        if self.order not in ORDER_STRATEGIES:
            raise ValueError("unknown order strategy %r" % (self.order,))
        if self.order == "random" and self.seed is None:
            raise ValueError("random predicate order needs a seed")
        if self.order != "random" and self.seed is not None:
            raise ValueError("seed is only meaningful with random order")
        if self.cutpoints not in CUT_STRATEGIES:
            raise ValueError("unknown cut point strategy %r"
                             % (self.cutpoints,))
        if self.budget is not None and self.budget <= 0:
            raise ValueError("step budget must be positive")

    def to_json(self) -> dict:
        return {"unroll": self.unroll, "order": self.order,
                "seed": self.seed, "normalize": self.normalize,
                "eliminate": self.eliminate, "cutpoints": self.cutpoints,
                "budget": self.budget}

    @classmethod
    def from_json(cls, data: Mapping) -> "CompileConfig":
        return cls(unroll=data["unroll"], order=data["order"],
                   seed=data["seed"], normalize=data["normalize"],
                   eliminate=data["eliminate"], cutpoints=data["cutpoints"],
                   budget=data["budget"])


@dataclass(frozen=True)
class CostReport:
    """Unit-cost totals of one execution, by category."""

    arith: int
    logic: int
    compare: int
    jump: int
    assign: int
    steps: int

    @property
    def total(self) -> int:
        return self.arith + self.logic + self.compare + self.jump \
            + self.assign

    def __str__(self) -> str:
        return ("total=%d arith=%d logic=%d compare=%d jump=%d assign=%d "
                "steps=%d" % (self.total, self.arith, self.logic,
                              self.compare, self.jump, self.assign,
                              self.steps))


class CompiledProgram:
    """One decision diagram per cut point, sharing one expression store.

    ``cut_nodes`` lists the diagram-owning cut points in slot order with
    the entry first; the exit never owns a diagram.  Targets are resolved
    through ``namer`` for display.
    """

    def __init__(self, dag: ExprDag, cut_nodes: Sequence[int],
                 cut_names: Sequence[str], adds: Mapping[int, Add],
                 exit_node: int, config: CompileConfig,
                 diagnostics: dict | None = None,
                 free_vars: Sequence[str] = ()):
        self.dag = dag
        self.cut_nodes = list(cut_nodes)
        self.cut_names = list(cut_names)
        self.adds = dict(adds)
        self.exit_node = exit_node
        self.config = config
        self.diagnostics = diagnostics if diagnostics is not None else {}
        self.free_vars = list(free_vars)
        self._names = dict(zip(self.cut_nodes, self.cut_names))
        self._table: AddTable | None = None

    def namer(self, target: int) -> str:
        if target == self.exit_node:
            return "te"
        return self._names[target]

    def add_for(self, cut_name: str) -> Add:
        for node, name in self._names.items():
            if name == cut_name:
                return self.adds[node]
        raise KeyError(cut_name)

    def table(self) -> AddTable:
        if self._table is None:
            self._table = AddTable(self.dag, self.cut_nodes, self.adds,
                                   self.cut_names, self.exit_node)
        return self._table


def _artifact_roots(program: CompiledProgram) -> set[ExprId]:
    """Expression handles the compiled artifact actually references."""
    roots: set[ExprId] = set()
    for node, add in program.adds.items():
        mgr = add.manager
        roots.update(mgr.order.aps)
        for m in mgr.reachable(add.root):
            if not mgr.is_terminal(m):
                roots.add(mgr.ap(m))
                continue
            v = mgr.value(m)
            if v is not BOTTOM and v is not TOP:
                for _, expr in v.state.items():
                    roots.add(expr)
    return roots


def compile_program(source: str,
                    config: CompileConfig | None = None) -> CompiledProgram:
    """Run the full pipeline on ``source``; see :class:`CompileConfig`."""
    if config is None:
        config = CompileConfig()
    dag = ExprDag()
    stmt = parse_program(dag, source)
    graph = build_program_graph(dag, stmt)
    cuts = select_cut_points(graph, config.cutpoints)
    normalizer = Normalizer(dag) if config.normalize else None
    feas = LinearFeasibilityChecker(dag) if config.eliminate else None
    cut_nodes = [graph.entry] + sorted(
        c for c in cuts if c not in (graph.entry, graph.exit))
    adds: dict[int, Add] = {}
    per_cut: dict[str, dict] = {}
    for cn in cut_nodes:
        paths = enumerate_paths(dag, graph, cuts, cn, unroll=config.unroll,
                                feas=feas, normalizer=normalizer)
        order = choose_order(paths, config.order, config.seed)
        mgr = DiagramManager(dag, order)
        add = aggregate(mgr, paths)
        before_size = add.size()
        before_depth = add.depth()
        if feas is not None:
            add = eliminate_infeasible(add, feas)
        adds[cn] = add
        bottom_reachable = any(
            mgr.is_terminal(m) and mgr.value(m) is BOTTOM
            for m in mgr.reachable(add.root))
        per_cut[graph.name(cn)] = {
            "paths": len(paths),
            "nodes_before": before_size,
            "nodes_after": add.size(),
            "depth_before": before_depth,
            "depth_after": add.depth(),
            "contains_bottom": bottom_reachable,
        }
    program = CompiledProgram(
        dag, cut_nodes, [graph.name(cn) for cn in cut_nodes], adds,
        graph.exit, config, free_vars=sorted(free_variables(dag, graph)))
    program.diagnostics = {
        "cuts": per_cut,
        "ed_total": len(dag),
        "ed_artifact": len(dag.reachable(list(_artifact_roots(program)))),
    }
    return program


def run_aggregated(program: CompiledProgram, env: Mapping[str, int],
                   budget: int | None = None):
    """Execute cut point to cut point; returns ``(state, CostReport)``."""
    if budget is None:
        budget = program.config.budget
    values, costs, steps = get_kernel().run_aggregated(program.table(), env,
                                                       budget)
    return values, CostReport(*costs, steps=steps)


# -- artifact serialization --------------------------------------------------

def _expr_entry(dag: ExprDag, e: ExprId, dense: Mapping[ExprId, int]) -> list:
    k = dag.kind(e)
    if k == CONST:
        return ["c", dag.const_value(e)]
    if k == VAR:
        return ["v", dag.var_name(e)]
    if k == TRUE:
        return ["t"]
    if k == FALSE:
        return ["f"]
    sym = {ADD: "+", SUB: "-", MUL: "*", DIV: "/", LT: "<", EQ: "==",
           AND: "&&", OR: "||"}
    if k == NOT:
        return ["!", dense[dag.lhs(e)]]
    return [sym[k], dense[dag.lhs(e)], dense[dag.rhs(e)]]


def artifact_dict(program: CompiledProgram) -> dict:
    """JSON-ready form of a compiled program (stable across processes)."""
    dag = program.dag
    topo = sorted(dag.reachable(list(_artifact_roots(program))))
    dense = {e: i for i, e in enumerate(topo)}
    slot_of = {cn: i for i, cn in enumerate(program.cut_nodes)}
    cuts = []
    for cn in program.cut_nodes:
        add = program.adds[cn]
        mgr = add.manager
        local: dict[int, int] = {}
        nodes = []
        for m in mgr.reachable(add.root):
            local[m] = len(nodes)
            if not mgr.is_terminal(m):
                nodes.append(["d", dense[mgr.ap(m)], local[mgr.lo(m)],
                              local[mgr.hi(m)]])
                continue
            v = mgr.value(m)
            if v is BOTTOM:
                nodes.append(["bot"])
            elif v is TOP:
                nodes.append(["top"])
            else:
                target = -1 if v.target == program.exit_node \
                    else slot_of[v.target]
                assigns = [[name, dense[expr]] for name, expr
                           in v.state.items()]
                nodes.append(["leaf", target, assigns])
        cuts.append({"name": program.namer(cn),
                     "order": [dense[ap] for ap in mgr.order.aps],
                     "nodes": nodes,
                     "root": local[add.root]})
    return {"format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "config": program.config.to_json(),
            "free_vars": program.free_vars,
            "exprs": [_expr_entry(dag, e, dense) for e in topo],
            "cuts": cuts}


def save_artifact(program: CompiledProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(artifact_dict(program), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _rebuild_expr(dag: ExprDag, entry: list, ids: list[ExprId]) -> ExprId:
    tag = entry[0]
    if tag == "c":
        return dag.const(entry[1])
    if tag == "v":
        return dag.var(entry[1])
    if tag == "t":
        return dag.true()
    if tag == "f":
        return dag.false()
    if tag == "!":
        return dag.neg(ids[entry[1]])
    kind = {"+": ADD, "-": SUB, "*": MUL, "/": DIV, "<": LT, "==": EQ,
            "&&": AND, "||": OR}[tag]
    return dag.intern(kind, ids[entry[1]], ids[entry[2]])


def load_artifact(path: str) -> CompiledProgram:
    """Inverse of :func:`save_artifact`.

    The loaded program runs and renders but carries no program graph; cut
    point targets are slot indices and the exit is -1.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != ARTIFACT_FORMAT:
        raise ValueError("not a compiled-program artifact: %s" % path)
    if data.get("version") != ARTIFACT_VERSION:
        raise ValueError("unsupported artifact version %r"
                         % (data.get("version"),))
    dag = ExprDag()
    ids: list[ExprId] = []
    for entry in data["exprs"]:
        ids.append(_rebuild_expr(dag, entry, ids))
    adds: dict[int, Add] = {}
    names: list[str] = []
    for slot, cut in enumerate(data["cuts"]):
        names.append(cut["name"])
        order = PredOrder(tuple(ids[i] for i in cut["order"]))
        mgr = DiagramManager(dag, order)
        built: list[int] = []
        for node in cut["nodes"]:
            tag = node[0]
            if tag == "d":
                built.append(mgr.decision(order.level(ids[node[1]]),
                                          built[node[2]], built[node[3]]))
            elif tag == "bot":
                built.append(mgr.terminal(BOTTOM))
            elif tag == "top":
                built.append(mgr.terminal(TOP))
            else:
                state = SymbolicState({name: ids[i] for name, i in node[2]})
                built.append(mgr.terminal(Leaf(node[1], state)))
        adds[slot] = Add(mgr, built[cut["root"]])
    return CompiledProgram(dag, list(range(len(names))), names, adds,
                           -1, CompileConfig.from_json(data["config"]),
                           free_vars=list(data["free_vars"]))


# -- benchmarking ------------------------------------------------------------

CSV_HEADER = ("n,config,seed_count,cost_total,cost_arith,cost_logic,"
              "cost_compare,cost_jump,cost_assign,steps,error")

SEED_COUNT_ENV = "AGGC_BENCH_SEEDS"
DEFAULT_SEED_COUNT = 1000


@dataclass(frozen=True)
class BenchRow:
    """One benchmark cell: config means over seeds at a single input."""

    n: int
    config: str
    seed_count: int
    cost_total: float | None
    cost_arith: float | None
    cost_logic: float | None
    cost_compare: float | None
    cost_jump: float | None
    cost_assign: float | None
    steps: float | None
    error: str = ""


def default_seed_count() -> int:
    raw = os.environ.get(SEED_COUNT_ENV)
    if raw:
        count = int(raw)
        if count <= 0:
            raise ValueError("seed count must be positive")
        return count
    return DEFAULT_SEED_COUNT


def _mean(values: Sequence[int]) -> float:
    return sum(values) / len(values)


def bench(source: str, var: str, values: Sequence[int],
          configs: Mapping[str, CompileConfig | None],
          seed_count: int | None = None,
          base_env: Mapping[str, int] | None = None) -> list[BenchRow]:
    """Cost table of ``source`` over ``values`` of input ``var``.

    ``configs`` maps display names to configurations; None means the
    uncompiled original program.  Random-order configs are compiled once
    per seed in ``range(seed_count)`` and averaged.  Per-cell errors are
    recorded in the row, never raised.
    """
    if seed_count is None:
        seed_count = default_seed_count()
    env0 = dict(base_env) if base_env else {}
    rows: list[BenchRow] = []
    for name, config in configs.items():
        if config is None:
            dag = ExprDag()
            graph = build_program_graph(dag, parse_program(dag, source))
            runners = [lambda env, d=dag, g=graph: run_concrete(d, g, env)]
        else:
            seeds = range(seed_count) if config.order == "random" else (0,)
            programs = []
            compile_error: AggcError | None = None
            try:
                for s in seeds:
                    cfg = config if config.order != "random" else \
                        CompileConfig(unroll=config.unroll, order="random",
                                      seed=s, normalize=config.normalize,
                                      eliminate=config.eliminate,
                                      cutpoints=config.cutpoints,
                                      budget=config.budget)
                    programs.append(compile_program(source, cfg))
            except AggcError as exc:
                compile_error = exc
            if compile_error is not None:
                for n in values:
                    rows.append(BenchRow(n, name, len(seeds), None, None,
                                         None, None, None, None, None,
                                         type(compile_error).__name__))
                continue
            runners = [
                (lambda env, p=p: run_aggregated(p, env)) for p in programs]
        for n in values:
            env = dict(env0)
            env[var] = n
            reports = []
            error = ""
            for run in runners:
                try:
                    _, report = run(env)
                except AggcError as exc:
                    error = type(exc).__name__
                    break
                reports.append(report)
            if error:
                rows.append(BenchRow(n, name, len(runners), None, None, None,
                                     None, None, None, None, error))
            else:
                rows.append(BenchRow(
                    n, name, len(runners),
                    _mean([r.total for r in reports]),
                    _mean([r.arith for r in reports]),
                    _mean([r.logic for r in reports]),
                    _mean([r.compare for r in reports]),
                    _mean([r.jump for r in reports]),
                    _mean([r.assign for r in reports]),
                    _mean([r.steps for r in reports])))
    return rows


def _csv_num(value: float | None) -> str:
    if value is None:
        return ""
    if value == int(value):
        return str(int(value))
    return repr(value)


def format_csv(rows: Sequence[BenchRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.n), r.config, str(r.seed_count), _csv_num(r.cost_total),
            _csv_num(r.cost_arith), _csv_num(r.cost_logic),
            _csv_num(r.cost_compare), _csv_num(r.cost_jump),
            _csv_num(r.cost_assign), _csv_num(r.steps), r.error]))
    return "\n".join(lines) + "\n"


def write_csv(rows: Sequence[BenchRow], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_csv(rows))
