"""Concrete, symbolic, and lockstep execution over program graphs.

``run_concrete`` executes the original program under the unit cost model.
``enumerate_paths`` symbolically executes the acyclic fragment between cut
points, producing one contracted path (condition literals plus parallel
assignment) per way through; loop unrolling passes through revisits of the
starting cut point a bounded number of times.  ``run_lockstep`` drives the
concrete and symbolic components together and asserts that the symbolic
side, evaluated against the fragment entry state, tracks the concrete side
step for step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import StepBudgetExceededError
from .exprdag import (EQ, LT, TRUE, FALSE, AND, OR, NOT, ExprDag, ExprId,
                      SymbolicState, eval_expr, pretty, substitute)
from .frontend import (Assign, If, N_ASSIGN, N_BRANCH, N_EXIT, N_SKIP,
                       ProgramGraph, Seq, Skip, Stmt, While)
from .simplify import FeasResult, FeasibilityChecker, Normalizer


# -- reference interpreter (AST level, no cost model) ---------------------

def interpret_ast(dag: ExprDag, stmt: Stmt, env: dict[str, int],
                  budget: int | None = None) -> dict[str, int]:
    """Small-step AST interpreter; the independent semantics oracle."""
    state = dict(env)
    stack: list[Stmt] = [stmt]
    steps = 0
    while stack:
        if budget is not None:
            steps += 1
            if steps > budget:
                raise StepBudgetExceededError(budget)
        s = stack.pop()
        if isinstance(s, Assign):
            state[s.name], _ = eval_expr(dag, s.expr, state)
        elif isinstance(s, Skip):
            pass
        elif isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        elif isinstance(s, If):
            taken, _ = eval_expr(dag, s.cond, state)
            stack.append(s.then if taken else s.orelse)
        elif isinstance(s, While):
            taken, _ = eval_expr(dag, s.cond, state)
            if taken:
                stack.append(s)
                stack.append(s.body)
        else:
            raise TypeError("not a statement: %r" % (s,))
    return state


def run_concrete(dag: ExprDag, graph: ProgramGraph, env: dict[str, int],
                 budget: int | None = None):
    """Execute the program graph; returns ``(final state, CostReport)``.

    Costs follow the unit model with tree-shaped expression accounting:
    one per arithmetic/logical/comparison operator occurrence, one per
    assignment, one conditional jump per branch node.
    """
    from ._kernel import get_kernel
    from ._kernel.tables import GraphTable
    from .runtime import CostReport

    table = GraphTable(dag, graph)
    values, costs, steps = get_kernel().run_graph(table, env, budget)
    return values, CostReport(*costs, steps=steps)


# -- contracted cut point paths -------------------------------------------

@dataclass(frozen=True)
class Literal:
    """One branch decision: ``ap`` is the positive comparison (canonical
    when normalization is on); ``loop`` is the deciding while-condition
    node (-1 for if branches); ``depth`` is the unroll revisit count at
    which the decision was recorded."""

    ap: ExprId
    positive: bool
    loop: int = -1
    depth: int = 0

    def signed(self) -> tuple[ExprId, bool]:
        return (self.ap, self.positive)


@dataclass(frozen=True)
class ContractedPath:
    source: int
    literals: tuple[Literal, ...]
    state: SymbolicState
    target: int

    def condition(self, dag: ExprDag) -> ExprId:
        cond = dag.true()
        first = True
        for lit in self.literals:
            term = lit.ap if lit.positive else dag.neg(lit.ap)
            cond = term if first else dag.conj(cond, term)
            first = False
        return cond

    def holds(self, dag: ExprDag, env: dict[str, int]) -> bool:
        return all(eval_expr(dag, lit.ap, env)[0] == lit.positive
                   for lit in self.literals)


def branch_cases(dag: ExprDag, cond: ExprId,
                 normalizer: Normalizer | None = None
                 ) -> list[tuple[tuple[tuple[ExprId, bool], ...], bool]]:
    """Split a branch condition into ``(literals, outcome)`` alternatives.

    The literal conjunctions partition the condition's truth table, so
    exactly one alternative applies to any concrete state.  Literals use
    the canonical form of each comparison when a normalizer is given;
    comparisons that canonicalize to a constant contribute no literal.
    Decisions follow evaluation order with short-circuiting, keeping each
    alternative's literal list minimal.
    """
    canon: dict[ExprId, ExprId] = {}

    def image(cmp: ExprId) -> ExprId:
        hit = canon.get(cmp)
        if hit is None:
            hit = normalizer.normalize(cmp) if normalizer else cmp
            canon[cmp] = hit
        return hit

    def eval3(e: ExprId, asgn: dict[ExprId, bool]):
        """Three-valued evaluation; returns (value, leftmost open AP)."""
        k = dag.kind(e)
        if k == TRUE:
            return True, -1
        if k == FALSE:
            return False, -1
        if k in (LT, EQ):
            ap = image(e)
            ak = dag.kind(ap)
            if ak == TRUE:
                return True, -1
            if ak == FALSE:
                return False, -1
            v = asgn.get(ap)
            return v, (ap if v is None else -1)
        if k == NOT:
            v, u = eval3(dag.lhs(e), asgn)
            return (None if v is None else not v), u
        av, au = eval3(dag.lhs(e), asgn)
        if k == AND and av is False:
            return False, -1
        if k == OR and av is True:
            return True, -1
        bv, bu = eval3(dag.rhs(e), asgn)
        if k == AND:
            v = False if bv is False else (None if None in (av, bv) else True)
        else:
            v = True if bv is True else (None if None in (av, bv) else False)
        undef = au if au >= 0 else bu
        return v, (undef if v is None else -1)

    out: list[tuple[tuple[tuple[ExprId, bool], ...], bool]] = []
    work: list[tuple[tuple[tuple[ExprId, bool], ...], dict[ExprId, bool]]]
    work = [((), {})]
    while work:
        taken, asgn = work.pop()
        value, open_ap = eval3(cond, asgn)
        if value is not None:
            out.append((taken, value))
            continue
        # explore the false assignment first (LIFO: push it last)
        for choice in (True, False):
            ext = dict(asgn)
            ext[open_ap] = choice
            work.append((taken + ((open_ap, choice),), ext))
    return out


def enumerate_paths(dag: ExprDag, graph: ProgramGraph,
                    cuts: frozenset[int], source: int, unroll: int = 0,
                    feas: FeasibilityChecker | None = None,
                    normalizer: Normalizer | None = None
                    ) -> list[ContractedPath]:
    """All contracted paths out of ``source``.

    Paths end at the exit node or at any other cut point.  Revisits of
    ``source`` itself pass through up to ``unroll`` times; the arrival
    after the last allowed pass ends the path, so exits exist for every
    revisit count 0..unroll plus one continuation.  Alternatives whose
    accumulated literals the checker proves unsatisfiable are pruned.
    """
    if source not in cuts:
        raise ValueError("source %r is not a cut point" % graph.name(source))
    if source == graph.exit:
        raise ValueError("cannot enumerate from the exit node")
    paths: list[ContractedPath] = []
    identity = SymbolicState.identity()
    DONE = -1  # frame node value marking a finished path

    def arrived(node: int, lits: tuple[Literal, ...], state: SymbolicState,
                revisits: int):
        """Frame for the continuation, or a DONE frame ending the path."""
        if node == graph.exit or (node in cuts and node != source):
            return (DONE, lits, state, node)
        if node == source:
            if revisits == unroll:
                return (DONE, lits, state, node)
            return (node, lits, state, revisits + 1)
        return (node, lits, state, revisits)

    # frame = (node, literals, state, revisit count); DONE frames reuse the
    # last slot for the path target
    stack: list[tuple[int, tuple[Literal, ...], SymbolicState, int]]
    stack = [(source, (), identity, 0)]
    while stack:
        node, lits, state, revisits = stack.pop()
        if node == DONE:
            target = revisits
            paths.append(ContractedPath(source, lits, state, target))
            continue
        n = graph.node(node)
        if n.kind == N_ASSIGN:
            rhs = substitute(dag, n.expr, state)
            if normalizer is not None:
                rhs = normalizer.normalize(rhs)
            stack.append(arrived(n.succ, lits,
                                 state.assigned(dag, n.var, rhs), revisits))
        elif n.kind == N_SKIP:
            stack.append(arrived(n.succ, lits, state, revisits))
        elif n.kind == N_BRANCH:
            cond = substitute(dag, n.expr, state)
            loop = node if graph.is_loop_head(node) else -1
            frames = []
            for taken, outcome in branch_cases(dag, cond, normalizer):
                new = lits + tuple(Literal(ap, pos, loop, revisits)
                                   for ap, pos in taken)
                if taken and feas is not None:
                    verdict = feas.check([l.signed() for l in new])
                    if verdict is FeasResult.UNSAT:
                        continue
                frames.append(arrived(n.succ if outcome else n.fsucc, new,
                                      state, revisits))
            stack.extend(reversed(frames))
        else:
            raise ValueError("fragment ran into the exit node")
    return paths


# -- lockstep execution ----------------------------------------------------

@dataclass(frozen=True)
class SosConfig:
    """One combined-domain configuration: position, path-taken flag, path
    condition, concrete state, symbolic state."""

    node: int
    taken: bool
    condition: ExprId
    state: dict[str, int]
    symbolic: SymbolicState


def run_lockstep(dag: ExprDag, graph: ProgramGraph, cuts: frozenset[int],
                 env: dict[str, int], budget: int = 500
                 ) -> tuple[list[SosConfig], bool]:
    """Run concrete and symbolic components together, checking after every
    step that the symbolic side evaluated at the last cut-point state
    reproduces the concrete side.  Returns ``(trace, completed)``;
    ``completed`` is False when the budget ran out first.
    """
    node = graph.entry
    taken = True
    cond = dag.true()
    sigma = dict(env)
    sigma_h = SymbolicState.identity()
    ref = dict(env)  # concrete state at the last cut point
    trace = [SosConfig(node, taken, cond, dict(sigma), sigma_h)]
    steps = 0
    while node != graph.exit:
        if steps >= budget:
            return trace, False
        steps += 1
        n = graph.node(node)
        if n.kind == N_ASSIGN:
            value, _ = eval_expr(dag, n.expr, sigma)
            sigma = dict(sigma)
            sigma[n.var] = value
            sigma_h = sigma_h.assigned(dag, n.var,
                                       substitute(dag, n.expr, sigma_h))
            node = n.succ
        elif n.kind == N_SKIP:
            node = n.succ
        else:
            b, _ = eval_expr(dag, n.expr, sigma)
            b_h = substitute(dag, n.expr, sigma_h)
            if b:
                cond = dag.conj(cond, b_h)
                node = n.succ
            else:
                cond = dag.conj(cond, dag.neg(b_h))
                node = n.fsucc
        _check_step(dag, steps, taken, cond, sigma, sigma_h, ref)
        trace.append(SosConfig(node, taken, cond, dict(sigma), sigma_h))
        if node in cuts or node == graph.exit:
            # compositional reset: fragments restart from identity
            taken = True
            cond = dag.true()
            sigma_h = SymbolicState.identity()
            ref = dict(sigma)
    return trace, True


def _check_step(dag: ExprDag, step: int, taken: bool, cond: ExprId,
                sigma: dict[str, int], sigma_h: SymbolicState,
                ref: dict[str, int]) -> None:
    got, _ = eval_expr(dag, cond, ref)
    if got != taken:
        raise AssertionError(
            "step %d: path condition evaluates to %r, path-taken flag is %r"
            % (step, got, taken))
    for var, value in sigma.items():
        img = sigma_h.get(var)
        expected = ref[var] if img is None else eval_expr(dag, img, ref)[0]
        if expected != value:
            raise AssertionError(
                "step %d: symbolic state maps %s to %r, concrete state has %r"
                % (step, var, expected, value))


# -- debug dumps ------------------------------------------------------------

def format_trace(dag: ExprDag, graph: ProgramGraph,
                 trace: Sequence[SosConfig]) -> str:
    lines = []
    for i, cfg in enumerate(trace):
        state = ", ".join("%s=%d" % kv for kv in sorted(cfg.state.items()))
        sym = ", ".join("%s->%s" % (v, pretty(dag, e))
                        for v, e in cfg.symbolic.items())
        lines.append("%4d  at %-3s  c=%-5r  c_H=%s  sigma={%s}  sigma_H={%s}"
                     % (i, graph.name(cfg.node), cfg.taken,
                        pretty(dag, cfg.condition), state, sym))
    return "\n".join(lines) + "\n"


def describe_path(dag: ExprDag, graph: ProgramGraph,
                  path: ContractedPath) -> dict:
    return {
        "source": graph.name(path.source),
        "target": graph.name(path.target),
        "condition": pretty(dag, path.condition(dag)),
        "literals": [{"ap": pretty(dag, lit.ap), "positive": lit.positive}
                     for lit in path.literals],
        "assignment": {var: pretty(dag, e) for var, e in path.state.items()},
    }


def paths_to_json(dag: ExprDag, graph: ProgramGraph,
                  paths: Iterable[ContractedPath]) -> str:
    return json.dumps([describe_path(dag, graph, p) for p in paths],
                      indent=2, sort_keys=True) + "\n"


def format_paths(dag: ExprDag, graph: ProgramGraph,
                 paths: Iterable[ContractedPath]) -> str:
    lines = []
    for p in paths:
        assigns = ", ".join("%s := %s" % (v, pretty(dag, e))
                            for v, e in p.state.items())
        lines.append("%s --[%s]--> %s  {%s}"
                     % (graph.name(p.source),
                        pretty(dag, p.condition(dag)),
                        graph.name(p.target), assigns))
    return "\n".join(lines) + "\n"
