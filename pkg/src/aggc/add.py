"""Reduced ordered algebraic decision diagrams over the path lattice.

Terminals carry elements of the flat lattice {bottom, top} plus pairs of
(successor cut point, parallel assignment); decision nodes test atomic
propositions under a fixed total predicate order.  Diagrams for the paths
of one cut point are combined with the lattice supremum: equal values
merge, bottom is neutral, and a conflict (top) while aggregating means the
path conditions failed to partition, which is a structural bug.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from .errors import (AggregationConflictError, BottomReachedError,
                     InternalInvariantError)
from .exprdag import (EvalCache, ExprDag, ExprId, SymbolicState, eval_expr,
                      pretty)
from .simplify import FeasResult, FeasibilityChecker
from .symexec import ContractedPath


# -- lattice ---------------------------------------------------------------

class _Bottom:
    __slots__ = ()

    def __repr__(self) -> str:
        return "BOTTOM"


class _Top:
    __slots__ = ()

    def __repr__(self) -> str:
        return "TOP"


BOTTOM = _Bottom()
TOP = _Top()


@dataclass(frozen=True)
class Leaf:
    """Defined lattice value: jump target plus parallel assignment."""

    target: int
    state: SymbolicState


LatticeElem = Union[_Bottom, _Top, Leaf]


def join(a: LatticeElem, b: LatticeElem) -> LatticeElem:
    """Flat-lattice supremum: bottom is neutral, conflicts go to top."""
    if a is BOTTOM:
        return b
    if b is BOTTOM:
        return a
    if a is b or a == b:
        return a
    return TOP


# -- predicate order ---------------------------------------------------------

class PredOrder:
    """Total order over the atomic propositions of one aggregation."""

    def __init__(self, aps: Sequence[ExprId]):
        self._aps = tuple(aps)
        self._level = {ap: i for i, ap in enumerate(self._aps)}
        if len(self._level) != len(self._aps):
            raise ValueError("duplicate atomic proposition in order")

    def level(self, ap: ExprId) -> int:
        try:
            return self._level[ap]
        except KeyError:
            raise ValueError("atomic proposition %d not in order" % ap) \
                from None

    def ap_at(self, level: int) -> ExprId:
        return self._aps[level]

    def __len__(self) -> int:
        return len(self._aps)

    def __iter__(self):
        return iter(self._aps)

    @property
    def aps(self) -> tuple[ExprId, ...]:
        return self._aps


def occurrence_order(paths: Iterable[ContractedPath]) -> list[ExprId]:
    seen: list[ExprId] = []
    have: set[ExprId] = set()
    for p in paths:
        for lit in p.literals:
            if lit.ap not in have:
                have.add(lit.ap)
                seen.append(lit.ap)
    return seen


def choose_order(paths: Sequence[ContractedPath], strategy: str = "occurrence",
                 seed: int | None = None) -> PredOrder:
    """Predicate order for aggregating ``paths``.

    occurrence: first-encounter order.  random: seeded uniform shuffle.
    deepest: per loop, the condition instance from the deepest revisit is
    hoisted to the front (deepest loop first); everything else keeps
    occurrence order.  With deep unrolling this lets a feasible big step
    settle the whole diagram on its first test.
    """
    base = occurrence_order(paths)
    if strategy == "occurrence":
        return PredOrder(base)
    if strategy == "random":
        if seed is None:
            raise ValueError("random predicate order needs a seed")
        shuffled = list(base)
        random.Random(seed).shuffle(shuffled)
        return PredOrder(shuffled)
    if strategy == "deepest":
        deepest: dict[int, tuple[int, ExprId]] = {}
        for p in paths:
            for lit in p.literals:
                if lit.loop < 0:
                    continue
                best = deepest.get(lit.loop)
                if best is None or lit.depth > best[0]:
                    deepest[lit.loop] = (lit.depth, lit.ap)
        index = {ap: i for i, ap in enumerate(base)}
        pairs = sorted(deepest.values(), key=lambda da: (-da[0], index[da[1]]))
        hoisted: list[ExprId] = []
        for _, ap in pairs:
            if ap not in hoisted:
                hoisted.append(ap)
        taken = set(hoisted)
        return PredOrder(hoisted + [ap for ap in base if ap not in taken])
    raise ValueError("unknown order strategy: %r" % strategy)


# -- diagrams ---------------------------------------------------------------

class DiagramManager:
    """Hash-consed node store shared by all diagrams of one compilation.

    Node handles are indices.  Terminals live at the pseudo-level
    ``len(order)`` so the ordered invariant is simply: child level strictly
    greater than parent level.
    """

    def __init__(self, dag: ExprDag, order: PredOrder):
        self.dag = dag
        self.order = order
        self._levels: list[int] = []
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._value: list[LatticeElem | None] = []
        self._unique: dict[tuple[int, int, int], int] = {}
        self._terminals: dict[LatticeElem, int] = {}

    def terminal(self, elem: LatticeElem) -> int:
        hit = self._terminals.get(elem)
        if hit is not None:
            return hit
        node = len(self._levels)
        self._levels.append(len(self.order))
        self._lo.append(-1)
        self._hi.append(-1)
        self._value.append(elem)
        self._terminals[elem] = node
        return node

    def decision(self, level: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        if not (self._levels[lo] > level and self._levels[hi] > level):
            raise InternalInvariantError("children must sit below level %d"
                                         % level)
        key = (level, lo, hi)
        hit = self._unique.get(key)
        if hit is not None:
            return hit
        node = len(self._levels)
        self._levels.append(level)
        self._lo.append(lo)
        self._hi.append(hi)
        self._value.append(None)
        self._unique[key] = node
        return node

    def is_terminal(self, node: int) -> bool:
        return self._value[node] is not None

    def level(self, node: int) -> int:
        return self._levels[node]

    def lo(self, node: int) -> int:
        return self._lo[node]

    def hi(self, node: int) -> int:
        return self._hi[node]

    def value(self, node: int) -> LatticeElem:
        v = self._value[node]
        if v is None:
            raise ValueError("node %d is not a terminal" % node)
        return v

    def ap(self, node: int) -> ExprId:
        return self.order.ap_at(self._levels[node])

    def reachable(self, root: int) -> list[int]:
        seen = {root}
        stack = [root]
        while stack:
            n = stack.pop()
            if self._value[n] is None:
                for c in (self._lo[n], self._hi[n]):
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return sorted(seen)

    def apply_join(self, a: int, b: int, allow_top: bool = True) -> int:
        """Pointwise lattice supremum of two diagrams."""
        memo: dict[tuple[int, int], int] = {}

        def rec(x: int, y: int) -> int:
            if x == y:
                return x
            vx = self._value[x]
            vy = self._value[y]
            if vx is BOTTOM:
                return y
            if vy is BOTTOM:
                return x
            if vx is not None and vy is not None:
                v = join(vx, vy)
                if v is TOP and not allow_top:
                    raise AggregationConflictError(
                        "paths overlap: %r and %r" % (vx, vy))
                return self.terminal(v)
            key = (x, y) if x <= y else (y, x)
            hit = memo.get(key)
            if hit is not None:
                return hit
            lx = self._levels[x]
            ly = self._levels[y]
            level = min(lx, ly)
            x0, x1 = (self._lo[x], self._hi[x]) if lx == level else (x, x)
            y0, y1 = (self._lo[y], self._hi[y]) if ly == level else (y, y)
            node = self.decision(level, rec(x0, y0), rec(x1, y1))
            memo[key] = node
            return node

        return rec(a, b)


class Add:
    """A diagram handle: shared manager plus root node."""

    def __init__(self, manager: DiagramManager, root: int):
        self.manager = manager
        self.root = root

    def evaluate(self, env: dict[str, int], cache: EvalCache | None = None,
                 where: str = "add") -> tuple[LatticeElem, int]:
        """Follow decisions under ``env``; returns (terminal, cost) where
        cost counts fresh predicate operators plus one jump per decision."""
        mgr = self.manager
        dag = mgr.dag
        if cache is None:
            cache = EvalCache()
        node = self.root
        cost = 0
        while not mgr.is_terminal(node):
            v, c = eval_expr(dag, mgr.ap(node), env, cache)
            cost += c + 1
            node = mgr.hi(node) if v else mgr.lo(node)
        elem = mgr.value(node)
        if elem is BOTTOM:
            raise BottomReachedError(where)
        if elem is TOP:
            raise InternalInvariantError("evaluation reached a top terminal")
        return elem, cost

    def size(self) -> int:
        return len(self.manager.reachable(self.root))

    def depth(self) -> int:
        mgr = self.manager
        memo: dict[int, int] = {}

        def rec(n: int) -> int:
            if mgr.is_terminal(n):
                return 0
            hit = memo.get(n)
            if hit is None:
                hit = 1 + max(rec(mgr.lo(n)), rec(mgr.hi(n)))
                memo[n] = hit
            return hit

        return rec(self.root)


def path_to_add(mgr: DiagramManager, path: ContractedPath) -> Add:
    """Diagram of one contracted path: its condition routes to the path's
    leaf, everything else to bottom."""
    by_level: dict[int, tuple[ExprId, bool]] = {}
    for lit in path.literals:
        level = mgr.order.level(lit.ap)
        before = by_level.get(level)
        if before is not None and before[1] != lit.positive:
            # contradictory condition: the path is vacuous
            return Add(mgr, mgr.terminal(BOTTOM))
        by_level[level] = (lit.ap, lit.positive)
    node = mgr.terminal(Leaf(path.target, path.state))
    bottom = mgr.terminal(BOTTOM)
    for level in sorted(by_level, reverse=True):
        _, positive = by_level[level]
        if positive:
            node = mgr.decision(level, bottom, node)
        else:
            node = mgr.decision(level, node, bottom)
    return Add(mgr, node)


def dd_join(a: Add, b: Add, allow_top: bool = True) -> Add:
    if a.manager is not b.manager:
        raise ValueError("diagrams come from different managers")
    return Add(a.manager, a.manager.apply_join(a.root, b.root, allow_top))


def aggregate(mgr: DiagramManager, paths: Sequence[ContractedPath]) -> Add:
    """Supremum of the path diagrams of one cut point.

    Raises AggregationConflictError when two conditions overlap (the
    lattice would need top), which partitioned enumeration rules out.
    """
    root = mgr.terminal(BOTTOM)
    for p in paths:
        root = mgr.apply_join(root, path_to_add(mgr, p).root, allow_top=False)
    return Add(mgr, root)


def eliminate_infeasible(add: Add, feas: FeasibilityChecker) -> Add:
    """Drop decisions whose branch context has no integer model.

    An edge with unsatisfiable context is redirected to its sibling, so the
    node dissolves on that path.  States that can actually reach a node
    always satisfy its context, hence evaluation is preserved on them; the
    diagram never gets deeper.
    """
    mgr = add.manager

    def walk(node: int, ctx: tuple[tuple[ExprId, bool], ...]) -> int:
        if mgr.is_terminal(node):
            return node
        ap = mgr.ap(node)
        lo_ctx = ctx + ((ap, False),)
        hi_ctx = ctx + ((ap, True),)
        lo_dead = feas.check(lo_ctx) is FeasResult.UNSAT
        hi_dead = feas.check(hi_ctx) is FeasResult.UNSAT
        if lo_dead and hi_dead:
            raise InternalInvariantError(
                "both branch contexts unsatisfiable below a reachable node")
        if lo_dead:
            return walk(mgr.hi(node), hi_ctx)
        if hi_dead:
            return walk(mgr.lo(node), lo_ctx)
        return mgr.decision(mgr.level(node), walk(mgr.lo(node), lo_ctx),
                            walk(mgr.hi(node), hi_ctx))

    return Add(mgr, walk(add.root, ()))


def assert_well_formed(add: Add) -> None:
    """Structural scan of the ordered and reduced invariants."""
    mgr = add.manager
    shapes: dict[tuple[int, int, int], int] = {}
    values: dict[LatticeElem, int] = {}
    for node in mgr.reachable(add.root):
        if mgr.is_terminal(node):
            v = mgr.value(node)
            if v in values:
                raise InternalInvariantError("duplicate terminal %r" % (v,))
            values[v] = node
            continue
        level = mgr.level(node)
        lo = mgr.lo(node)
        hi = mgr.hi(node)
        if lo == hi:
            raise InternalInvariantError("redundant node %d" % node)
        if mgr.level(lo) <= level or mgr.level(hi) <= level:
            raise InternalInvariantError("order violated at node %d" % node)
        key = (level, lo, hi)
        if key in shapes:
            raise InternalInvariantError("unshared duplicate node %d" % node)
        shapes[key] = node


def to_dot(add: Add, namer: Callable[[int], str] = str,
           name: str = "add") -> str:
    """Deterministic GraphViz rendering: dashed low edges, solid high
    edges, boxed terminals listing target and non-identity assignments."""
    mgr = add.manager
    dag = mgr.dag
    ids: dict[int, int] = {}
    queue = [add.root]
    while queue:
        n = queue.pop(0)
        if n in ids:
            continue
        ids[n] = len(ids)
        if not mgr.is_terminal(n):
            queue.append(mgr.lo(n))
            queue.append(mgr.hi(n))
    lines = ["digraph %s {" % name]
    for n, i in ids.items():
        if mgr.is_terminal(n):
            v = mgr.value(n)
            if v is BOTTOM:
                label = "bottom"
            elif v is TOP:
                label = "top"
            else:
                assigns = ", ".join("%s := %s" % (var, pretty(dag, e))
                                    for var, e in v.state.items())
                label = "-> %s" % namer(v.target)
                if assigns:
                    label += "  [%s]" % assigns
            lines.append('  n%d [shape=box, label="%s"];' % (i, label))
        else:
            lines.append('  n%d [shape=ellipse, label="%s"];'
                         % (i, pretty(dag, mgr.ap(n))))
    for n, i in ids.items():
        if not mgr.is_terminal(n):
            lines.append("  n%d -> n%d [style=dashed];" % (i, ids[mgr.lo(n)]))
            lines.append("  n%d -> n%d;" % (i, ids[mgr.hi(n)]))
    lines.append("}")
    return "\n".join(lines) + "\n"
