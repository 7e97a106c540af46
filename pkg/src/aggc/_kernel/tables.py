"""Flat array views consumed by the execution kernels.

The kernels (pure Python and the compiled twin) step over plain parallel
lists of ints, so everything pointer-shaped is resolved here once: graph
nodes, diagram nodes, and variable names all become dense indices.  The
expression store may keep growing after a table is built; kernels only
ever touch handles below the recorded snapshot size.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Mapping, Sequence

from ..errors import InternalInvariantError
from ..exprdag import ExprDag, tree_cost
from ..frontend import N_ASSIGN, ProgramGraph

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from ..add import Add


class _DagView:
    """Shared read-only slice of the expression store."""

    __slots__ = ("kinds", "a", "b", "consts", "var_names", "n_expr")

    def __init__(self, dag: ExprDag):
        self.kinds = dag._kinds
        self.a = dag._a
        self.b = dag._b
        self.consts = dag._consts
        self.var_names = list(dag._var_names)
        self.n_expr = len(dag)


class GraphTable(_DagView):
    """Program graph flattened for direct interpretation.

    Per node: kind, assignment target slot, expression handle, both
    successors, and the tree-read operator counts of the expression.  The
    original program evaluates expressions as trees, so its cost per visit
    is a precomputed constant.
    """

    __slots__ = ("n_kind", "n_var", "n_expr_id", "n_succ", "n_fsucc",
                 "n_arith", "n_logic", "n_cmp", "entry", "exit")

    def __init__(self, dag: ExprDag, graph: ProgramGraph):
        # Resolve assignment targets to slots before snapshotting sizes;
        # a write-only variable may not have been interned yet.
        for node in graph.nodes:
            if node.kind == N_ASSIGN:
                dag.var(node.var)
        super().__init__(dag)
        self.n_kind: list[int] = []
        self.n_var: list[int] = []
        self.n_expr_id: list[int] = []
        self.n_succ: list[int] = []
        self.n_fsucc: list[int] = []
        self.n_arith: list[int] = []
        self.n_logic: list[int] = []
        self.n_cmp: list[int] = []
        for node in graph.nodes:
            self.n_kind.append(node.kind)
            self.n_var.append(dag.var_slot(dag.var(node.var))
                              if node.kind == N_ASSIGN else -1)
            self.n_expr_id.append(node.expr)
            self.n_succ.append(node.succ)
            self.n_fsucc.append(node.fsucc)
            ar, lo, cp = tree_cost(dag, node.expr) if node.expr >= 0 \
                else (0, 0, 0)
            self.n_arith.append(ar)
            self.n_logic.append(lo)
            self.n_cmp.append(cp)
        self.entry = graph.entry
        self.exit = graph.exit


class AddTable(_DagView):
    """All decision diagrams of one compilation in one flat node space.

    ``cut_nodes`` lists the diagram-owning cut points (the exit never owns
    one), entry first; leaf targets pointing at ``exit_node`` flatten to
    -1, every other target to its cut slot.  Node kinds: 0 decision,
    1 leaf, 2 bottom, 3 conflict.
    """

    __slots__ = ("t_kind", "t_ap", "t_lo", "t_hi", "t_target",
                 "t_astart", "t_aend", "assign_var", "assign_expr",
                 "roots", "cut_names", "entry_slot")

    def __init__(self, dag: ExprDag, cut_nodes: Sequence[int],
                 adds: Mapping[int, "Add"], cut_names: Sequence[str],
                 exit_node: int):
        from ..add import BOTTOM, TOP

        for add in adds.values():
            for node in add.manager.reachable(add.root):
                if add.manager.is_terminal(node):
                    v = add.manager.value(node)
                    if v is not BOTTOM and v is not TOP:
                        for name, _ in v.state.items():
                            dag.var(name)
        super().__init__(dag)
        slot_of = {cn: i for i, cn in enumerate(cut_nodes)}
        self.t_kind: list[int] = []
        self.t_ap: list[int] = []
        self.t_lo: list[int] = []
        self.t_hi: list[int] = []
        self.t_target: list[int] = []
        self.t_astart: list[int] = []
        self.t_aend: list[int] = []
        self.assign_var: list[int] = []
        self.assign_expr: list[int] = []
        self.roots: list[int] = []
        self.cut_names = list(cut_names)
        self.entry_slot = 0
        for cn in cut_nodes:
            add = adds[cn]
            mgr = add.manager
            remap: dict[int, int] = {}
            # manager ids are created children-first, so ascending order
            # guarantees children are remapped before their parents
            for m in mgr.reachable(add.root):
                flat = len(self.t_kind)
                remap[m] = flat
                if not mgr.is_terminal(m):
                    self.t_kind.append(0)
                    self.t_ap.append(mgr.ap(m))
                    self.t_lo.append(remap[mgr.lo(m)])
                    self.t_hi.append(remap[mgr.hi(m)])
                    self.t_target.append(-2)
                    self.t_astart.append(0)
                    self.t_aend.append(0)
                    continue
                v = mgr.value(m)
                self.t_ap.append(-1)
                self.t_lo.append(-1)
                self.t_hi.append(-1)
                if v is BOTTOM:
                    self.t_kind.append(2)
                    self.t_target.append(-2)
                    self.t_astart.append(0)
                    self.t_aend.append(0)
                elif v is TOP:
                    self.t_kind.append(3)
                    self.t_target.append(-2)
                    self.t_astart.append(0)
                    self.t_aend.append(0)
                else:
                    self.t_kind.append(1)
                    if v.target == exit_node:
                        self.t_target.append(-1)
                    elif v.target in slot_of:
                        self.t_target.append(slot_of[v.target])
                    else:
                        raise InternalInvariantError(
                            "leaf targets node %d, which is not a cut point"
                            % v.target)
                    self.t_astart.append(len(self.assign_var))
                    for name, expr in v.state.items():
                        self.assign_var.append(dag.var_slot(dag.var(name)))
                        self.assign_expr.append(expr)
                    self.t_aend.append(len(self.assign_var))
            self.roots.append(remap[add.root])
