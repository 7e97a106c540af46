"""Hash-consed store for the arithmetic and Boolean expressions of a program.

Every stage of the pipeline (parser, symbolic execution, decision diagrams,
normalization) allocates its expressions in one shared store.  Interning is
perfect: structurally equal expressions always receive the same integer
handle, so equal sub-terms are common by construction and identity can be
tested with ``==`` on handles.

Handles (type alias ``ExprId``) are plain ints.  The store is append-only;
handles stay valid for its whole lifetime.
"""

from __future__ import annotations

from typing import Callable, Iterator, Mapping

from .errors import DivisionByZeroError, MissingInputError

ExprId = int

# Node kinds.  Everything from LT on is Boolean-sorted.
CONST = 0
VAR = 1
ADD = 2
SUB = 3
MUL = 4
DIV = 5
LT = 6
EQ = 7
AND = 8
OR = 9
NOT = 10
TRUE = 11
FALSE = 12

KIND_NAMES = (
    "const", "var", "add", "sub", "mul", "div",
    "lt", "eq", "and", "or", "not", "true", "false",
)

_ARITH_OPS = (ADD, SUB, MUL, DIV)
_CMP_OPS = (LT, EQ)
_BOOL_OPS = (AND, OR, NOT)

_OP_SYMBOL = {ADD: "+", SUB: "-", MUL: "*", DIV: "/", LT: "<", EQ: "==",
              AND: "&&", OR: "||", NOT: "!"}


def truncated_div(a: int, b: int, node: ExprId) -> int:
    """Integer division truncated toward zero; ``b == 0`` is a runtime error."""
    if b == 0:
        raise DivisionByZeroError(node)
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


class ExprDag:
    """The shared expression store."""

    __slots__ = ("_kinds", "_a", "_b", "_index", "_consts", "_const_ids",
                 "_var_names", "_var_ids", "_tree_cost", "_true", "_false")

    def __init__(self) -> None:
        self._kinds: list[int] = []
        self._a: list[int] = []
        self._b: list[int] = []
        self._index: dict[tuple[int, int, int], int] = {}
        self._consts: list[int] = []
        self._const_ids: dict[int, int] = {}
        self._var_names: list[str] = []
        self._var_ids: dict[str, int] = {}
        self._tree_cost: dict[int, tuple[int, int, int]] = {}
        self._true = self._new(TRUE, -1, -1)
        self._false = self._new(FALSE, -1, -1)

    # -- construction -------------------------------------------------

    def _new(self, kind: int, a: int, b: int) -> ExprId:
        key = (kind, a, b)
        found = self._index.get(key)
        if found is not None:
            return found
        node = len(self._kinds)
        self._kinds.append(kind)
        self._a.append(a)
        self._b.append(b)
        self._index[key] = node
        return node

    def const(self, value: int) -> ExprId:
        idx = self._const_ids.get(value)
        if idx is None:
            idx = len(self._consts)
            self._consts.append(value)
            self._const_ids[value] = idx
        return self._new(CONST, idx, -1)

    def var(self, name: str) -> ExprId:
        slot = self._var_ids.get(name)
        if slot is None:
            slot = len(self._var_names)
            self._var_names.append(name)
            self._var_ids[name] = slot
        return self._new(VAR, slot, -1)

    def intern(self, kind: int, a: ExprId, b: ExprId = -1) -> ExprId:
        """Intern an operator node.  Use :meth:`const`/:meth:`var` for leaves."""
        if kind in _ARITH_OPS or kind in _CMP_OPS:
            self._require_arith(a)
            self._require_arith(b)
        elif kind == NOT:
            self._require_bool(a)
            b = -1
        elif kind in (AND, OR):
            self._require_bool(a)
            self._require_bool(b)
        else:
            raise ValueError("cannot intern kind %r directly" % (kind,))
        return self._new(kind, a, b)

    def add(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(ADD, a, b)

    def sub(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(SUB, a, b)

    def mul(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(MUL, a, b)

    def div(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(DIV, a, b)

    def lt(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(LT, a, b)

    def eq(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(EQ, a, b)

    def conj(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(AND, a, b)

    def disj(self, a: ExprId, b: ExprId) -> ExprId:
        return self.intern(OR, a, b)

    def neg(self, a: ExprId) -> ExprId:
        return self.intern(NOT, a)

    def true(self) -> ExprId:
        return self._true

    def false(self) -> ExprId:
        return self._false

    def bool_const(self, value: bool) -> ExprId:
        return self._true if value else self._false

    # -- inspection ---------------------------------------------------

    def __len__(self) -> int:
        return len(self._kinds)

    def kind(self, e: ExprId) -> int:
        return self._kinds[e]

    def lhs(self, e: ExprId) -> ExprId:
        return self._a[e]

    def rhs(self, e: ExprId) -> ExprId:
        return self._b[e]

    def const_value(self, e: ExprId) -> int:
        if self._kinds[e] != CONST:
            raise ValueError("node %d is not a constant" % e)
        return self._consts[self._a[e]]

    def var_name(self, e: ExprId) -> str:
        if self._kinds[e] != VAR:
            raise ValueError("node %d is not a variable" % e)
        return self._var_names[self._a[e]]

    def var_slot(self, e: ExprId) -> int:
        if self._kinds[e] != VAR:
            raise ValueError("node %d is not a variable" % e)
        return self._a[e]

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(self._var_names)

    def slot_of(self, name: str) -> int | None:
        return self._var_ids.get(name)

    def is_bool(self, e: ExprId) -> bool:
        return self._kinds[e] >= LT

    def children(self, e: ExprId) -> tuple[ExprId, ...]:
        k = self._kinds[e]
        if k in (CONST, VAR, TRUE, FALSE):
            return ()
        if k == NOT:
            return (self._a[e],)
        return (self._a[e], self._b[e])

    def _require_arith(self, e: ExprId) -> None:
        if not 0 <= e < len(self._kinds):
            raise ValueError("unknown expression handle %r" % (e,))
        if self.is_bool(e):
            raise ValueError("node %d is Boolean where arithmetic is required" % e)

    def _require_bool(self, e: ExprId) -> None:
        if not 0 <= e < len(self._kinds):
            raise ValueError("unknown expression handle %r" % (e,))
        if not self.is_bool(e):
            raise ValueError("node %d is arithmetic where Boolean is required" % e)

    # -- reachability -------------------------------------------------

    def reachable(self, roots: Iterator[ExprId] | list[ExprId]) -> set[ExprId]:
        """All nodes reachable from ``roots``, including the roots."""
        seen: set[ExprId] = set()
        stack = list(roots)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.children(n))
        return seen


class EvalCache:
    """Value memo for one evaluation scope.

    Within a scope every expression node is computed at most once; repeat
    uses of a shared sub-term are free.  The per-category counters add up
    everything charged through this cache.
    """

    __slots__ = ("values", "arith", "logic", "compare")

    def __init__(self) -> None:
        self.values: dict[ExprId, object] = {}
        self.arith = 0
        self.logic = 0
        self.compare = 0

    @property
    def cost_total(self) -> int:
        return self.arith + self.logic + self.compare


def eval_expr(dag: ExprDag, e: ExprId, env: Mapping[str, int],
              cache: EvalCache | None = None) -> tuple[object, int]:
    """Evaluate ``e`` under ``env``; return ``(value, cost)``.

    Cost is the number of operator nodes computed fresh in this call: one
    unit per arithmetic operation, comparison, or Boolean connective that
    was not already in ``cache``.  Boolean connectives do not short-circuit.
    """
    if cache is None:
        cache = EvalCache()
    values = cache.values
    before = cache.cost_total
    kinds = dag._kinds
    a = dag._a
    b = dag._b
    consts = dag._consts
    names = dag._var_names
    stack: list[tuple[int, bool]] = [(e, False)]
    while stack:
        n, was_ready = stack.pop()
        if n in values:
            continue
        k = kinds[n]
        if not was_ready:
            if k == CONST:
                values[n] = consts[a[n]]
            elif k == VAR:
                name = names[a[n]]
                if name not in env:
                    raise MissingInputError(name)
                values[n] = env[name]
            elif k == TRUE:
                values[n] = True
            elif k == FALSE:
                values[n] = False
            elif k == NOT:
                stack.append((n, True))
                stack.append((a[n], False))
            else:
                # push right first so the left operand is evaluated first
                stack.append((n, True))
                stack.append((b[n], False))
                stack.append((a[n], False))
        else:
            if k == ADD:
                values[n] = values[a[n]] + values[b[n]]
                cache.arith += 1
            elif k == SUB:
                values[n] = values[a[n]] - values[b[n]]
                cache.arith += 1
            elif k == MUL:
                values[n] = values[a[n]] * values[b[n]]
                cache.arith += 1
            elif k == DIV:
                values[n] = truncated_div(values[a[n]], values[b[n]], n)
                cache.arith += 1
            elif k == LT:
                values[n] = values[a[n]] < values[b[n]]
                cache.compare += 1
            elif k == EQ:
                values[n] = values[a[n]] == values[b[n]]
                cache.compare += 1
            elif k == AND:
                values[n] = values[a[n]] and values[b[n]]
                cache.logic += 1
            elif k == OR:
                values[n] = values[a[n]] or values[b[n]]
                cache.logic += 1
            elif k == NOT:
                values[n] = not values[a[n]]
                cache.logic += 1
            else:
                raise AssertionError("unhandled kind %d" % k)
    return values[e], cache.cost_total - before


class SymbolicState:
    """A simultaneous assignment: variable name -> expression over entry values.

    Variables absent from the map are bound to themselves (identity);
    entries that would map a variable to its own symbol are dropped, so two
    states are equal exactly when they denote the same assignment.
    """

    __slots__ = ("_map", "_memo", "_items", "_hash")

    def __init__(self, mapping: dict[str, ExprId] | None = None):
        self._map: dict[str, ExprId] = dict(mapping) if mapping else {}
        self._memo: dict[ExprId, ExprId] = {}
        self._items: tuple[tuple[str, ExprId], ...] | None = None
        self._hash: int | None = None

    @classmethod
    def identity(cls) -> "SymbolicState":
        return cls()

    def assigned(self, dag: ExprDag, name: str, expr: ExprId) -> "SymbolicState":
        """The state after additionally assigning ``name := expr``."""
        new = dict(self._map)
        if expr == dag.var(name):
            new.pop(name, None)
        else:
            new[name] = expr
        return SymbolicState(new)

    def get(self, name: str) -> ExprId | None:
        return self._map.get(name)

    def items(self) -> tuple[tuple[str, ExprId], ...]:
        if self._items is None:
            self._items = tuple(sorted(self._map.items()))
        return self._items

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.items())

    def __len__(self) -> int:
        return len(self._map)

    def __bool__(self) -> bool:
        return bool(self._map)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolicState):
            return NotImplemented
        return self.items() == other.items()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.items())
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join("%s->%d" % (n, e) for n, e in self.items())
        return "SymbolicState({%s})" % inner


def substitute(dag: ExprDag, e: ExprId, state: SymbolicState) -> ExprId:
    """Replace every variable in ``e`` by its image under ``state``.

    Purely syntactic: no arithmetic is performed.  Results are memoized on
    the state, so repeated substitution into shared sub-terms is cheap.
    """
    if not state:
        return e
    memo = state._memo
    hit = memo.get(e)
    if hit is not None:
        return hit
    kinds = dag._kinds
    stack = [e]
    while stack:
        n = stack[-1]
        if n in memo:
            stack.pop()
            continue
        k = kinds[n]
        if k == VAR:
            image = state.get(dag.var_name(n))
            memo[n] = n if image is None else image
            stack.pop()
            continue
        if k in (CONST, TRUE, FALSE):
            memo[n] = n
            stack.pop()
            continue
        kids = dag.children(n)
        pending = [c for c in kids if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        if k == NOT:
            memo[n] = dag.intern(NOT, memo[kids[0]])
        else:
            memo[n] = dag.intern(k, memo[kids[0]], memo[kids[1]])
        stack.pop()
    return memo[e]


def apply_symbolic(dag: ExprDag, state: SymbolicState, env: Mapping[str, int],
                   cache: EvalCache | None = None) -> dict[str, int]:
    """Concretize a symbolic state against ``env``: the environment after
    executing the assignment, with identity entries untouched."""
    out = dict(env)
    for name, expr in state.items():
        out[name], _ = eval_expr(dag, expr, env, cache)
    return out


def tree_cost(dag: ExprDag, e: ExprId) -> tuple[int, int, int]:
    """Operator counts ``(arith, logic, compare)`` of ``e`` read as a tree.

    Shared sub-terms count once per occurrence, exactly as if the
    expression were stored unshared.
    """
    memo = dag._tree_cost
    hit = memo.get(e)
    if hit is not None:
        return hit
    stack = [e]
    while stack:
        n = stack[-1]
        if n in memo:
            stack.pop()
            continue
        kids = dag.children(n)
        pending = [c for c in kids if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        k = dag._kinds[n]
        ar = lo = cp = 0
        for c in kids:
            ca, cl, cc = memo[c]
            ar += ca
            lo += cl
            cp += cc
        if k in _ARITH_OPS:
            ar += 1
        elif k in _CMP_OPS:
            cp += 1
        elif k in _BOOL_OPS:
            lo += 1
        memo[n] = (ar, lo, cp)
        stack.pop()
    return memo[e]


def vars_of(dag: ExprDag, e: ExprId) -> frozenset[str]:
    """Names of all variables occurring in ``e``."""
    out: set[str] = set()
    for n in dag.reachable([e]):
        if dag.kind(n) == VAR:
            out.add(dag.var_name(n))
    return frozenset(out)


def structurally_equal(dag: ExprDag, a: ExprId, b: ExprId) -> bool:
    """Deep structural comparison, ignoring interning.

    With perfect interning this must coincide with ``a == b``; the separate
    implementation exists so that the coincidence can be tested.
    """
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        kx = dag.kind(x)
        if kx != dag.kind(y):
            return False
        if kx == CONST:
            if dag.const_value(x) != dag.const_value(y):
                return False
        elif kx == VAR:
            if dag.var_name(x) != dag.var_name(y):
                return False
        else:
            stack.extend(zip(dag.children(x), dag.children(y)))
    return True


# -- rendering ---------------------------------------------------------

_PREC = {OR: 1, AND: 2, NOT: 3, LT: 4, EQ: 4, ADD: 5, SUB: 5, MUL: 6, DIV: 6}


def pretty(dag: ExprDag, e: ExprId) -> str:
    """Render ``e`` in concrete syntax with minimal parentheses.

    Parenthesization preserves structure: parsing the result yields the
    same node.
    """
    k = dag.kind(e)
    if k == CONST:
        return str(dag.const_value(e))
    if k == VAR:
        return dag.var_name(e)
    if k == TRUE:
        return "true"
    if k == FALSE:
        return "false"
    if k == NOT:
        return "!(%s)" % pretty(dag, dag.lhs(e))
    prec = _PREC[k]
    left = dag.lhs(e)
    right = dag.rhs(e)
    ls = pretty(dag, left)
    rs = pretty(dag, right)
    lk = dag.kind(left)
    rk = dag.kind(right)
    if lk in _PREC and _PREC[lk] < prec:
        ls = "(%s)" % ls
    # The right operand keeps equal precedence parenthesized so that
    # reparsing rebuilds the same tree under left associativity.
    if rk in _PREC and _PREC[rk] <= prec and k not in _CMP_OPS:
        rs = "(%s)" % rs
    return "%s %s %s" % (ls, _OP_SYMBOL[k], rs)


def to_dot(dag: ExprDag, roots: list[ExprId] | None = None,
           name: str = "expressions") -> str:
    """GraphViz rendering of the sub-DAG reachable from ``roots``
    (the whole store when ``roots`` is None)."""
    nodes = sorted(dag.reachable(roots)) if roots is not None else range(len(dag))
    lines = ["digraph %s {" % name, "  node [shape=circle];"]
    for n in nodes:
        k = dag.kind(n)
        if k == CONST:
            label = str(dag.const_value(n))
            shape = ", shape=plaintext"
        elif k == VAR:
            label = dag.var_name(n)
            shape = ", shape=plaintext"
        elif k in (TRUE, FALSE):
            label = KIND_NAMES[k]
            shape = ", shape=plaintext"
        else:
            label = _OP_SYMBOL[k]
            shape = ""
        lines.append('  n%d [label="%s"%s];' % (n, label, shape))
    for n in nodes:
        kids = dag.children(n)
        for i, c in enumerate(kids):
            tail = "" if len(kids) == 1 else ' [label="%s"]' % ("lr"[i])
            lines.append("  n%d -> n%d%s;" % (n, c, tail))
    lines.append("}")
    return "\n".join(lines) + "\n"
