"""Pure Python execution kernel.

Reference implementation of the two hot loops: direct interpretation of a
program graph and interpretation of its aggregated form.  The compiled
twin in ``_speedups`` transliterates this module statement by statement;
any behavioural difference between the two is a bug.

Expression evaluation memoizes per machine step with generation stamps,
so shared sub-terms are computed once per step and charged once.  Boolean
connectives do not short-circuit.
"""

from __future__ import annotations

from typing import Mapping

from ..errors import (BottomReachedError, InternalInvariantError,
                      MissingInputError, StepBudgetExceededError)
from ..exprdag import (ADD, AND, CONST, DIV, EQ, FALSE, LT, MUL, NOT, OR,
                       SUB, TRUE, VAR, truncated_div)
from ..frontend import N_ASSIGN, N_BRANCH, N_EXIT
from .tables import AddTable, GraphTable

KERNEL_KIND = "pure"


def _eval(table, root, values, memo_val, memo_gen, gen, counts):
    """Value of expression ``root``; fresh operators charged to ``counts``.

    ``values`` is indexed by variable slot (None = unbound), the memo pair
    by expression handle; stamps equal to ``gen`` mark entries as current.
    """
    if memo_gen[root] == gen:
        return memo_val[root]
    kinds = table.kinds
    a = table.a
    b = table.b
    consts = table.consts
    names = table.var_names
    stack = [(root, False)]
    while stack:
        n, ready = stack.pop()
        if memo_gen[n] == gen:
            continue
        k = kinds[n]
        if ready:
            x = memo_val[a[n]]
            if k == ADD:
                memo_val[n] = x + memo_val[b[n]]
                counts[0] += 1
            elif k == SUB:
                memo_val[n] = x - memo_val[b[n]]
                counts[0] += 1
            elif k == MUL:
                memo_val[n] = x * memo_val[b[n]]
                counts[0] += 1
            elif k == DIV:
                memo_val[n] = truncated_div(x, memo_val[b[n]], n)
                counts[0] += 1
            elif k == LT:
                memo_val[n] = x < memo_val[b[n]]
                counts[2] += 1
            elif k == EQ:
                memo_val[n] = x == memo_val[b[n]]
                counts[2] += 1
            elif k == AND:
                memo_val[n] = x and memo_val[b[n]]
                counts[1] += 1
            elif k == OR:
                memo_val[n] = x or memo_val[b[n]]
                counts[1] += 1
            else:  # NOT
                memo_val[n] = not x
                counts[1] += 1
            memo_gen[n] = gen
        elif k == CONST:
            memo_val[n] = consts[a[n]]
            memo_gen[n] = gen
        elif k == VAR:
            v = values[a[n]]
            if v is None:
                raise MissingInputError(names[a[n]])
            memo_val[n] = v
            memo_gen[n] = gen
        elif k == TRUE:
            memo_val[n] = True
            memo_gen[n] = gen
        elif k == FALSE:
            memo_val[n] = False
            memo_gen[n] = gen
        elif k == NOT:
            stack.append((n, True))
            stack.append((a[n], False))
        else:
            stack.append((n, True))
            stack.append((b[n], False))
            stack.append((a[n], False))
    return memo_val[root]


def _load_env(table, env: Mapping[str, int]):
    values = [None] * len(table.var_names)
    slot = {name: i for i, name in enumerate(table.var_names)}
    for name, v in env.items():
        i = slot.get(name)
        if i is not None:
            values[i] = v
    return values


def _store_env(table, values, env: Mapping[str, int]) -> dict[str, int]:
    out = dict(env)
    for i, v in enumerate(values):
        if v is not None:
            out[table.var_names[i]] = v
    return out


def run_graph(table: GraphTable, env: Mapping[str, int],
              budget: int | None = None):
    """Interpret the program graph under ``env``.

    Returns ``(final env, (arith, logic, compare, jump, assign), steps)``.
    Every node visit is one step; expression cost is the precomputed tree
    count, plus one jump per branch and one assign per write.
    """
    values = _load_env(table, env)
    memo_val = [None] * table.n_expr
    memo_gen = [0] * table.n_expr
    gen = 0
    scratch = [0, 0, 0]  # value memo may skip work; cost comes from tables
    arith = logic = compare = jump = assign = 0
    n_kind = table.n_kind
    node = table.entry
    steps = 0
    while n_kind[node] != N_EXIT:
        if budget is not None and steps >= budget:
            raise StepBudgetExceededError(budget)
        steps += 1
        k = n_kind[node]
        if k == N_ASSIGN:
            gen += 1
            v = _eval(table, table.n_expr_id[node], values, memo_val,
                      memo_gen, gen, scratch)
            values[table.n_var[node]] = v
            arith += table.n_arith[node]
            logic += table.n_logic[node]
            compare += table.n_cmp[node]
            assign += 1
            node = table.n_succ[node]
        elif k == N_BRANCH:
            gen += 1
            v = _eval(table, table.n_expr_id[node], values, memo_val,
                      memo_gen, gen, scratch)
            arith += table.n_arith[node]
            logic += table.n_logic[node]
            compare += table.n_cmp[node]
            jump += 1
            node = table.n_succ[node] if v else table.n_fsucc[node]
        else:  # skip
            node = table.n_succ[node]
    return (_store_env(table, values, env),
            (arith, logic, compare, jump, assign), steps)


def run_aggregated(table: AddTable, env: Mapping[str, int],
                   budget: int | None = None):
    """Interpret the aggregated program under ``env``.

    One step = one diagram evaluation plus its parallel assignment.  The
    expression memo is fresh per step, so predicates and right-hand sides
    of the same step share sub-term work and cost.
    """
    values = _load_env(table, env)
    memo_val = [None] * table.n_expr
    memo_gen = [0] * table.n_expr
    gen = 0
    counts = [0, 0, 0]
    jump = assign = 0
    t_kind = table.t_kind
    slot = table.entry_slot
    steps = 0
    while True:
        if budget is not None and steps >= budget:
            raise StepBudgetExceededError(budget)
        steps += 1
        gen += 1
        node = table.roots[slot]
        while t_kind[node] == 0:
            v = _eval(table, table.t_ap[node], values, memo_val, memo_gen,
                      gen, counts)
            jump += 1
            node = table.t_hi[node] if v else table.t_lo[node]
        if t_kind[node] == 2:
            raise BottomReachedError(table.cut_names[slot])
        if t_kind[node] == 3:
            raise InternalInvariantError("reached a conflict terminal")
        start = table.t_astart[node]
        end = table.t_aend[node]
        fresh = [_eval(table, table.assign_expr[i], values, memo_val,
                       memo_gen, gen, counts) for i in range(start, end)]
        for off, v in zip(range(start, end), fresh):
            values[table.assign_var[off]] = v
            assign += 1
        target = table.t_target[node]
        if target < 0:
            break
        slot = target
    return (_store_env(table, values, env),
            (counts[0], counts[1], counts[2], jump, assign), steps)
