# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled execution kernel.

Statement-by-statement transliteration of ``aggc._kernel.pure`` with typed
indices and a C generation-stamp array.  Values remain Python objects, so
arbitrary-precision arithmetic and error behaviour are identical; only the
interpretation overhead shrinks.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc

from aggc import exprdag as _ed
from aggc import frontend as _fe
from aggc.errors import (BottomReachedError, InternalInvariantError,
                         MissingInputError, StepBudgetExceededError)
from aggc.exprdag import truncated_div

KERNEL_KIND = "cython"

cdef int CONST = _ed.CONST
cdef int VAR = _ed.VAR
cdef int ADD = _ed.ADD
cdef int SUB = _ed.SUB
cdef int MUL = _ed.MUL
cdef int DIV = _ed.DIV
cdef int LT = _ed.LT
cdef int EQ = _ed.EQ
cdef int AND = _ed.AND
cdef int OR = _ed.OR
cdef int NOT = _ed.NOT
cdef int TRUE = _ed.TRUE
cdef int FALSE = _ed.FALSE

cdef int N_ASSIGN = _fe.N_ASSIGN
cdef int N_SKIP = _fe.N_SKIP
cdef int N_BRANCH = _fe.N_BRANCH
cdef int N_EXIT = _fe.N_EXIT


cdef object _eval(object table, Py_ssize_t root, list values, list memo_val,
                  long * memo_gen, long gen, list counts):
    cdef list kinds = table.kinds
    cdef list a = table.a
    cdef list b = table.b
    cdef list consts = table.consts
    cdef list names = table.var_names
    cdef long c_arith = 0, c_logic = 0, c_compare = 0
    cdef list stack
    cdef tuple frame
    cdef Py_ssize_t n, an
    cdef int k
    cdef bint ready
    cdef object x, y, v
    if memo_gen[root] == gen:
        return memo_val[root]
    stack = [(root, False)]
    try:
        while stack:
            frame = <tuple> stack.pop()
            n = <Py_ssize_t> frame[0]
            ready = <bint> frame[1]
            if memo_gen[n] == gen:
                continue
            k = <int> kinds[n]
            an = <Py_ssize_t> a[n]
            if ready:
                x = memo_val[an]
                if k == ADD:
                    memo_val[n] = x + memo_val[<Py_ssize_t> b[n]]
                    c_arith += 1
                elif k == SUB:
                    memo_val[n] = x - memo_val[<Py_ssize_t> b[n]]
                    c_arith += 1
                elif k == MUL:
                    memo_val[n] = x * memo_val[<Py_ssize_t> b[n]]
                    c_arith += 1
                elif k == DIV:
                    memo_val[n] = truncated_div(
                        x, memo_val[<Py_ssize_t> b[n]], n)
                    c_arith += 1
                elif k == LT:
                    memo_val[n] = x < memo_val[<Py_ssize_t> b[n]]
                    c_compare += 1
                elif k == EQ:
                    memo_val[n] = x == memo_val[<Py_ssize_t> b[n]]
                    c_compare += 1
                elif k == AND:
                    memo_val[n] = x and memo_val[<Py_ssize_t> b[n]]
                    c_logic += 1
                elif k == OR:
                    memo_val[n] = x or memo_val[<Py_ssize_t> b[n]]
                    c_logic += 1
                else:  # NOT
                    memo_val[n] = not x
                    c_logic += 1
                memo_gen[n] = gen
            elif k == CONST:
                memo_val[n] = consts[an]
                memo_gen[n] = gen
            elif k == VAR:
                v = values[an]
                if v is None:
                    raise MissingInputError(names[an])
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
                stack.append((an, False))
            else:
                stack.append((n, True))
                stack.append((b[n], False))
                stack.append((an, False))
    finally:
        counts[0] = <object> counts[0] + c_arith
        counts[1] = <object> counts[1] + c_logic
        counts[2] = <object> counts[2] + c_compare
    return memo_val[root]


cdef list _load_env(object table, object env):
    cdef list names = table.var_names
    cdef list values = [None] * len(names)
    cdef dict slot = {}
    cdef Py_ssize_t i
    for i in range(len(names)):
        slot[names[i]] = i
    for name, v in env.items():
        if name in slot:
            values[<Py_ssize_t> slot[name]] = v
    return values


cdef dict _store_env(object table, list values, object env):
    cdef dict out = dict(env)
    cdef list names = table.var_names
    cdef Py_ssize_t i
    for i in range(len(values)):
        if values[i] is not None:
            out[names[i]] = values[i]
    return out


def run_graph(object table, object env, object budget=None):
    """See ``aggc._kernel.pure.run_graph``."""
    cdef list values = _load_env(table, env)
    cdef Py_ssize_t n_expr = table.n_expr
    cdef list memo_val = [None] * n_expr
    cdef long * memo_gen = <long *> PyMem_Malloc(n_expr * sizeof(long))
    if memo_gen == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n_expr):
        memo_gen[i] = 0
    cdef long gen = 0
    cdef list scratch = [0, 0, 0]
    cdef long arith = 0, logic = 0, compare = 0, jump = 0, assign = 0
    cdef list n_kind = table.n_kind
    cdef list n_expr_id = table.n_expr_id
    cdef list n_var = table.n_var
    cdef list n_succ = table.n_succ
    cdef list n_fsucc = table.n_fsucc
    cdef list n_arith = table.n_arith
    cdef list n_logic = table.n_logic
    cdef list n_cmp = table.n_cmp
    cdef Py_ssize_t node = table.entry
    cdef long steps = 0
    cdef long limit = -1
    if budget is not None:
        limit = <long> budget
    cdef int k
    cdef object v
    try:
        while <int> n_kind[node] != N_EXIT:
            if limit >= 0 and steps >= limit:
                raise StepBudgetExceededError(budget)
            steps += 1
            k = <int> n_kind[node]
            if k == N_ASSIGN:
                gen += 1
                v = _eval(table, <Py_ssize_t> n_expr_id[node], values,
                          memo_val, memo_gen, gen, scratch)
                values[<Py_ssize_t> n_var[node]] = v
                arith += <long> n_arith[node]
                logic += <long> n_logic[node]
                compare += <long> n_cmp[node]
                assign += 1
                node = <Py_ssize_t> n_succ[node]
            elif k == N_BRANCH:
                gen += 1
                v = _eval(table, <Py_ssize_t> n_expr_id[node], values,
                          memo_val, memo_gen, gen, scratch)
                arith += <long> n_arith[node]
                logic += <long> n_logic[node]
                compare += <long> n_cmp[node]
                jump += 1
                node = <Py_ssize_t> (n_succ[node] if v else n_fsucc[node])
            else:  # skip
                node = <Py_ssize_t> n_succ[node]
    finally:
        PyMem_Free(memo_gen)
    return (_store_env(table, values, env),
            (arith, logic, compare, jump, assign), steps)


def run_aggregated(object table, object env, object budget=None):
    """See ``aggc._kernel.pure.run_aggregated``."""
    cdef list values = _load_env(table, env)
    cdef Py_ssize_t n_expr = table.n_expr
    cdef list memo_val = [None] * n_expr
    cdef long * memo_gen = <long *> PyMem_Malloc(n_expr * sizeof(long))
    if memo_gen == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n_expr):
        memo_gen[i] = 0
    cdef long gen = 0
    cdef list counts = [0, 0, 0]
    cdef long jump = 0, assign = 0
    cdef list t_kind = table.t_kind
    cdef list t_ap = table.t_ap
    cdef list t_lo = table.t_lo
    cdef list t_hi = table.t_hi
    cdef list t_target = table.t_target
    cdef list t_astart = table.t_astart
    cdef list t_aend = table.t_aend
    cdef list assign_var = table.assign_var
    cdef list assign_expr = table.assign_expr
    cdef list roots = table.roots
    cdef Py_ssize_t slot = table.entry_slot
    cdef Py_ssize_t node, start, end, off
    cdef long steps = 0
    cdef long limit = -1
    if budget is not None:
        limit = <long> budget
    cdef int tk
    cdef Py_ssize_t target
    cdef object v
    cdef list fresh
    try:
        while True:
            if limit >= 0 and steps >= limit:
                raise StepBudgetExceededError(budget)
            steps += 1
            gen += 1
            node = <Py_ssize_t> roots[slot]
            while <int> t_kind[node] == 0:
                v = _eval(table, <Py_ssize_t> t_ap[node], values, memo_val,
                          memo_gen, gen, counts)
                jump += 1
                node = <Py_ssize_t> (t_hi[node] if v else t_lo[node])
            tk = <int> t_kind[node]
            if tk == 2:
                raise BottomReachedError(table.cut_names[slot])
            if tk == 3:
                raise InternalInvariantError("reached a conflict terminal")
            start = <Py_ssize_t> t_astart[node]
            end = <Py_ssize_t> t_aend[node]
            fresh = [_eval(table, <Py_ssize_t> assign_expr[off], values,
                           memo_val, memo_gen, gen, counts)
                     for off in range(start, end)]
            for off in range(start, end):
                values[<Py_ssize_t> assign_var[off]] = fresh[off - start]
                assign += 1
            target = <Py_ssize_t> t_target[node]
            if target < 0:
                break
            slot = target
    finally:
        PyMem_Free(memo_gen)
    return (_store_env(table, values, env),
            (counts[0], counts[1], counts[2], jump, assign), steps)
