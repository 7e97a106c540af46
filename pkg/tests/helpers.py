"""Shared test utilities: seeded random programs, expressions, and envs.

Generated programs avoid division so that any sub-expression can be
evaluated under any assignment (decision diagrams may test predicates from
sibling paths).  Loops are built around a counter update so that most
generated programs terminate; tests that need guaranteed termination
filter with the AST-interpreter oracle under a step budget.
"""

from __future__ import annotations

import random

from aggc.errors import StepBudgetExceededError
from aggc.exprdag import ExprDag, ExprId
from aggc.frontend import (Assign, If, Seq, Skip, Stmt, While, statements,
                           unparse)
from aggc.symexec import interpret_ast

VARS = ("a", "b", "c")


def random_env(rng: random.Random, lo: int = -8, hi: int = 8) -> dict:
    return {v: rng.randint(lo, hi) for v in VARS}


def random_aexp(rng: random.Random, dag: ExprDag, depth: int) -> ExprId:
    # constants stay non-negative: the grammar has no unary minus, and
    # generated programs must round-trip through concrete syntax
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return dag.var(rng.choice(VARS))
        return dag.const(rng.randint(0, 4))
    op = rng.choice((dag.add, dag.sub, dag.mul))
    return op(random_aexp(rng, dag, depth - 1),
              random_aexp(rng, dag, depth - 1))


def random_relation(rng: random.Random, dag: ExprDag, depth: int) -> ExprId:
    op = dag.lt if rng.random() < 0.7 else dag.eq
    return op(random_aexp(rng, dag, depth), random_aexp(rng, dag, depth))


def random_bexp(rng: random.Random, dag: ExprDag, depth: int) -> ExprId:
    if depth <= 0 or rng.random() < 0.55:
        return random_relation(rng, dag, 1)
    r = rng.random()
    if r < 0.35:
        return dag.conj(random_bexp(rng, dag, depth - 1),
                        random_bexp(rng, dag, depth - 1))
    if r < 0.7:
        return dag.disj(random_bexp(rng, dag, depth - 1),
                        random_bexp(rng, dag, depth - 1))
    return dag.neg(random_bexp(rng, dag, depth - 1))


def seq_of(stmts: list[Stmt]) -> Stmt:
    # flatten, then nest to the right: the parser's normal form, so
    # unparse/parse round-trips are exact
    flat: list[Stmt] = []
    for s in stmts:
        flat.extend(statements(s))
    out = flat[-1]
    for s in reversed(flat[:-1]):
        out = Seq(s, out)
    return out


def random_stmt(rng: random.Random, dag: ExprDag, depth: int) -> Stmt:
    r = rng.random()
    if depth <= 0 or r < 0.45:
        return Assign(rng.choice(VARS), random_aexp(rng, dag, 2))
    if r < 0.5:
        return Skip()
    if r < 0.65:
        return seq_of([random_stmt(rng, dag, depth - 1)
                       for _ in range(rng.randint(2, 3))])
    if r < 0.85:
        return If(random_bexp(rng, dag, 1),
                  random_stmt(rng, dag, depth - 1),
                  random_stmt(rng, dag, depth - 1))
    return counted_loop(rng, dag, depth - 1)


def counted_loop(rng: random.Random, dag: ExprDag, depth: int) -> While:
    """A loop driven by a counter so most instances terminate."""
    v = rng.choice(VARS)
    bound = dag.const(rng.randint(0, 6))
    if rng.random() < 0.5:
        cond = dag.lt(dag.var(v), bound)
        update = Assign(v, dag.add(dag.var(v), dag.const(rng.randint(1, 2))))
    else:
        cond = dag.lt(bound, dag.var(v))
        update = Assign(v, dag.sub(dag.var(v), dag.const(rng.randint(1, 2))))
    body = [random_stmt(rng, dag, depth)] if rng.random() < 0.6 else []
    return While(cond, seq_of(body + [update]))


def random_program(rng: random.Random, dag: ExprDag,
                   depth: int = 3, force_loop: bool = False) -> Stmt:
    parts = [random_stmt(rng, dag, depth)
             for _ in range(rng.randint(1, 3))]
    if force_loop:
        parts.insert(rng.randrange(len(parts) + 1),
                     counted_loop(rng, dag, depth - 1))
    return seq_of(parts)


def random_terminating(rng: random.Random, budget: int = 400,
                       force_loop: bool = False) -> tuple[str, dict]:
    """(source, env) with the oracle finishing within ``budget`` steps."""
    while True:
        dag = ExprDag()
        stmt = random_program(rng, dag, force_loop=force_loop)
        env = random_env(rng)
        try:
            interpret_ast(dag, stmt, env, budget=budget)
        except StepBudgetExceededError:
            continue
        return unparse(dag, stmt), env
