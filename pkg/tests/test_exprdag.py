"""Expression store: interning, evaluation, substitution, rendering."""

import random

import pytest

from aggc.errors import DivisionByZeroError, MissingInputError
from aggc.exprdag import (EvalCache, ExprDag, SymbolicState, eval_expr,
                          pretty, structurally_equal, substitute, tree_cost,
                          truncated_div, vars_of)
from aggc.frontend import parse_program

from helpers import random_aexp, random_bexp


def test_interning_is_perfect_on_construction():
    dag = ExprDag()
    x = dag.var("x")
    e1 = dag.add(dag.mul(x, dag.const(2)), dag.const(1))
    e2 = dag.add(dag.mul(dag.var("x"), dag.const(2)), dag.const(1))
    assert e1 == e2
    assert len(dag.reachable([e1])) == 5


def test_interning_matches_structural_equality_randomly():
    rng = random.Random(7)
    dag = ExprDag()
    exprs = [random_aexp(rng, dag, 4) for _ in range(200)]
    exprs += [random_bexp(rng, dag, 3) for _ in range(200)]
    for _ in range(10_000):
        a = rng.choice(exprs)
        b = rng.choice(exprs)
        assert (a == b) == structurally_equal(dag, a, b)


def test_distinct_nodes_differ():
    dag = ExprDag()
    assert dag.const(1) != dag.const(2)
    assert dag.var("x") != dag.var("y")
    assert dag.add(dag.var("x"), dag.var("y")) != \
        dag.add(dag.var("y"), dag.var("x"))


def test_sort_checking_on_intern():
    dag = ExprDag()
    x = dag.var("x")
    b = dag.lt(x, dag.const(0))
    with pytest.raises(ValueError):
        dag.add(x, b)
    with pytest.raises(ValueError):
        dag.neg(x)
    with pytest.raises(ValueError):
        dag.conj(b, x)


@pytest.mark.parametrize("a,b,q", [
    (7, 2, 3), (-7, 2, -3), (7, -2, -3), (-7, -2, 3),
    (1, 2, 0), (-1, 2, 0), (6, 3, 2), (0, 5, 0),
])
def test_truncated_division(a, b, q):
    assert truncated_div(a, b, 0) == q


def test_division_by_zero_identifies_node():
    dag = ExprDag()
    e = dag.div(dag.const(1), dag.sub(dag.var("x"), dag.var("x")))
    with pytest.raises(DivisionByZeroError) as err:
        eval_expr(dag, e, {"x": 3})
    assert err.value.expr == e


def test_eval_basic_and_missing_input():
    dag = ExprDag()
    e = dag.add(dag.mul(dag.var("x"), dag.const(3)), dag.var("y"))
    value, cost = eval_expr(dag, e, {"x": 4, "y": -1})
    assert value == 11
    assert cost == 2
    with pytest.raises(MissingInputError) as err:
        eval_expr(dag, e, {"x": 4})
    assert err.value.name == "y"


def test_eval_boolean_no_short_circuit_cost():
    dag = ExprDag()
    x = dag.var("x")
    e = dag.disj(dag.lt(dag.const(0), x), dag.lt(x, dag.const(10)))
    value, cost = eval_expr(dag, e, {"x": 5})
    assert value is True
    # both comparisons and the connective are computed
    assert cost == 3


def test_eval_cache_shares_across_calls():
    dag = ExprDag()
    x = dag.var("x")
    square = dag.mul(x, x)
    cache = EvalCache()
    _, first = eval_expr(dag, square, {"x": 3}, cache)
    _, second = eval_expr(dag, square, {"x": 3}, cache)
    assert first == 1 and second == 0
    assert cache.arith == 1


def test_eval_cache_counts_by_category():
    dag = ExprDag()
    x = dag.var("x")
    e = dag.conj(dag.lt(dag.add(x, dag.const(1)), dag.const(9)),
                 dag.neg(dag.eq(x, dag.const(0))))
    cache = EvalCache()
    eval_expr(dag, e, {"x": 2}, cache)
    assert (cache.arith, cache.logic, cache.compare) == (1, 2, 2)


def test_random_eval_matches_python_semantics():
    rng = random.Random(13)
    dag = ExprDag()

    def mirror(e, env):
        k = dag.kind(e)
        kids = dag.children(e)
        if not kids:
            if k == 0:
                return dag.const_value(e)
            if k == 1:
                return env[dag.var_name(e)]
            return k == 11
        vals = [mirror(c, env) for c in kids]
        return {2: lambda: vals[0] + vals[1],
                3: lambda: vals[0] - vals[1],
                4: lambda: vals[0] * vals[1],
                6: lambda: vals[0] < vals[1],
                7: lambda: vals[0] == vals[1],
                8: lambda: vals[0] and vals[1],
                9: lambda: vals[0] or vals[1],
                10: lambda: not vals[0]}[k]()

    for _ in range(300):
        e = random_bexp(rng, dag, 3)
        env = {v: rng.randint(-5, 5) for v in ("a", "b", "c")}
        assert eval_expr(dag, e, env)[0] == mirror(e, env)


def test_symbolic_state_drops_identities():
    dag = ExprDag()
    s = SymbolicState.identity()
    assert not s
    s2 = s.assigned(dag, "x", dag.var("x"))
    assert s2 == s and len(s2) == 0
    s3 = s.assigned(dag, "x", dag.add(dag.var("x"), dag.const(1)))
    assert s3.get("x") is not None
    # reassigning the identity expression removes the entry again
    s4 = s3.assigned(dag, "x", dag.var("x"))
    assert s4 == SymbolicState.identity()
    assert s4.get("x") is None
    assert dict(s3.assigned(dag, "y", dag.var("y")).items()) == \
        dict(s3.items())


def test_symbolic_state_equality_and_hash():
    dag = ExprDag()
    a = SymbolicState({"x": dag.const(1), "y": dag.var("z")})
    b = SymbolicState.identity().assigned(dag, "y", dag.var("z")) \
        .assigned(dag, "x", dag.const(1))
    assert a == b
    assert hash(a) == hash(b)
    assert a != SymbolicState({"x": dag.const(2)})


def test_substitute_is_syntactic():
    dag = ExprDag()
    x = dag.var("x")
    state = SymbolicState({"x": dag.add(x, dag.const(1))})
    e = dag.mul(x, x)
    out = substitute(dag, e, state)
    assert pretty(dag, out) == "(x + 1) * (x + 1)"
    # no arithmetic was performed
    assert dag.kind(out) == dag.kind(e)


def test_substitute_composes_with_eval():
    rng = random.Random(99)
    dag = ExprDag()
    for _ in range(200):
        e = random_aexp(rng, dag, 3)
        state = SymbolicState(
            {v: random_aexp(rng, dag, 2) for v in ("a", "b")})
        env = {v: rng.randint(-4, 4) for v in ("a", "b", "c")}
        indirect = eval_expr(dag, substitute(dag, e, state), env)[0]
        inner = dict(env)
        for name, img in state.items():
            inner[name] = eval_expr(dag, img, env)[0]
        assert indirect == eval_expr(dag, e, inner)[0]


def test_tree_cost_counts_occurrences():
    dag = ExprDag()
    x = dag.var("x")
    square = dag.mul(x, x)
    fourth = dag.mul(square, square)
    assert tree_cost(dag, square) == (1, 0, 0)
    # the shared square counts twice when read as a tree
    assert tree_cost(dag, fourth) == (3, 0, 0)
    cond = dag.neg(dag.lt(dag.const(1), x))
    assert tree_cost(dag, cond) == (0, 1, 1)


def test_vars_of():
    dag = ExprDag()
    e = dag.add(dag.mul(dag.var("x"), dag.var("y")), dag.const(4))
    assert vars_of(dag, e) == {"x", "y"}


def test_pretty_round_trips_through_parser():
    # the grammar has no unary minus, so only expressions free of negative
    # constants are expressible in concrete syntax
    rng = random.Random(21)
    dag = ExprDag()
    tested = 0
    while tested < 300:
        e = random_bexp(rng, dag, 3)
        if any(dag.kind(n) == 0 and dag.const_value(n) < 0
               for n in dag.reachable([e])):
            continue
        source = "x := 0; if %s { x := 1 } else { x := 2 }" % pretty(dag, e)
        stmt = parse_program(dag, source)
        assert stmt.second.cond == e, pretty(dag, e)
        tested += 1


def test_pretty_minimal_parens():
    dag = ExprDag()
    n = dag.var("n")
    assert pretty(dag, dag.sub(dag.sub(n, dag.const(1)), dag.const(1))) == \
        "n - 1 - 1"
    assert pretty(dag, dag.sub(n, dag.sub(dag.const(1), dag.const(1)))) == \
        "n - (1 - 1)"
    assert pretty(dag, dag.mul(dag.add(n, dag.const(1)), dag.const(2))) == \
        "(n + 1) * 2"
    assert pretty(dag, dag.neg(dag.lt(dag.const(1), n))) == "!(1 < n)"
