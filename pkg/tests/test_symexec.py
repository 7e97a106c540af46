"""Concrete execution, contracted paths, and lockstep agreement."""

import itertools
import random

import pytest

from aggc.errors import StepBudgetExceededError
from aggc.exprdag import ExprDag, SymbolicState, eval_expr, pretty
from aggc.frontend import (build_program_graph, parse_program,
                           select_cut_points)
from aggc.simplify import LinearFeasibilityChecker, Normalizer
from aggc.symexec import (ContractedPath, Literal, branch_cases,
                          describe_path, enumerate_paths, format_paths,
                          format_trace, interpret_ast, paths_to_json,
                          run_concrete, run_lockstep)

from helpers import random_bexp, random_env, random_program, \
    random_terminating

FIB = ("if n < 1 { fib := 1 } else { prev := 1; fib := 1; "
       "while 2 < n { tmp := prev + fib; prev := fib; fib := tmp; "
       "n := n - 1 } }")


def fib_setting():
    dag = ExprDag()
    stmt = parse_program(dag, FIB)
    graph = build_program_graph(dag, stmt)
    return dag, stmt, graph, select_cut_points(graph)


def path_map(dag, paths):
    """Index paths by (condition text, target) for order-free assertions."""
    out = {}
    for p in paths:
        key = (pretty(dag, p.condition(dag)), p.target)
        assert key not in out
        out[key] = {v: pretty(dag, e) for v, e in p.state.items()}
    return out


# -- reference interpreter -------------------------------------------------

def test_interpret_ast_straight_line():
    dag = ExprDag()
    stmt = parse_program(dag, "x := 2; y := x * x; x := y - 1")
    assert interpret_ast(dag, stmt, {}) == {"x": 3, "y": 4}


def test_interpret_ast_branches_and_loops():
    dag = ExprDag()
    stmt = parse_program(dag, FIB)
    fibs = {1: 1, 2: 1, 3: 2, 4: 3, 5: 5, 6: 8, 7: 13, 10: 55}
    for n, f in fibs.items():
        assert interpret_ast(dag, stmt, {"n": n})["fib"] == f
    assert interpret_ast(dag, stmt, {"n": 0})["fib"] == 1
    assert interpret_ast(dag, stmt, {"n": -3})["fib"] == 1


def test_interpret_ast_budget():
    dag = ExprDag()
    stmt = parse_program(dag, "while 0 < 1 { skip }")
    with pytest.raises(StepBudgetExceededError):
        interpret_ast(dag, stmt, {}, budget=50)


def test_interpret_ast_does_not_mutate_env():
    dag = ExprDag()
    stmt = parse_program(dag, "x := 1")
    env = {"x": 0}
    interpret_ast(dag, stmt, env)
    assert env == {"x": 0}


# -- concrete graph execution ----------------------------------------------

def test_run_concrete_matches_interpreter_on_fib():
    dag, stmt, graph, _ = fib_setting()
    for n in range(-2, 12):
        values, _ = run_concrete(dag, graph, {"n": n})
        assert values == interpret_ast(dag, stmt, {"n": n})


def test_run_concrete_matches_interpreter_random():
    rng = random.Random(55)
    for _ in range(150):
        source, env = random_terminating(rng)
        dag = ExprDag()
        stmt = parse_program(dag, source)
        graph = build_program_graph(dag, stmt)
        values, _ = run_concrete(dag, graph, env)
        assert values == interpret_ast(dag, stmt, env), source


def test_run_concrete_unit_costs():
    dag = ExprDag()
    graph = build_program_graph(dag, parse_program(dag, "x := 1"))
    values, report = run_concrete(dag, graph, {})
    assert values == {"x": 1}
    assert (report.arith, report.logic, report.compare) == (0, 0, 0)
    assert (report.jump, report.assign) == (0, 1)
    assert report.steps == 1

    graph = build_program_graph(
        dag, parse_program(dag, "if x < 1 { y := x + 1 } else { skip }"))
    _, report = run_concrete(dag, graph, {"x": 0})
    # one compare + one jump for the branch, one add + one write after
    assert (report.arith, report.logic, report.compare) == (1, 0, 1)
    assert (report.jump, report.assign) == (1, 1)
    assert report.total == 4
    assert report.steps == 2


def test_run_concrete_tree_cost_ignores_sharing():
    # (x + x) * (x + x) reads as a tree: three operators per evaluation
    dag = ExprDag()
    graph = build_program_graph(
        dag, parse_program(dag, "y := (x + x) * (x + x)"))
    _, report = run_concrete(dag, graph, {"x": 2})
    assert report.arith == 3
    assert report.total == 4


def test_run_concrete_budget():
    dag = ExprDag()
    graph = build_program_graph(dag, parse_program(dag, "while 0 < 1 { skip }"))
    with pytest.raises(StepBudgetExceededError):
        run_concrete(dag, graph, {}, budget=99)


# -- branch cases ------------------------------------------------------------

def test_branch_cases_single_comparison():
    dag = ExprDag()
    cond = dag.lt(dag.var("x"), dag.const(1))
    cases = dict(branch_cases(dag, cond))
    assert cases == {((cond, True),): True, ((cond, False),): False}


def test_branch_cases_short_circuit_minimality():
    dag = ExprDag()
    a = dag.lt(dag.var("x"), dag.const(0))
    b = dag.lt(dag.var("y"), dag.const(0))
    cases = branch_cases(dag, dag.conj(a, b))
    # the false alternative on a alone must not mention b
    assert (((a, False),), False) in cases
    assert (((a, True), (b, True)), True) in cases
    assert (((a, True), (b, False)), False) in cases
    assert len(cases) == 3


def test_branch_cases_constant_condition():
    dag = ExprDag()
    assert branch_cases(dag, dag.true()) == [((), True)]
    norm = Normalizer(dag)
    folded = dag.lt(dag.const(1), dag.const(2))
    assert branch_cases(dag, folded, norm) == [((), True)]


def test_branch_cases_canonicalizes_with_normalizer():
    dag = ExprDag()
    norm = Normalizer(dag)
    cond = dag.lt(dag.const(2), dag.sub(dag.var("n"), dag.const(1)))
    cases = branch_cases(dag, cond, norm)
    aps = {ap for lits, _ in cases for ap, _ in lits}
    assert aps == {norm.normalize(cond)}


def test_branch_cases_partition_property():
    # for any state, exactly one alternative's literals hold, and its
    # outcome is the condition's value
    rng = random.Random(77)
    for _ in range(200):
        dag = ExprDag()
        cond = random_bexp(rng, dag, 3)
        cases = branch_cases(dag, cond)
        for _ in range(20):
            env = random_env(rng, -4, 4)
            matching = [
                outcome for lits, outcome in cases
                if all(eval_expr(dag, ap, env)[0] == pos for ap, pos in lits)
            ]
            assert len(matching) == 1
            assert matching[0] == eval_expr(dag, cond, env)[0]


# -- contracted paths --------------------------------------------------------

def test_fib_paths_from_entry():
    dag, _, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, graph.entry,
                            normalizer=Normalizer(dag))
    assert path_map(dag, paths) == {
        ("n - 1 < 0", 9): {"fib": "1"},
        ("!(n - 1 < 0) && !(2 - n < 0)", 9): {"fib": "1", "prev": "1"},
        ("!(n - 1 < 0) && 2 - n < 0", 8):
            {"fib": "2", "prev": "1", "tmp": "2"},
    }


def test_fib_paths_from_loop_cut():
    dag, _, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, 8, normalizer=Normalizer(dag))
    assert path_map(dag, paths) == {
        ("!(3 - n < 0)", 9): {"n": "n - 1"},
        ("3 - n < 0", 8): {"fib": "fib + prev", "n": "n - 1",
                           "prev": "fib", "tmp": "fib + prev"},
    }


def test_fib_paths_unrolled_once():
    dag, _, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, 8, unroll=1,
                            normalizer=Normalizer(dag))
    assert path_map(dag, paths) == {
        ("!(3 - n < 0)", 9): {"n": "n - 1"},
        ("3 - n < 0 && !(4 - n < 0)", 9):
            {"fib": "fib + prev", "n": "n - 2",
             "prev": "fib", "tmp": "fib + prev"},
        ("3 - n < 0 && 4 - n < 0", 8):
            {"fib": "2 * fib + prev", "n": "n - 2",
             "prev": "fib + prev", "tmp": "2 * fib + prev"},
    }


def test_fib_unroll_path_counts():
    dag, _, graph, cuts = fib_setting()
    for k in range(6):
        paths = enumerate_paths(dag, graph, cuts, 8, unroll=k)
        # one exit per revisit count plus the continuation back to the cut
        assert len(paths) == k + 2
        assert sum(p.target == 8 for p in paths) == 1


def test_literal_metadata():
    dag, _, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, graph.entry, unroll=1,
                            normalizer=Normalizer(dag))
    for p in paths:
        for lit in p.literals:
            loop_lit = "n - 1" not in pretty(dag, lit.ap)
            assert (lit.loop == 4) == loop_lit
            assert lit.depth in (0, 1)


def test_paths_partition_states():
    # from any source, exactly one contracted path applies to each state
    dag, stmt, graph, cuts = fib_setting()
    rng = random.Random(3)
    for source in (graph.entry, 8):
        for unroll in (0, 1, 3):
            paths = enumerate_paths(dag, graph, cuts, source, unroll=unroll)
            for _ in range(50):
                env = {"n": rng.randint(-10, 40), "fib": rng.randint(-5, 5),
                       "prev": rng.randint(-5, 5), "tmp": rng.randint(-5, 5)}
                assert sum(p.holds(dag, env) for p in paths) == 1


def test_paths_partition_states_random_programs():
    rng = random.Random(91)
    for _ in range(40):
        source, env = random_terminating(rng, force_loop=True)
        dag = ExprDag()
        graph = build_program_graph(dag, parse_program(dag, source))
        cuts = select_cut_points(graph)
        for cut in sorted(cuts - {graph.exit}):
            paths = enumerate_paths(dag, graph, cuts, cut, unroll=2)
            for _ in range(10):
                probe = random_env(rng)
                assert sum(p.holds(dag, probe) for p in paths) == 1, source


def test_path_state_composes():
    # applying the symbolic assignment equals actually running the fragment
    dag, stmt, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, graph.entry,
                            normalizer=Normalizer(dag))
    for n in range(-2, 10):
        env = {"n": n}
        taken = [p for p in paths if p.holds(dag, env)][0]
        image = dict(env)
        for var, e in taken.state.items():
            image[var] = eval_expr(dag, e, env)[0]
        expect = interpret_ast(dag, stmt, {"n": n})
        if taken.target == graph.exit:
            assert image == expect
        else:
            assert 2 < n  # continuing into the loop


def test_infeasible_alternatives_pruned():
    dag = ExprDag()
    stmt = parse_program(
        dag, "if x < 0 { y := 1 } else { y := 2 }; "
             "if x < 0 { z := 1 } else { z := 2 }")
    graph = build_program_graph(dag, stmt)
    cuts = select_cut_points(graph)
    plain = enumerate_paths(dag, graph, cuts, graph.entry)
    assert len(plain) == 4
    pruned = enumerate_paths(dag, graph, cuts, graph.entry,
                             feas=LinearFeasibilityChecker(dag),
                             normalizer=Normalizer(dag))
    assert len(pruned) == 2
    assert {frozenset(p.state.items()) for p in pruned} == \
        {frozenset(p.state.items()) for p in plain if p.holds(dag, {"x": -1})
         or p.holds(dag, {"x": 1})}


def test_enumerate_rejects_bad_sources():
    dag, _, graph, cuts = fib_setting()
    with pytest.raises(ValueError):
        enumerate_paths(dag, graph, cuts, 4)  # not a cut point
    with pytest.raises(ValueError):
        enumerate_paths(dag, graph, cuts, graph.exit)


# -- lockstep ----------------------------------------------------------------

def test_lockstep_completes_on_fib():
    dag, _, graph, cuts = fib_setting()
    trace, completed = run_lockstep(dag, graph, cuts, {"n": 7})
    assert completed
    assert trace[0].node == graph.entry
    assert trace[-1].node == graph.exit
    assert trace[-1].state["fib"] == 13


def test_lockstep_budget_runs_out():
    dag = ExprDag()
    graph = build_program_graph(dag, parse_program(dag, "while 0 < 1 { skip }"))
    cuts = select_cut_points(graph)
    trace, completed = run_lockstep(dag, graph, cuts, {}, budget=20)
    assert not completed
    assert len(trace) == 21


def test_lockstep_random_programs():
    rng = random.Random(23)
    for _ in range(100):
        source, env = random_terminating(rng)
        dag = ExprDag()
        graph = build_program_graph(dag, parse_program(dag, source))
        cuts = select_cut_points(graph)
        trace, completed = run_lockstep(dag, graph, cuts, env, budget=500)
        if completed:
            assert trace[-1].state == interpret_ast(
                dag, parse_program(dag, source), env)


# -- dumps -------------------------------------------------------------------

def test_describe_and_format_paths():
    dag, _, graph, cuts = fib_setting()
    paths = enumerate_paths(dag, graph, cuts, 8)
    d = describe_path(dag, graph, paths[0])
    assert d["source"] == "8"
    assert d["target"] in ("8", "te")
    text = format_paths(dag, graph, paths)
    assert "-->" in text and text.endswith("\n")
    assert "8 --[" in text
    json_text = paths_to_json(dag, graph, paths)
    assert '"assignment"' in json_text


def test_format_trace_smoke():
    dag, _, graph, cuts = fib_setting()
    trace, _ = run_lockstep(dag, graph, cuts, {"n": 3})
    text = format_trace(dag, graph, trace)
    assert "at st" in text
    assert "sigma" in text
