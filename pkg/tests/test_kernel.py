"""The two execution kernels must be observationally identical."""

import random

import pytest

from aggc._kernel import available_kernels, get_kernel, kernel_kind, \
    set_kernel
from aggc._kernel.tables import GraphTable
from aggc.errors import (BottomReachedError, DivisionByZeroError,
                         MissingInputError, StepBudgetExceededError)
from aggc.exprdag import ExprDag
from aggc.frontend import build_program_graph, parse_program
from aggc.runtime import CompileConfig, compile_program

from helpers import random_terminating

KERNELS = available_kernels()
both = pytest.mark.parametrize("kernel", KERNELS)

FIB = ("if n < 1 { fib := 1 } else { prev := 1; fib := 1; "
       "while 2 < n { tmp := prev + fib; prev := fib; fib := tmp; "
       "n := n - 1 } }")


@pytest.fixture(autouse=True)
def restore_kernel():
    before = kernel_kind()
    yield
    set_kernel(before)


def kernel_module(name):
    return set_kernel(name)


def graph_table(source):
    dag = ExprDag()
    graph = build_program_graph(dag, parse_program(dag, source))
    return GraphTable(dag, graph)


def test_both_kernels_present():
    # the compiled extension must have built; the fallback always exists
    assert KERNELS == ("pure", "cython")


def test_set_kernel_round_trip():
    for name in KERNELS:
        assert set_kernel(name).KERNEL_KIND == name
        assert kernel_kind() == name
        assert get_kernel().KERNEL_KIND == name
    with pytest.raises(ValueError):
        set_kernel("fortran")


@both
def test_run_graph_fib(kernel):
    k = kernel_module(kernel)
    table = graph_table(FIB)
    values, costs, steps = k.run_graph(table, {"n": 7})
    assert values["fib"] == 13
    assert values["n"] == 2
    total = sum(costs)
    assert total > 0 and steps > 0


@both
def test_run_graph_env_passthrough(kernel):
    k = kernel_module(kernel)
    table = graph_table("x := y + 1")
    values, _, _ = k.run_graph(table, {"y": 2, "unrelated": 9})
    assert values == {"x": 3, "y": 2, "unrelated": 9}


@both
def test_run_graph_missing_input(kernel):
    k = kernel_module(kernel)
    table = graph_table("x := y + 1")
    with pytest.raises(MissingInputError) as err:
        k.run_graph(table, {})
    assert err.value.name == "y"


@both
def test_run_graph_division_by_zero(kernel):
    k = kernel_module(kernel)
    table = graph_table("x := 1 / y")
    assert k.run_graph(table, {"y": 2})[0]["x"] == 0
    with pytest.raises(DivisionByZeroError):
        k.run_graph(table, {"y": 0})


@both
def test_run_graph_budget(kernel):
    k = kernel_module(kernel)
    table = graph_table("while 0 < 1 { skip }")
    with pytest.raises(StepBudgetExceededError) as err:
        k.run_graph(table, {}, 10)
    assert err.value.budget == 10


@both
def test_run_aggregated_fib(kernel):
    k = kernel_module(kernel)
    program = compile_program(FIB, CompileConfig(unroll=2))
    values, costs, steps = k.run_aggregated(program.table(), {"n": 10})
    assert values["fib"] == 55
    assert steps > 0


@both
def test_run_aggregated_budget(kernel):
    k = kernel_module(kernel)
    program = compile_program(FIB)
    with pytest.raises(StepBudgetExceededError):
        k.run_aggregated(program.table(), {"n": 500}, 5)


@both
def test_run_aggregated_missing_input(kernel):
    k = kernel_module(kernel)
    program = compile_program(FIB)
    with pytest.raises(MissingInputError):
        k.run_aggregated(program.table(), {})


def test_kernels_agree_on_fib_graph():
    table = graph_table(FIB)
    for n in range(-2, 30):
        results = [kernel_module(k).run_graph(table, {"n": n})
                   for k in KERNELS]
        assert results[0] == results[1]


def test_kernels_agree_on_fib_aggregated():
    for config in (CompileConfig(), CompileConfig(unroll=3),
                   CompileConfig(unroll=2, normalize=True, eliminate=True,
                                 order="deepest")):
        program = compile_program(FIB, config)
        table = program.table()
        for n in range(-2, 30):
            results = [kernel_module(k).run_aggregated(table, {"n": n})
                       for k in KERNELS]
            assert results[0] == results[1]


def test_kernels_agree_on_random_programs():
    rng = random.Random(43)
    for _ in range(80):
        source, env = random_terminating(rng)
        table = graph_table(source)
        results = [kernel_module(k).run_graph(table, env) for k in KERNELS]
        assert results[0] == results[1], source


def test_kernels_agree_on_random_aggregated():
    rng = random.Random(47)
    tried = 0
    while tried < 25:
        source, env = random_terminating(rng, force_loop=True)
        program = compile_program(source, CompileConfig(unroll=1))
        table = program.table()
        outs = []
        for k in KERNELS:
            mod = kernel_module(k)
            try:
                outs.append(mod.run_aggregated(table, env, 2000))
            except StepBudgetExceededError:
                outs.append("budget")
        assert outs[0] == outs[1], source
        tried += 1


@both
def test_aggregated_matches_original_semantics(kernel):
    k = kernel_module(kernel)
    table = graph_table(FIB)
    program = compile_program(FIB, CompileConfig(unroll=1))
    for n in range(-2, 25):
        direct, _, _ = k.run_graph(table, {"n": n})
        via_adds, _, _ = k.run_aggregated(program.table(), {"n": n})
        assert direct == via_adds
