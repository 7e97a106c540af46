"""Aggregated compilation of while-programs into decision diagrams.

The pipeline: parse a program over integer variables, pick cut points so
every loop is interrupted, symbolically execute the acyclic fragments
between them, and aggregate each fragment's paths into one decision
diagram whose terminals carry the successor cut point and a parallel
assignment.  Executing the diagrams cut point to cut point is equivalent
to the original program and, with loop unrolling, predicate reordering,
expression normalization, and infeasible-branch elimination, usually much
cheaper under the unit cost model.
"""

from .add import (BOTTOM, TOP, Add, DiagramManager, Leaf, PredOrder,
                  aggregate, choose_order, dd_join, eliminate_infeasible,
                  join, path_to_add)
from .errors import (AggcError, AggregationConflictError, BottomReachedError,
                     DivisionByZeroError, EvalError, InternalInvariantError,
                     MissingInputError, ParseError, SortError,
                     StepBudgetExceededError)
from .exprdag import (EvalCache, ExprDag, ExprId, SymbolicState, eval_expr,
                      pretty, substitute, tree_cost, vars_of)
from .frontend import (build_program_graph, free_variables, parse_program,
                       select_cut_points, unparse)
from .runtime import (CompileConfig, CompiledProgram, CostReport, bench,
                      compile_program, load_artifact, run_aggregated,
                      save_artifact, write_csv)
from .simplify import (FeasResult, LinearFeasibilityChecker, Normalizer,
                       check_sat, normalize)
from .symexec import (enumerate_paths, interpret_ast, run_concrete,
                      run_lockstep)

__version__ = "0.1.0"

__all__ = [
    "Add", "AggcError", "AggregationConflictError", "BOTTOM",
    "BottomReachedError", "CompileConfig", "CompiledProgram", "CostReport",
    "DiagramManager", "DivisionByZeroError", "EvalCache", "EvalError",
    "ExprDag", "ExprId", "FeasResult", "InternalInvariantError", "Leaf",
    "LinearFeasibilityChecker", "MissingInputError", "Normalizer",
    "ParseError", "PredOrder", "SortError", "StepBudgetExceededError",
    "SymbolicState", "TOP", "aggregate", "bench", "build_program_graph",
    "check_sat", "choose_order", "compile_program", "dd_join",
    "eliminate_infeasible", "enumerate_paths", "eval_expr",
    "free_variables", "interpret_ast", "join", "load_artifact", "normalize",
    "parse_program", "path_to_add", "pretty", "run_aggregated",
    "run_concrete", "run_lockstep", "save_artifact", "select_cut_points",
    "substitute", "tree_cost", "unparse", "vars_of", "write_csv",
]
