"""Exception types shared across the toolchain."""

from __future__ import annotations


class AggcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AggcError):
    """Malformed source text. Carries a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__("%s (line %d, column %d)" % (message, line, column))
        self.line = line
        self.column = column


class SortError(ParseError):
    """A Boolean expression where an arithmetic one is required, or vice versa."""


class EvalError(AggcError):
    """Runtime failure while evaluating an expression."""


class DivisionByZeroError(EvalError):
    def __init__(self, expr: int):
        super().__init__("division by zero (expression node %d)" % expr)
        self.expr = expr


class MissingInputError(EvalError):
    def __init__(self, name: str):
        super().__init__("variable %r read before it was bound" % name)
        self.name = name


class StepBudgetExceededError(AggcError):
    """The configured step budget ran out before the program terminated."""

    def __init__(self, budget: int):
        super().__init__("step budget of %d exceeded" % budget)
        self.budget = budget


class BottomReachedError(AggcError):
    """An undefined decision-diagram terminal was reached at run time.

    On states that can actually enter a fragment this never happens; hitting
    it means the artifact does not cover the current state.
    """

    def __init__(self, cut: str):
        super().__init__("undefined terminal reached in the diagram of cut point %s" % cut)
        self.cut = cut


class AggregationConflictError(AggcError):
    """Two paths of one cut point overlap; their join has no defined value."""


class InternalInvariantError(AggcError):
    """A structural self-check failed. Always a bug, never a user error."""
