"""Expression normalization and a sound linear feasibility checker.

Normalization flattens +, -, * into a sparse polynomial normal form with
canonical monomial order and constant folding.  Division subtrees are
opaque atoms and are never rewritten, so truncation semantics are
preserved.  Comparisons are canonicalized to ``L < 0`` / ``L == 0`` with
coefficient gcd 1, which makes syntactically different but algebraically
equal atomic propositions intern to one node.

The feasibility checker decides conjunctions of (possibly negated)
comparison literals.  It is sound but incomplete: ``UNSAT`` means no
integer assignment satisfies the conjunction; ``SAT`` is only reported
with a concrete witness; everything else is ``UNKNOWN``.
"""

from __future__ import annotations

import enum
import itertools
import math
from functools import reduce
from typing import Sequence

from .errors import EvalError
from .exprdag import (ADD, CONST, DIV, EQ, FALSE, LT, MUL, SUB, TRUE, VAR,
                      ExprDag, ExprId, eval_expr, vars_of)

# A polynomial is a map monomial -> integer coefficient; a monomial is a
# sorted tuple of (atom ExprId, power) pairs, () being the constant term.
Mono = tuple[tuple[ExprId, int], ...]
Poly = dict[Mono, int]


def _atom_key(dag: ExprDag, atom: ExprId) -> tuple:
    if dag.kind(atom) == VAR:
        return (0, dag.var_name(atom))
    return (1, atom)  # opaque (division) atoms sort after variables


def _mono_key(dag: ExprDag, m: Mono) -> tuple:
    return tuple((_atom_key(dag, a), p) for a, p in m)


def _degree(m: Mono) -> int:
    return sum(p for _, p in m)


def _mono_mul(dag: ExprDag, m1: Mono, m2: Mono) -> Mono:
    if not m1:
        return m2
    if not m2:
        return m1
    powers: dict[ExprId, int] = dict(m1)
    for a, p in m2:
        powers[a] = powers.get(a, 0) + p
    return tuple(sorted(powers.items(),
                        key=lambda ap: _atom_key(dag, ap[0])))


def _pneg(p: Poly) -> Poly:
    return {m: -c for m, c in p.items()}


def _pscale(p: Poly, k: int) -> Poly:
    return {m: c * k for m, c in p.items()}


def _padd(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) + c
    return out


def _padd_const(p: Poly, k: int) -> Poly:
    out = dict(p)
    out[()] = out.get((), 0) + k
    return out


def _clean(p: Poly) -> Poly:
    return {m: c for m, c in p.items() if c != 0}


class Normalizer:
    """Polynomial normal form over one expression store.

    ``max_monomials`` bounds intermediate polynomial width; expressions
    exceeding it are returned unchanged (the guard keeps compilation total,
    and an unchanged expression is always semantically safe).
    """

    def __init__(self, dag: ExprDag, max_monomials: int = 512):
        self._dag = dag
        self._max = max_monomials
        self._memo: dict[ExprId, ExprId] = {}
        self._poly_memo: dict[ExprId, Poly | None] = {}

    # -- linear/polynomial form ----------------------------------------

    def linear_form(self, e: ExprId) -> Poly | None:
        """Sparse polynomial of an arithmetic expression, or None when the
        monomial guard trips.  Division nodes become opaque atoms."""
        memo = self._poly_memo
        dag = self._dag
        stack = [e]
        while stack:
            n = stack[-1]
            if n in memo:
                stack.pop()
                continue
            k = dag.kind(n)
            if k == CONST:
                v = dag.const_value(n)
                memo[n] = {(): v} if v else {}
                stack.pop()
            elif k == VAR or k == DIV:
                memo[n] = {((n, 1),): 1}
                stack.pop()
            elif k in (ADD, SUB, MUL):
                a = dag.lhs(n)
                b = dag.rhs(n)
                pending = [c for c in (a, b) if c not in memo]
                if pending:
                    stack.extend(pending)
                    continue
                pa, pb = memo[a], memo[b]
                if pa is None or pb is None:
                    memo[n] = None
                elif k == ADD:
                    memo[n] = _clean(_padd(pa, pb))
                elif k == SUB:
                    memo[n] = _clean(_padd(pa, _pneg(pb)))
                else:
                    memo[n] = self._pmul(pa, pb)
                stack.pop()
            else:
                raise ValueError("Boolean node in arithmetic position: %d"
                                 % n)
        return memo[e]

    def _pmul(self, p: Poly, q: Poly) -> Poly | None:
        out: Poly = {}
        dag = self._dag
        for m1, c1 in p.items():
            for m2, c2 in q.items():
                m = _mono_mul(dag, m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
                if len(out) > self._max:
                    return None
        return _clean(out)

    # -- rendering -------------------------------------------------------

    def _term(self, m: Mono, c: int) -> ExprId:
        dag = self._dag
        if not m:
            return dag.const(c)
        prod = -1
        for atom, power in m:
            for _ in range(power):
                prod = atom if prod < 0 else dag.mul(prod, atom)
        if c == 1:
            return prod
        return dag.mul(dag.const(c), prod)

    def render(self, poly: Poly) -> ExprId:
        """Canonical expression of a polynomial: terms in (degree, atom)
        order, positive terms added first, negative terms subtracted."""
        dag = self._dag

        def term_key(item: tuple[Mono, int]) -> tuple:
            return (-_degree(item[0]), _mono_key(dag, item[0]))

        pos = sorted(((m, c) for m, c in poly.items() if m and c > 0),
                     key=term_key)
        neg = sorted(((m, -c) for m, c in poly.items() if m and c < 0),
                     key=term_key)
        const = poly.get((), 0)
        if const > 0:
            pos.append(((), const))
        elif const < 0:
            neg.append(((), -const))
        expr = -1
        for m, c in pos:
            t = self._term(m, c)
            expr = t if expr < 0 else dag.add(expr, t)
        if expr < 0:
            expr = dag.const(0)
        for m, c in neg:
            expr = dag.sub(expr, self._term(m, c))
        return expr

    # -- public entry points ----------------------------------------------

    def normalize(self, e: ExprId) -> ExprId:
        """Normal form of an arithmetic expression or atomic proposition.

        Comparisons become ``L < 0`` / ``L == 0`` (gcd-reduced, fixed sign);
        constant comparisons fold to Boolean constants.  Other Boolean
        nodes are outside the normal form and returned unchanged.
        """
        hit = self._memo.get(e)
        if hit is not None:
            return hit
        dag = self._dag
        k = dag.kind(e)
        if k in (LT, EQ):
            r = self._normalize_ap(e)
        elif k > EQ:
            # Boolean constants and connectives are outside the normal form.
            r = e
        else:
            p = self.linear_form(e)
            r = e if p is None else self.render(p)
        self._memo[e] = r
        self._memo[r] = r
        return r

    def _normalize_ap(self, e: ExprId) -> ExprId:
        dag = self._dag
        k = dag.kind(e)
        pa = self.linear_form(dag.lhs(e))
        pb = self.linear_form(dag.rhs(e))
        if pa is None or pb is None:
            return e
        d = _clean(_padd(pa, _pneg(pb)))
        if all(not m for m in d):
            c = d.get((), 0)
            return dag.bool_const(c < 0 if k == LT else c == 0)
        g = reduce(math.gcd, (abs(c) for c in d.values()), 0)
        if g > 1:
            d = {m: c // g for m, c in d.items()}
        if k == EQ:
            lead = min((m for m in d if m),
                       key=lambda m: (-_degree(m), _mono_key(dag, m)))
            if d[lead] < 0:
                d = _pneg(d)
            return dag.eq(self.render(d), dag.const(0))
        return dag.lt(self.render(d), dag.const(0))


class FeasResult(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class FeasibilityChecker:
    """Interface consumed by path enumeration and ADD pruning."""

    def check(self, literals: Sequence[tuple[ExprId, bool]]) -> FeasResult:
        """Feasibility of the conjunction of ``(ap, polarity)`` literals."""
        raise NotImplementedError


class AlwaysUnknown(FeasibilityChecker):
    """Checker that never prunes; useful as a baseline."""

    def check(self, literals: Sequence[tuple[ExprId, bool]]) -> FeasResult:
        return FeasResult.UNKNOWN


class LinearFeasibilityChecker(FeasibilityChecker):
    """Fourier-Motzkin over the linearized literals.

    Strict comparisons tighten over the integers (``a < b`` becomes
    ``a - b + 1 <= 0``).  Non-linear monomials are treated as independent
    variables and unlinearizable literals are dropped, both of which relax
    the system, so ``UNSAT`` stays sound.  Disequalities case-split up to
    ``max_eq_splits``; the rest are dropped.  ``SAT`` is claimed only after
    a small grid search finds an assignment satisfying every literal under
    real evaluation.
    """

    def __init__(self, dag: ExprDag, max_eq_splits: int = 3,
                 max_rows: int = 256, witness_vars: int = 3,
                 witness_bound: int = 4):
        self._dag = dag
        self._norm = Normalizer(dag)
        self._max_eq_splits = max_eq_splits
        self._max_rows = max_rows
        self._witness_vars = witness_vars
        self._witness_bound = witness_bound
        self._cache: dict[frozenset, FeasResult] = {}

    def check(self, literals: Sequence[tuple[ExprId, bool]]) -> FeasResult:
        key = frozenset(literals)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._check(tuple(literals))
            self._cache[key] = hit
        return hit

    def _check(self, literals: tuple[tuple[ExprId, bool], ...]) -> FeasResult:
        dag = self._dag
        rows: list[Poly] = []
        eqs: list[Poly] = []
        splits: list[tuple[Poly, Poly]] = []
        for ap, pos in literals:
            k = dag.kind(ap)
            if k in (TRUE, FALSE):
                if (k == TRUE) != pos:
                    return FeasResult.UNSAT
                continue
            if k not in (LT, EQ):
                continue  # not an atomic proposition; ignored (sound)
            pa = self._norm.linear_form(dag.lhs(ap))
            pb = self._norm.linear_form(dag.rhs(ap))
            if pa is None or pb is None:
                continue  # guard tripped; ignored (sound)
            d = _clean(_padd(pa, _pneg(pb)))
            if k == LT:
                rows.append(_padd_const(d, 1) if pos else _pneg(d))
            elif pos:
                eqs.append(d)
            elif len(splits) < self._max_eq_splits:
                splits.append((_padd_const(d, 1), _padd_const(_pneg(d), 1)))
            # disequalities beyond the split budget are dropped (sound)
        unknown = False
        for choice in itertools.product(*splits):
            r = self._solve([dict(e) for e in eqs],
                            [dict(r) for r in rows] + [dict(c) for c in choice])
            if r is not FeasResult.UNSAT:
                unknown = True
        if not unknown:
            return FeasResult.UNSAT
        return self._witness(literals)

    def _solve(self, eqs: list[Poly], rows: list[Poly]) -> FeasResult:
        # substitute away equalities with a unit coefficient
        while True:
            found = None
            for i, e in enumerate(eqs):
                for m, c in e.items():
                    if m and abs(c) == 1:
                        found = (i, m, c)
                        break
                if found:
                    break
            if found is None:
                break
            i, m, c = found
            e = eqs.pop(i)
            rest = dict(e)
            del rest[m]
            image = _pscale(rest, -c)  # c is +-1, so 1/c == c
            for p in itertools.chain(eqs, rows):
                cm = p.pop(m, 0)
                if cm:
                    for mm, cc in _pscale(image, cm).items():
                        p[mm] = p.get(mm, 0) + cc
        for e in eqs:
            e = _clean(e)
            if not any(m for m in e):
                if e.get((), 0) != 0:
                    return FeasResult.UNSAT
                continue
            rows.append(dict(e))
            rows.append(_pneg(e))
        # Fourier-Motzkin elimination
        pending: list[Poly] = []
        for r in map(_clean, rows):
            if self._const_row(r):
                if r.get((), 0) > 0:
                    return FeasResult.UNSAT
                continue
            pending.append(r)
        rows = pending
        dag = self._dag
        while rows:
            variables = {m for r in rows for m in r if m}
            if not variables:
                break

            def level(v: Mono) -> tuple:
                p = sum(1 for r in rows if r.get(v, 0) > 0)
                n = sum(1 for r in rows if r.get(v, 0) < 0)
                return (p * n, _mono_key(dag, v))

            v = min(variables, key=level)
            pos = [r for r in rows if r.get(v, 0) > 0]
            neg = [r for r in rows if r.get(v, 0) < 0]
            new = [r for r in rows if r.get(v, 0) == 0]
            for upper in pos:
                a = upper[v]
                for lower in neg:
                    b = -lower[v]
                    comb = _clean(_padd(_pscale(upper, b), _pscale(lower, a)))
                    if self._const_row(comb):
                        if comb.get((), 0) > 0:
                            return FeasResult.UNSAT
                        continue
                    g = reduce(math.gcd, (abs(c) for c in comb.values()), 0)
                    if g > 1:
                        comb = {m: c // g for m, c in comb.items()}
                    new.append(comb)
                    if len(new) > self._max_rows:
                        return FeasResult.UNKNOWN
            rows = new
        return FeasResult.UNKNOWN

    @staticmethod
    def _const_row(r: Poly) -> bool:
        return not any(m for m in r)

    def _witness(self, literals: tuple[tuple[ExprId, bool], ...]) -> FeasResult:
        dag = self._dag
        names: set[str] = set()
        for ap, _ in literals:
            names |= vars_of(dag, ap)
        if len(names) > self._witness_vars:
            return FeasResult.UNKNOWN
        ordered = sorted(names)
        grid = range(-self._witness_bound, self._witness_bound + 1)
        for combo in itertools.product(grid, repeat=len(ordered)):
            env = dict(zip(ordered, combo))
            try:
                if all(eval_expr(dag, ap, env)[0] == pos
                       for ap, pos in literals):
                    return FeasResult.SAT
            except EvalError:
                continue
        return FeasResult.UNKNOWN


def normalize(dag: ExprDag, e: ExprId) -> ExprId:
    """One-shot :meth:`Normalizer.normalize` with a throwaway memo."""
    return Normalizer(dag).normalize(e)


def check_sat(dag: ExprDag,
              literals: Sequence[tuple[ExprId, bool]]) -> FeasResult:
    """One-shot :meth:`LinearFeasibilityChecker.check`."""
    return LinearFeasibilityChecker(dag).check(literals)
