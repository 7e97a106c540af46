"""While-language frontend: lexer, parser, program graph, cut points.

Concrete grammar (``;`` separates statements, blocks are braced):

    stmt    ::= atom (";" atom)*
    atom    ::= "skip"
              | ident ":=" aexp
              | "if" bexp "{" stmt "}" "else" "{" stmt "}"
              | "while" bexp "{" stmt "}"
    aexp    ::= term (("+" | "-") term)*
    term    ::= factor (("*" | "/") factor)*
    factor  ::= integer | ident | "(" aexp ")"
    bexp    ::= bterm ("||" bterm)*
    bterm   ::= bfactor ("&&" bfactor)*
    bfactor ::= "true" | "false" | "!" bfactor
              | aexp ("<" | "==") aexp | "(" bexp ")"

Integers are unbounded and non-negative at the lexical level; there is no
unary minus (write ``0 - x``).  Division truncates toward zero and dividing
by zero is a runtime error, not a parse error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .errors import ParseError, SortError
from .exprdag import ExprDag, ExprId, pretty, vars_of


# -- lexer --------------------------------------------------------------

_KEYWORDS = frozenset(("skip", "if", "else", "while", "true", "false"))
_TWO_CHAR = (":=", "==", "&&", "||")
_ONE_CHAR = frozenset(";(){}+-*/<!")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "eof", a keyword, or the operator text
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    col = 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = text if text in _KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], line, col))
            col += j - i
            i = j
            continue
        pair = source[i:i + 2]
        if pair in _TWO_CHAR:
            tokens.append(Token(pair, pair, line, col))
            col += 2
            i += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token(ch, ch, line, col))
            col += 1
            i += 1
            continue
        if ch == "=":
            raise ParseError("'=' is not an operator; use ':=' or '=='",
                             line, col)
        raise ParseError("unexpected character %r" % ch, line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# -- abstract syntax ----------------------------------------------------

@dataclass(frozen=True)
class Assign:
    name: str
    expr: ExprId


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True)
class If:
    cond: ExprId
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class While:
    cond: ExprId
    body: "Stmt"


Stmt = Union[Assign, Skip, Seq, If, While]


def statements(stmt: Stmt) -> list[Stmt]:
    """Flatten nested sequences into the list of component statements."""
    out: list[Stmt] = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        else:
            out.append(s)
    return out


# -- parser -------------------------------------------------------------

class _Parser:
    def __init__(self, dag: ExprDag, tokens: list[Token]):
        self._dag = dag
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _next(self) -> Token:
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def _expect(self, kind: str) -> Token:
        tok = self._next()
        if tok.kind != kind:
            raise _err("expected %r, found %s" % (kind, _shown(tok)), tok)
        return tok

    def statement(self) -> Stmt:
        parts = [self._atom()]
        while self._peek().kind == ";":
            self._next()
            parts.append(self._atom())
        stmt = parts[-1]
        for s in reversed(parts[:-1]):
            stmt = Seq(s, stmt)
        return stmt

    def _atom(self) -> Stmt:
        tok = self._peek()
        if tok.kind == "skip":
            self._next()
            return Skip()
        if tok.kind == "if":
            self._next()
            cond = self._bexp()
            self._expect("{")
            then = self.statement()
            self._expect("}")
            self._expect("else")
            self._expect("{")
            orelse = self.statement()
            self._expect("}")
            return If(cond, then, orelse)
        if tok.kind == "while":
            self._next()
            cond = self._bexp()
            self._expect("{")
            body = self.statement()
            self._expect("}")
            return While(cond, body)
        if tok.kind == "ident":
            self._next()
            self._expect(":=")
            return Assign(tok.text, self._aexp())
        raise _err("expected a statement, found %s" % _shown(tok), tok)

    def _aexp(self) -> ExprId:
        e = self._term()
        while self._peek().kind in ("+", "-"):
            op = self._next().kind
            rhs = self._term()
            e = self._dag.add(e, rhs) if op == "+" else self._dag.sub(e, rhs)
        return e

    def _term(self) -> ExprId:
        e = self._factor()
        while self._peek().kind in ("*", "/"):
            op = self._next().kind
            rhs = self._factor()
            e = self._dag.mul(e, rhs) if op == "*" else self._dag.div(e, rhs)
        return e

    def _factor(self) -> ExprId:
        tok = self._next()
        if tok.kind == "int":
            return self._dag.const(int(tok.text))
        if tok.kind == "ident":
            return self._dag.var(tok.text)
        if tok.kind == "(":
            e = self._aexp()
            self._expect(")")
            return e
        if tok.kind in ("true", "false", "!"):
            raise _err("Boolean expression in arithmetic position", tok,
                       SortError)
        raise _err("expected an arithmetic expression, found %s"
                   % _shown(tok), tok)

    def _bexp(self) -> ExprId:
        e = self._bterm()
        while self._peek().kind == "||":
            self._next()
            e = self._dag.disj(e, self._bterm())
        return e

    def _bterm(self) -> ExprId:
        e = self._bfactor()
        while self._peek().kind == "&&":
            self._next()
            e = self._dag.conj(e, self._bfactor())
        return e

    def _bfactor(self) -> ExprId:
        tok = self._peek()
        if tok.kind == "true":
            self._next()
            return self._dag.true()
        if tok.kind == "false":
            self._next()
            return self._dag.false()
        if tok.kind == "!":
            self._next()
            return self._dag.neg(self._bfactor())
        if tok.kind == "(":
            # "(" starts either a nested Boolean expression or the
            # arithmetic left operand of a comparison; try the Boolean
            # reading first and fall back on failure.
            save = self._pos
            try:
                self._next()
                e = self._bexp()
                self._expect(")")
                return e
            except ParseError as boolean_err:
                self._pos = save
                try:
                    return self._relation()
                except ParseError as relation_err:
                    raise _furthest(boolean_err, relation_err) from None
        return self._relation()

    def _relation(self) -> ExprId:
        lhs = self._aexp()
        tok = self._next()
        if tok.kind == "<":
            return self._dag.lt(lhs, self._aexp())
        if tok.kind == "==":
            return self._dag.eq(lhs, self._aexp())
        raise _err("arithmetic expression in Boolean position "
                   "(expected '<' or '==', found %s)" % _shown(tok), tok,
                   SortError)


def _shown(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


def _err(message: str, tok: Token, cls: type = ParseError) -> ParseError:
    return cls(message, tok.line, tok.col)


def _furthest(a: ParseError, b: ParseError) -> ParseError:
    return a if (a.line, a.column) >= (b.line, b.column) else b


def parse_program(dag: ExprDag, source: str) -> Stmt:
    """Parse a complete program, interning all expressions into ``dag``."""
    parser = _Parser(dag, tokenize(source))
    stmt = parser.statement()
    tok = parser._peek()
    if tok.kind != "eof":
        raise _err("expected end of input, found %s" % _shown(tok), tok)
    return stmt


def unparse(dag: ExprDag, stmt: Stmt) -> str:
    """Render a statement back to concrete syntax.

    ``parse_program(dag, unparse(dag, s))`` rebuilds ``s`` exactly.
    """
    if isinstance(stmt, Assign):
        return "%s := %s" % (stmt.name, pretty(dag, stmt.expr))
    if isinstance(stmt, Skip):
        return "skip"
    if isinstance(stmt, Seq):
        return "%s; %s" % (unparse(dag, stmt.first), unparse(dag, stmt.second))
    if isinstance(stmt, If):
        return "if %s { %s } else { %s }" % (pretty(dag, stmt.cond),
                                             unparse(dag, stmt.then),
                                             unparse(dag, stmt.orelse))
    if isinstance(stmt, While):
        return "while %s { %s }" % (pretty(dag, stmt.cond),
                                    unparse(dag, stmt.body))
    raise TypeError("not a statement: %r" % (stmt,))


# -- program graph ------------------------------------------------------

# node kinds
N_ASSIGN = 0
N_SKIP = 1
N_BRANCH = 2
N_EXIT = 3


class GraphNode:
    """One program-graph node.

    Action nodes (assign/skip) have a single successor ``succ``.  Branch
    nodes carry the condition in ``expr``; ``succ`` is the true successor
    and ``fsucc`` the false successor.
    """

    __slots__ = ("kind", "var", "expr", "succ", "fsucc")

    def __init__(self, kind: int, var: str | None = None, expr: ExprId = -1):
        self.kind = kind
        self.var = var
        self.expr = expr
        self.succ = -1
        self.fsucc = -1


class ProgramGraph:
    """Control-flow graph: action edges plus two-way branches.

    The entry node ``st`` never has incoming edges (a synthetic skip node
    is inserted when the program starts with a loop); the exit node ``te``
    has none outgoing.
    """

    def __init__(self) -> None:
        self.nodes: list[GraphNode] = []
        self.entry = -1
        self.exit = -1
        # while-condition node -> sources of its back edges
        self.loops: dict[int, tuple[int, ...]] = {}

    def _new(self, kind: int, var: str | None = None,
             expr: ExprId = -1) -> int:
        self.nodes.append(GraphNode(kind, var, expr))
        return len(self.nodes) - 1

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, i: int) -> GraphNode:
        return self.nodes[i]

    def name(self, i: int) -> str:
        if i == self.entry:
            return "st"
        if i == self.exit:
            return "te"
        return str(i)

    def by_name(self, name: str) -> int:
        if name == "st":
            return self.entry
        if name == "te":
            return self.exit
        try:
            i = int(name)
        except ValueError:
            raise KeyError(name) from None
        if not 0 <= i < len(self.nodes) or i in (self.entry, self.exit):
            raise KeyError(name)
        return i

    def successors(self, i: int) -> tuple[int, ...]:
        n = self.nodes[i]
        if n.kind == N_EXIT:
            return ()
        if n.kind == N_BRANCH:
            return (n.succ, n.fsucc)
        return (n.succ,)

    def edges(self) -> Iterator[tuple[int, int]]:
        for i in range(len(self.nodes)):
            for s in self.successors(i):
                yield i, s

    def incoming_counts(self) -> list[int]:
        counts = [0] * len(self.nodes)
        for _, dst in self.edges():
            counts[dst] += 1
        return counts

    def is_loop_head(self, i: int) -> bool:
        return i in self.loops


class _Builder:
    def __init__(self, graph: ProgramGraph):
        self._graph = graph
        self._ids: dict[int, int] = {}  # id(ast node) -> graph node

    def allocate(self, stmt: Stmt) -> None:
        """Pre-order id assignment, so node numbering follows program order."""
        if isinstance(stmt, Assign):
            self._ids[id(stmt)] = self._graph._new(N_ASSIGN, stmt.name,
                                                   stmt.expr)
        elif isinstance(stmt, Skip):
            self._ids[id(stmt)] = self._graph._new(N_SKIP)
        elif isinstance(stmt, Seq):
            self.allocate(stmt.first)
            self.allocate(stmt.second)
        elif isinstance(stmt, If):
            self._ids[id(stmt)] = self._graph._new(N_BRANCH, expr=stmt.cond)
            self.allocate(stmt.then)
            self.allocate(stmt.orelse)
        elif isinstance(stmt, While):
            self._ids[id(stmt)] = self._graph._new(N_BRANCH, expr=stmt.cond)
            self.allocate(stmt.body)
        else:
            raise TypeError("not a statement: %r" % (stmt,))

    def entry_of(self, stmt: Stmt) -> int:
        while isinstance(stmt, Seq):
            stmt = stmt.first
        return self._ids[id(stmt)]

    def tails(self, stmt: Stmt) -> tuple[int, ...]:
        """Nodes whose outgoing (true-)edge leaves ``stmt``."""
        if isinstance(stmt, Seq):
            return self.tails(stmt.second)
        if isinstance(stmt, If):
            return self.tails(stmt.then) + self.tails(stmt.orelse)
        return (self._ids[id(stmt)],)

    def wire(self, stmt: Stmt, succ: int) -> None:
        if isinstance(stmt, (Assign, Skip)):
            self._graph.node(self._ids[id(stmt)]).succ = succ
        elif isinstance(stmt, Seq):
            self.wire(stmt.first, self.entry_of(stmt.second))
            self.wire(stmt.second, succ)
        elif isinstance(stmt, If):
            node = self._graph.node(self._ids[id(stmt)])
            node.succ = self.entry_of(stmt.then)
            node.fsucc = self.entry_of(stmt.orelse)
            self.wire(stmt.then, succ)
            self.wire(stmt.orelse, succ)
        elif isinstance(stmt, While):
            nid = self._ids[id(stmt)]
            node = self._graph.node(nid)
            node.succ = self.entry_of(stmt.body)
            node.fsucc = succ
            self.wire(stmt.body, nid)
            self._graph.loops[nid] = self.tails(stmt.body)


def build_program_graph(dag: ExprDag, stmt: Stmt) -> ProgramGraph:
    graph = ProgramGraph()
    builder = _Builder(graph)
    builder.allocate(stmt)
    graph.exit = graph._new(N_EXIT)
    builder.wire(stmt, graph.exit)
    graph.entry = builder.entry_of(stmt)
    if graph.incoming_counts()[graph.entry]:
        # The program starts with a loop: give the entry its own edge-free
        # node so that fragments never re-enter st.
        st = graph._new(N_SKIP)
        graph.node(st).succ = graph.entry
        graph.entry = st
    return graph


def select_cut_points(graph: ProgramGraph,
                      strategy: str = "back-edge") -> frozenset[int]:
    """Entry, exit, and one node per loop: the back-edge source when it is
    a unique action node, otherwise the loop condition itself.

    ``strategy="condition"`` always takes the loop condition.
    """
    if strategy not in ("back-edge", "condition"):
        raise ValueError("unknown cut-point strategy: %r" % strategy)
    cuts = {graph.entry, graph.exit}
    for head, sources in graph.loops.items():
        source = sources[0] if len(sources) == 1 else -1
        if (strategy == "back-edge" and source >= 0
                and graph.node(source).kind in (N_ASSIGN, N_SKIP)):
            cuts.add(source)
        else:
            cuts.add(head)
    return frozenset(cuts)


def interrupts_all_cycles(graph: ProgramGraph, cuts: frozenset[int]) -> bool:
    """True when deleting ``cuts`` leaves the graph acyclic."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * len(graph)
    for root in range(len(graph)):
        if root in cuts or color[root] != WHITE:
            continue
        stack: list[tuple[int, Iterator[int]]] = []
        color[root] = GRAY
        stack.append((root, iter(graph.successors(root))))
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt in cuts:
                    continue
                if color[nxt] == GRAY:
                    return False
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(graph.successors(nxt))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return True


def free_variables(dag: ExprDag, graph: ProgramGraph) -> frozenset[str]:
    """Variables some execution may read before writing: the program inputs.

    Computed as may-liveness at the entry node.
    """
    nodes = graph.nodes
    live: list[frozenset[str]] = [frozenset()] * len(nodes)
    changed = True
    while changed:
        changed = False
        for i in reversed(range(len(nodes))):
            n = nodes[i]
            if n.kind == N_EXIT:
                continue
            if n.kind == N_BRANCH:
                new = vars_of(dag, n.expr) | live[n.succ] | live[n.fsucc]
            elif n.kind == N_ASSIGN:
                new = (live[n.succ] - {n.var}) | vars_of(dag, n.expr)
            else:
                new = live[n.succ]
            if new != live[i]:
                live[i] = new
                changed = True
    return live[graph.entry]


def all_variables(dag: ExprDag, graph: ProgramGraph) -> frozenset[str]:
    """Every variable the program mentions (read or written)."""
    out: set[str] = set()
    for n in graph.nodes:
        if n.var is not None:
            out.add(n.var)
        if n.expr >= 0:
            out |= vars_of(dag, n.expr)
    return frozenset(out)
