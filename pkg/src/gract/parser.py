"""Concrete syntax for .gract programs.

A program is a grade declaration, primitive operation signatures, actor
declarations whose methods carry explicit requires/produces/measure
annotations, and an init line naming the starting resources and the first
call. Sequencing `e1; e2` is sugar for a let with an unused fresh binder,
`ve?` is an await, and `(+)` (or the unicode circled plus) is the
nondeterministic choice.

Graded names resolve lexically: a name bound by a parameter or let is a
variable, an unbound name with a grade is a resource literal, an unbound
bare name stays a variable for the type checker to reject. The parser
resolves no actor, method or resource names.

The internal mode additionally allows '#' inside identifiers, which is how
run traces spell machine-generated futures and binders; source files reject
it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grades import (
    BUILTIN_MONOIDS,
    ActorContext,
    Grade,
    GradeMonoid,
    GradeParseError,
    LatticeError,
    Level,
)
from .terms import (
    ActorDecl,
    Await,
    Call,
    Choice,
    Expr,
    FutRef,
    GradedRes,
    GradedVar,
    Hold,
    Let,
    Lit,
    MethodDecl,
    OpSig,
    PrimOp,
    Program,
    Release,
    ResT,
    Return,
    Type,
    UnitT,
    UnitVal,
    Value,
    ValueExpr,
    Var,
    fut_type,
)

KEYWORDS = {
    "grade", "natEq", "natLeq", "lin", "affine", "levels",
    "let", "in", "return", "unit", "hold", "release",
    "init", "start", "requires", "produces", "measure",
    "fut", "Unit", "inf",
}

_PUNCT2 = ("<=", "(+")
_PUNCT1 = "{}(),:;=!?^"


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        where = f"{line}:{col}"
        hint = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{where}: {message}{hint}")


@dataclass
class Token:
    kind: str  # IDENT, NAT, PUNCT, EOF
    text: str
    line: int
    col: int


def tokenize(text: str, internal: bool = False) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_" or (internal and text[j] == "#")):
                j += 1
            toks.append(Token("IDENT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("NAT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if text.startswith("(+)", i):
            toks.append(Token("PUNCT", "(+)", line, col))
            i, col = i + 3, col + 3
            continue
        if c == "⊕":  # circled plus, same token as (+)
            toks.append(Token("PUNCT", "(+)", line, col))
            i, col = i + 1, col + 1
            continue
        if text.startswith("<=", i):
            toks.append(Token("PUNCT", "<=", line, col))
            i, col = i + 2, col + 2
            continue
        if c in _PUNCT1:
            toks.append(Token("PUNCT", c, line, col))
            i, col = i + 1, col + 1
            continue
        raise ParseError(f"stray character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


class Parser:
    def __init__(self, text: str, internal: bool = False):
        self.toks = tokenize(text, internal=internal)
        self.pos = 0
        self.monoid: GradeMonoid | None = None
        self.seq_counter = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[i]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> "ParseError":
        t = self.peek()
        return ParseError(message, t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "EOF" and text != "":
            raise self.fail(f"found {t.text or 'end of input'!r}", (text,))
        return self.next()

    def ident(self, what: str = "name") -> str:
        t = self.peek()
        if t.kind != "IDENT":
            raise self.fail(f"expected {what}, found {t.text or 'end of input'!r}", ("identifier",))
        if t.text in KEYWORDS:
            raise self.fail(f"keyword {t.text!r} cannot be used as a {what}")
        return self.next().text

    def at_ident(self, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == "IDENT" and t.text not in KEYWORDS

    # -- grades and types ----------------------------------------------------

    def grade(self) -> Grade:
        t = self.peek()
        if t.kind not in ("IDENT", "NAT"):
            raise self.fail("expected a grade", ("grade",))
        assert self.monoid is not None
        try:
            g = self.monoid.parse(t.text)
        except GradeParseError as err:
            raise ParseError(str(err), t.line, t.col) from None
        self.next()
        return g

    def type_(self) -> Type:
        t = self.peek()
        if t.text == "Unit":
            self.next()
            return UnitT()
        if t.text == "fut":
            self.next()
            self.expect("(")
            result = self.type_()
            self.expect(",")
            ctx = self.actor_ctx()
            self.expect(")")
            return fut_type(result, ctx)
        res = self.ident("type")
        self.expect("^")
        return ResT(res, self.grade())

    def actor_ctx(self) -> ActorContext:
        """Comma-separated `Actor: res^g, res^g, Other: ...`; may be empty.

        An identifier followed by ':' opens an actor entry, one followed by
        '^' continues the current entry; anything else ends the context.
        """
        ctx: ActorContext = {}
        while self.at_ident() and self.peek(1).text == ":":
            actor = self.ident("actor name")
            self.expect(":")
            env = ctx.setdefault(actor, {})
            while True:
                res = self.ident("resource name")
                self.expect("^")
                g = self.grade()
                assert self.monoid is not None
                env[res] = self.monoid.plus(env[res], g) if res in env else g
                if self.peek().text == "," and self.at_ident(1) and self.peek(2).text == "^":
                    self.next()
                    continue
                break
            if self.peek().text == "," and self.at_ident(1) and self.peek(2).text == ":":
                self.next()
                continue
            break
        return ctx

    # -- expressions ---------------------------------------------------------

    def fresh_seq(self) -> str:
        name = f"_s{self.seq_counter}"
        self.seq_counter += 1
        return name

    def expr(self, bound: frozenset[str]) -> Expr:
        first = self.simple_expr(bound)
        if self.peek().text == ";":
            self.next()
            rest = self.expr(bound)
            return Let(self.fresh_seq(), first, rest)
        return first

    def simple_expr(self, bound: frozenset[str]) -> Expr:
        t = self.peek()
        if t.text == "let":
            self.next()
            var = self.ident("variable")
            self.expect("=")
            head = self.simple_expr(bound)
            self.expect("in")
            body = self.expr(bound | {var})
            return Let(var, head, body)
        if t.text == "return":
            self.next()
            return Return(self.vexpr(bound))
        if t.text == "hold":
            self.next()
            g = self.grade()
            return Hold(g, self.ident("resource name"))
        if t.text == "release":
            self.next()
            g = self.grade()
            return Release(g, self.vexpr(bound))
        if t.text == "(":
            self.next()
            inner = self.expr(bound)
            if self.peek().text == "(+)":
                self.next()
                right = self.expr(bound)
                self.expect(")")
                return Choice(inner, right)
            self.expect(")")
            return inner
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            nxt = self.peek(1).text
            if nxt == "!":
                target = self.ident("actor name")
                self.expect("!")
                method = self.ident("method name")
                args = self.vexpr_list(bound)
                return Call(target, method, args)
            if nxt == "(":
                op = self.ident("operation name")
                args = self.vexpr_list(bound)
                return PrimOp(op, args)
        # anything else must be an awaited value expression
        ve = self.vexpr(bound)
        self.expect("?")
        return Await(ve)

    def vexpr_list(self, bound: frozenset[str]) -> tuple[ValueExpr, ...]:
        self.expect("(")
        args: list[ValueExpr] = []
        if self.peek().text != ")":
            args.append(self.vexpr(bound))
            while self.peek().text == ",":
                self.next()
                args.append(self.vexpr(bound))
        self.expect(")")
        return tuple(args)

    def vexpr(self, bound: frozenset[str]) -> ValueExpr:
        t = self.peek()
        if t.text == "unit":
            self.next()
            return Lit(UnitVal())
        if t.kind != "IDENT" or t.text in KEYWORDS:
            raise self.fail("expected a value expression", ("identifier", "unit"))
        name = self.next().text
        if self.peek().text == "^":
            self.next()
            g = self.grade()
            if name in bound:
                return GradedVar(name, g)
            return Lit(GradedRes(name, g))
        if name in bound:
            return Var(name)
        if "#" in name:
            return Lit(FutRef(name))
        # unbound and ungraded: left as a variable for the checker to flag
        return Var(name)

    # -- declarations --------------------------------------------------------

    def grade_decl(self) -> GradeMonoid:
        self.expect("grade")
        t = self.peek()
        if t.text in BUILTIN_MONOIDS:
            self.next()
            return BUILTIN_MONOIDS[t.text]()
        if t.text == "levels":
            self.next()
            self.expect("{")
            names = [self.ident("level name")]
            while self.peek().text == "," :
                self.next()
                names.append(self.ident("level name"))
            order: list[tuple[str, str]] = []
            if self.peek().text == ";":
                self.next()
                while True:
                    lo = self.ident("level name")
                    self.expect("<=")
                    hi = self.ident("level name")
                    order.append((lo, hi))
                    if self.peek().text == ",":
                        self.next()
                        continue
                    break
            close = self.peek()
            self.expect("}")
            try:
                return Level(names, order)
            except LatticeError as err:
                raise ParseError(str(err), close.line, close.col) from None
        raise self.fail(
            f"unknown grade instance {t.text!r}",
            tuple(BUILTIN_MONOIDS) + ("levels",),
        )

    def params(self) -> list[tuple[str, Type]]:
        self.expect("(")
        out: list[tuple[str, Type]] = []
        if self.peek().text != ")":
            while True:
                x = self.ident("parameter name")
                self.expect(":")
                out.append((x, self.type_()))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
        self.expect(")")
        if len({x for x, _ in out}) != len(out):
            raise self.fail("duplicate parameter name")
        return out

    def method_decl(self) -> MethodDecl:
        name = self.ident("method name")
        params = self.params()
        self.expect(":")
        result = self.type_()
        self.expect("requires")
        requires = self.actor_ctx()
        self.expect("produces")
        produces = self.actor_ctx()
        self.expect("measure")
        t = self.peek()
        if t.kind != "NAT":
            raise self.fail("expected a measure", ("natural number",))
        measure = int(self.next().text)
        self.expect("{")
        body = self.expr(frozenset(x for x, _ in params))
        self.expect("}")
        return MethodDecl(name, params, result, requires, produces, measure, body)

    def value_args(self) -> tuple[Value, ...]:
        args = self.vexpr_list(frozenset())
        out: list[Value] = []
        for a in args:
            if isinstance(a, Lit):
                out.append(a.value)
            else:
                raise self.fail("start arguments must be literal values")
        return tuple(out)

    def program(self) -> Program:
        self.monoid = self.grade_decl()
        op_sigs: dict[str, OpSig] = {}
        actors: dict[str, ActorDecl] = {}
        while self.at_ident():
            name = self.ident("declaration name")
            nxt = self.peek().text
            if nxt == "(":
                if name in op_sigs:
                    raise self.fail(f"duplicate operation {name!r}")
                params = self.params()
                self.expect(":")
                op_sigs[name] = OpSig([ty for _, ty in params], self.type_())
            elif nxt == "{":
                if name in actors:
                    raise self.fail(f"duplicate actor {name!r}")
                self.next()
                methods: dict[str, MethodDecl] = {}
                while self.peek().text != "}":
                    m = self.method_decl()
                    if m.name in methods:
                        raise self.fail(f"duplicate method {name}.{m.name}")
                    methods[m.name] = m
                self.expect("}")
                actors[name] = ActorDecl(name, methods)
            else:
                raise self.fail(f"found {nxt!r} after {name!r}", ("(", "{"))
        self.expect("init")
        init_ctx = self.actor_ctx()
        self.expect(";")
        self.expect("start")
        actor = self.ident("actor name")
        self.expect("!")
        method = self.ident("method name")
        args = self.value_args()
        if self.peek().kind != "EOF":
            raise self.fail(f"trailing input {self.peek().text!r}")
        return Program(
            monoid=self.monoid,
            op_sigs=op_sigs,
            actors=actors,
            init_ctx=init_ctx,
            start_actor=actor,
            start_method=method,
            start_args=args,
        )


def parse_program(text: str) -> Program:
    return Parser(text).program()


def parse_expr(text: str, monoid: GradeMonoid, bound: frozenset[str] = frozenset(),
               internal: bool = False) -> Expr:
    """Parse a single expression; internal mode admits '#' in identifiers."""
    p = Parser(text, internal=internal)
    p.monoid = monoid
    e = p.expr(bound)
    if p.peek().kind != "EOF":
        raise p.fail(f"trailing input {p.peek().text!r}")
    return e


def parse_value(text: str, monoid: GradeMonoid) -> Value:
    """Parse a literal value as it appears in traces (internal mode)."""
    p = Parser(text, internal=True)
    p.monoid = monoid
    ve = p.vexpr(frozenset())
    if p.peek().kind != "EOF":
        raise p.fail(f"trailing input {p.peek().text!r}")
    if isinstance(ve, Lit):
        return ve.value
    raise p.fail(f"not a literal value: {text!r}")
