"""Abstract syntax: expressions, values, processes, configurations, programs.

Expressions are in fine-grained call-by-value style: every construct takes
value expressions (variables, graded variables, or literal values), and
sequencing happens only through let. A running program is a flat sequence
of atomic processes next to a global resource state; order in the sequence
is significant, rearrangement is a semantic move, not a syntactic identity.

Also here: free variables, the produced/consumed future sets that govern
when two processes may swap, configuration well-formedness, and printers
whose output the parser reads back.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

from .grades import ActorContext, Grade, GradeMonoid, format_grade


# ---------------------------------------------------------------------------
# Types

class Type:
    pass


@dataclass(frozen=True)
class UnitT(Type):
    def __str__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class ResT(Type):
    """A resource at a grade, e.g. CleanCup^1."""

    res: str
    grade: Grade

    def __str__(self) -> str:
        return f"{self.res}^{format_grade(self.grade)}"


@dataclass(frozen=True)
class FutT(Type):
    """A future whose fulfilment has the given type and releases `produces`."""

    result: Type
    produces: tuple[tuple[str, tuple[tuple[str, Grade], ...]], ...]

    def __str__(self) -> str:
        return f"fut({self.result}, {format_actor_ctx(ctx_of(self.produces))})"


def ctx_key(ctx: ActorContext) -> tuple[tuple[str, tuple[tuple[str, Grade], ...]], ...]:
    """Hashable, order-normalised form of an actor context."""
    return tuple(
        (a, tuple(sorted(ctx[a].items(), key=lambda kv: kv[0])))
        for a in sorted(ctx)
    )


def ctx_of(key: tuple) -> ActorContext:
    return {a: dict(env) for a, env in key}


def fut_type(result: Type, produces: ActorContext) -> FutT:
    return FutT(result, ctx_key(produces))


def format_actor_ctx(ctx: ActorContext) -> str:
    parts = []
    for actor in ctx:
        for res, g in ctx[actor].items():
            parts.append(f"{actor}: {res}^{format_grade(g)}")
    return ", ".join(parts)


# ---------------------------------------------------------------------------
# Values and value expressions

class Value:
    pass


@dataclass(frozen=True)
class UnitVal(Value):
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class GradedRes(Value):
    res: str
    grade: Grade

    def __str__(self) -> str:
        return f"{self.res}^{format_grade(self.grade)}"


@dataclass(frozen=True)
class FutRef(Value):
    name: str

    def __str__(self) -> str:
        return self.name


class ValueExpr:
    pass


@dataclass(frozen=True)
class Var(ValueExpr):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class GradedVar(ValueExpr):
    name: str
    grade: Grade

    def __str__(self) -> str:
        return f"{self.name}^{format_grade(self.grade)}"


@dataclass(frozen=True)
class Lit(ValueExpr):
    value: Value

    def __str__(self) -> str:
        return str(self.value)


# ---------------------------------------------------------------------------
# Expressions

class Expr:
    pass


@dataclass(frozen=True)
class Call(Expr):
    actor: str
    method: str
    args: tuple[ValueExpr, ...]

    def __str__(self) -> str:
        return f"{self.actor}!{self.method}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Await(Expr):
    target: ValueExpr

    def __str__(self) -> str:
        return f"{self.target}?"


@dataclass(frozen=True)
class Hold(Expr):
    grade: Grade
    res: str

    def __str__(self) -> str:
        return f"hold {format_grade(self.grade)} {self.res}"


@dataclass(frozen=True)
class Release(Expr):
    grade: Grade
    target: ValueExpr

    def __str__(self) -> str:
        return f"release {format_grade(self.grade)} {self.target}"


@dataclass(frozen=True)
class PrimOp(Expr):
    op: str
    args: tuple[ValueExpr, ...]

    def __str__(self) -> str:
        return f"{self.op}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Choice(Expr):
    left: Expr
    right: Expr

    def __str__(self) -> str:
        return f"({self.left} (+) {self.right})"


@dataclass(frozen=True)
class Return(Expr):
    value: ValueExpr

    def __str__(self) -> str:
        return f"return {self.value}"


@dataclass(frozen=True)
class Let(Expr):
    var: str
    bound: Expr
    body: Expr

    def __str__(self) -> str:
        if self.var.startswith("_s") and self.var not in free_vars(self.body):
            return f"{self.bound}; {self.body}"
        return f"let {self.var} = {self.bound} in {self.body}"


def rename_var(e: Expr, old: str, new: str) -> Expr:
    """Capture-avoiding variable renaming; grades ride along unchanged."""

    def ve(v: ValueExpr) -> ValueExpr:
        match v:
            case Var(name) if name == old:
                return Var(new)
            case GradedVar(name, g) if name == old:
                return GradedVar(new, g)
            case _:
                return v

    match e:
        case Call(a, m, args):
            return Call(a, m, tuple(ve(x) for x in args))
        case Await(t):
            return Await(ve(t))
        case Hold():
            return e
        case Release(g, t):
            return Release(g, ve(t))
        case PrimOp(op, args):
            return PrimOp(op, tuple(ve(x) for x in args))
        case Choice(l, r):
            return Choice(rename_var(l, old, new), rename_var(r, old, new))
        case Return(v):
            return Return(ve(v))
        case Let(x, bound, body):
            bound = rename_var(bound, old, new)
            if x == old:
                return Let(x, bound, body)
            return Let(x, bound, rename_var(body, old, new))
    raise TypeError(f"not an expression: {e!r}")


def free_vars(e: Expr) -> set[str]:
    def of_ve(v: ValueExpr) -> set[str]:
        match v:
            case Var(name) | GradedVar(name, _):
                return {name}
            case _:
                return set()

    match e:
        case Call(_, _, args) | PrimOp(_, args):
            return set().union(*(of_ve(a) for a in args)) if args else set()
        case Await(t) | Release(_, t):
            return of_ve(t)
        case Return(v):
            return of_ve(v)
        case Hold():
            return set()
        case Choice(l, r):
            return free_vars(l) | free_vars(r)
        case Let(x, bound, body):
            return free_vars(bound) | (free_vars(body) - {x})
    raise TypeError(f"not an expression: {e!r}")


def futures_in_value(v: Value) -> set[str]:
    return {v.name} if isinstance(v, FutRef) else set()


def futures_in_expr(e: Expr) -> set[str]:
    def of_ve(v: ValueExpr) -> set[str]:
        return futures_in_value(v.value) if isinstance(v, Lit) else set()

    match e:
        case Call(_, _, args) | PrimOp(_, args):
            return set().union(*(of_ve(a) for a in args)) if args else set()
        case Await(t) | Release(_, t):
            return of_ve(t)
        case Return(v):
            return of_ve(v)
        case Hold():
            return set()
        case Choice(l, r):
            return futures_in_expr(l) | futures_in_expr(r)
        case Let(_, bound, body):
            return futures_in_expr(bound) | futures_in_expr(body)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Processes

LocalEnv = dict[str, Value]


class Process:
    pass


@dataclass
class ActiveThread(Process):
    env: LocalEnv
    expr: Expr
    future: str
    actor: str

    def copy(self) -> "ActiveThread":
        return ActiveThread(dict(self.env), self.expr, self.future, self.actor)


@dataclass
class SuspendedThread(Process):
    env: LocalEnv
    expr: Expr
    future: str
    actor: str

    def copy(self) -> "SuspendedThread":
        return SuspendedThread(dict(self.env), self.expr, self.future, self.actor)


@dataclass
class Idle(Process):
    actor: str

    def copy(self) -> "Idle":
        return Idle(self.actor)


@dataclass
class CallMsg(Process):
    future: str
    actor: str
    method: str
    args: tuple[Value, ...]

    def copy(self) -> "CallMsg":
        return CallMsg(self.future, self.actor, self.method, self.args)


@dataclass
class FulfilledFut(Process):
    future: str
    value: Value

    def copy(self) -> "FulfilledFut":
        return FulfilledFut(self.future, self.value)


def futures_produced_one(p: Process) -> set[str]:
    match p:
        case ActiveThread() | SuspendedThread():
            return {p.future}
        case CallMsg():
            return {p.future}
        case FulfilledFut():
            return {p.future}
        case Idle():
            return set()
    raise TypeError(f"not a process: {p!r}")


def futures_consumed_one(p: Process) -> set[str]:
    match p:
        case ActiveThread() | SuspendedThread():
            out: set[str] = set()
            for v in p.env.values():
                out |= futures_in_value(v)
            return out | futures_in_expr(p.expr)
        case CallMsg():
            out = set()
            for v in p.args:
                out |= futures_in_value(v)
            return out
        case FulfilledFut():
            return futures_in_value(p.value)
        case Idle():
            return set()
    raise TypeError(f"not a process: {p!r}")


def futures_produced(ps: list[Process]) -> set[str]:
    out: set[str] = set()
    for p in ps:
        out |= futures_produced_one(p)
    return out


def futures_consumed(ps: list[Process]) -> set[str]:
    # left to right: a future produced earlier shadows later references to it
    out: set[str] = set()
    produced: set[str] = set()
    for p in ps:
        out |= futures_consumed_one(p) - produced
        produced |= futures_produced_one(p)
    return out


# ---------------------------------------------------------------------------
# Configurations

@dataclass
class Configuration:
    """Global resource state next to the running process sequence.

    The extra fields are run plumbing: monotone counters backing fresh
    names, the future registry fixing each future's declared type and
    release obligations at creation time, and per-target call counts that
    bounded exploration uses as its recursion budget.
    """

    alpha: ActorContext
    processes: list[Process]
    next_future: int = 0
    next_var: int = 0
    registry: dict[str, Optional[tuple[Type, tuple]]] = field(default_factory=dict)
    call_counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def copy(self) -> "Configuration":
        return Configuration(
            alpha={a: dict(env) for a, env in self.alpha.items()},
            processes=[p.copy() for p in self.processes],
            next_future=self.next_future,
            next_var=self.next_var,
            registry=dict(self.registry),
            call_counts=dict(self.call_counts),
        )

    def fresh_future(self) -> str:
        name = f"f#{self.next_future}"
        self.next_future += 1
        return name

    def fresh_var(self) -> str:
        name = f"y#{self.next_var}"
        self.next_var += 1
        return name


def well_formed(config: Configuration) -> list[str]:
    """Diagnostics, empty when the configuration is well formed.

    Each actor that appears at all has exactly one active thread or is
    idle (never both, never more), and no future is produced twice.
    """
    problems = []
    active: dict[str, int] = {}
    idle: dict[str, int] = {}
    seen_futures: set[str] = set()
    for p in config.processes:
        for f in futures_produced_one(p):
            if f in seen_futures:
                problems.append(f"future {f} produced twice")
            seen_futures.add(f)
        match p:
            case ActiveThread():
                active[p.actor] = active.get(p.actor, 0) + 1
            case Idle(actor):
                idle[actor] = idle.get(actor, 0) + 1
    for actor in active.keys() | idle.keys():
        n_active = active.get(actor, 0)
        n_idle = idle.get(actor, 0)
        if n_active + n_idle != 1:
            problems.append(
                f"actor {actor} has {n_active} active threads and {n_idle} idle markers"
            )
    return problems


# ---------------------------------------------------------------------------
# Programs

@dataclass
class OpSig:
    params: list[Type]
    result: Type


@dataclass
class MethodDecl:
    name: str
    params: list[tuple[str, Type]]
    result: Type
    requires: ActorContext
    produces: ActorContext
    measure: int
    body: Expr


@dataclass
class ActorDecl:
    name: str
    methods: dict[str, MethodDecl]


@dataclass
class Program:
    monoid: GradeMonoid
    op_sigs: dict[str, OpSig]
    actors: dict[str, ActorDecl]
    init_ctx: ActorContext
    start_actor: str
    start_method: str
    start_args: tuple[Value, ...]

    def method(self, actor: str, method: str) -> Optional[MethodDecl]:
        decl = self.actors.get(actor)
        return decl.methods.get(method) if decl else None
