"""Labelled small-step semantics for configurations of active objects.

Three layers. Value expressions reduce against a thread's local environment,
consuming grades deterministically (a graded variable subtracts from the
stored resource; reading a future removes it, keeping futures one-shot).
Expressions take labelled steps: holds and future reads are inputs fed by
the surrounding configuration, releases and calls are outputs, everything
else is silent. Configurations reduce by pairing those labels with the
global state: a hold subtracts from the actor's resources and is simply not
enabled when the subtraction is undefined, a call inserts a message to the
left of the caller, a message plus an idle actor spawns a thread, a
fulfilled future to the left of its awaiting thread is consumed, and a
thread at a return becomes a fulfilled future next to an idle marker.

Rearrangement (swapping disconnected neighbours, activating a queued
thread on an idle actor, suspending a thread that is awaiting) is folded
into successor enumeration rather than exposed as separate transitions, so
the successor set of a state already accounts for every bureaucratic move
that could enable a rule.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .grades import GradeMonoid, ResourceEnv, format_grade
from .terms import (
    ActiveThread,
    Await,
    Call,
    CallMsg,
    Choice,
    Configuration,
    Expr,
    FulfilledFut,
    FutRef,
    GradedRes,
    GradedVar,
    Hold,
    Idle,
    Let,
    Lit,
    LocalEnv,
    MethodDecl,
    PrimOp,
    Process,
    Program,
    Release,
    ResT,
    Return,
    SuspendedThread,
    UnitT,
    UnitVal,
    Value,
    ValueExpr,
    Var,
    ctx_key,
    futures_consumed_one,
    futures_produced_one,
    rename_var,
)


# ---------------------------------------------------------------------------
# Labels

class Label:
    pass


@dataclass(frozen=True)
class Tau(Label):
    pass


@dataclass(frozen=True)
class HoldLbl(Label):
    res: str
    grade: object


@dataclass(frozen=True)
class RlsLbl(Label):
    res: str
    grade: object


@dataclass(frozen=True)
class CallLbl(Label):
    future: str
    actor: str
    method: str
    args: tuple[Value, ...]


@dataclass(frozen=True)
class FutLbl(Label):
    future: str
    value: Value


def is_input(label: Label) -> bool:
    return isinstance(label, (HoldLbl, FutLbl))


def is_output(label: Label) -> bool:
    return isinstance(label, (RlsLbl, CallLbl))


def label_str(label: Label) -> str:
    match label:
        case Tau():
            return "tau"
        case HoldLbl(res, grade):
            return f"{res}^{format_grade(grade)}?"
        case RlsLbl(res, grade):
            return f"{res}^{format_grade(grade)}!"
        case CallLbl(future, actor, method, args):
            return f"{future}<={actor}!{method}({', '.join(map(str, args))})"
        case FutLbl(future, value):
            return f"{future}<-{value}"
    raise TypeError(f"not a label: {label!r}")


# ---------------------------------------------------------------------------
# Stuckness

class Stuck(Exception):
    """A definitely stuck redex, with a stable code for diagnosis."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


# ---------------------------------------------------------------------------
# Value expressions

def eval_value_expr(m: GradeMonoid, env: LocalEnv, ve: ValueExpr) -> tuple[LocalEnv, Value]:
    """Reduce a value expression; never mutates the given environment."""
    match ve:
        case Lit(v):
            return env, v
        case GradedVar(x, g):
            if x not in env:
                raise Stuck("UnboundVariable", x)
            v = env[x]
            if not isinstance(v, GradedRes):
                raise Stuck("GradedNonResource", f"{x} holds {v}")
            left = m.minus(v.grade, g)
            if left is None:
                raise Stuck(
                    "InsufficientGrade",
                    f"{x} holds {v.res}^{format_grade(v.grade)}, needs {format_grade(g)}",
                )
            env2 = dict(env)
            env2[x] = GradedRes(v.res, left)
            return env2, GradedRes(v.res, g)
        case Var(x):
            if x not in env:
                raise Stuck("UnboundVariable", x)
            v = env[x]
            if isinstance(v, FutRef):
                env2 = dict(env)
                del env2[x]  # futures are read once
                return env2, v
            if isinstance(v, GradedRes):
                raise Stuck("UngradedResourceVar", f"{x} holds {v}")
            return env, v
    raise TypeError(f"not a value expression: {ve!r}")


def eval_value_list(m: GradeMonoid, env: LocalEnv,
                    ves: tuple[ValueExpr, ...]) -> tuple[LocalEnv, tuple[Value, ...]]:
    vals = []
    for ve in ves:
        env, v = eval_value_expr(m, env, ve)
        vals.append(v)
    return env, tuple(vals)


# ---------------------------------------------------------------------------
# Primitive operations

def apply_primop(prog: Program, op: str, args: tuple[Value, ...]) -> Value:
    """Resource-rewriting semantics read off the declared signature.

    Arguments must cover the declared shapes (same resource, grade at or
    above the declared one); the result is a fresh value of the declared
    result type. Reachable faults here mean the program was not checked.
    """
    sig = prog.op_sigs.get(op)
    if sig is None:
        raise Stuck("UnknownOperation", op)
    if len(args) != len(sig.params):
        raise Stuck("BadPrimOpArgs", f"{op} expects {len(sig.params)} arguments")
    m = prog.monoid
    for v, ty in zip(args, sig.params):
        match (v, ty):
            case (UnitVal(), UnitT()):
                pass
            case (GradedRes(res, h), ResT(res2, g)) if res == res2 and m.leq(g, h):
                pass
            case _:
                raise Stuck("BadPrimOpArgs", f"{op} got {v} for {ty}")
    match sig.result:
        case UnitT():
            return UnitVal()
        case ResT(res, g):
            return GradedRes(res, g)
    raise Stuck("BadPrimOpResult", f"{op} declares a future result")


# ---------------------------------------------------------------------------
# Expression steps

@dataclass
class Offered:
    """Input payloads the configuration makes available to one thread."""

    futures: dict[str, Value] = field(default_factory=dict)
    alpha: Optional[ResourceEnv] = None  # None: holds offered unconditionally


@dataclass
class ExprSteps:
    steps: list[tuple[Label, LocalEnv, Expr]]
    faults: list[Stuck]
    waiting_on: Optional[str]  # future the redex awaits but was not offered


def step_expr(m: GradeMonoid, env: LocalEnv, e: Expr, prog: Program,
              fresh_future: str, fresh_var: str, offered: Offered) -> ExprSteps:
    """All labelled steps of (env, e); at most one redex, so the only
    source of multiple steps is a choice at the redex."""
    out = ExprSteps([], [], None)
    _step_expr(m, env, e, prog, fresh_future, fresh_var, offered, out)
    return out


def _step_expr(m, env, e, prog, fresh_future, fresh_var, offered, out) -> None:
    match e:
        case Return(_):
            return  # consumed by the configuration-level return rule
        case Let(x, bound, body):
            if isinstance(bound, Return):
                try:
                    env2, v = eval_value_expr(m, env, bound.value)
                except Stuck as s:
                    out.faults.append(s)
                    return
                env2 = dict(env2)
                env2[fresh_var] = v
                out.steps.append((Tau(), env2, rename_var(body, x, fresh_var)))
                return
            inner = ExprSteps([], [], None)
            _step_expr(m, env, bound, prog, fresh_future, fresh_var, offered, inner)
            out.faults += inner.faults
            out.waiting_on = inner.waiting_on
            for label, env2, bound2 in inner.steps:
                out.steps.append((label, env2, Let(x, bound2, body)))
            return
        case Call(actor, method, args):
            try:
                env2, vals = eval_value_list(m, env, args)
            except Stuck as s:
                out.faults.append(s)
                return
            label = CallLbl(fresh_future, actor, method, vals)
            out.steps.append((label, env2, Return(Lit(FutRef(fresh_future)))))
            return
        case Await(target):
            try:
                env2, v = eval_value_expr(m, env, target)
            except Stuck as s:
                out.faults.append(s)
                return
            if not isinstance(v, FutRef):
                out.faults.append(Stuck("AwaitOnNonFuture", str(v)))
                return
            if v.name in offered.futures:
                value = offered.futures[v.name]
                out.steps.append((FutLbl(v.name, value), env2, Return(Lit(value))))
            else:
                out.waiting_on = v.name
            return
        case Hold(g, r):
            if offered.alpha is not None and m.minus(offered.alpha.get(r, m.zero()), g) is None:
                out.faults.append(Stuck("HoldBlocked", f"{r}^{format_grade(g)}"))
                return
            out.steps.append((HoldLbl(r, g), env, Return(Lit(GradedRes(r, g)))))
            return
        case Release(g, target):
            try:
                env2, v = eval_value_expr(m, env, target)
            except Stuck as s:
                out.faults.append(s)
                return
            if not isinstance(v, GradedRes):
                out.faults.append(Stuck("ReleaseOnNonResource", str(v)))
                return
            if not m.leq(g, v.grade):
                out.faults.append(
                    Stuck("ReleaseExceedsGrade",
                          f"release {format_grade(g)} of {v.res}^{format_grade(v.grade)}")
                )
                return
            out.steps.append((RlsLbl(v.res, g), env2, Return(Lit(UnitVal()))))
            return
        case PrimOp(op, args):
            try:
                env2, vals = eval_value_list(m, env, args)
                result = apply_primop(prog, op, vals)
            except Stuck as s:
                out.faults.append(s)
                return
            out.steps.append((Tau(), env2, Return(Lit(result))))
            return
        case Choice(left, right):
            out.steps.append((Tau(), env, left))
            out.steps.append((Tau(), env, right))
            return
    raise TypeError(f"not an expression: {e!r}")


def redex(e: Expr) -> Expr:
    while isinstance(e, Let) and not isinstance(e.bound, Return):
        e = e.bound
    return e


def awaiting_future(m: GradeMonoid, env: LocalEnv, e: Expr) -> Optional[str]:
    """The future this thread's redex waits for, if it is an await."""
    r = redex(e)
    if not isinstance(r, Await):
        return None
    try:
        _, v = eval_value_expr(m, env, r.target)
    except Stuck:
        return None
    return v.name if isinstance(v, FutRef) else None


# ---------------------------------------------------------------------------
# Rearrangement

def disconnected(p: Process, q: Process) -> bool:
    """Adjacent processes may swap only when neither consumes what the
    other produces."""
    return (
        not (futures_produced_one(p) & futures_consumed_one(q))
        and not (futures_produced_one(q) & futures_consumed_one(p))
    )


def precongruence_moves(m: GradeMonoid, processes: list[Process]) -> list[list[Process]]:
    """Single rearrangement applications: swaps of disconnected adjacent
    pairs, activation of a queued thread next to its idle actor, and
    suspension of a thread that is awaiting a future."""
    out: list[list[Process]] = []
    for i in range(len(processes) - 1):
        p, q = processes[i], processes[i + 1]
        if disconnected(p, q):
            swapped = list(processes)
            swapped[i], swapped[i + 1] = q, p
            out.append(swapped)
        if isinstance(p, Idle) and isinstance(q, SuspendedThread) and q.actor == p.actor:
            acted = list(processes)
            acted[i: i + 2] = [ActiveThread(dict(q.env), q.expr, q.future, q.actor)]
            out.append(acted)
    for i, p in enumerate(processes):
        if isinstance(p, ActiveThread) and awaiting_future(m, p.env, p.expr) is not None:
            yielded = list(processes)
            yielded[i: i + 1] = [
                Idle(p.actor),
                SuspendedThread(dict(p.env), p.expr, p.future, p.actor),
            ]
            out.append(yielded)
    return out


# ---------------------------------------------------------------------------
# Configuration steps

RULE_ORDER = {"spawn": 0, "silent": 1, "hold": 2, "rls": 3, "call": 4, "get": 5, "return": 6}


@dataclass
class StepResult:
    rule: str
    label: Label
    config: Configuration
    actor: Optional[str]
    future: Optional[str]
    pos: int
    variant: str = "base"  # base | act | yld (scheduling move folded in)

    def sort_key(self):
        return (self.pos, RULE_ORDER[self.rule], {"base": 0, "act": 1, "yld": 2}[self.variant],
                label_str(self.label))


def is_terminated(config: Configuration) -> bool:
    return all(isinstance(p, (Idle, FulfilledFut)) for p in config.processes)


def _first_idle(processes: list[Process], actor: str) -> Optional[int]:
    for i, p in enumerate(processes):
        if isinstance(p, Idle) and p.actor == actor:
            return i
    return None


def _active_of(processes: list[Process], actor: str) -> Optional[int]:
    for i, p in enumerate(processes):
        if isinstance(p, ActiveThread) and p.actor == actor:
            return i
    return None


def _offered_future(config: Configuration, m: GradeMonoid,
                    thread: ActiveThread, i: int) -> Optional[tuple[str, Value, int, str]]:
    """The fulfilment this thread could consume.

    It must sit to the left of the thread and reach it by legal swaps:
    either the fulfilment travels right past everything in between, or the
    thread travels left. Returns (future, value, position, route) where
    route records which side moved, since the two give different layouts.
    """
    f = awaiting_future(m, thread.env, thread.expr)
    if f is None:
        return None
    for j in range(i):
        p = config.processes[j]
        if isinstance(p, FulfilledFut) and p.future == f:
            between = config.processes[j + 1: i]
            if all(disconnected(p, q) for q in between):
                return (f, p.value, j, "ff")
            if all(disconnected(q, thread) for q in between):
                return (f, p.value, j, "thread")
            return None
    return None


def _thread_steps(config: Configuration, prog: Program, thread: ActiveThread, i: int,
                  variant: str) -> list[StepResult]:
    """Steps of one (possibly just activated) thread at position i of
    `config`, which already reflects any scheduling variant."""
    m = prog.monoid
    a = thread.actor
    out: list[StepResult] = []

    # return rule: thread at a top-level return becomes a fulfilled future
    if isinstance(thread.expr, Return):
        try:
            _, v = eval_value_expr(m, thread.env, thread.expr.value)
        except Stuck:
            v = None
        if v is not None:
            c = config.copy()
            c.processes[i: i + 1] = [FulfilledFut(thread.future, v), Idle(a)]
            out.append(StepResult("return", Tau(), c, a, thread.future, i, variant))
        return out

    reachable = _offered_future(config, m, thread, i)
    offered = Offered(
        futures={reachable[0]: reachable[1]} if reachable else {},
        alpha=config.alpha.get(a, {}),
    )
    candidate_future = f"f#{config.next_future}"
    candidate_var = f"y#{config.next_var}"
    res = step_expr(m, thread.env, thread.expr, prog, candidate_future, candidate_var, offered)

    for label, env2, expr2 in res.steps:
        c = config.copy()
        updated = ActiveThread(dict(env2), expr2, thread.future, a)
        c.processes[i] = updated
        match label:
            case Tau():
                if candidate_var in env2:
                    c.next_var += 1
                out.append(StepResult("silent", label, c, a, thread.future, i, variant))
            case HoldLbl(r, g):
                env_a = c.alpha.setdefault(a, {})
                left = m.minus(env_a.get(r, m.zero()), g)
                if left is None:
                    continue  # offered.alpha made this unreachable; belt and braces
                env_a[r] = left
                out.append(StepResult("hold", label, c, a, thread.future, i, variant))
            case RlsLbl(r, g):
                env_a = c.alpha.setdefault(a, {})
                env_a[r] = m.plus(env_a.get(r, m.zero()), g)
                out.append(StepResult("rls", label, c, a, thread.future, i, variant))
            case CallLbl(f_new, b, meth, vals):
                c.next_future += 1
                decl = prog.method(b, meth)
                c.registry[f_new] = (decl.result, ctx_key(decl.produces)) if decl else None
                c.call_counts[(b, meth)] = c.call_counts.get((b, meth), 0) + 1
                c.processes.insert(i, CallMsg(f_new, b, meth, vals))
                out.append(StepResult("call", label, c, a, thread.future, i, variant))
            case FutLbl(f, _):
                _, _, j, route = reachable
                if route == "ff":
                    del c.processes[j]  # thread shifts to i-1
                else:
                    del c.processes[i]
                    del c.processes[j]
                    c.processes.insert(j, updated)
                c.registry.pop(f, None)
                out.append(StepResult("get", label, c, a, thread.future, i, variant))
    return out


def step_config(config: Configuration, prog: Program) -> list[StepResult]:
    """Every successor reachable by one rule after folded rearrangement."""
    out: list[StepResult] = []
    processes = config.processes
    for i, p in enumerate(processes):
        match p:
            case CallMsg(f, a, meth, vals):
                decl = prog.method(a, meth)
                if decl is None or len(decl.params) != len(vals):
                    continue
                j = _first_idle(processes, a)
                if j is not None:
                    c = config.copy()
                    spawned = _spawn_thread(decl, f, a, vals)
                    c.processes[i] = spawned
                    del c.processes[j]
                    out.append(StepResult("spawn", Tau(), c, a, f, i, "base"))
                else:
                    k = _active_of(processes, a)
                    if k is not None and awaiting_future(
                        prog.monoid, processes[k].env, processes[k].expr
                    ) is not None:
                        c = config.copy()
                        t = c.processes[k]
                        c.processes[k] = SuspendedThread(dict(t.env), t.expr, t.future, t.actor)
                        c.processes[i] = _spawn_thread(decl, f, a, vals)
                        out.append(StepResult("spawn", Tau(), c, a, f, i, "yld"))
            case ActiveThread():
                out.extend(_thread_steps(config, prog, p, i, "base"))
            case SuspendedThread():
                a = p.actor
                activated = ActiveThread(dict(p.env), p.expr, p.future, a)
                j = _first_idle(processes, a)
                if j is not None:
                    base = config.copy()
                    base.processes[i] = activated
                    del base.processes[j]
                    pos = i - 1 if j < i else i
                    out.extend(_thread_steps(base, prog, activated, pos, "act"))
                else:
                    k = _active_of(processes, a)
                    if k is not None and awaiting_future(
                        prog.monoid, processes[k].env, processes[k].expr
                    ) is not None:
                        base = config.copy()
                        t = base.processes[k]
                        base.processes[k] = SuspendedThread(dict(t.env), t.expr, t.future, a)
                        base.processes[i] = activated
                        out.extend(_thread_steps(base, prog, activated, i, "yld"))
    out.sort(key=StepResult.sort_key)
    return out


def _spawn_thread(decl: MethodDecl, future: str, actor: str,
                  vals: tuple[Value, ...]) -> ActiveThread:
    env = {x: v for (x, _), v in zip(decl.params, vals)}
    return ActiveThread(env, decl.body, future, actor)


def stuck_diagnosis(config: Configuration, prog: Program) -> list[dict]:
    """Why a configuration has no successor: blocked holds, unfulfilled
    awaits, unspawnable messages, faulted redexes."""
    m = prog.monoid
    out: list[dict] = []
    fulfilled = {p.future for p in config.processes if isinstance(p, FulfilledFut)}
    for p in config.processes:
        if isinstance(p, (ActiveThread, SuspendedThread)):
            offered = Offered(futures={}, alpha=config.alpha.get(p.actor, {}))
            res = step_expr(m, p.env, p.expr, prog, "f#?", "y#?", offered)
            for fault in res.faults:
                code = fault.code
                detail = fault.detail
                if code == "HoldBlocked":
                    r = redex(p.expr)
                    out.append({
                        "code": "StuckAtHold",
                        "actor": p.actor,
                        "res": r.res,
                        "grade": format_grade(r.grade),
                    })
                else:
                    out.append({"code": code, "actor": p.actor, "detail": detail})
            if res.waiting_on is not None:
                out.append({
                    "code": "AwaitPending",
                    "actor": p.actor,
                    "future": res.waiting_on,
                    "fulfilled": res.waiting_on in fulfilled,
                })
        elif isinstance(p, CallMsg):
            decl = prog.method(p.actor, p.method)
            if decl is None:
                out.append({"code": "UnknownMethod", "actor": p.actor, "method": p.method})
            elif len(decl.params) != len(p.args):
                out.append({"code": "BadArity", "actor": p.actor, "method": p.method})
            else:
                out.append({"code": "MessagePending", "actor": p.actor, "method": p.method})
    return out


# ---------------------------------------------------------------------------
# Programs to configurations, runs, traces

def initial_config(prog: Program) -> Configuration:
    config = Configuration(
        alpha={a: dict(env) for a, env in prog.init_ctx.items()},
        processes=[],
    )
    f0 = config.fresh_future()
    config.processes.append(CallMsg(f0, prog.start_actor, prog.start_method, prog.start_args))
    for a in prog.actors:
        config.processes.append(Idle(a))
    decl = prog.method(prog.start_actor, prog.start_method)
    config.registry[f0] = (decl.result, ctx_key(decl.produces)) if decl else None
    config.call_counts[(prog.start_actor, prog.start_method)] = 1
    return config


@dataclass
class TraceStep:
    index: int
    result: StepResult


@dataclass
class Trace:
    initial: Configuration
    steps: list[TraceStep]
    status: str  # terminated | stuck | bound
    diagnosis: list[dict] = field(default_factory=list)

    @property
    def final(self) -> Configuration:
        return self.steps[-1].result.config if self.steps else self.initial


Chooser = Callable[[list[StepResult], int], Optional[int]]


def run(config: Configuration, prog: Program, chooser: Chooser, max_steps: int) -> Trace:
    steps: list[TraceStep] = []
    current = config
    for k in range(max_steps):
        succ = step_config(current, prog)
        if not succ:
            status = "terminated" if is_terminated(current) else "stuck"
            return Trace(config, steps, status,
                         [] if status == "terminated" else stuck_diagnosis(current, prog))
        idx = chooser(succ, k)
        if idx is None:
            return Trace(config, steps, "bound")
        chosen = succ[idx]
        steps.append(TraceStep(k, chosen))
        current = chosen.config
    succ = step_config(current, prog)
    if not succ:
        status = "terminated" if is_terminated(current) else "stuck"
        return Trace(config, steps, status,
                     [] if status == "terminated" else stuck_diagnosis(current, prog))
    return Trace(config, steps, "bound")


def random_chooser(rng: random.Random) -> Chooser:
    def choose(succ: list[StepResult], _k: int) -> int:
        return rng.randrange(len(succ))
    return choose


def fifo_chooser(succ: list[StepResult], _k: int) -> int:
    return 0


def script_chooser(entries: list[dict]) -> Chooser:
    """Select successors by rule name and optional actor/variant/label.

    Used for scripted replays. Ambiguity is an error so that a script pins
    exactly one run; a "pick" index resolves deliberate forks such as the
    two branches of a choice, which look identical to the other keys.
    """

    def choose(succ: list[StepResult], k: int) -> Optional[int]:
        if k >= len(entries):
            return None
        want = entries[k]
        matches = []
        for idx, s in enumerate(succ):
            if s.rule != want.get("rule", s.rule):
                continue
            if "actor" in want and s.actor != want["actor"]:
                continue
            if "variant" in want and s.variant != want["variant"]:
                continue
            if "label" in want and label_str(s.label) != want["label"]:
                continue
            matches.append(idx)
        if "pick" in want and 0 <= want["pick"] < len(matches):
            return matches[want["pick"]]
        if len(matches) != 1:
            raise Stuck(
                "AmbiguousScript" if matches else "ScriptMismatch",
                f"step {k}: {want} matched {len(matches)} of "
                f"{[(s.rule, s.actor, label_str(s.label)) for s in succ]}",
            )
        return matches[0]

    return choose


# ---------------------------------------------------------------------------
# Serialization

def process_to_json(p: Process) -> dict:
    match p:
        case ActiveThread(env, expr, future, actor):
            return {"kind": "active", "actor": actor, "future": future,
                    "env": {x: str(v) for x, v in env.items()}, "expr": str(expr)}
        case SuspendedThread(env, expr, future, actor):
            return {"kind": "suspended", "actor": actor, "future": future,
                    "env": {x: str(v) for x, v in env.items()}, "expr": str(expr)}
        case Idle(actor):
            return {"kind": "idle", "actor": actor}
        case CallMsg(future, actor, method, args):
            return {"kind": "msg", "future": future, "actor": actor, "method": method,
                    "args": [str(v) for v in args]}
        case FulfilledFut(future, value):
            return {"kind": "fulfilled", "future": future, "value": str(value)}
    raise TypeError(f"not a process: {p!r}")


def config_to_json(config: Configuration) -> dict:
    registry = {}
    for f, entry in config.registry.items():
        if entry is None:
            registry[f] = None
        else:
            ty, produces = entry
            registry[f] = {
                "result": str(ty),
                "produces": {a: {r: format_grade(g) for r, g in env} for a, env in produces},
            }
    return {
        "actors": {
            a: {r: format_grade(g) for r, g in env.items()}
            for a, env in config.alpha.items()
        },
        "processes": [process_to_json(p) for p in config.processes],
        "registry": registry,
        "counters": {"future": config.next_future, "var": config.next_var},
        "callCounts": {f"{a}.{m}": n for (a, m), n in config.call_counts.items()},
    }


def step_to_json(step: TraceStep, measure: Optional[int] = None) -> dict:
    out = {
        "schema": "gract/1",
        "step": step.index,
        "rule": step.result.rule,
        "label": label_str(step.result.label),
        "actor": step.result.actor,
        "variant": step.result.variant,
        "config": config_to_json(step.result.config),
    }
    if measure is not None:
        out["measure"] = measure
    return out
