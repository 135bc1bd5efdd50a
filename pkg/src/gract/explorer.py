"""Bounded state-space exploration and dynamic checking of the soundness laws.

The explorer walks every interleaving of a program up to three bounds: a
per-method call budget (the unfold limit), a depth limit, and a state limit.
States are canonicalized before deduplication, so runs that differ only by
commuting independent processes or by the spelling of fresh names collapse
into one node.  On top of the reachable set it evaluates two dynamic laws:
every step of a run preserves typability with a controlled measure drop, and
every live typable state offers at least one measure-decreasing successor.
"""

from __future__ import annotations

import json
import re
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .grades import ctx_minus, ctx_norm, ctx_plus
from .semantics import (
    CallLbl,
    HoldLbl,
    RlsLbl,
    StepResult,
    Trace,
    disconnected,
    config_to_json,
    initial_config,
    is_terminated,
    label_str,
    process_to_json,
    redex,
    step_config,
    stuck_diagnosis,
)
from .terms import (
    ActiveThread,
    Call,
    Choice,
    Configuration,
    Let,
    Program,
)
from .typecheck import measure_of_config, type_config, type_process


# ---------------------------------------------------------------------------
# Canonical state keys

_FRESH = re.compile(r"(?<![A-Za-z0-9_])([fy])#\d+")


def _proc_ser(p) -> str:
    return json.dumps(process_to_json(p), sort_keys=True)


def canonical_key(config: Configuration) -> str:
    """A name for the state that ignores process order (where swapping is
    legal), fresh-name spelling, and the freshness counters.

    Adjacent processes are bubble-sorted by their serialization whenever the
    swap preserves behaviour, then futures and let-variables are renumbered
    by first occurrence.  Distinct keys may still denote equivalent states;
    that only costs extra visits, never a wrong merge.
    """
    procs = list(config.processes)
    sers = [_proc_ser(p) for p in procs]
    changed = True
    while changed:
        changed = False
        for i in range(len(procs) - 1):
            if sers[i + 1] < sers[i] and disconnected(procs[i], procs[i + 1]):
                procs[i], procs[i + 1] = procs[i + 1], procs[i]
                sers[i], sers[i + 1] = sers[i + 1], sers[i]
                changed = True
    body = "[" + ",".join(sers) + "]"

    mapping: dict[str, str] = {}
    counts = {"f": 0, "y": 0}

    def fresh_name(match: re.Match) -> str:
        name = match.group(0)
        if name not in mapping:
            kind = match.group(1)
            mapping[name] = f"{kind.upper()}{counts[kind]}"
            counts[kind] += 1
        return mapping[name]

    body = _FRESH.sub(fresh_name, body)

    live = {}
    for f, entry in sorted(config.registry.items()):
        if f not in mapping:
            # the future no longer occurs anywhere in the processes
            continue
        live[mapping[f]] = "-" if entry is None else f"{entry[0]}|{entry[1]}"

    alpha = json.dumps({a: {r: str(g) for r, g in env.items()}
                        for a, env in sorted(config.alpha.items())}, sort_keys=True)
    budget = json.dumps({f"{a}.{m}": n for (a, m), n in sorted(config.call_counts.items())},
                        sort_keys=True)
    return "|".join([body, alpha, json.dumps(live, sort_keys=True), budget])


# ---------------------------------------------------------------------------
# Successor filtering under the unfold budget

def _calls_in(e) -> set[tuple[str, str]]:
    out: set[tuple[str, str]] = set()
    stack = [e]
    while stack:
        cur = stack.pop()
        match cur:
            case Call(a, meth, _):
                out.add((a, meth))
            case Let(_, bound, bodye):
                stack += [bound, bodye]
            case Choice(left, right):
                stack += [left, right]
            case _:
                pass
    return out


def _choice_index(config: Configuration, succ: list[StepResult],
                  s: StepResult) -> Optional[tuple[Choice, int]]:
    # a silent step resolving a choice redex; returns (redex, branch index)
    if s.rule != "silent" or s.pos >= len(config.processes):
        return None
    p = config.processes[s.pos]
    if not isinstance(p, ActiveThread):
        return None
    r = redex(p.expr)
    if not isinstance(r, Choice):
        return None
    siblings = [t for t in succ
                if t.pos == s.pos and t.rule == "silent" and t.variant == s.variant]
    return r, siblings.index(s)


@dataclass
class Successors:
    kept: list[StepResult]
    pruned_calls: int
    pruned_choices: int
    raw_count: int


def bounded_successors(prog: Program, config: Configuration,
                       unfold: Optional[int]) -> Successors:
    """All one-step successors, minus those the call budget rules out.

    A call that would push its method past the budget is dropped.  A choice
    branch whose body syntactically mentions a call to an already-exhausted
    method is dropped too: taking it could only end at the budget wall, and
    cutting it here models the fair scheduler that eventually picks the
    other branch.
    """
    raw = step_config(config, prog)
    if unfold is None:
        return Successors(raw, 0, 0, len(raw))
    kept: list[StepResult] = []
    pruned_calls = pruned_choices = 0
    for s in raw:
        if s.rule == "call" and isinstance(s.label, CallLbl):
            key = (s.label.actor, s.label.method)
            if s.config.call_counts.get(key, 0) > unfold:
                pruned_calls += 1
                continue
        ch = _choice_index(config, raw, s)
        if ch is not None:
            r, idx = ch
            branch = (r.left, r.right)[idx]
            counts = config.call_counts
            if any(counts.get(k, 0) >= unfold for k in _calls_in(branch)):
                pruned_choices += 1
                continue
        kept.append(s)
    return Successors(kept, pruned_calls, pruned_choices, len(raw))


# ---------------------------------------------------------------------------
# Breadth-first exploration

@dataclass
class ExploreReport:
    verdict: str  # FairTerminating | WeaklyTerminatingWitness | StuckFound | BoundExhausted
    states_visited: int
    max_depth: int
    measure_histogram: dict[str, int]
    pruned_calls: int
    pruned_choices: int
    bound_hit: bool
    witness_trace: Optional[list[dict]] = None
    stuck_state: Optional[dict] = None
    visited: list[Configuration] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        out = {
            "schema": "gract/1",
            "verdict": self.verdict,
            "statesVisited": self.states_visited,
            "maxDepth": self.max_depth,
            "measureHistogram": self.measure_histogram,
            "prunedCalls": self.pruned_calls,
            "prunedChoices": self.pruned_choices,
            "boundHit": self.bound_hit,
        }
        if self.witness_trace is not None:
            out["witnessTrace"] = self.witness_trace
        if self.stuck_state is not None:
            out["stuckState"] = self.stuck_state
        return out


def _step_brief(s: StepResult) -> dict:
    return {"rule": s.rule, "label": label_str(s.label),
            "actor": s.actor, "variant": s.variant}


def _trace_to(parents: dict, key: str) -> list[dict]:
    steps = []
    while parents[key] is not None:
        key, brief = parents[key]
        steps.append(brief)
    steps.reverse()
    return steps


def explore(prog: Program, config: Optional[Configuration] = None, *,
            unfold: int = 2, max_depth: int = 500, max_states: int = 100000,
            jobs: int = 1) -> ExploreReport:
    """Breadth-first search over canonical states.

    FairTerminating: every explored maximal path ends terminated and no
    behaviour was cut except fair choice pruning.  A reachable stuck state
    wins over everything and comes with a witness trace.  When a call had to
    be pruned or a bound was hit, the best remaining claims are a witness of
    termination or plain bound exhaustion.
    """
    start = config if config is not None else initial_config(prog)
    key0 = canonical_key(start)
    visited: dict[str, Configuration] = {key0: start}
    parents: dict[str, Optional[tuple[str, dict]]] = {key0: None}
    histogram: dict[str, int] = {}
    pruned_calls = pruned_choices = 0
    bound_hit = False
    hard_truncated = False
    terminal_key: Optional[str] = None
    depth = 0

    def note_measure(cfg: Configuration) -> None:
        mu = measure_of_config(prog, cfg)
        k = "untypable" if mu is None else str(mu)
        histogram[k] = histogram.get(k, 0) + 1

    note_measure(start)
    level: list[tuple[str, Configuration]] = [(key0, start)]

    while level:
        if depth >= max_depth:
            bound_hit = True
            break
        expand = [(k, c, bounded_successors(prog, c, unfold)) for k, c in level] \
            if jobs <= 1 else _parallel_expand(prog, level, unfold, jobs)
        nxt: list[tuple[str, Configuration]] = []
        for key, cfg, succ in expand:
            pruned_calls += succ.pruned_calls
            pruned_choices += succ.pruned_choices
            if succ.raw_count == 0:
                if is_terminated(cfg):
                    if terminal_key is None:
                        terminal_key = key
                else:
                    return ExploreReport(
                        "StuckFound", len(visited), depth + 1, histogram,
                        pruned_calls, pruned_choices, bound_hit,
                        witness_trace=_trace_to(parents, key),
                        stuck_state={"config": config_to_json(cfg),
                                     "diagnosis": stuck_diagnosis(cfg, prog)},
                        visited=list(visited.values()))
                continue
            if not succ.kept:
                hard_truncated = True
                continue
            if succ.pruned_calls:
                hard_truncated = True
            for s in succ.kept:
                k2 = canonical_key(s.config)
                if k2 in visited:
                    continue
                if len(visited) >= max_states:
                    bound_hit = True
                    continue
                visited[k2] = s.config
                parents[k2] = (key, _step_brief(s))
                note_measure(s.config)
                nxt.append((k2, s.config))
        level = nxt
        if nxt:
            depth += 1

    if bound_hit or hard_truncated:
        if terminal_key is not None:
            return ExploreReport(
                "WeaklyTerminatingWitness", len(visited), depth, histogram,
                pruned_calls, pruned_choices, bound_hit,
                witness_trace=_trace_to(parents, terminal_key),
                visited=list(visited.values()))
        return ExploreReport(
            "BoundExhausted", len(visited), depth, histogram,
            pruned_calls, pruned_choices, bound_hit,
            visited=list(visited.values()))
    return ExploreReport(
        "FairTerminating", len(visited), depth, histogram,
        pruned_calls, pruned_choices, bound_hit,
        witness_trace=None if terminal_key is None else _trace_to(parents, terminal_key),
        visited=list(visited.values()))


def _parallel_expand(prog, level, unfold, jobs):
    def work(item):
        k, c = item
        return k, c, bounded_successors(prog, c, unfold)
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(work, level))


# ---------------------------------------------------------------------------
# The helpful direction: some successor always shrinks the measure

def helpful_chooser(prog: Program) -> Callable[[list[StepResult], int], int]:
    """Pick the successor with the smallest measure, earliest on ties."""
    def choose(succ: list[StepResult], _k: int) -> int:
        best, best_mu = 0, None
        for i, s in enumerate(succ):
            mu = measure_of_config(prog, s.config)
            if mu is not None and (best_mu is None or mu < best_mu):
                best, best_mu = i, mu
        return best
    return choose


def check_helpful(prog: Program, configs: list[Configuration]) -> dict:
    """Every typable state that can still move must have a successor with a
    strictly smaller measure. Pruning never hides successors here."""
    violations = []
    checked = 0
    for cfg in configs:
        mu = measure_of_config(prog, cfg)
        if mu is None:
            continue
        succ = step_config(cfg, prog)
        if not succ:
            continue
        checked += 1
        if not any((lambda v: v is not None and v < mu)(measure_of_config(prog, s.config))
                   for s in succ):
            violations.append({"code": "NoHelpfulSuccessor", "measure": mu,
                               "config": config_to_json(cfg)})
    return {"ok": not violations, "checked": checked, "violations": violations}


# ---------------------------------------------------------------------------
# Dynamic subject reduction along a trace

def _is_choice_step(pre: Configuration, s: StepResult) -> bool:
    if s.rule != "silent" or s.pos >= len(pre.processes):
        return False
    p = pre.processes[s.pos]
    return isinstance(p, ActiveThread) and isinstance(redex(p.expr), Choice)


def _expected_alpha(m, alpha, s: StepResult):
    match s.label:
        case HoldLbl(r, g):
            return ctx_minus(m, alpha, {s.actor: {r: g}})
        case RlsLbl(r, g):
            return ctx_norm(m, ctx_plus(m, alpha, {s.actor: {r: g}}))
        case _:
            return ctx_norm(m, alpha)


def check_subject_reduction(prog: Program, trace: Trace) -> dict:
    """Check the preservation laws along one run.

    Per step: the configuration stays typable; the set of fulfilled-but-
    unread futures visible at the top level never changes (it is exactly the
    start future); the read-tracking marks gain exactly the fresh future of
    a call and lose exactly the future consumed by a get; the measure drops
    by exactly one except when resolving a choice, which may pick a dearer
    branch; and the graded state moves by exactly what the step's label
    says.
    """
    m = prog.monoid
    violations: list[dict] = []
    measures: list[Optional[int]] = []

    def proc_typing(cfg):
        try:
            return type_process(prog, cfg.processes, {}, cfg.registry)
        except Exception:
            return None

    def snap(cfg, where):
        report = type_config(prog, cfg)
        if not report["ok"]:
            violations.append({"step": where, "code": "Untypable",
                               "errors": report["errors"]})
            measures.append(None)
            return None
        measures.append(report["measure"])
        return proc_typing(cfg)

    pre = trace.initial
    pt = snap(pre, -1)
    unmarked0 = None if pt is None else set(pt.produced) - pt.marked
    for st in trace.steps:
        s = st.result
        post = s.config
        pt2 = snap(post, st.index)
        if pt is not None and pt2 is not None:
            if pt.consumed or pt2.consumed:
                violations.append({"step": st.index, "code": "OpenConfiguration"})
            unmarked = set(pt2.produced) - pt2.marked
            if unmarked0 is not None and unmarked != unmarked0:
                violations.append({"step": st.index, "code": "UnreadSetChanged",
                                   "was": sorted(unmarked0), "now": sorted(unmarked)})
            # the call label carries the fresh future, the get label the
            # consumed one; the step's own future field is the acting thread
            want = set(pt.marked)
            match s.rule, s.label:
                case "call", CallLbl(fresh, _, _, _):
                    want.add(fresh)
                case "get", lbl:
                    want.discard(lbl.future)
                case _:
                    pass
            if pt2.marked != want:
                violations.append({"step": st.index, "code": "MarkLawBroken",
                                   "expected": sorted(want), "got": sorted(pt2.marked)})
        mu0, mu1 = measures[-2], measures[-1]
        if mu0 is not None and mu1 is not None:
            if _is_choice_step(pre, s):
                if mu1 < mu0 - 1:
                    violations.append({"step": st.index, "code": "MeasureDroppedTooFar",
                                       "from": mu0, "to": mu1})
            elif mu1 != mu0 - 1:
                violations.append({"step": st.index, "code": "MeasureNotDecrementing",
                                   "from": mu0, "to": mu1})
        want_alpha = _expected_alpha(m, pre.alpha, s)
        if want_alpha is None or ctx_norm(m, post.alpha) != want_alpha:
            violations.append({"step": st.index, "code": "GradedStateMismatch",
                               "label": label_str(s.label)})
        pre, pt = post, pt2
    return {"ok": not violations, "steps": len(trace.steps),
            "violations": violations, "measures": measures}
