"""Command line front end.

Four commands over a program file: `check` runs the static checker, `run`
executes one scheduled run, `explore` searches the bounded state space, and
`sr` replays random runs while verifying the preservation laws.  All JSON
output is schema-tagged and byte-stable for a fixed command line: same
flags, same seed, same bytes.

Exit codes: 0 success, 1 static type error, 2 parse error, 3 file error,
4 a stuck state (or failed replay), 5 a broken preservation law.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Optional

from .explorer import check_subject_reduction, explore, helpful_chooser
from .parser import ParseError, parse_program
from .semantics import (
    Stuck,
    Trace,
    config_to_json,
    fifo_chooser,
    initial_config,
    label_str,
    random_chooser,
    run,
    script_chooser,
    step_to_json,
)
from .terms import Program
from .typecheck import check_program, measure_of_config

EXIT_OK, EXIT_TYPE, EXIT_PARSE, EXIT_IO, EXIT_STUCK, EXIT_SR = 0, 1, 2, 3, 4, 5

_COLORS = {"red": "31", "green": "32", "yellow": "33", "cyan": "36"}


def _want_color(stream) -> bool:
    env = os.environ.get("GRACT_COLOR", "").lower()
    if env in ("0", "never", "off"):
        return False
    if env in ("1", "always", "force", "on"):
        return True
    return hasattr(stream, "isatty") and stream.isatty()


class Printer:
    def __init__(self, out, quiet: bool):
        self.out = out
        self.quiet = quiet
        self.color = _want_color(out)

    def paint(self, text: str, color: str) -> str:
        if not self.color:
            return text
        return f"\x1b[{_COLORS[color]}m{text}\x1b[0m"

    def line(self, text: str = "") -> None:
        print(text, file=self.out)

    def detail(self, text: str) -> None:
        if not self.quiet:
            print(text, file=self.out)


def _load(path: str) -> Program:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read {path}: {exc.strerror}", EXIT_IO))
    try:
        return parse_program(text)
    except ParseError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _emit_json(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


# ---------------------------------------------------------------------------
# check

def _err_str(e: dict) -> str:
    loc = e.get("loc")
    return f"{e['code']} at {loc}" if loc else e["code"]


def cmd_check(args) -> int:
    prog = _load(args.program)
    report = check_program(prog)
    if args.json:
        _emit_json({"schema": "gract/1", "command": "check",
                    "program": args.program, **report})
        return EXIT_OK if report["ok"] else EXIT_TYPE
    pr = Printer(sys.stdout, args.quiet)
    for mr in report["methodReports"]:
        if mr["ok"]:
            pr.detail(f"method {mr['actor']}.{mr['method']}: "
                      f"{pr.paint('ok', 'green')} "
                      f"(measure {mr['computed']['measure']})")
        else:
            codes = ", ".join(_err_str(e) for e in mr["errors"])
            pr.detail(f"method {mr['actor']}.{mr['method']}: "
                      f"{pr.paint(codes, 'red')}")
    cfg = report["configReport"]
    if cfg:
        word = pr.paint("ok", "green") if cfg["ok"] else \
            pr.paint(", ".join(_err_str(e) for e in cfg["errors"]), "red")
        pr.detail(f"configuration: {word} (measure {cfg['measure']})")
    verdict = "PASS" if report["ok"] else "FAIL"
    pr.line(pr.paint(verdict, "green" if report["ok"] else "red"))
    return EXIT_OK if report["ok"] else EXIT_TYPE


# ---------------------------------------------------------------------------
# run

def _step_chooser():
    def choose(succ, k):
        print(f"step {k}:", file=sys.stderr)
        for i, s in enumerate(succ):
            print(f"  [{i}] {s.rule} {label_str(s.label)} @{s.actor} ({s.variant})",
                  file=sys.stderr)
        line = sys.stdin.readline()
        if not line.strip():
            return None
        idx = int(line)
        if not 0 <= idx < len(succ):
            raise Stuck("ScriptMismatch", f"index {idx} out of range")
        return idx
    return choose


def _chooser_for(args, prog: Program):
    if args.replay:
        try:
            with open(args.replay) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise SystemExit(_fail(f"cannot read {args.replay}: {exc.strerror}", EXIT_IO))
        except json.JSONDecodeError as exc:
            raise SystemExit(_fail(f"{args.replay}: {exc}", EXIT_IO))
        entries = doc["steps"] if isinstance(doc, dict) else doc
        return script_chooser(entries)
    match args.strategy:
        case "fifo":
            return fifo_chooser
        case "helpful":
            return helpful_chooser(prog)
        case "step":
            return _step_chooser()
        case _:
            return random_chooser(random.Random(args.seed))


def _refuse_illtyped(args, prog: Program, command: str) -> bool:
    """Typecheck up front; report and signal refusal on failure."""
    report = check_program(prog)
    if report["ok"]:
        return False
    if args.json:
        _emit_json({"schema": "gract/1", "command": command,
                    "program": args.program, "status": "illtyped", **report})
    else:
        codes = sorted({e["code"] for e in report["errors"]}
                       | {e["code"] for mr in report["methodReports"]
                          for e in mr["errors"]})
        print(f"refusing to {command} an ill-typed program: {', '.join(codes)} "
              f"(use --unsafe to force)", file=sys.stderr)
    return True


def cmd_run(args) -> int:
    prog = _load(args.program)
    checked = False
    if not args.unsafe:
        if _refuse_illtyped(args, prog, "run"):
            return EXIT_TYPE
        checked = True
    chooser = _chooser_for(args, prog)
    cfg = initial_config(prog)
    try:
        tr = run(cfg, prog, chooser, args.steps)
    except Stuck as exc:
        if args.json:
            _emit_json({"schema": "gract/1", "command": "run",
                        "program": args.program, "status": "replay-failed",
                        "error": {"code": exc.code, "detail": exc.detail}})
        else:
            print(f"replay failed: {exc.code}: {exc.detail}", file=sys.stderr)
        return EXIT_STUCK

    def mu(c) -> Optional[int]:
        return measure_of_config(prog, c) if checked else None

    if args.json:
        payload = {"schema": "gract/1", "command": "run", "program": args.program,
                   "status": tr.status, "stepCount": len(tr.steps),
                   "initialMeasure": mu(tr.initial)}
        if not args.quiet:
            payload["steps"] = [step_to_json(st, mu(st.result.config))
                                for st in tr.steps]
        if tr.status == "stuck":
            payload["diagnosis"] = tr.diagnosis
        _emit_json(payload)
        return EXIT_STUCK if tr.status == "stuck" else EXIT_OK
    pr = Printer(sys.stdout, args.quiet)
    for st in tr.steps:
        s = st.result
        m = mu(s.config)
        tail = "" if m is None else f"  measure {m}"
        pr.detail(f"{st.index:4d}  {pr.paint(s.rule, 'cyan'):<6}  "
                  f"{label_str(s.label)} @{s.actor} ({s.variant}){tail}")
    word = {"terminated": "green", "stuck": "red", "bound": "yellow"}[tr.status]
    pr.line(f"{pr.paint(tr.status, word)} after {len(tr.steps)} steps")
    if tr.status == "stuck":
        for d in tr.diagnosis:
            pr.line("  " + ", ".join(f"{k}={v}" for k, v in d.items()))
        return EXIT_STUCK
    return EXIT_OK


# ---------------------------------------------------------------------------
# explore

def cmd_explore(args) -> int:
    prog = _load(args.program)
    if not args.unsafe and _refuse_illtyped(args, prog, "explore"):
        return EXIT_TYPE
    rep = explore(prog, unfold=args.unfold, max_depth=args.depth,
                  max_states=args.states, jobs=args.jobs)
    # only a fair-termination verdict counts as success for scripting
    code = EXIT_OK if rep.verdict == "FairTerminating" else EXIT_STUCK
    if args.json:
        payload = rep.to_json()
        if args.quiet:
            payload.pop("witnessTrace", None)
        _emit_json({"command": "explore", "program": args.program, **payload})
        return code
    pr = Printer(sys.stdout, args.quiet)
    good = rep.verdict in ("FairTerminating", "WeaklyTerminatingWitness")
    pr.line(f"verdict: {pr.paint(rep.verdict, 'green' if good else 'red')}")
    pr.detail(f"states: {rep.states_visited}  depth: {rep.max_depth}  "
              f"pruned: {rep.pruned_choices} choice branches, {rep.pruned_calls} calls")
    if rep.stuck_state:
        for d in rep.stuck_state["diagnosis"]:
            pr.line("  " + ", ".join(f"{k}={v}" for k, v in d.items()))
    return code


# ---------------------------------------------------------------------------
# sr

def _sr_replay(args, prog: Program) -> int:
    """Re-check a recorded trace: replay its steps through the engine,
    verify the preservation laws, and compare any recorded configurations
    against the engine's. A forged configuration fails at its step index."""
    try:
        with open(args.replay) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read {args.replay}: {exc.strerror}", EXIT_IO))
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(f"{args.replay}: {exc}", EXIT_IO))
    entries = doc["steps"] if isinstance(doc, dict) else doc

    def choose(succ, k):
        """Follow the recorded step; the stored configuration settles ties.
        A forged configuration matches nothing, so the first candidate is
        taken and the comparison below reports it at its step index."""
        if k >= len(entries):
            return None
        want = entries[k]
        matches = [i for i, s in enumerate(succ)
                   if s.rule == want.get("rule", s.rule)
                   and want.get("actor", s.actor) == s.actor
                   and want.get("variant", s.variant) == s.variant
                   and ("label" not in want or label_str(s.label) == want["label"])]
        if not matches:
            raise Stuck("ScriptMismatch",
                        f"step {k}: no successor matches "
                        f"{want.get('rule')} at {want.get('actor')}")
        recorded = want.get("config")
        if recorded is not None and len(matches) > 1:
            exact = [i for i in matches
                     if config_to_json(succ[i].config) == recorded]
            if exact:
                return exact[0]
        return matches[0]

    try:
        tr = run(initial_config(prog), prog, choose, len(entries))
    except Stuck as exc:
        if args.json:
            _emit_json({"schema": "gract/1", "command": "sr",
                        "program": args.program, "status": "replay-failed",
                        "error": {"code": exc.code, "detail": exc.detail}})
        else:
            print(f"replay failed: {exc.code}: {exc.detail}", file=sys.stderr)
        return EXIT_STUCK
    law = check_subject_reduction(prog, tr)
    violations = list(law["violations"])
    for st, entry in zip(tr.steps, entries):
        recorded = entry.get("config") if isinstance(entry, dict) else None
        if recorded is not None and recorded != config_to_json(st.result.config):
            violations.append({"step": st.index, "code": "RecordedConfigMismatch"})
    ok = not violations
    if args.json:
        _emit_json({"schema": "gract/1", "command": "sr", "program": args.program,
                    "replay": args.replay, "ok": ok, "steps": law["steps"],
                    "violations": violations})
        return EXIT_OK if ok else EXIT_SR
    pr = Printer(sys.stdout, args.quiet)
    word = pr.paint("ok", "green") if ok else pr.paint("VIOLATION", "red")
    pr.detail(f"replayed {len(tr.steps)} recorded steps: {word}")
    for v in violations[:5]:
        pr.detail(f"    {v}")
    pr.line(pr.paint("PASS" if ok else "FAIL", "green" if ok else "red"))
    return EXIT_OK if ok else EXIT_SR


def cmd_sr(args) -> int:
    prog = _load(args.program)
    if args.replay:
        return _sr_replay(args, prog)
    rng = random.Random(args.seed)
    runs = []
    ok = True
    for k in range(args.runs):
        tr = run(initial_config(prog), prog, random_chooser(rng), args.steps)
        law = check_subject_reduction(prog, tr)
        ok = ok and law["ok"]
        runs.append({"run": k, "status": tr.status, "steps": law["steps"],
                     "ok": law["ok"], "violations": law["violations"]})
    if args.json:
        _emit_json({"schema": "gract/1", "command": "sr", "program": args.program,
                    "ok": ok, "runs": runs})
        return EXIT_OK if ok else EXIT_SR
    pr = Printer(sys.stdout, args.quiet)
    for r in runs:
        word = pr.paint("ok", "green") if r["ok"] else pr.paint("VIOLATION", "red")
        pr.detail(f"run {r['run']}: {r['status']} after {r['steps']} steps, {word}")
        for v in r["violations"][:3]:
            pr.detail(f"    {v}")
    pr.line(pr.paint("PASS" if ok else "FAIL", "green" if ok else "red"))
    return EXIT_OK if ok else EXIT_SR


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="gract",
        description="Resource-graded active objects: check, run, explore.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("program", help="program file")
        p.add_argument("--json", action="store_true", help="JSON output")
        p.add_argument("--quiet", action="store_true", help="summary only")

    p = sub.add_parser("check", help="static checks: method table and start state")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="execute one run under a schedule")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="random schedule seed")
    p.add_argument("--steps", type=int, default=1000, help="step budget")
    p.add_argument("--strategy", choices=("random", "helpful", "fifo", "step"),
                   default="random", help="schedule: random, measure-greedy, "
                   "leftmost, or interactive")
    p.add_argument("--replay", metavar="SCRIPT",
                   help="JSON step script; overrides --strategy")
    p.add_argument("--unsafe", action="store_true",
                   help="run without the static check")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("explore", help="bounded search of all schedules")
    common(p)
    p.add_argument("--unfold", type=int, default=2, help="per-method call budget")
    p.add_argument("--depth", type=int, default=500, help="search depth limit")
    p.add_argument("--states", type=int, default=100000, help="state limit")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--unsafe", action="store_true",
                   help="explore even if the static checks fail")
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("sr", help="verify the preservation laws on random runs")
    common(p)
    p.add_argument("--runs", type=int, default=20, help="number of runs")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--steps", type=int, default=400, help="per-run step budget")
    p.add_argument("--replay", metavar="TRACE",
                   help="re-check a recorded trace instead of random runs")
    p.set_defaults(fn=cmd_sr)
    return top


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
