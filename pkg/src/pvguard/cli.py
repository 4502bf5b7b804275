"""Command line front end.

Exit codes: 0 clean, 1 property violated, 2 input error, 3 search bound
exceeded, 4 inconclusive.  Machine output (--json) goes to stdout and is
byte-identical across reruns; progress and timing go to stderr.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import time
from typing import Optional, Sequence

from . import __version__
from .core import (
    CapacityMap,
    InvalidThreadError,
    ParseError,
    Program,
    PvError,
    SearchLimitExceeded,
    Thread,
)
from .deadlock import (
    deadsharp_witness,
    family_deadlock_verdict,
    find_deadlocks,
    potential_deadlocks,
)
from .geometry import DEFAULT_MAX_STATES
from .parser import SourceModel, parse_source
from .serializability import (
    dihomotopy_classes,
    family_serializability_verdict,
    local_choice_points,
    sharpserializable_witness,
)
from . import report

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_OVERFLOW = 3
EXIT_INCONCLUSIVE = 4


class _InputError(Exception):
    pass


def _read_source(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _load(path: str) -> tuple[bytes, SourceModel]:
    raw = _read_source(path)
    return raw, parse_source(raw.decode("utf-8"))


def _pick_program(model: SourceModel, name: Optional[str]) -> tuple[str, Program]:
    if name is not None:
        if name not in model.programs:
            known = ", ".join(sorted(model.programs)) or "none"
            raise _InputError(f"no program named {name!r} (defined: {known})")
        return name, model.programs[name]
    if len(model.programs) == 1:
        return next(iter(model.programs.items()))
    if not model.programs:
        raise _InputError("source defines no program; add a 'program NAME = ...' line")
    known = ", ".join(sorted(model.programs))
    raise _InputError(f"several programs defined ({known}); pick one")


def _pick_thread(model: SourceModel, name: Optional[str]) -> tuple[str, Thread]:
    if name is not None:
        if name not in model.threads:
            known = ", ".join(sorted(model.threads)) or "none"
            raise _InputError(f"no thread named {name!r} (defined: {known})")
        return name, model.threads[name]
    if len(model.threads) == 1:
        return next(iter(model.threads.items()))
    if not model.threads:
        raise _InputError("source defines no thread")
    known = ", ".join(sorted(model.threads))
    raise _InputError(f"several threads defined ({known}); pick one with --thread")


def _emit(args, command: str, source: bytes, result: dict, text: Sequence[str]) -> None:
    if args.json:
        env = report.envelope(command, source, result, __version__)
        sys.stdout.write(report.dumps(env))
    else:
        for line in text:
            print(line)


def _cmd_check(args) -> int:
    raw, model = _load(args.file)
    threads = [
        {"name": nm, "actions": [a.mnemonic for a in t.actions], "length": t.length}
        for nm, t in model.threads.items()
    ]
    programs = [
        {"name": nm, "threads": p.n} for nm, p in model.programs.items()
    ]
    result = {
        "valid": True,
        "resources": {r: model.caps[r] for r in model.caps.names},
        "threads": threads,
        "programs": programs,
    }
    text = [
        f"ok: {len(model.caps)} resource(s), {len(model.threads)} thread(s), "
        f"{len(model.programs)} program(s)"
    ]
    for r in model.caps.names:
        text.append(f"  resource {r} cap {model.caps[r]}")
    for nm, t in model.threads.items():
        text.append(f"  thread {nm}: {t} ({t.length} actions)")
    for nm, p in model.programs.items():
        text.append(f"  program {nm}: {p.n} thread(s), {p.grid_states()} grid states")
    _emit(args, "check", raw, result, text)
    return EXIT_OK


def _cmd_deadlocks(args) -> int:
    raw, model = _load(args.file)
    name, program = _pick_program(model, args.program)
    if args.potential:
        hits = potential_deadlocks(program)
        result = {
            "program": name,
            "potential_deadlocks": [report.state_json(program, s) for s in hits],
            "count": len(hits),
        }
        text = [f"program {name}: {len(hits)} potential deadlock(s)"]
        text += [f"  {report.state_text(program, s)}" for s in hits]
        _emit(args, f"deadlocks --potential {name}", raw, result, text)
        return EXIT_VIOLATION if hits else EXIT_OK
    rep = find_deadlocks(program, args.max_states)
    result = {"program": name, **report.deadlock_report_json(program, rep)}
    text = [
        f"program {name}: {len(rep.deadlocks)} deadlock(s), "
        f"{rep.stats.candidates} candidate(s), {rep.stats.visited} state(s) visited"
    ]
    for d in rep.deadlocks:
        text.append(f"  deadlock {report.state_text(program, d.state)}")
        text.append(f"    via {report.path_text(program, d.witness)}")
    if program.n == 2:
        text.append("")
        text.append(
            report.render_grid(
                program,
                marked=[d.state for d in rep.deadlocks],
                path=rep.deadlocks[0].witness if rep.deadlocks else None,
            )
        )
    _emit(args, f"deadlocks {name}", raw, result, text)
    return EXIT_VIOLATION if rep.deadlocks else EXIT_OK


def _cmd_family(args) -> int:
    raw, model = _load(args.file)
    name, thread = _pick_thread(model, args.thread)
    if args.property == "deadlock":
        verdict = family_deadlock_verdict(thread, model.caps, args.max_states)
    else:
        verdict = family_serializability_verdict(thread, model.caps, args.max_states)
    result = {
        "thread": name,
        **report.family_verdict_json(verdict, thread=thread, caps=model.caps),
    }
    text = [
        f"thread {name}, {verdict.property_name} for all copy counts: "
        f"{verdict.verdict}",
        f"  rule: {verdict.rule} (cut-off {verdict.cutoff})",
        f"  {verdict.detail}",
    ]
    if verdict.manifests_at_n is not None:
        text.append(f"  manifests at n={verdict.manifests_at_n}")
    for w in verdict.witnesses:
        prog = Program((thread,) * len(w), model.caps)
        text.append(f"  witness {report.state_text(prog, w)}")
    for cp in verdict.choice_points:
        prog = Program((thread,) * len(cp.state), model.caps)
        text.append(
            f"  choice point {report.state_text(prog, cp.state)} "
            f"on {cp.resource}, contenders {[c + 1 for c in cp.contenders]}"
        )
    _emit(args, f"family {args.property} {name}", raw, result, text)
    if verdict.verdict == "yes":
        return EXIT_OK
    if verdict.verdict == "no":
        return EXIT_VIOLATION
    return EXIT_INCONCLUSIVE


def _cmd_classes(args) -> int:
    raw, model = _load(args.file)
    name, program = _pick_program(model, args.program)
    limit = args.limit if args.limit is not None else args.max_states
    rep = dihomotopy_classes(program, limit)
    result = {"program": name, **report.class_report_json(program, rep)}
    text = [
        f"program {name}: {rep.class_count} execution class(es), "
        f"{rep.serial_classes_covered} containing a serial execution",
        f"  serializable: {'yes' if rep.serializable else 'no'}",
    ]
    for i, r in enumerate(rep.representatives, 1):
        steps = " ".join(str(c + 1) for c in r.steps())
        text.append(f"  class {i}: thread steps {steps}")
    _emit(args, f"classes {name}", raw, result, text)
    return EXIT_OK if rep.serializable else EXIT_VIOLATION


def _cmd_lcp(args) -> int:
    raw, model = _load(args.file)
    name, program = _pick_program(model, args.program)
    cps = local_choice_points(program, args.max_states)
    result = {
        "program": name,
        "choice_points": [report.choice_point_json(program, cp) for cp in cps],
        "count": len(cps),
    }
    text = [f"program {name}: {len(cps)} local choice point(s)"]
    for cp in cps:
        reach = {True: "reachable", False: "unreachable", None: "reachability unknown"}
        text.append(
            f"  {report.state_text(program, cp.state)} on {cp.resource}, "
            f"contenders {[c + 1 for c in cp.contenders]}, {reach[cp.reachable]}"
        )
    _emit(args, f"lcp {name}", raw, result, text)
    return EXIT_VIOLATION if cps else EXIT_OK


_CAP_TOKEN = re.compile(r"^([A-Za-z_]\w*):(\d+)$")


def _parse_caps(tokens: Sequence[str]) -> CapacityMap:
    entries = []
    for tok in tokens:
        m = _CAP_TOKEN.match(tok)
        if m is None:
            raise _InputError(f"capacity {tok!r} not of the form name:count")
        entries.append((m.group(1), int(m.group(2))))
    try:
        return CapacityMap(tuple(entries))
    except ValueError as exc:
        raise _InputError(str(exc))


def _cmd_witness(args) -> int:
    caps = _parse_caps(args.capacities)
    try:
        if args.kind == "deadlock":
            plan = deadsharp_witness(caps)
        else:
            plan = sharpserializable_witness(caps)
    except ValueError as exc:
        raise _InputError(str(exc))
    source = report.witness_source(plan)
    result = report.witness_plan_json(plan)
    caps_str = ",".join(f"{r}:{caps[r]}" for r in caps.names)
    _emit(
        args,
        f"witness {args.kind} {caps_str}",
        source.encode("utf-8"),
        result,
        [source.rstrip("\n")],
    )
    return EXIT_OK


def _default_max_states() -> int:
    raw = os.environ.get("PVGUARD_MAX_STATES")
    if raw is None:
        return DEFAULT_MAX_STATES
    try:
        value = int(raw)
        if value <= 0:
            raise ValueError
        return value
    except ValueError:
        print(
            f"pvguard: ignoring invalid PVGUARD_MAX_STATES={raw!r}",
            file=sys.stderr,
        )
        return DEFAULT_MAX_STATES


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="pvguard",
        description="Static deadlock and serializability analysis for PV "
        "(semaphore) programs.",
    )
    top.add_argument("--version", action="version", version=f"pvguard {__version__}")
    sub = top.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, needs_file=True):
        if needs_file:
            p.add_argument("file", help="PV source file, or - for stdin")
        p.add_argument("--json", action="store_true", help="machine output")
        p.add_argument(
            "--max-states",
            type=int,
            default=_default_max_states(),
            help="search bound (also via PVGUARD_MAX_STATES)",
        )

    p = sub.add_parser("check", help="parse and validate a source file")
    common(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("deadlocks", help="find deadlocks of a program")
    common(p)
    p.add_argument("program", nargs="?", help="program name (default: the only one)")
    p.add_argument(
        "--potential",
        action="store_true",
        help="list potential deadlocks (no reachability search)",
    )
    p.set_defaults(func=_cmd_deadlocks)

    p = sub.add_parser("family", help="verdict for every number of thread copies")
    common(p)
    p.add_argument("property", choices=["deadlock", "serializability"])
    p.add_argument("--thread", help="thread name (default: the only one)")
    p.set_defaults(func=_cmd_family)

    p = sub.add_parser("classes", help="execution classes up to square swaps")
    common(p)
    p.add_argument("program", nargs="?", help="program name (default: the only one)")
    p.add_argument("--limit", type=int, help="class pair bound (default: max-states)")
    p.set_defaults(func=_cmd_classes)

    p = sub.add_parser("lcp", help="find local choice points of a program")
    common(p)
    p.add_argument("program", nargs="?", help="program name (default: the only one)")
    p.set_defaults(func=_cmd_lcp)

    p = sub.add_parser("witness", help="generate a cut-off tightness witness")
    p.add_argument("kind", choices=["deadlock", "lcp"])
    p.add_argument(
        "capacities",
        nargs="+",
        metavar="NAME:CAP",
        help="resources in order, e.g. a:1 b:1",
    )
    p.add_argument("--json", action="store_true", help="machine output")
    p.set_defaults(func=_cmd_witness)

    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    started = time.perf_counter()
    try:
        return args.func(args)
    except SearchLimitExceeded as exc:
        print(f"pvguard: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (ParseError, InvalidThreadError) as exc:
        print(f"pvguard: {getattr(args, 'file', '')}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (_InputError, OSError, ValueError) as exc:
        print(f"pvguard: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PvError as exc:
        print(f"pvguard: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        elapsed = (time.perf_counter() - started) * 1000.0
        print(f"pvguard: {args.command} finished in {elapsed:.1f} ms", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
