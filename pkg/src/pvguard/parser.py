"""Parser for the PV source language.

The language is line oriented, UTF-8, with ``#`` comments:

    resource <name> cap <int>          # capacity >= 1
    thread <Name> = <tok> <tok> ...    # tok = P<name> | V<name>; "P a" also ok
    program <Name> = <T>(^<k>)? ( '|' <T>(^<k>)? )*

Resource declarations may appear anywhere in the file; threads and programs
must be declared before they are referenced.  Errors carry 1-based line and
column positions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    ACQUIRE,
    RELEASE,
    Action,
    CapacityMap,
    ParseError,
    Program,
    Thread,
    thread_violations,
)

_NAME_RE = re.compile(r"[A-Za-z_]\w*")
_PROGRAM_TOKEN_RE = re.compile(r"\s*([A-Za-z_]\w*|\^|\||\d+)")


@dataclass
class SourceModel:
    """Everything declared in one source file."""

    caps: CapacityMap
    threads: dict[str, Thread] = field(default_factory=dict)
    programs: dict[str, Program] = field(default_factory=dict)

    def program_threads(self, name: str) -> Program:
        return self.programs[name]


def _strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def _parse_resource_line(body: str, lineno: int, offset: int) -> tuple[str, int]:
    m = re.match(r"\s*([A-Za-z_]\w*)\s+cap\s+(\S+)\s*$", body)
    if not m:
        raise ParseError("expected 'resource <name> cap <int>'", lineno, offset + 1)
    name, cap_text = m.group(1), m.group(2)
    if not cap_text.isdigit() or int(cap_text) < 1:
        raise ParseError(
            f"capacity of {name!r} must be an integer >= 1, got {cap_text!r}",
            lineno,
            offset + m.start(2) + 1,
        )
    return name, int(cap_text)


def _tokenize_actions(body: str, lineno: int, offset: int) -> list[tuple[str, int]]:
    """Split an action list into (token, column) pairs."""
    out = []
    for m in re.finditer(r"\S+", body):
        out.append((m.group(0), offset + m.start() + 1))
    if not out:
        raise ParseError("thread needs at least one action after '='", lineno, offset + 1)
    return out


def _parse_thread_actions(
    tokens: list[tuple[str, int]], caps: CapacityMap, lineno: int
) -> tuple[tuple[Action, ...], list[int]]:
    """Turn tokens into actions; returns actions plus per-action columns."""
    actions: list[Action] = []
    columns: list[int] = []
    i = 0
    while i < len(tokens):
        tok, col = tokens[i]
        if tok[0] not in (ACQUIRE, RELEASE):
            raise ParseError(f"action token must start with P or V: {tok!r}", lineno, col)
        if len(tok) > 1:
            res = tok[1:]
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ParseError(f"dangling {tok!r} without a resource name", lineno, col)
            res = tokens[i + 1][0]
            i += 2
        if res not in caps:
            raise ParseError(f"unknown resource {res!r}", lineno, col)
        actions.append(Action(tok[0], res))
        columns.append(col)
    return tuple(actions), columns


def _parse_program_expr(
    body: str, model: SourceModel, lineno: int, offset: int
) -> tuple[Thread, ...]:
    pos = 0
    threads: list[Thread] = []
    expect_name = True
    while True:
        m = _PROGRAM_TOKEN_RE.match(body, pos)
        if not m:
            if body[pos:].strip():
                raise ParseError(
                    f"unexpected text {body[pos:].strip()!r} in program expression",
                    lineno,
                    offset + pos + 1,
                )
            break
        tok = m.group(1)
        col = offset + m.start(1) + 1
        pos = m.end()
        if expect_name:
            if not _NAME_RE.fullmatch(tok):
                raise ParseError(f"expected a thread name, got {tok!r}", lineno, col)
            if tok not in model.threads:
                raise ParseError(f"unknown thread name {tok!r}", lineno, col)
            current = model.threads[tok]
            # optional ^<count>
            m2 = _PROGRAM_TOKEN_RE.match(body, pos)
            count = 1
            if m2 and m2.group(1) == "^":
                pos = m2.end()
                m3 = _PROGRAM_TOKEN_RE.match(body, pos)
                if not m3 or not m3.group(1).isdigit():
                    raise ParseError("expected an integer after '^'", lineno, offset + pos + 1)
                count = int(m3.group(1))
                if count < 1:
                    raise ParseError("copy count must be >= 1", lineno, offset + m3.start(1) + 1)
                pos = m3.end()
            threads.extend([current] * count)
            expect_name = False
        else:
            if tok != "|":
                raise ParseError(f"expected '|' between threads, got {tok!r}", lineno, col)
            expect_name = True
    if expect_name or not threads:
        raise ParseError("program expression ended early", lineno, offset + pos + 1)
    return tuple(threads)


def parse_source(text: str) -> SourceModel:
    """Parse a complete source file into capacities, threads and programs."""
    lines = text.splitlines()

    # Resources first: capacities are immutable per file and threads may be
    # declared above the resource block in hand-written files.
    resource_re = re.compile(r"\s*resource\b")
    entries: list[tuple[str, int]] = []
    declared: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        m = resource_re.match(line)
        if not m:
            continue
        name, cap = _parse_resource_line(line[m.end() :], lineno, m.end())
        if name in declared:
            raise ParseError(f"duplicate resource declaration {name!r}", lineno, 1)
        declared.add(name)
        entries.append((name, cap))
    caps = CapacityMap(tuple(entries))

    model = SourceModel(caps=caps)
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped or resource_re.match(line):
            continue
        m = re.match(r"\s*(thread|program)\s+([A-Za-z_]\w*)\s*=\s*", line)
        if not m:
            word = stripped.split()[0]
            raise ParseError(f"unknown declaration {word!r}", lineno, line.index(word) + 1)
        keyword, name = m.group(1), m.group(2)
        body = line[m.end() :]
        offset = m.end()
        if keyword == "thread":
            if name in model.threads:
                raise ParseError(f"duplicate thread name {name!r}", lineno, 1)
            tokens = _tokenize_actions(body, lineno, offset)
            actions, columns = _parse_thread_actions(tokens, caps, lineno)
            bad = thread_violations(actions, caps)
            if bad:
                first = bad[0]
                col = columns[first.position - 1] if first.position <= len(actions) else offset + 1
                raise ParseError(f"invalid thread {name!r}: {first}", lineno, col)
            model.threads[name] = Thread(actions)
        else:
            if name in model.programs:
                raise ParseError(f"duplicate program name {name!r}", lineno, 1)
            threads = _parse_program_expr(body, model, lineno, offset)
            model.programs[name] = Program(threads, caps)
    return model
