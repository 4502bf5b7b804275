"""Core model for PV programs.

A PV thread is a finite sequence of P (acquire) and V (release) actions on
named resources with fixed capacities.  A program runs several threads in
parallel.  This module owns the data types plus the resource-use bookkeeping
(hold intervals, point use, segment use) that every analysis builds on.

Positions in a thread of length l are integers 0..l+1: position 0 is the
start (printed as ``⊥``), positions 1..l sit on the actions, and l+1 is the
finished state (printed as ``⊤``).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence

ACQUIRE = "P"
RELEASE = "V"

BOTTOM_LABEL = "⊥"  # ⊥
TOP_LABEL = "⊤"  # ⊤


class PvError(Exception):
    """Base error for this package."""


class ParseError(PvError):
    """Source text rejected; carries a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class InvalidThreadError(PvError):
    """An action sequence is not a valid thread."""

    def __init__(self, violations: Sequence["Violation"]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = tuple(violations)


class SearchLimitExceeded(PvError):
    """A search or enumeration would exceed the configured bound."""

    def __init__(self, limit: int, what: str = "grid states"):
        super().__init__(f"instance exceeds the configured bound of {limit} {what}")
        self.limit = limit
        self.what = what


@dataclass(frozen=True)
class Action:
    kind: str  # ACQUIRE or RELEASE
    resource: str

    def __post_init__(self) -> None:
        if self.kind not in (ACQUIRE, RELEASE):
            raise ValueError(f"action kind must be P or V, got {self.kind!r}")
        if not self.resource:
            raise ValueError("action resource name must be nonempty")

    @property
    def mnemonic(self) -> str:
        return self.kind + self.resource

    def __str__(self) -> str:
        return self.mnemonic


@dataclass(frozen=True)
class Violation:
    """One way an action sequence breaks the per-thread use discipline."""

    resource: str
    position: int  # 1-based action index; l+1 for end-of-thread violations
    kind: str  # "use-out-of-range" | "held-at-end" | "unknown-resource"
    value: int  # offending use count (or 0 for unknown-resource)

    def __str__(self) -> str:
        if self.kind == "held-at-end":
            return f"resource {self.resource!r} still held at end (position {self.position})"
        if self.kind == "unknown-resource":
            return f"unknown resource {self.resource!r} at position {self.position}"
        return (
            f"resource {self.resource!r} use count {self.value} "
            f"at position {self.position} is outside 0..1"
        )


@dataclass(frozen=True)
class CapacityMap:
    """Immutable resource -> capacity table; order of declaration preserved."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for name, cap in self.entries:
            if not name:
                raise ValueError("resource name must be nonempty")
            if name in seen:
                raise ValueError(f"duplicate resource {name!r}")
            if not isinstance(cap, int) or cap < 1:
                raise ValueError(f"capacity of {name!r} must be an integer >= 1")
            seen.add(name)

    @classmethod
    def of(cls, mapping: Mapping[str, int] | Iterable[tuple[str, int]]) -> "CapacityMap":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(tuple((str(k), int(v)) for k, v in items))

    @cached_property
    def _table(self) -> dict[str, int]:
        return dict(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def __getitem__(self, name: str) -> int:
        return self._table[name]

    def __contains__(self, name: str) -> bool:
        return name in self._table

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self) -> tuple[tuple[str, int], ...]:
        return self.entries

    def total(self) -> int:
        return sum(cap for _, cap in self.entries)

    def restrict(self, names: Iterable[str]) -> "CapacityMap":
        keep = set(names)
        return CapacityMap(tuple((n, c) for n, c in self.entries if n in keep))


def parse_actions(text: str) -> tuple[Action, ...]:
    """Parse a whitespace-separated action string such as ``"Pa Pb Vb Va"``.

    Both the fused form ``Pa`` and the spaced form ``P a`` are accepted.
    """
    tokens = text.split()
    actions: list[Action] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok[0] not in (ACQUIRE, RELEASE):
            raise ValueError(f"action token must start with P or V: {tok!r}")
        if len(tok) > 1:
            actions.append(Action(tok[0], tok[1:]))
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ValueError(f"dangling {tok!r} without a resource name")
            actions.append(Action(tok, tokens[i + 1]))
            i += 2
    return tuple(actions)


def thread_violations(
    actions: Sequence[Action], caps: Optional[CapacityMap] = None
) -> list[Violation]:
    """Check the use discipline: every prefix keeps each resource's own use
    count in {0, 1} and every resource is released by the end.

    Returns all violations in position order (empty list means valid).  When
    ``caps`` is given, actions on undeclared resources are reported too.
    """
    out: list[Violation] = []
    use: dict[str, int] = {}
    for pos, act in enumerate(actions, start=1):
        if caps is not None and act.resource not in caps:
            out.append(Violation(act.resource, pos, "unknown-resource", 0))
            continue
        delta = 1 if act.kind == ACQUIRE else -1
        use[act.resource] = use.get(act.resource, 0) + delta
        if use[act.resource] not in (0, 1):
            out.append(Violation(act.resource, pos, "use-out-of-range", use[act.resource]))
    end = len(actions) + 1
    for res in sorted(use):
        if use[res] != 0:
            out.append(Violation(res, end, "held-at-end", use[res]))
    return out


@dataclass(frozen=True)
class Thread:
    """A valid PV thread.  Construct via :meth:`from_actions` or
    :meth:`from_text`, which enforce the use discipline."""

    actions: tuple[Action, ...]

    @classmethod
    def from_actions(cls, actions: Iterable[Action]) -> "Thread":
        acts = tuple(actions)
        bad = thread_violations(acts)
        if bad:
            raise InvalidThreadError(bad)
        return cls(acts)

    @classmethod
    def from_text(cls, text: str) -> "Thread":
        return cls.from_actions(parse_actions(text))

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def top(self) -> int:
        """Position index of the finished state (length + 1)."""
        return len(self.actions) + 1

    @cached_property
    def hold_intervals(self) -> dict[str, tuple[tuple[int, int], ...]]:
        """Per resource, the (acquire, release) position pairs, in order."""
        opened: dict[str, int] = {}
        spans: dict[str, list[tuple[int, int]]] = {}
        for pos, act in enumerate(self.actions, start=1):
            if act.kind == ACQUIRE:
                opened[act.resource] = pos
            else:
                spans.setdefault(act.resource, []).append((opened.pop(act.resource), pos))
        return {res: tuple(pairs) for res, pairs in spans.items()}

    @cached_property
    def resources_used(self) -> frozenset[str]:
        return frozenset(a.resource for a in self.actions)

    @cached_property
    def acquire_positions(self) -> tuple[int, ...]:
        return tuple(p for p, a in enumerate(self.actions, start=1) if a.kind == ACQUIRE)

    @cached_property
    def _point_sets(self) -> tuple[frozenset[str], ...]:
        # position p holds r iff i < p < j for some hold interval (i, j)
        held: list[set[str]] = [set() for _ in range(self.top + 1)]
        for res, spans in self.hold_intervals.items():
            for i, j in spans:
                for p in range(i + 1, j):
                    held[p].add(res)
        return tuple(frozenset(s) for s in held)

    @cached_property
    def _segment_sets(self) -> tuple[frozenset[str], ...]:
        # edge p -> p+1 holds r iff i <= p < j for some hold interval (i, j)
        held: list[set[str]] = [set() for _ in range(self.top)]
        for res, spans in self.hold_intervals.items():
            for i, j in spans:
                for p in range(i, j):
                    held[p].add(res)
        return tuple(frozenset(s) for s in held)

    def point_use(self, position: int) -> frozenset[str]:
        """Resources held while standing at an integer position.

        The count is 0 at both endpoints of a hold interval: a resource is
        requested but not yet held at its P action, and released at its V.
        """
        if not 0 <= position <= self.top:
            raise ValueError(f"position {position} out of range 0..{self.top}")
        return self._point_sets[position]

    def segment_use(self, position: int) -> frozenset[str]:
        """Resources held while traversing the edge position -> position+1.

        Traversing the edge out of a P action counts as holding the resource;
        the edge out of the matching V does not.
        """
        if not 0 <= position <= self.length:
            raise ValueError(f"segment start {position} out of range 0..{self.length}")
        return self._segment_sets[position]

    def action_at(self, position: int) -> Optional[Action]:
        if 1 <= position <= self.length:
            return self.actions[position - 1]
        return None

    def label(self, position: int) -> str:
        """Human-readable marker for a position, e.g. ``"2:Pb"``, ``"⊤"``."""
        if position == 0:
            return BOTTOM_LABEL
        if position == self.top:
            return TOP_LABEL
        return f"{position}:{self.actions[position - 1].mnemonic}"

    def __str__(self) -> str:
        return " ".join(a.mnemonic for a in self.actions)


def concat_threads(threads: Sequence[Thread]) -> Thread:
    """Sequential composition: run the given threads one after another."""
    actions: list[Action] = []
    for t in threads:
        actions.extend(t.actions)
    return Thread.from_actions(actions)


def single_access(thread: Thread) -> bool:
    """True iff every resource is acquired at most once in the thread.

    Programs built from any number of copies of such a thread can never
    deadlock, so family checks may skip the search entirely.
    """
    return all(len(spans) <= 1 for spans in thread.hold_intervals.values())


State = tuple[int, ...]


@dataclass(frozen=True)
class Program:
    """A parallel composition of threads under one capacity map."""

    threads: tuple[Thread, ...]
    caps: CapacityMap

    def __post_init__(self) -> None:
        if not self.threads:
            raise ValueError("a program needs at least one thread")
        for t in self.threads:
            if t.resources_used - set(self.caps.names):
                raise InvalidThreadError(thread_violations(t.actions, self.caps))

    @classmethod
    def power(cls, thread: Thread, n: int, caps: CapacityMap) -> "Program":
        if n < 1:
            raise ValueError("thread copy count must be >= 1")
        return cls((thread,) * n, caps)

    @property
    def n(self) -> int:
        return len(self.threads)

    @cached_property
    def tops(self) -> tuple[int, ...]:
        return tuple(t.top for t in self.threads)

    @property
    def bottom(self) -> State:
        return (0,) * self.n

    @property
    def top(self) -> State:
        return self.tops

    def grid_states(self) -> int:
        size = 1
        for t in self.tops:
            size *= t + 1
        return size

    @cached_property
    def resource_names(self) -> tuple[str, ...]:
        return self.caps.names

    @cached_property
    def _res_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.resource_names)}

    @cached_property
    def kappa(self) -> tuple[int, ...]:
        return tuple(self.caps[name] for name in self.resource_names)

    @cached_property
    def _point_idx(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """Per thread, per position: indices of resources held at that point."""
        ri = self._res_index
        return tuple(
            tuple(tuple(sorted(ri[r] for r in t.point_use(p))) for p in range(t.top + 1))
            for t in self.threads
        )

    @cached_property
    def _segment_idx(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """Per thread, per edge start position: indices of resources held."""
        ri = self._res_index
        return tuple(
            tuple(tuple(sorted(ri[r] for r in t.segment_use(p))) for p in range(t.top))
            for t in self.threads
        )

    def check_state(self, state: State) -> None:
        if len(state) != self.n:
            raise ValueError(f"state has {len(state)} coordinates, program has {self.n}")
        for i, (x, top) in enumerate(zip(state, self.tops)):
            if not 0 <= x <= top:
                raise ValueError(f"coordinate {i + 1} value {x} out of range 0..{top}")

    def use_totals(self, state: State) -> list[int]:
        """Point-use count per resource index, summed over all threads."""
        totals = [0] * len(self.resource_names)
        point = self._point_idx
        for i, x in enumerate(state):
            for r in point[i][x]:
                totals[r] += 1
        return totals
