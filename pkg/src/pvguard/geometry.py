"""Discrete execution geometry of a PV program.

A state of an n-thread program is an integer vector x with coordinate i in
0..l_i+1.  Executions are monotone lattice paths from ⊥ = (0,…,0) to
⊤ = (l_1+1,…,l_n+1) stepping one coordinate by +1 at a time.  A step is
allowed only while every resource stays within capacity, counting segment
use for the moving coordinate and point use for the others.  The blocked
part of the grid decomposes into open forbidden rectangles, one per way of
over-subscribing a single resource.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional

from .core import Program, PvError, SearchLimitExceeded, State

DEFAULT_MAX_STATES = 10**8


@dataclass(frozen=True)
class ForbiddenRectangle:
    """Open box of states where one resource is over capacity.

    ``legs`` maps capacity+1 distinct coordinates to one hold interval each;
    the box is open in the leg coordinates and unconstrained in the rest.
    """

    resource: str
    legs: tuple[tuple[int, tuple[int, int]], ...]

    def contains_state(self, state: State) -> bool:
        return all(a < state[c] < b for c, (a, b) in self.legs)

    def meets_edge(self, state: State, coord: int) -> bool:
        """Does the open edge segment from ``state`` along ``coord`` meet the box?"""
        for c, (a, b) in self.legs:
            if c == coord:
                if not a <= state[c] < b:
                    return False
            elif not a < state[c] < b:
                return False
        return True

    @property
    def leg_coords(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.legs)


@dataclass(frozen=True)
class ExtendedRectangle:
    """A forbidden rectangle widened for scheduling: the kept leg stays an
    open interval while every other leg is extended down to position 0."""

    resource: str
    kept: tuple[int, tuple[int, int]]
    lowered: tuple[tuple[int, int], ...]  # (coord, upper bound b), interval [0, b)

    def contains_state(self, state: State) -> bool:
        c, (a, b) = self.kept
        if not a < state[c] < b:
            return False
        return all(state[k] < b2 for k, b2 in self.lowered)

    def meets_edge(self, state: State, coord: int) -> bool:
        c, (a, b) = self.kept
        if c == coord:
            if not a <= state[c] < b:
                return False
        elif not a < state[c] < b:
            return False
        for k, b2 in self.lowered:
            # [0, b2) meets the closed unit segment iff its start is below b2
            if not state[k] < b2:
                return False
        return True


@dataclass(frozen=True)
class LatticePath:
    """A monotone path of states; each step raises one coordinate by 1."""

    states: tuple[State, ...]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def start(self) -> State:
        return self.states[0]

    @property
    def end(self) -> State:
        return self.states[-1]

    def steps(self) -> tuple[int, ...]:
        """The coordinate moved at each step."""
        out = []
        for prev, nxt in zip(self.states, self.states[1:]):
            moved = [i for i, (a, b) in enumerate(zip(prev, nxt)) if a != b]
            if len(moved) != 1 or nxt[moved[0]] != prev[moved[0]] + 1:
                raise ValueError("not a unit lattice step")
            out.append(moved[0])
        return tuple(out)

    def validate(self, program: Program) -> None:
        """Raise unless every state is admissible and every step edge-admissible."""
        for state in self.states:
            program.check_state(state)
            if not state_admissible(program, state):
                raise PvError(f"path visits inadmissible state {state}")
        for state, coord in zip(self.states, self.steps()):
            if not edge_admissible(program, state, coord):
                raise PvError(f"path takes inadmissible edge {state} along {coord + 1}")


def path_from_steps(program: Program, start: State, steps: tuple[int, ...]) -> LatticePath:
    states = [start]
    cur = list(start)
    for c in steps:
        cur[c] += 1
        states.append(tuple(cur))
    return LatticePath(tuple(states))


def forbidden_rectangles(program: Program) -> list[ForbiddenRectangle]:
    """All open rectangles of over-capacity states, per resource.

    For a resource of capacity k, pick k+1 distinct coordinates and one hold
    interval of that resource in each; the union of these boxes is exactly
    the inadmissible part of the grid.
    """
    out: list[ForbiddenRectangle] = []
    for res in program.resource_names:
        cap = program.caps[res]
        holders = [
            (i, t.hold_intervals.get(res, ()))
            for i, t in enumerate(program.threads)
            if t.hold_intervals.get(res)
        ]
        if len(holders) < cap + 1:
            continue
        for chosen in itertools.combinations(holders, cap + 1):
            coords = [c for c, _ in chosen]
            for spans in itertools.product(*(s for _, s in chosen)):
                legs = tuple(zip(coords, spans))
                out.append(ForbiddenRectangle(res, legs))
    return out


def state_admissible(program: Program, state: State) -> bool:
    """Every resource's point use stays within capacity."""
    program.check_state(state)
    totals = program.use_totals(state)
    return all(tot <= cap for tot, cap in zip(totals, program.kappa))


def _edge_ok(program: Program, totals: list[int], state: State, coord: int) -> bool:
    """Capacity check for the edge out of ``state`` along ``coord``, given the
    point-use totals of ``state``.  Only the moving coordinate's use changes:
    point use is swapped for segment use."""
    pos = state[coord]
    seg = program._segment_idx[coord][pos]
    if not seg:
        return True
    point = program._point_idx[coord][pos]
    kappa = program.kappa
    for r in seg:
        extra = 0 if r in point else 1
        if totals[r] + extra > kappa[r]:
            return False
    return True


def edge_admissible(program: Program, state: State, coord: int) -> bool:
    """May coordinate ``coord`` advance one step from ``state``?"""
    program.check_state(state)
    if state[coord] >= program.tops[coord]:
        raise ValueError(f"coordinate {coord + 1} is already finished")
    totals = program.use_totals(state)
    return _edge_ok(program, totals, state, coord) and all(
        tot <= cap for tot, cap in zip(totals, program.kappa)
    )


def square_admissible(program: Program, state: State, i: int, j: int) -> bool:
    """May coordinates ``i`` and ``j`` advance together across the unit square
    based at ``state``?  Both count segment use; the rest count point use."""
    program.check_state(state)
    if i == j:
        raise ValueError("square needs two distinct coordinates")
    for c in (i, j):
        if state[c] >= program.tops[c]:
            raise ValueError(f"coordinate {c + 1} is already finished")
    totals = program.use_totals(state)
    kappa = program.kappa
    delta: dict[int, int] = {}
    for c in (i, j):
        pos = state[c]
        point = program._point_idx[c][pos]
        for r in program._segment_idx[c][pos]:
            if r not in point:
                delta[r] = delta.get(r, 0) + 1
    return all(totals[r] + d <= kappa[r] for r, d in delta.items()) and all(
        tot <= cap for tot, cap in zip(totals, kappa)
    )


def successors(program: Program, state: State) -> list[tuple[int, State]]:
    """Admissible one-step moves from ``state`` in ascending coordinate order."""
    program.check_state(state)
    totals = program.use_totals(state)
    if any(tot > cap for tot, cap in zip(totals, program.kappa)):
        return []
    out = []
    for c, (x, top) in enumerate(zip(state, program.tops)):
        if x < top and _edge_ok(program, totals, state, c):
            nxt = state[:c] + (x + 1,) + state[c + 1 :]
            out.append((c, nxt))
    return out


def guard_grid(program: Program, max_states: int) -> None:
    size = program.grid_states()
    if size > max_states:
        raise SearchLimitExceeded(max_states)


def reachable(
    program: Program, target: State, max_states: int = DEFAULT_MAX_STATES
) -> Optional[LatticePath]:
    """Breadth-first search from ⊥; returns a witness path to ``target`` or
    None.  Deterministic: the queue is FIFO and successors are expanded in
    ascending coordinate order, so ties resolve toward low coordinates."""
    program.check_state(target)
    guard_grid(program, max_states)
    start = program.bottom
    if target == start:
        return LatticePath((start,))
    parents: dict[State, tuple[State, int]] = {start: (start, -1)}
    queue: deque[State] = deque((start,))
    while queue:
        state = queue.popleft()
        for coord, nxt in successors(program, state):
            if nxt in parents:
                continue
            parents[nxt] = (state, coord)
            if nxt == target:
                chain = [nxt]
                cur = nxt
                while cur != start:
                    cur = parents[cur][0]
                    chain.append(cur)
                return LatticePath(tuple(reversed(chain)))
            if len(parents) > max_states:
                raise SearchLimitExceeded(max_states, "visited states")
            queue.append(nxt)
    return None


def reachable_states(
    program: Program, max_states: int = DEFAULT_MAX_STATES
) -> set[State]:
    """The full forward closure of ⊥ (plain search, no symmetry folding)."""
    guard_grid(program, max_states)
    seen = {program.bottom}
    queue: deque[State] = deque((program.bottom,))
    while queue:
        state = queue.popleft()
        for _, nxt in successors(program, state):
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise SearchLimitExceeded(max_states, "visited states")
                queue.append(nxt)
    return seen


def enumerate_dipaths(
    program: Program, limit: Optional[int] = None
) -> Iterator[LatticePath]:
    """Yield every complete execution (⊥ to ⊤) in lexicographic step order.

    Raises :class:`SearchLimitExceeded` as soon as more than ``limit`` paths
    would be produced.
    """
    top = program.top
    n = program.n
    count = 0
    state = program.bottom
    trail: list[State] = [state]
    choice_stack: list[list[tuple[int, State]]] = [successors(program, state)]
    index_stack = [0]
    while choice_stack:
        choices = choice_stack[-1]
        idx = index_stack[-1]
        if idx >= len(choices):
            choice_stack.pop()
            index_stack.pop()
            trail.pop()
            continue
        index_stack[-1] += 1
        _, nxt = choices[idx]
        trail.append(nxt)
        if nxt == top:
            count += 1
            if limit is not None and count > limit:
                raise SearchLimitExceeded(limit, "enumerated paths")
            yield LatticePath(tuple(trail))
            trail.pop()
            continue
        choice_stack.append(successors(program, nxt))
        index_stack.append(0)
