"""Deadlock detection and family verdicts.

A deadlock is a reachable state other than ⊤ in which every unfinished
thread stands at an acquire action whose resource is at full capacity.  A
potential deadlock satisfies the same local conditions but is not required
to be reachable, or even admissible.

Family verdicts decide "n copies of T are deadlock-free for every n" by
checking a single cut-off instance whose size is the sum of the capacities
of the resources the thread uses.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .core import (
    CapacityMap,
    Program,
    PvError,
    SearchLimitExceeded,
    State,
    Thread,
    single_access,
)
from .geometry import (
    DEFAULT_MAX_STATES,
    LatticePath,
    edge_admissible,
    guard_grid,
    state_admissible,
    successors,
)


class ReachabilityIndex:
    """Forward reachability of a program, folded by thread symmetry.

    Coordinates running identical threads are interchangeable, so the search
    runs over states with each identity group sorted ascending.  Membership
    queries and witness paths for arbitrary concrete states are recovered by
    permuting within groups; the transition relation is invariant under such
    permutations, so the folding is exact.
    """

    def __init__(self, program: Program, max_states: int = DEFAULT_MAX_STATES):
        guard_grid(program, max_states)
        self.program = program
        self.max_states = max_states
        groups: dict[tuple, list[int]] = {}
        for i, t in enumerate(program.threads):
            groups.setdefault(t.actions, []).append(i)
        self._groups = tuple(tuple(g) for g in groups.values())
        self._parents: dict[State, tuple[State, int]] = {}
        self._search()

    def canon(self, state: State) -> State:
        out = list(state)
        for g in self._groups:
            vals = sorted(out[i] for i in g)
            for i, v in zip(g, vals):
                out[i] = v
        return tuple(out)

    def _search(self) -> None:
        program = self.program
        start = program.bottom
        parents = self._parents
        parents[start] = (start, -1)
        queue: deque[State] = deque((start,))
        while queue:
            state = queue.popleft()
            for coord, nxt in successors(program, state):
                key = self.canon(nxt)
                if key in parents:
                    continue
                parents[key] = (state, coord)
                if len(parents) > self.max_states:
                    raise SearchLimitExceeded(self.max_states, "visited states")
                queue.append(key)

    @property
    def visited(self) -> int:
        return len(self._parents)

    def canonical_states(self) -> Iterator[State]:
        """All reachable states, one representative per permutation orbit."""
        return iter(self._parents)

    def is_reachable(self, state: State) -> bool:
        return self.canon(state) in self._parents

    def witness(self, state: State) -> Optional[LatticePath]:
        """A concrete admissible path ⊥ -> ``state``, or None."""
        target = self.canon(state)
        if target not in self._parents:
            return None
        start = self.program.bottom
        chain: list[tuple[State, int]] = []
        cur = target
        while cur != start:
            prev, coord = self._parents[cur]
            chain.append((prev, coord))
            cur = self.canon(prev)
        chain.reverse()

        group_of = {}
        for g in self._groups:
            for i in g:
                group_of[i] = g
        concrete = [start]
        q = list(start)
        for prev, coord in chain:
            value = prev[coord]
            d = min(i for i in group_of[coord] if q[i] == value)
            q[d] += 1
            concrete.append(tuple(q))

        # Map the reached representative onto the requested state by pairing
        # equal values within each identity group, in index order.
        end = concrete[-1]
        perm = list(range(len(end)))
        for g in self._groups:
            pool: dict[int, deque[int]] = {}
            for i in g:
                pool.setdefault(state[i], deque()).append(i)
            for i in g:
                perm[i] = pool[end[i]].popleft()
        mapped = []
        for st in concrete:
            out = [0] * len(st)
            for i, v in enumerate(st):
                out[perm[i]] = v
            mapped.append(tuple(out))
        return LatticePath(tuple(mapped))


def potential_deadlocks(program: Program) -> list[State]:
    """States (other than ⊤) where every unfinished thread stands at an
    acquire whose resource is at full point-use capacity.

    Reachability and admissibility are not required: a potential deadlock may
    lie inside the forbidden region.  Results are sorted.
    """
    n = program.n
    kappa = program.kappa
    res_index = program._res_index
    options: list[list[Optional[int]]] = []
    for t in program.threads:
        opts: list[Optional[int]] = list(t.acquire_positions)
        opts.append(None)  # None stands for ⊤
        options.append(opts)
    requests: list[list[Optional[int]]] = [
        [res_index[t.actions[p - 1].resource] if p is not None else None for p in opts]
        for t, opts in zip(program.threads, options)
    ]
    point = program._point_idx
    tops = program.tops

    found: list[State] = []
    state: list[int] = [0] * n

    def assign(i: int, totals: list[int], requested: int) -> None:
        if i == n:
            if requested == 0:
                return  # ⊤ itself is not a deadlock
            for t_idx in range(n):
                pos = state[t_idx]
                if pos != tops[t_idx]:
                    r = res_index[program.threads[t_idx].actions[pos - 1].resource]
                    if totals[r] != kappa[r]:
                        return
            found.append(tuple(state))
            return
        for opt, req in zip(options[i], requests[i]):
            pos = tops[i] if opt is None else opt
            state[i] = pos
            add = point[i][pos]
            for r in add:
                totals[r] += 1
            # a requested resource can never shed holders later; prune once
            # any request is already over capacity
            ok = req is None or totals[req] <= kappa[req]
            if ok:
                assign(i + 1, totals, requested + (0 if opt is None else 1))
            for r in add:
                totals[r] -= 1
        state[i] = 0

    assign(0, [0] * len(kappa), 0)
    return sorted(found)


def deadlock_candidates(program: Program) -> list[State]:
    """The candidate sieve for the deadlock search: identical to
    :func:`potential_deadlocks`; actual deadlocks are the reachable ones."""
    return potential_deadlocks(program)


def is_potential_deadlock(program: Program, state: State) -> bool:
    """Check the potential-deadlock conditions at one state."""
    program.check_state(state)
    if state == program.top:
        return False
    totals = program.use_totals(state)
    for i, pos in enumerate(state):
        if pos == program.tops[i]:
            continue
        act = program.threads[i].action_at(pos)
        if act is None or act.kind != "P":
            return False
        r = program._res_index[act.resource]
        if totals[r] != program.kappa[r]:
            return False
    return True


@dataclass(frozen=True)
class Deadlock:
    state: State
    witness: LatticePath


@dataclass(frozen=True)
class SearchStats:
    threads: int
    grid_states: int
    candidates: int
    visited: int
    max_states: int


@dataclass(frozen=True)
class DeadlockReport:
    deadlocks: tuple[Deadlock, ...]
    potential_deadlocks: tuple[State, ...]
    stats: SearchStats


def find_deadlocks(
    program: Program, max_states: int = DEFAULT_MAX_STATES
) -> DeadlockReport:
    """All deadlocks of the program, each with a validated witness path.

    Candidates come from the potential-deadlock sieve; reachability is then
    decided by one forward search.  Every reported deadlock is re-checked:
    it must have no successors and its witness path must be admissible.
    """
    guard_grid(program, max_states)
    candidates = potential_deadlocks(program)
    visited = 0
    deadlocks: list[Deadlock] = []
    if candidates:
        index = ReachabilityIndex(program, max_states)
        visited = index.visited
        for cand in candidates:
            if not state_admissible(program, cand):
                continue
            if not index.is_reachable(cand):
                continue
            witness = index.witness(cand)
            assert witness is not None and witness.end == cand
            witness.validate(program)
            if successors(program, cand):
                raise PvError(f"claimed deadlock {cand} has successors")
            deadlocks.append(Deadlock(cand, witness))
    stats = SearchStats(
        threads=program.n,
        grid_states=program.grid_states(),
        candidates=len(candidates),
        visited=visited,
        max_states=max_states,
    )
    return DeadlockReport(tuple(deadlocks), tuple(candidates), stats)


def pad_top(state: State, extra_tops: Sequence[int]) -> State:
    """Extend a state with already-finished coordinates.

    Appending threads parked at ⊤ preserves deadlocks: finished coordinates
    hold nothing and request nothing.
    """
    return tuple(state) + tuple(extra_tops)


def scatter_state(
    sub_state: State, indices: Sequence[int], program: Program
) -> State:
    """Place a sub-program state at the given thread indices of ``program``,
    parking every other coordinate at its ⊤."""
    out = list(program.tops)
    for value, i in zip(sub_state, indices):
        out[i] = value
    return tuple(out)


def deadlock_cutoff(caps: CapacityMap) -> int:
    """Copies of a thread needed so that deadlock-freedom at this size settles
    the whole family: the sum of the capacities."""
    return caps.total()


@dataclass(frozen=True)
class FamilyVerdict:
    """Outcome of a for-all-n check.

    ``witnesses`` carries deadlock states (verdict "no"); ``choice_points``
    carries local choice points (serializability "inconclusive").
    """

    property_name: str  # "deadlock-freedom" | "serializability"
    verdict: str  # "yes" | "no" | "inconclusive"
    cutoff: int
    rule: str
    detail: str
    witnesses: tuple[State, ...] = ()
    manifests_at_n: Optional[int] = None
    choice_points: tuple = ()


def family_deadlock_verdict(
    thread: Thread, caps: CapacityMap, max_states: int = DEFAULT_MAX_STATES
) -> FamilyVerdict:
    """Is every parallel composition of copies of ``thread`` deadlock-free?

    The cut-off size is the capacity sum of the resources the thread uses;
    a deadlock among more copies than that restricts to one among at most
    that many, and extra finished copies never unblock anything.
    """
    used = caps.restrict(thread.resources_used)
    cutoff = deadlock_cutoff(used)
    if single_access(thread):
        return FamilyVerdict(
            "deadlock-freedom",
            "yes",
            cutoff,
            "single-access",
            "every resource is acquired at most once, so no copy count can "
            "close a waiting cycle",
        )
    program = Program.power(thread, cutoff, caps)
    try:
        report = find_deadlocks(program, max_states)
    except SearchLimitExceeded as exc:
        return FamilyVerdict(
            "deadlock-freedom",
            "inconclusive",
            cutoff,
            "search-limit",
            f"cut-off instance too large: {exc}",
        )
    if report.deadlocks:
        return FamilyVerdict(
            "deadlock-freedom",
            "no",
            cutoff,
            "deadlock-cutoff",
            f"{len(report.deadlocks)} deadlock(s) in the {cutoff}-copy instance",
            witnesses=tuple(d.state for d in report.deadlocks),
            manifests_at_n=cutoff,
        )
    return FamilyVerdict(
        "deadlock-freedom",
        "yes",
        cutoff,
        "deadlock-cutoff",
        f"the {cutoff}-copy instance is deadlock-free, which settles every "
        "copy count",
    )


def program_deadlock_verdict(
    program: Program, max_states: int = DEFAULT_MAX_STATES
) -> FamilyVerdict:
    """Deadlock-freedom of one fixed program.

    Small programs are searched directly.  Larger ones reduce to their
    sub-programs of cut-off size: any deadlock restricts to the threads not
    yet finished, and at most capacity-sum many threads can block each other.
    """
    used_names: set[str] = set()
    for t in program.threads:
        used_names |= t.resources_used
    cutoff = deadlock_cutoff(program.caps.restrict(used_names))
    if program.n <= cutoff:
        report = find_deadlocks(program, max_states)
        if report.deadlocks:
            return FamilyVerdict(
                "deadlock-freedom",
                "no",
                cutoff,
                "direct-search",
                f"{len(report.deadlocks)} deadlock(s) found",
                witnesses=tuple(d.state for d in report.deadlocks),
                manifests_at_n=program.n,
            )
        return FamilyVerdict(
            "deadlock-freedom", "yes", cutoff, "direct-search", "no deadlocks"
        )
    seen: set[tuple] = set()
    for indices in itertools.combinations(range(program.n), cutoff):
        key = tuple(sorted(str(program.threads[i]) for i in indices))
        if key in seen:
            continue
        seen.add(key)
        sub = Program(tuple(program.threads[i] for i in indices), program.caps)
        report = find_deadlocks(sub, max_states)
        if report.deadlocks:
            witnesses = tuple(
                scatter_state(d.state, indices, program) for d in report.deadlocks
            )
            return FamilyVerdict(
                "deadlock-freedom",
                "no",
                cutoff,
                "subprogram-cutoff",
                f"deadlock in the sub-program at threads "
                f"{tuple(i + 1 for i in indices)}, finished copies padded",
                witnesses=witnesses,
                manifests_at_n=program.n,
            )
    return FamilyVerdict(
        "deadlock-freedom",
        "yes",
        cutoff,
        "subprogram-cutoff",
        f"all distinct {cutoff}-thread sub-programs are deadlock-free",
    )


@dataclass(frozen=True)
class WitnessPlan:
    """A generated thread together with the finding it is expected to show."""

    kind: str  # "deadlock" | "choice-point"
    thread: Thread
    caps: CapacityMap
    cutoff: int
    instance_n: int
    expected_state: State
    expected_resource: Optional[str] = None


def deadsharp_witness(caps: CapacityMap) -> WitnessPlan:
    """A thread over the given resources (declaration order, k >= 2) whose
    capacity-sum cut-off is tight: the M-copy instance deadlocks at a
    predictable state while every smaller instance is deadlock-free.

    The thread chains the resources so each copy can stop holding one
    resource while requesting the next, and the second acquisition of the
    first resource closes the cycle.
    """
    names = caps.names
    k = len(names)
    if k < 2:
        raise ValueError("the construction needs at least two resources")
    actions = [f"P{names[0]}"]
    for i in range(1, k):
        actions += [f"P{names[i]}", f"V{names[i - 1]}"]
    actions += [f"P{names[0]}", f"V{names[k - 1]}", f"V{names[0]}"]
    thread = Thread.from_text(" ".join(actions))
    cutoff = caps.total()
    # Block vector: κ(r_k) copies stand at the second P of r_1 (position 2k),
    # then κ(r_{i-1}) copies stand at position 2i-2 for i = 2..k.
    blocks: list[int] = []
    blocks += [2 * k] * caps[names[k - 1]]
    for i in range(2, k + 1):
        blocks += [2 * i - 2] * caps[names[i - 2]]
    return WitnessPlan(
        kind="deadlock",
        thread=thread,
        caps=caps,
        cutoff=cutoff,
        instance_n=cutoff,
        expected_state=tuple(blocks),
    )
