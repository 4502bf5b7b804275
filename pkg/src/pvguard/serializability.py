"""Execution classification and serializability verdicts.

Two complete executions are equivalent when one can be turned into the
other by repeatedly swapping two adjacent steps of different threads across
an admissible square.  A program is serializable when every execution is
equivalent to a serial one (threads run to completion one after another).

Three decision routes are implemented:
  - capacity-1 pairs: schedule enumeration over the forbidden rectangles;
  - all capacities >= 2: absence of local choice points at the cut-off size;
  - the potential-deadlock certificate two sizes above the capacity sum.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .core import (
    CapacityMap,
    Program,
    PvError,
    SearchLimitExceeded,
    State,
    Thread,
)
from .deadlock import (
    FamilyVerdict,
    ReachabilityIndex,
    WitnessPlan,
    is_potential_deadlock,
    potential_deadlocks,
)
from .geometry import (
    DEFAULT_MAX_STATES,
    ExtendedRectangle,
    ForbiddenRectangle,
    LatticePath,
    enumerate_dipaths,
    forbidden_rectangles,
    guard_grid,
    path_from_steps,
    square_admissible,
    state_admissible,
    successors,
)


# ---------------------------------------------------------------------------
# serial executions


def serial_order(path: LatticePath) -> Optional[tuple[int, ...]]:
    """The completion order of a serial path, or None.

    Serial means the step sequence factors into consecutive blocks, each
    running one thread from its start to its end while the others sit at
    their start or end.
    """
    start = path.start
    end = path.end
    if any(v != 0 for v in start):
        return None
    order: list[int] = []
    coords = list(path.steps())
    i = 0
    while i < len(coords):
        c = coords[i]
        if c in order:
            return None
        run = 0
        while i < len(coords) and coords[i] == c:
            run += 1
            i += 1
        if run != end[c]:
            return None
        order.append(c)
    if len(order) != len(start):
        return None
    return tuple(order)


def is_serial(path: LatticePath) -> bool:
    """True iff the path runs the threads one after another to completion."""
    return serial_order(path) is not None


def serial_path(program: Program, order: Sequence[int]) -> LatticePath:
    """The serial execution running the threads in the given order.

    Serial executions are always admissible: only one thread is ever
    between its start and end, and alone it never exceeds any capacity.
    """
    if sorted(order) != list(range(program.n)):
        raise ValueError(f"order {order} is not a permutation of the threads")
    steps: list[int] = []
    for c in order:
        steps += [c] * program.tops[c]
    return path_from_steps(program, program.bottom, steps)


def serial_orders(program: Program) -> Iterator[tuple[int, ...]]:
    return itertools.permutations(range(program.n))


# ---------------------------------------------------------------------------
# schedules (capacity-1 machinery)


@dataclass(frozen=True)
class Schedule:
    """One choice of passing order per forbidden rectangle.

    For each rectangle, the chosen leg is the coordinate meant to cross the
    contended span last; the other legs' spans are extended down to 0.  A
    path obeys the schedule when it avoids every extended rectangle.
    """

    choices: tuple[tuple[ForbiddenRectangle, int], ...]

    def __post_init__(self):
        for rect, coord in self.choices:
            if coord not in rect.leg_coords:
                raise ValueError(f"coordinate {coord} is not a leg of {rect}")

    def extensions(self) -> tuple[ExtendedRectangle, ...]:
        return tuple(extended_rectangle(r, c) for r, c in self.choices)

    def kept_coords(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.choices)


def extended_rectangle(rect: ForbiddenRectangle, s: int) -> ExtendedRectangle:
    """Extend every leg of the rectangle down to 0 except the chosen one."""
    if s not in rect.leg_coords:
        raise ValueError(f"coordinate {s} is not a leg of {rect}")
    kept = None
    lowered = []
    for coord, (a, b) in rect.legs:
        if coord == s:
            kept = (coord, (a, b))
        else:
            lowered.append((coord, b))
    assert kept is not None
    return ExtendedRectangle(rect.resource, kept, tuple(lowered))


def schedules(program: Program) -> list[Schedule]:
    """All schedules of the program, in deterministic order."""
    rects = forbidden_rectangles(program)
    out = []
    for combo in itertools.product(*[r.leg_coords for r in rects]):
        out.append(Schedule(tuple(zip(rects, combo))))
    return out


def path_obeys(path: LatticePath, schedule: Schedule) -> bool:
    """True iff no state or traversed edge of the path meets an extended
    rectangle of the schedule."""
    exts = schedule.extensions()
    for ext in exts:
        if any(ext.contains_state(s) for s in path.states):
            return False
        for state, coord in zip(path.states, path.steps()):
            if ext.meets_edge(state, coord):
                return False
    return True


def path_schedule(program: Program, path: LatticePath) -> Optional[Schedule]:
    """The schedule a complete path induces: per rectangle, the leg whose
    contended span is crossed last.  Returns None when the path does not
    actually obey the induced schedule (never for capacity-1 programs)."""
    choices = []
    for rect in forbidden_rectangles(program):
        legs = dict(rect.legs)
        last = None
        for state, coord in zip(path.states, path.steps()):
            if coord in legs:
                a, b = legs[coord]
                if a <= state[coord] < b:
                    last = coord
        if last is None:
            return None
        choices.append((rect, last))
    sch = Schedule(tuple(choices))
    return sch if path_obeys(path, sch) else None


def schedule_feasible(
    program: Program, schedule: Schedule, max_states: int = DEFAULT_MAX_STATES
) -> Optional[LatticePath]:
    """A complete execution obeying the schedule, or None.

    Breadth-first search over admissible states restricted to edges and
    states avoiding every extended rectangle; the returned path is the
    lexicographically first by step sequence among shortest discoveries.
    """
    guard_grid(program, max_states)
    exts = schedule.extensions()
    start = program.bottom
    if any(e.contains_state(start) for e in exts):
        return None
    top = program.top
    parents: dict[State, tuple[State, int]] = {start: (start, -1)}
    queue: deque[State] = deque((start,))
    while queue:
        state = queue.popleft()
        if state == top:
            chain = []
            cur = state
            while cur != start:
                prev, coord = parents[cur]
                chain.append(cur)
                cur = prev
            chain.append(start)
            chain.reverse()
            return LatticePath(tuple(chain))
        for coord, nxt in successors(program, state):
            if nxt in parents:
                continue
            if any(e.meets_edge(state, coord) for e in exts):
                continue
            if any(e.contains_state(nxt) for e in exts):
                continue
            parents[nxt] = (state, coord)
            if len(parents) > max_states:
                raise SearchLimitExceeded(max_states, "visited states")
            queue.append(nxt)
    return None


def kappa1_pair_serializable(
    thread: Thread, caps: CapacityMap, max_states: int = DEFAULT_MAX_STATES
) -> bool:
    """Two copies of a capacity-1 thread are serializable iff no mixed
    schedule is feasible.

    The two uniform schedules (one thread crosses last everywhere) are
    always realized by the serial executions; any further feasible schedule
    is a whole class of executions not equivalent to a serial one.
    """
    used = thread.resources_used
    if not used:
        raise ValueError("thread uses no resources; the pair test needs contention")
    for r in used:
        if caps[r] != 1:
            raise ValueError(f"pair test requires capacity 1, got κ({r})={caps[r]}")
    program = Program.power(thread, 2, caps)
    rects = forbidden_rectangles(program)
    for combo in itertools.product(*[r.leg_coords for r in rects]):
        if len(set(combo)) <= 1:
            continue  # uniform schedule, realized by a serial execution
        sch = Schedule(tuple(zip(rects, combo)))
        if schedule_feasible(program, sch, max_states) is not None:
            return False
    return True


# ---------------------------------------------------------------------------
# dihomotopy classes


@dataclass(frozen=True)
class ClassReport:
    class_count: int
    representatives: tuple[LatticePath, ...]
    serial_classes_covered: int
    serializable: bool


class _Unions:
    """Union-find keeping the lexicographically least payload per root."""

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.least: dict[int, tuple] = {}

    def add(self, x: int, payload: tuple) -> None:
        if x in self.parent:
            if payload < self.least[self.find(x)]:
                self.least[self.find(x)] = payload
        else:
            self.parent[x] = x
            self.least[x] = payload

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.least[rb] < self.least[ra]:
            self.least[ra] = self.least[rb]


def dihomotopy_classes(
    program: Program, limit: int = DEFAULT_MAX_STATES
) -> ClassReport:
    """Equivalence classes of complete executions under square swaps.

    Classes are built level by level over the number of steps taken: a
    length-m prefix class is a pair (length-(m-1) class, next coordinate),
    and two pairs merge when they arise from one admissible square on top
    of a common shorter prefix.  Any single swap inside a path either lies
    within the shorter prefix (already merged) or is such a square, so the
    final classes are exactly the swap-equivalence classes, and the least
    representative of a class extends the least representative of one of
    its prefix classes.

    Raises the search limit signal when the number of (class, coordinate)
    pairs at some level exceeds ``limit``.
    """
    guard_grid(program, limit)
    n = program.n
    total_steps = sum(program.tops)

    # per level: ends[class_id] = end state, reps[class_id] = least steps,
    # trans[(class_id, coord)] = class id at the next level
    ends: list[State] = [program.bottom]
    reps: list[tuple[int, ...]] = [()]
    all_trans: list[dict[tuple[int, int], int]] = []
    prev_trans: dict[tuple[int, int], int] = {}
    prev_ends: list[State] = []

    for level in range(1, total_steps + 1):
        pairs: list[tuple[int, int]] = []
        pair_id: dict[tuple[int, int], int] = {}
        uf = _Unions()
        for cid, end in enumerate(ends):
            for coord, _ in successors(program, end):
                key = (cid, coord)
                pair_id[key] = len(pairs)
                pairs.append(key)
                uf.add(pair_id[key], reps[cid] + (coord,))
        if len(pairs) > limit:
            raise SearchLimitExceeded(limit, "execution class pairs")
        # merge across admissible squares rooted two levels down
        for did, dend in enumerate(prev_ends):
            outs = [c for c in range(n) if (did, c) in prev_trans]
            for i, j in itertools.combinations(outs, 2):
                if not square_admissible(program, dend, i, j):
                    continue
                ci = prev_trans[(did, i)]
                cj = prev_trans[(did, j)]
                uf.union(pair_id[(ci, j)], pair_id[(cj, i)])
        roots = sorted({uf.find(p) for p in range(len(pairs))}, key=lambda r: uf.least[r])
        root_to_cid = {r: k for k, r in enumerate(roots)}
        new_ends: list[State] = []
        new_reps: list[tuple[int, ...]] = []
        for r in roots:
            cid, coord = pairs[r]
            state = list(ends[cid])
            state[coord] += 1
            new_ends.append(tuple(state))
            new_reps.append(uf.least[r])
        trans = {
            pairs[p]: root_to_cid[uf.find(p)] for p in range(len(pairs))
        }
        all_trans.append(trans)
        prev_ends, prev_trans = ends, trans
        ends, reps = new_ends, new_reps

    assert all(e == program.top for e in ends)
    class_count = len(ends)
    representatives = tuple(
        path_from_steps(program, program.bottom, steps) for steps in reps
    )

    serial_ids = set()
    for order in serial_orders(program):
        cid = 0
        ok = True
        for level, c in enumerate(
            coord for c0 in order for coord in [c0] * program.tops[c0]
        ):
            nxt = all_trans[level].get((cid, c))
            if nxt is None:
                ok = False
                break
            cid = nxt
        if ok:
            serial_ids.add(cid)
    covered = len(serial_ids)
    return ClassReport(
        class_count=class_count,
        representatives=representatives,
        serial_classes_covered=covered,
        serializable=class_count == covered,
    )


def dihomotopy_classes_by_enumeration(
    program: Program, limit: int = 2 * 10**5
) -> ClassReport:
    """Reference implementation: enumerate every complete execution and
    union across single admissible square swaps.  Only for small instances;
    the level-wise engine must agree with it wherever both run."""
    seqs: list[tuple[int, ...]] = []
    index: dict[tuple[int, ...], int] = {}
    for path in enumerate_dipaths(program, limit):
        seq = path.steps()
        index[seq] = len(seqs)
        seqs.append(seq)
    uf = _Unions()
    for k, seq in enumerate(seqs):
        uf.add(k, seq)
    for k, seq in enumerate(seqs):
        state = list(program.bottom)
        for t in range(len(seq) - 1):
            i, j = seq[t], seq[t + 1]
            if i != j and square_admissible(program, tuple(state), i, j):
                swapped = seq[:t] + (j, i) + seq[t + 2 :]
                uf.union(k, index[swapped])
            state[seq[t]] += 1
    roots = sorted({uf.find(k) for k in range(len(seqs))}, key=lambda r: uf.least[r])
    representatives = tuple(
        path_from_steps(program, program.bottom, uf.least[r]) for r in roots
    )
    serial_roots = set()
    for k, seq in enumerate(seqs):
        runs = [(c, len(tuple(g))) for c, g in itertools.groupby(seq)]
        if len(runs) == program.n and all(
            ln == program.tops[c] for c, ln in runs
        ):
            serial_roots.add(uf.find(k))
    return ClassReport(
        class_count=len(roots),
        representatives=representatives,
        serial_classes_covered=len(serial_roots),
        serializable=len(roots) == len(serial_roots),
    )


def connectivity_serializable(
    program: Program, limit: int = DEFAULT_MAX_STATES
) -> bool:
    """For programs with every used capacity >= 2, serializability is
    equivalent to all executions forming a single class: all serial
    executions are already equivalent to each other in that regime."""
    for t in program.threads:
        for r in t.resources_used:
            if program.caps[r] < 2:
                raise ValueError(
                    f"connectivity criterion needs κ >= 2, got κ({r})=1"
                )
    return dihomotopy_classes(program, limit).class_count == 1


# ---------------------------------------------------------------------------
# local choice points


@dataclass(frozen=True)
class ChoicePoint:
    """A state where the last free slot of a resource must be handed to one
    of several requesting threads, and the outcomes cannot be deformed into
    each other."""

    state: State
    resource: str
    contenders: tuple[int, ...]
    reachable: Optional[bool]


def is_local_choice_point(
    program: Program, state: State
) -> Optional[tuple[str, tuple[int, ...]]]:
    """Combinatorial test: returns (contended resource, contender
    coordinates) or None.

    Conditions: the state is admissible; every unfinished thread stands at
    an acquire; exactly one requested resource sits one below capacity with
    at least two requesters; every other requested resource is full.
    """
    program.check_state(state)
    if state == program.top:
        return None
    if not state_admissible(program, state):
        return None
    totals = program.use_totals(state)
    kappa = program.kappa
    res_index = program._res_index
    requesters: dict[int, list[int]] = {}
    for i, pos in enumerate(state):
        if pos == program.tops[i]:
            continue
        act = program.threads[i].action_at(pos)
        if act is None or act.kind != "P":
            return None
        requesters.setdefault(res_index[act.resource], []).append(i)
    deficient = None
    for r, coords in sorted(requesters.items()):
        if totals[r] == kappa[r]:
            continue
        if totals[r] == kappa[r] - 1 and len(coords) >= 2 and deficient is None:
            deficient = r
            continue
        return None
    if deficient is None:
        return None
    name = program.resource_names[deficient]
    return name, tuple(requesters[deficient])


def local_choice_points(
    program: Program,
    max_states: int = DEFAULT_MAX_STATES,
    reachability: bool = True,
) -> list[ChoicePoint]:
    """All local choice points, by candidate enumeration over states whose
    unfinished threads stand at acquires.  The reachable flag comes from a
    forward search (skipped, and left None, when ``reachability`` is off)."""
    n = program.n
    kappa = program.kappa
    res_index = program._res_index
    tops = program.tops
    point = program._point_idx
    options: list[list[Optional[int]]] = [
        list(t.acquire_positions) + [None] for t in program.threads
    ]
    requests: list[list[Optional[int]]] = [
        [res_index[t.actions[p - 1].resource] if p is not None else None for p in opts]
        for t, opts in zip(program.threads, options)
    ]

    found: list[tuple[State, str, tuple[int, ...]]] = []
    state: list[int] = [0] * n

    def assign(i: int, totals: list[int]) -> None:
        if i == n:
            hit = is_local_choice_point(program, tuple(state))
            if hit is not None:
                found.append((tuple(state), hit[0], hit[1]))
            return
        for opt, req in zip(options[i], requests[i]):
            pos = tops[i] if opt is None else opt
            state[i] = pos
            add = point[i][pos]
            for r in add:
                totals[r] += 1
            # requested resources may sit at most at capacity
            if req is None or totals[req] <= kappa[req]:
                assign(i + 1, totals)
            for r in add:
                totals[r] -= 1

    assign(0, [0] * len(kappa))
    found.sort()
    if not found:
        return []
    index = ReachabilityIndex(program, max_states) if reachability else None
    out = []
    for st, res, contenders in found:
        flag = index.is_reachable(st) if index is not None else None
        out.append(ChoicePoint(st, res, contenders, flag))
    return out


def lcp_definition_check(program: Program, state: State) -> bool:
    """Direct branching test at one admissible state: at least two threads
    can step, and the graph on steppable threads with edges given by
    admissible squares is disconnected."""
    program.check_state(state)
    if not state_admissible(program, state):
        raise ValueError(f"state {state} is not admissible")
    steppable = [c for c, _ in successors(program, state)]
    if len(steppable) < 2:
        return False
    adj = {c: set() for c in steppable}
    for i, j in itertools.combinations(steppable, 2):
        if square_admissible(program, state, i, j):
            adj[i].add(j)
            adj[j].add(i)
    seen = {steppable[0]}
    stack = [steppable[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) != len(steppable)


def lcp_cutoff(caps: CapacityMap) -> int:
    """Copy count at which absence of local choice points settles the whole
    family: the capacity sum plus one."""
    return caps.total() + 1


def lcp_to_potential_deadlock(program: Program, cp: ChoicePoint) -> State:
    """Prepend a coordinate of a thread holding the contended resource;
    the result is a potential deadlock of the program extended by a copy of
    that thread in front.

    Requires every capacity >= 2 (with capacity 1 nobody holds the
    contended resource at a choice point).  The smallest holder index is
    tried first; the result is asserted before returning.
    """
    for r in program.caps.names:
        if program.caps[r] < 2 and any(
            r in t.resources_used for t in program.threads
        ):
            raise ValueError(f"construction needs κ >= 2, got κ({r})=1")
    holders = [
        i
        for i, pos in enumerate(cp.state)
        if cp.resource in program.threads[i].point_use(pos)
    ]
    if not holders:
        raise PvError(f"no thread holds {cp.resource} at {cp.state}")
    for k in holders:
        extended = Program((program.threads[k],) + program.threads, program.caps)
        candidate = (cp.state[k],) + tuple(cp.state)
        if is_potential_deadlock(extended, candidate):
            return candidate
    raise PvError(
        f"no holder of {cp.resource} at {cp.state} yields a potential deadlock"
    )


def sharpserializable_witness(caps: CapacityMap) -> WitnessPlan:
    """A thread (all capacities >= 2, resources in declaration order) whose
    choice-point cut-off is nearly tight: two copies below the cut-off the
    program has a reachable local choice point at a predictable state, and
    with one fewer copy it has none.

    The thread is the tight deadlock chain with one extra acquire/release
    of the first resource appended.
    """
    names = caps.names
    k = len(names)
    if k < 2:
        raise ValueError("the construction needs at least two resources")
    for r in names:
        if caps[r] < 2:
            raise ValueError(f"the construction needs κ >= 2, got κ({r})={caps[r]}")
    actions = [f"P{names[0]}"]
    for i in range(1, k):
        actions += [f"P{names[i]}", f"V{names[i - 1]}"]
    actions += [f"P{names[0]}", f"V{names[k - 1]}", f"V{names[0]}"]
    actions += [f"P{names[0]}", f"V{names[0]}"]
    thread = Thread.from_text(" ".join(actions))
    cutoff = lcp_cutoff(caps)
    # Contended resource: the last one in the chain, one holder short.
    blocks = [2 * k] * (caps[names[k - 1]] - 1)
    for i in range(2, k + 1):
        blocks += [2 * i - 2] * caps[names[i - 2]]
    return WitnessPlan(
        kind="choice-point",
        thread=thread,
        caps=caps,
        cutoff=cutoff,
        instance_n=cutoff - 2,
        expected_state=tuple(blocks),
        expected_resource=names[k - 1],
    )


# ---------------------------------------------------------------------------
# family verdicts


def potential_deadlock_certificate(
    thread: Thread, caps: CapacityMap
) -> FamilyVerdict:
    """Serializability certificate via deadlock machinery: if the instance
    two copies above the capacity sum has no potential deadlock, then no
    instance has a local choice point, so every instance is serializable.
    Requires every used capacity >= 2."""
    used = caps.restrict(thread.resources_used)
    for r in used.names:
        if used[r] < 2:
            raise ValueError(f"certificate needs κ >= 2, got κ({r})={used[r]}")
    size = used.total() + 2
    program = Program.power(thread, size, caps)
    hits = potential_deadlocks(program)
    if not hits:
        return FamilyVerdict(
            "serializability",
            "yes",
            size,
            "potential-deadlock-cutoff",
            f"no potential deadlocks among {size} copies, hence no local "
            "choice points at any copy count",
        )
    return FamilyVerdict(
        "serializability",
        "inconclusive",
        size,
        "potential-deadlock-cutoff",
        f"{len(hits)} potential deadlock(s) among {size} copies; the "
        "certificate is sufficient, not necessary",
        witnesses=tuple(hits),
    )


def family_serializability_verdict(
    thread: Thread, caps: CapacityMap, max_states: int = DEFAULT_MAX_STATES
) -> FamilyVerdict:
    """Is every parallel composition of copies of ``thread`` serializable?

    Routing by the capacities of the used resources: all 1 — the two-copy
    schedule test decides (yes and no are both conclusive); all >= 2 — a
    choice-point-free cut-off instance certifies yes, otherwise the
    obstruction is reported but is not conclusive for no; mixed — no
    extrapolation from small instances is sound, so the verdict is left
    inconclusive with per-size analysis suggested.
    """
    used = caps.restrict(thread.resources_used) if thread.resources_used else None
    if used is None:
        return FamilyVerdict(
            "serializability",
            "yes",
            1,
            "trivial-thread",
            "the thread touches no resources, so all interleavings are "
            "equivalent to a serial run",
        )
    values = {used[r] for r in used.names}
    if values == {1}:
        try:
            ok = kappa1_pair_serializable(thread, caps, max_states)
        except SearchLimitExceeded as exc:
            return FamilyVerdict(
                "serializability", "inconclusive", 2, "search-limit", str(exc)
            )
        if ok:
            return FamilyVerdict(
                "serializability",
                "yes",
                2,
                "pairwise-serializability",
                "only the two serial schedules of the pair are feasible, "
                "which settles every copy count at capacity 1",
            )
        return FamilyVerdict(
            "serializability",
            "no",
            2,
            "pairwise-serializability",
            "a non-serial schedule of the pair is feasible",
            manifests_at_n=2,
        )
    if all(v >= 2 for v in values):
        cutoff = lcp_cutoff(used)
        program = Program.power(thread, cutoff, caps)
        try:
            cps = local_choice_points(program, max_states)
        except SearchLimitExceeded as exc:
            return FamilyVerdict(
                "serializability", "inconclusive", cutoff, "search-limit", str(exc)
            )
        if not cps:
            return FamilyVerdict(
                "serializability",
                "yes",
                cutoff,
                "choice-point-cutoff",
                f"no local choice points among {cutoff} copies, hence none "
                "at any copy count",
            )
        return FamilyVerdict(
            "serializability",
            "inconclusive",
            cutoff,
            "choice-point-cutoff",
            f"{len(cps)} local choice point(s) among {cutoff} copies; the "
            "obstruction does not prove non-serializability",
            choice_points=tuple(cps),
        )
    cutoff = lcp_cutoff(used)
    return FamilyVerdict(
        "serializability",
        "inconclusive",
        cutoff,
        "mixed-capacities",
        "mixed capacities admit families that are serializable at one copy "
        "count and not at the next, so no finite instance settles all of "
        "them; analyze fixed sizes with the class count instead",
    )
