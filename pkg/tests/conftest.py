"""Shared helpers: seeded generators and independent brute-force oracles.

The oracles here deliberately avoid the library's optimized search paths
(candidate sieves, symmetry quotients, level dynamic programming) so that
agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import random

from pvguard import (
    CapacityMap,
    Program,
    ReachabilityIndex,
    State,
    Thread,
    reachable_states,
    state_admissible,
    successors,
)


def make_caps(**caps: int) -> CapacityMap:
    return CapacityMap(tuple(sorted(caps.items())))


def thread(text: str) -> Thread:
    return Thread.from_text(text)


def random_valid_actions(rng: random.Random, resources: list[str], length: int) -> list[str]:
    """A uniform-ish valid action sequence: holds stay in {0,1}, all released."""
    if length % 2:
        length += 1
    out: list[str] = []
    held: list[str] = []
    remaining = length
    while remaining:
        free = [r for r in resources if r not in held]
        must_close = len(held) >= remaining
        if held and (must_close or not free or rng.random() < 0.5):
            r = held.pop(rng.randrange(len(held)))
            out.append(f"V{r}")
        else:
            r = rng.choice(free)
            held.append(r)
            out.append(f"P{r}")
        remaining -= 1
    return out


def random_thread(rng: random.Random, resources: list[str], max_pairs: int) -> Thread:
    length = 2 * rng.randint(1, max_pairs)
    return Thread.from_text(" ".join(random_valid_actions(rng, resources, length)))


def random_program(
    rng: random.Random,
    resources: list[str],
    caps: CapacityMap,
    n_threads: int,
    max_pairs: int,
    identical: bool = False,
) -> Program:
    if identical:
        t = random_thread(rng, resources, max_pairs)
        return Program.power(t, n_threads, caps)
    threads = tuple(random_thread(rng, resources, max_pairs) for _ in range(n_threads))
    return Program(threads, caps)


def naive_deadlock_states(program: Program, max_states: int = 10**7) -> set[State]:
    """Reachable admissible states with no admissible outgoing edge, except top."""
    out = set()
    for state in reachable_states(program, max_states):
        if state == program.top:
            continue
        if not successors(program, state):
            out.add(state)
    return out


def quotient_deadlock_empty(program: Program, max_states: int = 10**7) -> bool:
    """Exhaustive stuck-state search over the thread-symmetry quotient.

    Visits every reachable state up to permutation of identical threads and
    checks for a non-top state without admissible steps. Being stuck is
    permutation invariant, so this is equivalent to the plain full search.
    """
    idx = ReachabilityIndex(program, max_states)
    top = program.top
    return not any(
        s != top and not successors(program, s) for s in idx.canonical_states()
    )


def naive_potential_deadlocks(program: Program) -> set[State]:
    """Direct sweep of the full grid against the blocked-everywhere condition.

    A state qualifies when every coordinate is either finished or sits at an
    acquire whose resource is held by exactly its capacity, and at least one
    coordinate is unfinished. Admissibility and reachability are NOT
    required; unrequested resources may even be over capacity.
    """
    import itertools

    out = set()
    for state in itertools.product(*(range(t + 1) for t in program.tops)):
        if state == program.top:
            continue
        requested: dict[str, int] = {}
        ok = True
        for c, p in enumerate(state):
            if p == program.tops[c]:
                continue
            act = program.threads[c].action_at(p)
            if act is None or act.kind != "P":
                ok = False
                break
            requested[act.resource] = 0
        if not ok or not requested:
            continue
        for r in requested:
            requested[r] = sum(
                r in t.point_use(state[c]) for c, t in enumerate(program.threads)
            )
        if all(requested[r] == program.caps[r] for r in requested):
            out.add(state)
    return out


def naive_count_dipaths(program: Program) -> int:
    """Recursive count of admissible monotone lattice paths bottom to top."""
    from functools import lru_cache

    from pvguard import edge_admissible

    tops = program.tops

    @lru_cache(maxsize=None)
    def count(state: State) -> int:
        if state == tops:
            return 1
        total = 0
        for c in range(program.n):
            if state[c] < tops[c] and edge_admissible(program, state, c):
                nxt = state[:c] + (state[c] + 1,) + state[c + 1 :]
                if state_admissible(program, nxt):
                    total += count(nxt)
        return total

    if not state_admissible(program, program.bottom):
        return 0
    return count(program.bottom)
