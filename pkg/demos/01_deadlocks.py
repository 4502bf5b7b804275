#!/usr/bin/env python3
"""Finding deadlocks in semaphore programs.

Two threads that grab the same two locks in opposite order are the classic
deadly embrace. This demo walks the geometric view of that program: each
thread is an axis, a state is a grid point, and a deadlock is a reachable
point with no way up or right.
"""

from pvguard import (
    CapacityMap,
    Program,
    Thread,
    find_deadlocks,
    forbidden_rectangles,
)
from pvguard.report import render_grid, state_text

caps = CapacityMap((("a", 1), ("b", 1)))
t1 = Thread.from_text("Pa Pb Vb Va")
t2 = Thread.from_text("Pb Pa Va Vb")
crossing = Program((t1, t2), caps)

print("threads:")
print("  T1 =", t1)
print("  T2 =", t2)
print()

print("The unit-capacity locks carve two forbidden rectangles out of the")
print("6x6 grid, one per resource:")
for rect in forbidden_rectangles(crossing):
    legs = " x ".join(f"coord{c} in ({lo},{hi})" for c, (lo, hi) in rect.legs)
    print(f"  {rect.resource}: {legs}")
print()

report = find_deadlocks(crossing)
for d in report.deadlocks:
    print("deadlock at", state_text(crossing, d.state))
    print("reached via", " -> ".join(str(s) for s in d.witness.states))
print()
print(render_grid(crossing, marked=[d.state for d in report.deadlocks],
                  path=report.deadlocks[0].witness))
print()

print("Swapping one thread for a copy of the other removes the crossing,")
print("and with it the deadlock:")
same_order = Program((t1, t1), caps)
print("  deadlocks:", [d.state for d in find_deadlocks(same_order).deadlocks])
