#!/usr/bin/env python3
"""Local choice points and serializability certificates.

When capacities are at least 2, non-serializability always leaves a trace:
a reachable state where the last free slot of some resource must go to one
of several requesters and the outcomes never reconverge. No such state at
(capacity sum + 1) copies means no such state at any copy count. This demo
finds the choice points of a nearly-tight thread, maps one into a potential
deadlock, and runs the family verdicts on both a dirty and a clean thread.
"""

from pvguard import (
    CapacityMap,
    Program,
    Thread,
    dihomotopy_classes,
    family_serializability_verdict,
    is_potential_deadlock,
    lcp_to_potential_deadlock,
    local_choice_points,
    potential_deadlock_certificate,
    sharpserializable_witness,
)

caps = CapacityMap((("a", 2), ("b", 2)))
plan = sharpserializable_witness(caps)
print(f"generated thread over a:2 b:2: {plan.thread}")
print(f"  choice-point cut-off {plan.cutoff}, first obstruction expected at "
      f"n={plan.instance_n}, state {plan.expected_state} on {plan.expected_resource!r}")
print()

program = Program.power(plan.thread, plan.instance_n, caps)
cps = local_choice_points(program)
print(f"local choice points of the {plan.instance_n}-copy instance:")
for cp in cps:
    print(f"  state {cp.state}  resource {cp.resource}  "
          f"contenders {cp.contenders}  reachable={cp.reachable}")
print()

cp = next(c for c in cps if c.state == plan.expected_state)
lifted = lcp_to_potential_deadlock(program, cp)
extended = Program((program.threads[0],) + program.threads, caps)
print("every choice point embeds into a potential deadlock one copy up:")
print(f"  {cp.state} -> {lifted}, "
      f"potential deadlock: {is_potential_deadlock(extended, lifted)}")
print()

print("family verdict for the generated thread:")
v = family_serializability_verdict(plan.thread, caps)
print(f"  {v.verdict} ({v.rule}, cut-off {v.cutoff}): {v.detail}")
print("  the obstruction is real but one-sided; small instances are still")
print("  serializable, as the class count shows:")
for n in (2, 3):
    rep = dihomotopy_classes(Program.power(plan.thread, n, caps))
    print(f"    n={n}: {rep.class_count} class(es), "
          f"serializable={rep.serializable}")
print()

clean = Thread.from_text("Pa Va Pb Vb Pa Va")
print(f"family verdict for {clean} (no nesting, same capacities):")
v = family_serializability_verdict(clean, caps)
print(f"  {v.verdict} ({v.rule}, cut-off {v.cutoff}): {v.detail}")
cert = potential_deadlock_certificate(clean, caps)
print(f"  deadlock-based certificate concurs: {cert.verdict} "
      f"({cert.rule}, cut-off {cert.cutoff})")
