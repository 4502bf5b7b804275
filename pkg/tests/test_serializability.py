import itertools
import random

import pytest

from pvguard import (
    CapacityMap,
    Program,
    PvError,
    SearchLimitExceeded,
    Thread,
    connectivity_serializable,
    dihomotopy_classes,
    dihomotopy_classes_by_enumeration,
    enumerate_dipaths,
    family_serializability_verdict,
    is_local_choice_point,
    is_potential_deadlock,
    is_serial,
    kappa1_pair_serializable,
    lcp_cutoff,
    lcp_definition_check,
    lcp_to_potential_deadlock,
    local_choice_points,
    path_obeys,
    path_schedule,
    potential_deadlock_certificate,
    reachable,
    schedule_feasible,
    schedules,
    serial_order,
    serial_orders,
    serial_path,
    sharpserializable_witness,
    state_admissible,
)

from conftest import make_caps, random_thread

T1 = Thread.from_text("Pa Pb Vb Va")
T2 = Thread.from_text("Pb Pa Va Vb")
PV = Thread.from_text("Pa Va")
WIT = Thread.from_text("Pa Pb Va Pa Vb Va Pa Va")
FIG = Thread.from_text("Pa Pb Va Pc Vb Pa Vc Va")
K11 = make_caps(a=1, b=1)
K22 = make_caps(a=2, b=2)
KABC = make_caps(a=1, b=1, c=1)
EX3 = Program((T1, T2), K11)


# -- serial executions -------------------------------------------------------

def test_serial_order_detection():
    p = serial_path(EX3, (0, 1))
    assert p.steps() == (0, 0, 0, 0, 0, 1, 1, 1, 1, 1)
    assert is_serial(p)
    assert serial_order(p) == (0, 1)
    assert serial_order(serial_path(EX3, (1, 0))) == (1, 0)


def test_interleaved_path_is_not_serial():
    from pvguard import path_from_steps

    p = path_from_steps(EX3, (0, 0), (0, 1, 0, 1, 0, 1, 0, 1, 0, 1))
    assert not is_serial(p)
    assert serial_order(p) is None


def test_serial_orders_enumeration():
    assert list(serial_orders(EX3)) == [(0, 1), (1, 0)]
    prog3 = Program.power(PV, 3, make_caps(a=1))
    assert len(list(serial_orders(prog3))) == 6


def test_serial_paths_always_valid():
    rng = random.Random(31)
    for _ in range(20):
        caps = CapacityMap((("a", rng.randint(1, 2)), ("b", rng.randint(1, 2))))
        threads = tuple(random_thread(rng, ["a", "b"], 3) for _ in range(3))
        prog = Program(threads, caps)
        for order in serial_orders(prog):
            sp = serial_path(prog, order)
            sp.validate(prog)
            assert serial_order(sp) == order


def test_single_thread_is_serial():
    prog = Program.power(PV, 1, make_caps(a=1))
    (only,) = enumerate_dipaths(prog)
    assert is_serial(only)


# -- schedules ----------------------------------------------------------------

def test_schedule_count_two_rectangles():
    scheds = schedules(EX3)
    assert len(scheds) == 4
    for s in scheds:
        assert {r.resource for r, _ in s.choices} == {"a", "b"}


def test_uniform_schedules_feasible_mixed_not():
    outcomes = {}
    for s in schedules(EX3):
        key = tuple(sorted((r.resource, kept) for r, kept in s.choices))
        outcomes[key] = schedule_feasible(EX3, s)
    assert outcomes[(("a", 0), ("b", 0))] is not None
    assert outcomes[(("a", 1), ("b", 1))] is not None
    assert outcomes[(("a", 0), ("b", 1))] is None
    assert outcomes[(("a", 1), ("b", 0))] is None


def test_feasible_witness_obeys_its_schedule():
    for s in schedules(EX3):
        path = schedule_feasible(EX3, s)
        if path is not None:
            path.validate(EX3)
            assert path_obeys(path, s)


def test_every_path_obeys_exactly_one_schedule():
    allsch = schedules(EX3)
    for path in enumerate_dipaths(EX3):
        obeyed = [s for s in allsch if path_obeys(path, s)]
        assert len(obeyed) == 1
        assert path_schedule(EX3, path).choices == obeyed[0].choices


def test_every_path_obeys_exactly_one_schedule_random():
    rng = random.Random(32)
    for _ in range(15):
        prog = Program(
            (random_thread(rng, ["a", "b"], 3), random_thread(rng, ["a", "b"], 3)),
            K11,
        )
        allsch = schedules(prog)
        for path in itertools.islice(enumerate_dipaths(prog), 200):
            assert sum(path_obeys(path, s) for s in allsch) == 1


def test_serial_path_keeps_last_crossing_thread():
    # thread 1 runs first, so thread 2 crosses every rectangle later and
    # its leg is the one kept by the schedule of that execution
    sch = path_schedule(EX3, serial_path(EX3, (0, 1)))
    assert sorted((r.resource, kept) for r, kept in sch.choices) == [
        ("a", 1), ("b", 1),
    ]
    sch = path_schedule(EX3, serial_path(EX3, (1, 0)))
    assert sorted((r.resource, kept) for r, kept in sch.choices) == [
        ("a", 0), ("b", 0),
    ]


def test_schedule_paths_split_evenly_here():
    import collections

    counts = collections.Counter()
    for path in enumerate_dipaths(EX3):
        s = path_schedule(EX3, path)
        counts[tuple(sorted((r.resource, k) for r, k in s.choices))] += 1
    assert counts == {
        (("a", 0), ("b", 0)): 42,
        (("a", 1), ("b", 1)): 42,
    }


# -- execution classes --------------------------------------------------------

def test_unit_semaphore_classes_factorial():
    for n, expected in ((2, 2), (3, 6), (4, 24)):
        cr = dihomotopy_classes(Program.power(PV, n, make_caps(a=1)))
        assert cr.class_count == expected
        assert cr.serial_classes_covered == expected
        assert cr.serializable


def test_capacity_two_collapses_to_one_class():
    cr = dihomotopy_classes(Program.power(PV, 2, make_caps(a=2)))
    assert cr.class_count == 1
    assert cr.serializable
    assert cr.representatives[0].steps() == (0, 0, 0, 1, 1, 1)


def test_crossing_locks_two_classes():
    cr = dihomotopy_classes(EX3)
    assert cr.class_count == 2
    assert cr.serial_classes_covered == 2
    assert [p.steps() for p in cr.representatives] == [
        (0, 0, 0, 0, 0, 1, 1, 1, 1, 1),
        (0, 1, 1, 1, 0, 1, 0, 0, 0, 1),
    ]


def test_sequential_composition_breaks_serializability():
    from pvguard import concat_threads

    cat = concat_threads((T1, T2))
    cr = dihomotopy_classes(Program.power(cat, 2, K11))
    assert cr.class_count == 6
    assert cr.serial_classes_covered == 2
    assert not cr.serializable


def test_ring_pair_not_serializable():
    cr = dihomotopy_classes(Program.power(FIG, 2, KABC))
    assert cr.class_count == 4
    assert cr.serial_classes_covered == 2
    assert not cr.serializable


def test_class_representatives_are_lex_least():
    cr = dihomotopy_classes(EX3)
    enumerated = list(enumerate_dipaths(EX3))
    for rep in cr.representatives:
        assert rep.steps() in [p.steps() for p in enumerated]
    assert cr.representatives[0].steps() == min(p.steps() for p in enumerated)


def test_classes_match_enumeration_oracle():
    from conftest import naive_count_dipaths

    rng = random.Random(33)
    compared = 0
    while compared < 25:
        caps = CapacityMap((("a", rng.randint(1, 2)), ("b", rng.randint(1, 2))))
        n = rng.randint(2, 3)
        if rng.random() < 0.5:
            prog = Program.power(random_thread(rng, ["a", "b"], 2), n, caps)
        else:
            prog = Program(
                tuple(random_thread(rng, ["a", "b"], 2) for _ in range(n)), caps
            )
        if naive_count_dipaths(prog) > 100_000:
            continue
        compared += 1
        dp = dihomotopy_classes(prog)
        en = dihomotopy_classes_by_enumeration(prog)
        assert dp.class_count == en.class_count
        assert dp.serial_classes_covered == en.serial_classes_covered
        assert dp.serializable == en.serializable
        assert [p.steps() for p in dp.representatives] == [
            p.steps() for p in en.representatives
        ]


def test_classes_count_equals_feasible_schedules_for_unit_pairs():
    rng = random.Random(34)
    for _ in range(20):
        prog = Program(
            (random_thread(rng, ["a", "b"], 3), random_thread(rng, ["a", "b"], 3)),
            K11,
        )
        feasible = [s for s in schedules(prog) if schedule_feasible(prog, s)]
        cr = dihomotopy_classes(prog)
        assert cr.class_count == len(feasible)
        # distinct classes answer to distinct schedules
        keys = {
            tuple(sorted((r.resource, k) for r, k in
                         path_schedule(prog, rep).choices))
            for rep in cr.representatives
        }
        assert len(keys) == cr.class_count


def test_serial_runs_merge_when_capacities_at_least_two():
    rng = random.Random(35)
    for _ in range(12):
        caps = CapacityMap((("a", rng.randint(2, 3)), ("b", rng.randint(2, 3))))
        n = rng.randint(2, 3)
        prog = Program(
            tuple(random_thread(rng, ["a", "b"], 2) for _ in range(n)), caps
        )
        cr = dihomotopy_classes(prog)
        assert cr.serial_classes_covered == 1


def test_classes_limit_guard():
    prog = Program.power(PV, 2, make_caps(a=1))
    with pytest.raises(SearchLimitExceeded):
        dihomotopy_classes(prog, limit=1)


def test_connectivity_serializable():
    assert connectivity_serializable(Program.power(PV, 2, make_caps(a=2)))
    assert connectivity_serializable(Program.power(WIT, 3, K22))
    with pytest.raises(ValueError):
        connectivity_serializable(EX3)


# -- pairwise test for unit capacities ---------------------------------------

def test_pair_serializability_examples():
    assert kappa1_pair_serializable(PV, make_caps(a=1))
    assert kappa1_pair_serializable(T1, K11)
    assert not kappa1_pair_serializable(FIG, KABC)
    from pvguard import concat_threads

    assert not kappa1_pair_serializable(concat_threads((T1, T2)), K11)


def test_pair_serializability_rejects_wrong_shapes():
    with pytest.raises(ValueError):
        kappa1_pair_serializable(PV, make_caps(a=2))
    with pytest.raises(ValueError):
        kappa1_pair_serializable(Thread.from_actions(()), make_caps(a=1))


def test_pair_test_matches_pair_classes():
    rng = random.Random(36)
    for _ in range(30):
        t = random_thread(rng, ["a", "b"], 3)
        caps = K11.restrict(t.resources_used)
        ok = kappa1_pair_serializable(t, caps)
        cr = dihomotopy_classes(Program.power(t, 2, caps))
        assert ok == cr.serializable


# -- local choice points ------------------------------------------------------

def test_witness_cube_choice_points():
    prog = Program.power(WIT, 3, K22)
    cps = local_choice_points(prog)
    table = [(c.state, c.resource, c.contenders, c.reachable) for c in cps]
    assert table == [
        ((2, 2, 4), "b", (0, 1), True),
        ((2, 4, 2), "b", (0, 2), True),
        ((2, 4, 4), "a", (1, 2), True),
        ((4, 2, 2), "b", (1, 2), True),
        ((4, 2, 4), "a", (0, 2), True),
        ((4, 4, 2), "a", (0, 1), True),
    ]


def test_witness_smaller_powers_are_clean():
    for n in (1, 2):
        assert local_choice_points(Program.power(WIT, n, K22)) == []


def test_no_choice_points_for_single_user_patterns():
    prog = Program.power(Thread.from_text("Pa Va Pa Va"), 3, make_caps(a=2))
    assert local_choice_points(prog) == []
    # threads that never share a resource cannot contend
    prog = Program(
        (Thread.from_text("Pa Va"), Thread.from_text("Pb Vb")), K22
    )
    assert local_choice_points(prog) == []


def test_choice_point_without_reachability_flag():
    prog = Program.power(WIT, 3, K22)
    cps = local_choice_points(prog, reachability=False)
    assert len(cps) == 6
    assert all(c.reachable is None for c in cps)


def test_is_local_choice_point_details():
    prog = Program.power(WIT, 3, K22)
    got = is_local_choice_point(prog, (4, 2, 2))
    assert got == ("b", (1, 2))
    assert is_local_choice_point(prog, (0, 0, 0)) is None
    assert is_local_choice_point(prog, prog.top) is None
    # a deadlock is not a choice point: no resource is short by exactly one
    assert is_local_choice_point(EX3, (2, 2)) is None


def test_choice_points_are_reachable_and_admissible_here():
    prog = Program.power(WIT, 3, K22)
    for cp in local_choice_points(prog):
        assert state_admissible(prog, cp.state)
        assert reachable(prog, cp.state) is not None


def test_definition_check_agrees_with_combinatorial_test():
    rng = random.Random(37)
    for _ in range(12):
        caps = CapacityMap((("a", rng.randint(1, 3)), ("b", rng.randint(1, 3))))
        n = rng.randint(2, 3)
        prog = Program.power(random_thread(rng, ["a", "b"], 2), n, caps)
        for state in itertools.product(*(range(t + 1) for t in prog.tops)):
            if not state_admissible(prog, state):
                continue
            combinatorial = is_local_choice_point(prog, state) is not None
            assert combinatorial == lcp_definition_check(prog, state)


def test_definition_check_rejects_forbidden_states():
    prog = Program.power(T1, 2, K11)
    with pytest.raises(ValueError):
        lcp_definition_check(prog, (2, 2))


def test_lcp_cutoff_values():
    assert lcp_cutoff(K22) == 5
    assert lcp_cutoff(K11) == 3
    assert lcp_cutoff(make_caps(a=2)) == 3


# -- from choice points to potential deadlocks --------------------------------

def test_choice_point_maps_to_potential_deadlock():
    prog = Program.power(WIT, 3, K22)
    cp = next(c for c in local_choice_points(prog) if c.state == (4, 2, 2))
    bigger = lcp_to_potential_deadlock(prog, cp)
    assert bigger == (4, 4, 2, 2)
    prog4 = Program.power(WIT, 4, K22)
    assert is_potential_deadlock(prog4, bigger)


def test_all_witness_choice_points_map():
    prog = Program.power(WIT, 3, K22)
    prog4 = Program.power(WIT, 4, K22)
    for cp in local_choice_points(prog):
        assert is_potential_deadlock(prog4, lcp_to_potential_deadlock(prog, cp))


def test_mapping_requires_capacity_two():
    prog = Program.power(FIG, 3, KABC)
    from pvguard import ChoicePoint

    fake = ChoicePoint((1, 1, 1), "a", (0, 1), None)
    with pytest.raises(ValueError):
        lcp_to_potential_deadlock(prog, fake)


# -- witness generators --------------------------------------------------------

def test_sharpserializable_witness_shape():
    plan = sharpserializable_witness(K22)
    assert plan.kind == "choice-point"
    assert str(plan.thread) == "Pa Pb Va Pa Vb Va Pa Va"
    assert plan.cutoff == 5
    assert plan.instance_n == 3
    assert plan.expected_state == (4, 2, 2)
    assert plan.expected_resource == "b"


def test_sharpserializable_witness_delivers():
    for entries in [(("a", 2), ("b", 2)), (("a", 2), ("b", 3))]:
        caps = CapacityMap(entries)
        plan = sharpserializable_witness(caps)
        prog = Program.power(plan.thread, plan.instance_n, caps)
        cps = local_choice_points(prog)
        match = [c for c in cps if c.state == plan.expected_state]
        assert match and match[0].resource == plan.expected_resource
        assert match[0].reachable
        for n in range(1, plan.instance_n):
            assert local_choice_points(Program.power(plan.thread, n, caps)) == []


def test_sharpserializable_rejects_unit_capacity():
    with pytest.raises(ValueError):
        sharpserializable_witness(K11)
    with pytest.raises(ValueError):
        sharpserializable_witness(make_caps(a=2))


# -- family verdicts -----------------------------------------------------------

def test_family_trivial_thread():
    v = family_serializability_verdict(Thread.from_actions(()), K22)
    assert (v.verdict, v.rule, v.cutoff) == ("yes", "trivial-thread", 1)


def test_family_unit_capacities_yes():
    v = family_serializability_verdict(T1, K11)
    assert (v.verdict, v.rule, v.cutoff) == ("yes", "pairwise-serializability", 2)
    assert v.property_name == "serializability"


def test_family_unit_capacities_no():
    v = family_serializability_verdict(FIG, KABC)
    assert (v.verdict, v.rule, v.cutoff) == ("no", "pairwise-serializability", 2)
    assert v.manifests_at_n == 2


def test_family_wide_capacities_yes():
    v = family_serializability_verdict(Thread.from_text("Pa Va Pb Vb"), K22)
    assert (v.verdict, v.rule, v.cutoff) == ("yes", "choice-point-cutoff", 5)
    assert v.choice_points == ()


def test_family_wide_capacities_inconclusive():
    v = family_serializability_verdict(WIT, K22)
    assert (v.verdict, v.rule, v.cutoff) == (
        "inconclusive", "choice-point-cutoff", 5,
    )
    states = [c.state for c in v.choice_points]
    assert len(states) == 540
    assert (4, 2, 2, 9, 9) in states


def test_family_mixed_capacities_inconclusive():
    v = family_serializability_verdict(
        Thread.from_text("Pa Va Pb Vb"), make_caps(a=2, b=1)
    )
    assert (v.verdict, v.rule, v.cutoff) == ("inconclusive", "mixed-capacities", 4)


def test_family_search_limit():
    v = family_serializability_verdict(WIT, K22, max_states=10)
    assert (v.verdict, v.rule) == ("inconclusive", "search-limit")


# -- certificates ---------------------------------------------------------------

def test_certificate_yes_route():
    v = potential_deadlock_certificate(Thread.from_text("Pa Va Pb Vb"), K22)
    assert (v.verdict, v.rule, v.cutoff) == ("yes", "potential-deadlock-cutoff", 6)
    assert v.witnesses == ()


def test_certificate_inconclusive_route():
    v = potential_deadlock_certificate(WIT, K22)
    assert (v.verdict, v.cutoff) == ("inconclusive", 6)
    assert v.witnesses
    prog = Program.power(WIT, 6, K22)
    for s in v.witnesses[:3]:
        assert is_potential_deadlock(prog, s)


def test_certificate_implies_no_choice_points():
    rng = random.Random(38)
    checked = 0
    while checked < 8:
        t = random_thread(rng, ["a", "b"], 2)
        caps = K22.restrict(t.resources_used)
        v = potential_deadlock_certificate(t, caps)
        if v.verdict != "yes":
            continue
        checked += 1
        m = lcp_cutoff(caps)
        assert local_choice_points(
            Program.power(t, m, caps), reachability=False) == []
