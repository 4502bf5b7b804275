"""Static deadlock and serializability analysis for PV (semaphore) programs.

A PV-thread is a finite sequence of P (acquire) and V (release) actions on
named resources with capacities.  Programs run threads in parallel on a
product grid; this package finds deadlocks and local choice points,
classifies executions up to square-swap equivalence, and lifts the results
to whole families "n copies of T, for every n" through cut-off bounds.
"""
__version__ = "0.1.0"

from .core import (
    Action,
    CapacityMap,
    InvalidThreadError,
    ParseError,
    Program,
    PvError,
    SearchLimitExceeded,
    State,
    Thread,
    Violation,
    concat_threads,
    parse_actions,
    single_access,
    thread_violations,
)
from .parser import SourceModel, parse_source
from .geometry import (
    DEFAULT_MAX_STATES,
    ExtendedRectangle,
    ForbiddenRectangle,
    LatticePath,
    edge_admissible,
    enumerate_dipaths,
    forbidden_rectangles,
    path_from_steps,
    reachable,
    reachable_states,
    square_admissible,
    state_admissible,
    successors,
)
from .deadlock import (
    Deadlock,
    DeadlockReport,
    FamilyVerdict,
    ReachabilityIndex,
    SearchStats,
    WitnessPlan,
    deadlock_candidates,
    deadlock_cutoff,
    deadsharp_witness,
    family_deadlock_verdict,
    find_deadlocks,
    is_potential_deadlock,
    pad_top,
    potential_deadlocks,
    program_deadlock_verdict,
    scatter_state,
)
from .serializability import (
    ChoicePoint,
    ClassReport,
    Schedule,
    connectivity_serializable,
    dihomotopy_classes,
    dihomotopy_classes_by_enumeration,
    extended_rectangle,
    family_serializability_verdict,
    is_local_choice_point,
    is_serial,
    kappa1_pair_serializable,
    lcp_cutoff,
    lcp_definition_check,
    lcp_to_potential_deadlock,
    local_choice_points,
    path_obeys,
    path_schedule,
    potential_deadlock_certificate,
    schedule_feasible,
    schedules,
    serial_order,
    serial_orders,
    serial_path,
    sharpserializable_witness,
)

__all__ = [
    "Action",
    "CapacityMap",
    "ChoicePoint",
    "ClassReport",
    "Deadlock",
    "DeadlockReport",
    "DEFAULT_MAX_STATES",
    "ExtendedRectangle",
    "FamilyVerdict",
    "ForbiddenRectangle",
    "InvalidThreadError",
    "LatticePath",
    "ParseError",
    "Program",
    "PvError",
    "ReachabilityIndex",
    "Schedule",
    "SearchLimitExceeded",
    "SearchStats",
    "SourceModel",
    "State",
    "Thread",
    "Violation",
    "WitnessPlan",
    "concat_threads",
    "connectivity_serializable",
    "deadlock_candidates",
    "deadlock_cutoff",
    "deadsharp_witness",
    "dihomotopy_classes",
    "dihomotopy_classes_by_enumeration",
    "edge_admissible",
    "enumerate_dipaths",
    "extended_rectangle",
    "family_deadlock_verdict",
    "family_serializability_verdict",
    "find_deadlocks",
    "forbidden_rectangles",
    "is_local_choice_point",
    "is_potential_deadlock",
    "is_serial",
    "kappa1_pair_serializable",
    "lcp_cutoff",
    "lcp_definition_check",
    "lcp_to_potential_deadlock",
    "local_choice_points",
    "pad_top",
    "parse_actions",
    "parse_source",
    "path_from_steps",
    "path_obeys",
    "path_schedule",
    "potential_deadlock_certificate",
    "potential_deadlocks",
    "program_deadlock_verdict",
    "reachable",
    "reachable_states",
    "scatter_state",
    "schedule_feasible",
    "schedules",
    "serial_order",
    "serial_orders",
    "serial_path",
    "sharpserializable_witness",
    "single_access",
    "square_admissible",
    "state_admissible",
    "successors",
    "thread_violations",
]
