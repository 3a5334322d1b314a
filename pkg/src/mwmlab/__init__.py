"""Multi-queue multi-server scheduling under random connectivity.

Exact maximum weight matching with an enumeration oracle, discrete-time
queue evolution on coupled random streams, balancing-order verifiers, and a
coupled Monte Carlo harness for comparing server assignment policies.
"""

from .balance import (
    COST_FUNCTIONS,
    BalancingChainError,
    OrderStep,
    ReallocationWitness,
    balancing_condition,
    distance_to_mwm,
    find_balancing_reallocation,
    iter_balancing_reallocations,
    preceq_one,
    preceq_p,
    reachable_below,
    register_cost_function,
    sweep_lemmas,
    total_occupancy,
    verify_lemma1,
    verify_lemma2_corollary1,
)
from .harness import (
    DominanceReport,
    PreceqAuditReport,
    SimConfig,
    TraceRecord,
    coupled_compare,
    per_slot_preceq_audit,
    run_experiment,
    run_replication,
)
from .matching import (
    enumerate_matchings,
    matching_weight,
    max_weight_matching,
    validate_matching,
    weight_matrix,
)
from .policies import (
    POLICY_NAMES,
    decide,
    decide_fixed_order,
    decide_greedy_lcq,
    decide_mwm,
    decide_random_maximal,
)
from .queueing import (
    SamplePath,
    SystemParams,
    sample_arrivals,
    sample_connectivity,
    serve,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BalancingChainError",
    "COST_FUNCTIONS",
    "DominanceReport",
    "OrderStep",
    "POLICY_NAMES",
    "PreceqAuditReport",
    "ReallocationWitness",
    "SamplePath",
    "SimConfig",
    "SystemParams",
    "TraceRecord",
    "balancing_condition",
    "coupled_compare",
    "decide",
    "decide_fixed_order",
    "decide_greedy_lcq",
    "decide_mwm",
    "decide_random_maximal",
    "distance_to_mwm",
    "enumerate_matchings",
    "find_balancing_reallocation",
    "iter_balancing_reallocations",
    "matching_weight",
    "max_weight_matching",
    "per_slot_preceq_audit",
    "preceq_one",
    "preceq_p",
    "reachable_below",
    "register_cost_function",
    "run_experiment",
    "run_replication",
    "sample_arrivals",
    "sample_connectivity",
    "serve",
    "step",
    "sweep_lemmas",
    "total_occupancy",
    "validate_matching",
    "verify_lemma1",
    "verify_lemma2_corollary1",
    "weight_matrix",
]
