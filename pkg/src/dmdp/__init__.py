"""Finite-horizon MDPs with time-varying rewards.

Exact policy evaluation and Bellman operators over the (epoch, state)
grid, policy concatenation with a closed-form value identity, and a
best-first search for optimal policies under goal-set constraints,
cross-checked by exhaustive brute-force baselines.
"""

from .core import (
    DecisionRule,
    DmdpError,
    DmdpInstance,
    EMPTY_POLICY,
    EnumerationCapExceeded,
    InstanceValidationError,
    TimeVaryingPolicy,
    ValidationReport,
    enumerate_decision_rules,
    make_static_gap_instance,
    validate,
)
from .bellman import (
    ConvergenceError,
    PolicyIterationResult,
    QTable,
    ValueTable,
    bellman_policy_operator,
    bellman_value_operator,
    evaluate_policy,
    greedy_policy,
    optimal_values,
    pad_policy,
    policy_iteration,
    q_tables,
    q_values,
    sup_distance,
)
from .composition import (
    GoalSet,
    concat,
    concat_value_check,
    goal_set,
    propagate,
    step_distribution,
    support_of,
    truncate,
)
from .gds import (
    GdsConfig,
    GdsResult,
    NodeBudgetExceeded,
    QueueInvariantViolation,
    SearchNode,
    epsilon,
    gds_search,
)
from .oracle import (
    BruteForceResult,
    OracleBudgetExceeded,
    brute_force_cover,
    brute_force_optimal_value,
    brute_force_reach,
    count_policies,
    enumerate_policies,
    realizable_goal_sets,
)
from .storage import (
    InstanceFormatError,
    digest,
    dumps_instance,
    dumps_json,
    generate,
    load,
    parse_instance,
    save,
)

__version__ = "0.1.0"

__all__ = [
    "BruteForceResult",
    "ConvergenceError",
    "DecisionRule",
    "DmdpError",
    "DmdpInstance",
    "EMPTY_POLICY",
    "EnumerationCapExceeded",
    "GdsConfig",
    "GdsResult",
    "GoalSet",
    "InstanceFormatError",
    "InstanceValidationError",
    "NodeBudgetExceeded",
    "OracleBudgetExceeded",
    "PolicyIterationResult",
    "QTable",
    "QueueInvariantViolation",
    "SearchNode",
    "TimeVaryingPolicy",
    "ValidationReport",
    "ValueTable",
    "bellman_policy_operator",
    "bellman_value_operator",
    "brute_force_cover",
    "brute_force_optimal_value",
    "brute_force_reach",
    "concat",
    "concat_value_check",
    "count_policies",
    "digest",
    "dumps_instance",
    "dumps_json",
    "enumerate_decision_rules",
    "enumerate_policies",
    "epsilon",
    "evaluate_policy",
    "gds_search",
    "generate",
    "goal_set",
    "greedy_policy",
    "load",
    "make_static_gap_instance",
    "optimal_values",
    "pad_policy",
    "parse_instance",
    "policy_iteration",
    "propagate",
    "q_tables",
    "q_values",
    "realizable_goal_sets",
    "save",
    "step_distribution",
    "sup_distance",
    "support_of",
    "truncate",
    "validate",
]
