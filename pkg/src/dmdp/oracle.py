"""Exhaustive brute-force baselines for cross-checking the solvers.

Everything here enumerates whole policy spaces, so it is only usable on
tiny instances; the budget guard makes the blowup explicit instead of
letting a call run forever.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

import numpy as np

from .bellman import evaluate_policy
from .composition import GoalSet, goal_set
from .core import DmdpError, DmdpInstance, TimeVaryingPolicy, enumerate_decision_rules

DEFAULT_POLICY_BUDGET = 10**7


class OracleBudgetExceeded(DmdpError):
    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(
            f"enumeration requires {required} policies, exceeding the budget of {budget}"
        )


def count_policies(instance: DmdpInstance, max_len: int) -> int:
    """Number of policies of length 1..max_len: sum of |A|^(|S|*n)."""
    per_epoch = instance.num_actions**instance.num_states
    return sum(per_epoch**n for n in range(1, max_len + 1))


def enumerate_policies(
    instance: DmdpInstance,
    max_len: int,
    budget: int = DEFAULT_POLICY_BUDGET,
) -> Iterator[TimeVaryingPolicy]:
    """Yield every policy of length 1..max_len, shortest first, rules in
    lexicographic order within a length.  Raises OracleBudgetExceeded
    before yielding anything if the total count exceeds the budget."""
    if not 1 <= max_len <= instance.horizon:
        raise ValueError(f"max_len must be in 1..{instance.horizon}, got {max_len}")
    required = count_policies(instance, max_len)
    if required > budget:
        raise OracleBudgetExceeded(required=required, budget=budget)
    rules = list(enumerate_decision_rules(instance, cap=budget))

    def extend(prefix: tuple, length: int) -> Iterator[TimeVaryingPolicy]:
        if length == 0:
            yield TimeVaryingPolicy(prefix)
            return
        for rule in rules:
            yield from extend(prefix + (rule,), length - 1)

    for n in range(1, max_len + 1):
        yield from extend((), n)


class BruteForceResult(NamedTuple):
    policy: TimeVaryingPolicy
    value: float
    goal: GoalSet


def _brute_force(
    instance: DmdpInstance,
    start: int,
    target: GoalSet,
    max_len: int,
    budget: int,
    qualifies,
) -> BruteForceResult | None:
    if not 0 <= start < instance.num_states:
        raise ValueError(f"start state {start} out of range")
    if target.num_states != instance.num_states:
        raise ValueError("target goal set is over a different state space")
    best: BruteForceResult | None = None
    for policy in enumerate_policies(instance, max_len, budget):
        goal = goal_set(instance, policy, start)
        if not qualifies(goal):
            continue
        value = float(evaluate_policy(instance, policy).values[0, start])
        # Strict improvement keeps the earliest policy among ties, which
        # matches the enumeration's canonical order.
        if best is None or value > best.value:
            best = BruteForceResult(policy, value, goal)
    return best


def brute_force_reach(
    instance: DmdpInstance,
    start: int,
    target: GoalSet,
    max_len: int,
    budget: int = DEFAULT_POLICY_BUDGET,
) -> BruteForceResult | None:
    """Best policy whose goal set is contained in the target, or None."""
    return _brute_force(
        instance, start, target, max_len, budget, lambda g: g.issubset(target)
    )


def brute_force_cover(
    instance: DmdpInstance,
    start: int,
    target: GoalSet,
    max_len: int,
    budget: int = DEFAULT_POLICY_BUDGET,
) -> BruteForceResult | None:
    """Best policy whose goal set contains the target, or None."""
    return _brute_force(
        instance, start, target, max_len, budget, lambda g: target.issubset(g)
    )


def brute_force_optimal_value(
    instance: DmdpInstance, budget: int = DEFAULT_POLICY_BUDGET
) -> np.ndarray:
    """Unconstrained optimum per start state over all full-horizon
    policies — the slow mirror of the backward-induction V* row 0."""
    best = np.full(instance.num_states, -np.inf)
    rules = list(enumerate_decision_rules(instance, cap=budget))
    per_epoch = len(rules)
    if per_epoch**instance.horizon > budget:
        raise OracleBudgetExceeded(per_epoch**instance.horizon, budget)

    def full_length(prefix: tuple, remaining: int):
        nonlocal best
        if remaining == 0:
            vals = evaluate_policy(instance, TimeVaryingPolicy(prefix)).values[0]
            best = np.maximum(best, vals)
            return
        for rule in rules:
            full_length(prefix + (rule,), remaining - 1)

    full_length((), instance.horizon)
    return best


def realizable_goal_sets(
    instance: DmdpInstance,
    start: int,
    max_len: int,
    budget: int = DEFAULT_POLICY_BUDGET,
) -> tuple[GoalSet, ...]:
    """Every goal set realized by some policy of length 1..max_len from
    `start`, in first-realized order."""
    seen: dict[int, GoalSet] = {}
    for policy in enumerate_policies(instance, max_len, budget):
        g = goal_set(instance, policy, start)
        if g.mask not in seen:
            seen[g.mask] = g
    return tuple(seen.values())
