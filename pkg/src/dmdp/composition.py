"""Policy composition, state-distribution propagation, and goal sets.

The goal set of a policy from a start state is the support of the state
distribution at the policy's final epoch — the set of states the policy
can land in.  Support uses a strict positivity threshold so that exact
zeros produced by sparse kernels stay out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bellman import evaluate_policy, _rule_kernel
from .core import DecisionRule, DmdpInstance, TimeVaryingPolicy

# Probabilities at or below this are treated as "cannot happen".
SUPPORT_THRESHOLD = 1e-12

# States are packed into an int bitmask; beyond this width the encoding
# (and exhaustive goal-set reasoning generally) stops being sensible.
MAX_MASK_STATES = 64


@dataclass(frozen=True)
class GoalSet:
    """An immutable set of states, encoded as a bitmask over state ids."""

    mask: int
    num_states: int

    def __post_init__(self):
        if not 1 <= self.num_states <= MAX_MASK_STATES:
            raise ValueError(
                f"goal sets support 1..{MAX_MASK_STATES} states, got {self.num_states}"
            )
        if not 0 <= self.mask < (1 << self.num_states):
            raise ValueError(f"mask {self.mask:#x} out of range for {self.num_states} states")

    @classmethod
    def from_states(cls, states, num_states: int) -> "GoalSet":
        mask = 0
        for s in states:
            s = int(s)
            if not 0 <= s < num_states:
                raise ValueError(f"state {s} out of range for {num_states} states")
            mask |= 1 << s
        return cls(mask, num_states)

    @classmethod
    def full(cls, num_states: int) -> "GoalSet":
        return cls((1 << num_states) - 1, num_states)

    def members(self) -> tuple[int, ...]:
        return tuple(s for s in range(self.num_states) if self.mask >> s & 1)

    def __contains__(self, state: int) -> bool:
        return 0 <= state < self.num_states and bool(self.mask >> state & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def issubset(self, other: "GoalSet") -> bool:
        self._check_same_space(other)
        return self.mask & ~other.mask == 0

    def is_proper_subset(self, other: "GoalSet") -> bool:
        return self.issubset(other) and self.mask != other.mask

    def union(self, other: "GoalSet") -> "GoalSet":
        self._check_same_space(other)
        return GoalSet(self.mask | other.mask, self.num_states)

    def _check_same_space(self, other: "GoalSet") -> None:
        if self.num_states != other.num_states:
            raise ValueError("goal sets over different state spaces")


def support_of(dist: np.ndarray, threshold: float = SUPPORT_THRESHOLD) -> GoalSet:
    """States carrying probability mass above the threshold."""
    dist = np.asarray(dist)
    mask = 0
    for s in np.flatnonzero(dist > threshold):
        mask |= 1 << int(s)
    return GoalSet(mask, dist.shape[0])


def concat(
    first: TimeVaryingPolicy,
    second: TimeVaryingPolicy,
    horizon: int | None = None,
) -> TimeVaryingPolicy:
    """Play `first` to completion, then `second`.

    The empty policy is the identity on either side.  If horizon is
    given, a combined length beyond it is an error.
    """
    combined = TimeVaryingPolicy(first.rules + second.rules)
    if horizon is not None and len(combined) > horizon:
        raise ValueError(
            f"concatenated length {len(combined)} exceeds horizon {horizon}"
        )
    return combined


def truncate(policy: TimeVaryingPolicy, length: int) -> TimeVaryingPolicy:
    """Keep only the first `length` rules."""
    if not 0 <= length <= len(policy):
        raise ValueError(f"cannot truncate length-{len(policy)} policy to {length}")
    return TimeVaryingPolicy(policy.rules[:length])


def step_distribution(
    instance: DmdpInstance, dist: np.ndarray, rule: DecisionRule
) -> np.ndarray:
    """Push a state distribution through one epoch of the kernel under a rule."""
    return dist @ _rule_kernel(instance, rule)


def propagate(
    instance: DmdpInstance, policy: TimeVaryingPolicy, start: int
) -> np.ndarray:
    """State distributions along a policy from a point mass at `start`.

    Returns an array of len(policy) + 1 rows; row i is the distribution
    at epoch i (row 0 is the point mass itself).
    """
    policy.check_against(instance)
    if not 0 <= start < instance.num_states:
        raise ValueError(f"start state {start} out of range")
    dists = np.zeros((len(policy) + 1, instance.num_states))
    dists[0, start] = 1.0
    for i, rule in enumerate(policy.rules):
        dists[i + 1] = step_distribution(instance, dists[i], rule)
    return dists


def goal_set(instance: DmdpInstance, policy: TimeVaryingPolicy, start: int) -> GoalSet:
    """Support of the final state distribution of a nonempty policy."""
    if policy.is_empty:
        raise ValueError("goal set requires a policy of length >= 1")
    return support_of(propagate(instance, policy, start)[-1])


def concat_value_check(
    instance: DmdpInstance,
    first: TimeVaryingPolicy,
    second: TimeVaryingPolicy,
    t: int,
    start: int,
) -> tuple[float, float]:
    """Both sides of the concatenation value identity, for comparison.

    lhs: value of concat(first, second) at epoch t from `start`, read off
    the backward-induction table of the whole concatenation.

    rhs: the split form.  With n1 = len(first), for t < n1 it is
        V_t(first) + gamma^(n1-t) * E[V_0'(s_n1)]
    where V_0' values `second` placed at epoch n1 and s_n1 is drawn from
    the concatenation's distribution at epoch n1; for t >= n1 it is the
    tail value V_(t-n1)'(s_t) at the current state, i.e. its expectation
    under a point mass — both cases reduce to one expectation formula.
    """
    n1 = len(first)
    combined = concat(first, second, horizon=instance.horizon)
    if not 0 <= t < len(combined):
        raise ValueError(f"epoch {t} outside the concatenation's span")
    lhs = float(evaluate_policy(instance, combined).values[t, start])

    second_vals = evaluate_policy(instance, second, start_time=n1).values
    if t < n1:
        first_vals = evaluate_policy(instance, first).values
        # Distribution at epoch n1 conditioned on being at `start` at epoch t:
        # propagate the remaining first-part rules from a point mass (the
        # kernel is time-homogeneous, so placement does not matter here).
        tail = TimeVaryingPolicy(first.rules[t:])
        cond = propagate(instance, tail, start)[-1]
        rhs = float(
            first_vals[t, start]
            + instance.gamma ** (n1 - t) * float(cond @ second_vals[0])
        )
    else:
        rhs = float(second_vals[t - n1, start])
    return lhs, rhs
