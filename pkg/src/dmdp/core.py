"""Core model types: finite-horizon MDPs with time-varying rewards.

An instance bundles a time-homogeneous transition kernel with one reward
table per epoch.  Policies are finite sequences of decision rules (one
action per state per epoch), so a policy of length n controls epochs
0..n-1 of the horizon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

# Tolerance for transition rows summing to one.  Loaded files round-trip
# decimal text, so row sums can be off by a few ulp.
STOCHASTIC_TOL = 1e-9

# Default ceiling on |A|^|S| when materializing all decision rules.
RULE_ENUMERATION_CAP = 4096

SignMode = Literal["any", "nonpositive"]


class DmdpError(Exception):
    """Base class for errors raised by this package."""


class EnumerationCapExceeded(DmdpError):
    """Materializing all decision rules would exceed the configured cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"enumerating decision rules requires {required} rules, "
            f"exceeding the cap of {cap}"
        )


class InstanceValidationError(DmdpError):
    """An instance failed validation where a valid one is required."""

    def __init__(self, report: "ValidationReport", context: str = ""):
        self.report = report
        head = context or "instance failed validation"
        lines = [
            f"{rule} at {loc}: {value!r}" for rule, loc, value in report.violations[:8]
        ]
        if len(report.violations) > 8:
            lines.append(f"... and {len(report.violations) - 8} more")
        super().__init__(head + ": " + "; ".join(lines))


@dataclass(frozen=True, eq=False)
class DmdpInstance:
    """A finite-horizon MDP with a stationary kernel and per-epoch rewards.

    transition has shape (num_states, num_actions, num_states); entry
    [s, a, s'] is the probability of moving to s' when playing a in s.
    reward has shape (horizon, num_states, num_actions).  r_max bounds
    |reward| and feeds the search pruning schedule.  sign_mode declares
    the intended reward sign regime ("nonpositive" for cost-style
    instances); it is an annotation checked by validate(), not enforced
    at construction.
    """

    num_states: int
    num_actions: int
    horizon: int
    gamma: float
    r_max: float
    transition: np.ndarray
    reward: np.ndarray
    sign_mode: SignMode = "any"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1 or self.horizon < 1:
            raise ValueError("num_states, num_actions and horizon must be >= 1")
        transition = np.ascontiguousarray(self.transition, dtype=np.float64)
        reward = np.ascontiguousarray(self.reward, dtype=np.float64)
        expected_p = (self.num_states, self.num_actions, self.num_states)
        if transition.shape != expected_p:
            raise ValueError(
                f"transition shape {transition.shape} != expected {expected_p}"
            )
        expected_r = (self.horizon, self.num_states, self.num_actions)
        if reward.shape != expected_r:
            raise ValueError(f"reward shape {reward.shape} != expected {expected_r}")
        transition.setflags(write=False)
        reward.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "r_max", float(self.r_max))


@dataclass(frozen=True)
class DecisionRule:
    """One action per state: the choice function for a single epoch."""

    actions: tuple[int, ...]

    def action_for(self, state: int) -> int:
        return self.actions[state]

    def check_against(self, instance: DmdpInstance) -> None:
        if len(self.actions) != instance.num_states:
            raise ValueError(
                f"decision rule covers {len(self.actions)} states, "
                f"instance has {instance.num_states}"
            )
        for s, a in enumerate(self.actions):
            if not 0 <= a < instance.num_actions:
                raise ValueError(f"action {a} for state {s} out of range")


@dataclass(frozen=True)
class TimeVaryingPolicy:
    """A sequence of decision rules; rule i is played at the i-th epoch
    after the policy's placement time."""

    rules: tuple[DecisionRule, ...]

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def is_empty(self) -> bool:
        return not self.rules

    def rule_at(self, i: int) -> DecisionRule:
        return self.rules[i]

    def extended(self, rule: DecisionRule) -> "TimeVaryingPolicy":
        return TimeVaryingPolicy(self.rules + (rule,))

    def encoding(self) -> tuple[tuple[int, ...], ...]:
        """Pure-int encoding, usable as a deterministic sort key."""
        return tuple(rule.actions for rule in self.rules)

    def check_against(self, instance: DmdpInstance) -> None:
        if len(self.rules) > instance.horizon:
            raise ValueError(
                f"policy length {len(self.rules)} exceeds horizon {instance.horizon}"
            )
        for rule in self.rules:
            rule.check_against(instance)

    @staticmethod
    def from_actions(actions) -> "TimeVaryingPolicy":
        """Build from an iterable of per-epoch action vectors."""
        return TimeVaryingPolicy(
            tuple(DecisionRule(tuple(int(a) for a in row)) for row in actions)
        )


EMPTY_POLICY = TimeVaryingPolicy(())


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate(): ok plus a list of (rule, location, value)."""

    ok: bool
    violations: tuple[tuple[str, tuple, float], ...]


def validate(instance: DmdpInstance, sign_mode: SignMode | None = None) -> ValidationReport:
    """Check model well-formedness; violations are data, not exceptions.

    Rules: gamma in [0,1); r_max >= 0; every transition row is a
    distribution (entries in [0,1], sum within STOCHASTIC_TOL of 1);
    |reward| <= r_max; and, under sign_mode="nonpositive", reward <= 0.
    sign_mode=None defers to the instance's declared sign_mode.
    """
    if sign_mode is None:
        sign_mode = instance.sign_mode
    if sign_mode not in ("any", "nonpositive"):
        raise ValueError(f"unknown sign_mode {sign_mode!r}")
    violations: list[tuple[str, tuple, float]] = []
    if not 0.0 <= instance.gamma < 1.0:
        violations.append(("gamma_range", (), instance.gamma))
    if instance.r_max < 0.0:
        violations.append(("r_max_nonnegative", (), instance.r_max))

    P = instance.transition
    for s in range(instance.num_states):
        for a in range(instance.num_actions):
            row = P[s, a]
            for sp in range(instance.num_states):
                p = row[sp]
                if p < 0.0 or p > 1.0:
                    violations.append(("transition_range", (s, a, sp), float(p)))
            total = float(row.sum())
            if abs(total - 1.0) > STOCHASTIC_TOL:
                violations.append(("stochasticity", (s, a), total))

    R = instance.reward
    for t in range(instance.horizon):
        for s in range(instance.num_states):
            for a in range(instance.num_actions):
                r = float(R[t, s, a])
                if abs(r) > instance.r_max:
                    violations.append(("reward_bound", (t, s, a), r))
                if sign_mode == "nonpositive" and r > 0.0:
                    violations.append(("reward_sign", (t, s, a), r))

    return ValidationReport(ok=not violations, violations=tuple(violations))


def make_static_gap_instance(gamma: float = 1.0 - 1e-9) -> DmdpInstance:
    """One state, two actions, two epochs, rewards swapping between epochs.

    The best static (rule repeated) policy earns 1, while alternating
    earns 1 + gamma: the canonical witness that time-varying policies
    strictly beat static ones under time-varying rewards.
    """
    transition = np.ones((1, 2, 1))
    reward = np.array([[[0.0, 1.0]], [[1.0, 0.0]]])
    return DmdpInstance(
        num_states=1,
        num_actions=2,
        horizon=2,
        gamma=gamma,
        r_max=1.0,
        transition=transition,
        reward=reward,
        sign_mode="any",
        metadata={"name": "static-gap"},
    )


def enumerate_decision_rules(
    instance: DmdpInstance, cap: int = RULE_ENUMERATION_CAP
) -> Iterator[DecisionRule]:
    """Yield all |A|^|S| decision rules in lexicographic order of their
    state-indexed action vectors.  Raises EnumerationCapExceeded first if
    the count would exceed cap."""
    required = instance.num_actions**instance.num_states
    if required > cap:
        raise EnumerationCapExceeded(required=required, cap=cap)
    for actions in itertools.product(
        range(instance.num_actions), repeat=instance.num_states
    ):
        yield DecisionRule(actions)
