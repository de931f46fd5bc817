import numpy as np
import pytest

from conftest import sparse_instance
from dmdp import (
    DmdpInstance,
    GdsConfig,
    GoalSet,
    InstanceValidationError,
    NodeBudgetExceeded,
    brute_force_cover,
    brute_force_reach,
    epsilon,
    evaluate_policy,
    gds_search,
    generate,
    realizable_goal_sets,
)


def self_loop_instance():
    P = np.zeros((2, 2, 2))
    P[0, :, 0] = 1.0
    P[1, :, 1] = 1.0
    reward = np.array(
        [[[-0.3, -0.1], [-0.5, -0.2]], [[-0.4, -0.6], [-0.1, -0.7]]]
    )
    return DmdpInstance(
        num_states=2, num_actions=2, horizon=2, gamma=0.5, r_max=1.0,
        transition=P, reward=reward, sign_mode="nonpositive",
    )


def absorbing_instance():
    # Everything flows into state 1 and stays; state 0 is never seen again.
    P = np.zeros((2, 2, 2))
    P[:, :, 1] = 1.0
    return DmdpInstance(
        num_states=2, num_actions=2, horizon=3, gamma=0.5, r_max=1.0,
        transition=P, reward=np.full((3, 2, 2), -0.25), sign_mode="nonpositive",
    )


def pruning_instance():
    """Reach target {1} is unrealizable (every goal set is {0,1}), so the
    search must drain its queue — and with a free action next to a costly
    one, deep costly branches fall behind the recorded best by more than
    the depth-2 slack epsilon = 1 and get pruned."""
    P = np.zeros((2, 2, 2))
    P[0, 0] = P[0, 1] = [0.5, 0.5]
    P[1, 0] = [0.0, 1.0]
    P[1, 1] = [0.5, 0.5]
    reward = np.zeros((3, 2, 2))
    reward[:, :, 1] = -0.9
    return DmdpInstance(
        num_states=2, num_actions=2, horizon=3, gamma=0.5, r_max=1.0,
        transition=P, reward=reward, sign_mode="nonpositive",
    )


# ---------------------------------------------------------------------------
# epsilon schedule


def test_epsilon_closed_form_cases():
    inst = generate(0, 3, 2, 3, 0.5)
    assert epsilon(inst, 0) == 4.0
    assert epsilon(inst, 1) == 2.0
    assert epsilon(inst, 2) == 1.0


def test_epsilon_zero_reward_bound():
    inst = DmdpInstance(
        num_states=1, num_actions=1, horizon=1, gamma=0.5, r_max=0.0,
        transition=np.ones((1, 1, 1)), reward=np.zeros((1, 1, 1)),
    )
    assert epsilon(inst, 0) == 0.0 and epsilon(inst, 3) == 0.0


def test_epsilon_matches_partial_sums():
    for gamma in (0.3, 0.5, 0.9):
        inst = generate(1, 2, 2, 2, gamma)
        for t in range(6):
            tail = sum(gamma**i for i in range(t, 400))
            assert abs(epsilon(inst, t) - inst.r_max / (1 - gamma) * tail) <= 1e-12


def test_epsilon_recurrence():
    inst = generate(2, 2, 2, 2, 0.7)
    for t in range(8):
        step = inst.gamma**t * inst.r_max / (1 - inst.gamma)
        assert abs(epsilon(inst, t + 1) - (epsilon(inst, t) - step)) <= 1e-12


# ---------------------------------------------------------------------------
# termination behavior


def test_reach_own_state_on_self_loops_returns_one_step_policy():
    inst = self_loop_instance()
    result = gds_search(inst, GdsConfig(start=0, target=GoalSet.from_states([0], 2)))
    assert result.found
    assert len(result.policy) == 1
    assert result.value == -0.1  # best epoch-0 action at the start state
    assert result.goal.members() == (0,)
    assert result.nodes_popped == 2  # root, then the winning child


def test_full_target_found_at_depth_one():
    inst = generate(4, 3, 2, 3, 0.5)
    for mode in ("reach", "cover"):
        result = gds_search(
            inst, GdsConfig(start=0, target=GoalSet.full(3), mode=mode)
        )
        assert result.found and len(result.policy) == 1


def test_unreachable_reach_target_drains_queue():
    inst = pruning_instance()
    result = gds_search(inst, GdsConfig(start=0, target=GoalSet.from_states([1], 2)))
    assert not result.found
    assert result.policy is None and result.value is None and result.goal is None
    assert brute_force_reach(inst, 0, GoalSet.from_states([1], 2), 3) is None


def test_cover_absent_on_absorbing_instance():
    inst = absorbing_instance()
    target = GoalSet.full(2)
    result = gds_search(inst, GdsConfig(start=0, target=target, mode="cover"))
    assert not result.found
    assert brute_force_cover(inst, 0, target, 3) is None


# ---------------------------------------------------------------------------
# pruning


def test_pruning_fires_and_is_justified():
    inst = pruning_instance()
    config = GdsConfig(
        start=0, target=GoalSet.from_states([1], 2), trace=True, verify=True
    )
    result = gds_search(inst, config)
    assert not result.found
    assert result.nodes_pruned >= 1
    prunes = [e for e in result.trace if e["event"] == "prune"]
    assert len(prunes) == result.nodes_pruned
    for event in prunes:
        # the recorded rival's goal set is contained in the pruned node's
        assert set(event["record_goal"]) <= set(event["goal"])
        # and the node trails it by at least the remaining-value slack
        assert event["value"] <= event["record_value"] - event["epsilon"]
        assert event["epsilon"] == epsilon(inst, event["depth"])


def test_pruning_never_changes_the_answer():
    # On every sweep instance the search result must equal brute force,
    # which does no pruning at all; see the oracle sweep below.  Here we
    # additionally pin the pruned/popped counts for reproducibility.
    inst = pruning_instance()
    config = GdsConfig(start=0, target=GoalSet.from_states([1], 2))
    first = gds_search(inst, config)
    second = gds_search(inst, config)
    assert first == second
    assert first.nodes_popped == second.nodes_popped
    assert first.nodes_pruned == second.nodes_pruned


# ---------------------------------------------------------------------------
# queue discipline


def test_pop_values_are_monotone_in_trace():
    for seed in (0, 5, 9):
        inst = sparse_instance(seed)
        config = GdsConfig(
            start=0, target=GoalSet.from_states([0], 3), trace=True
        )
        result = gds_search(inst, config)
        pops = [e["value"] for e in result.trace if e["event"] == "pop"]
        assert all(a >= b - 1e-12 for a, b in zip(pops, pops[1:]))


def test_queued_values_match_exact_evaluation():
    # verify=True re-derives every pushed node's value by backward
    # induction and raises on disagreement beyond 1e-10.
    for seed in range(10):
        inst = sparse_instance(seed)
        for mode in ("reach", "cover"):
            gds_search(
                inst,
                GdsConfig(start=0, target=GoalSet.full(3), mode=mode, verify=True),
            )


def test_found_value_equals_exact_policy_value():
    for seed in range(10):
        inst = sparse_instance(100 + seed)
        result = gds_search(inst, GdsConfig(start=0, target=GoalSet.full(3)))
        if not result.found:
            continue
        exact = evaluate_policy(inst, result.policy).values[0, 0]
        assert abs(result.value - exact) <= 1e-10


# ---------------------------------------------------------------------------
# oracle sweep


def test_search_matches_brute_force_on_sparse_sweep():
    total_targets = 0
    for seed in range(30):
        inst = sparse_instance(seed)
        for start in (0, 2):
            targets = set(realizable_goal_sets(inst, start, inst.horizon))
            # also probe singletons, realizable or not, for found-parity
            targets |= {GoalSet.from_states([s], 3) for s in range(3)}
            for target in targets:
                total_targets += 1
                for mode, brute in (
                    ("reach", brute_force_reach),
                    ("cover", brute_force_cover),
                ):
                    config = GdsConfig(start=start, target=target, mode=mode)
                    result = gds_search(inst, config)
                    expected = brute(inst, start, target, inst.horizon)
                    if expected is None:
                        assert not result.found
                        continue
                    assert result.found
                    assert abs(result.value - expected.value) <= 1e-9
                    if mode == "reach":
                        assert result.goal.issubset(target)
                    else:
                        assert target.issubset(result.goal)
    assert total_targets >= 100


# ---------------------------------------------------------------------------
# strictness switch


def test_strict_subset_changes_termination():
    inst = absorbing_instance()  # every goal set is exactly {1}
    singleton = GoalSet.from_states([1], 2)
    pair = GoalSet.full(2)

    # reach: {1} == {1} passes non-strict, fails strict.
    assert gds_search(inst, GdsConfig(start=0, target=singleton)).found
    assert not gds_search(
        inst, GdsConfig(start=0, target=singleton, strict_subset=True)
    ).found
    # reach with a wider target: {1} is a proper subset of {0,1}.
    strict_hit = gds_search(
        inst, GdsConfig(start=0, target=pair, strict_subset=True)
    )
    assert strict_hit.found and strict_hit.goal.members() == (1,)

    # cover: goal {1} contains target {1} non-strictly only.
    assert gds_search(inst, GdsConfig(start=0, target=singleton, mode="cover")).found
    assert not gds_search(
        inst, GdsConfig(start=0, target=singleton, mode="cover", strict_subset=True)
    ).found


# ---------------------------------------------------------------------------
# guards


def test_node_budget_exhaustion_raises():
    inst = pruning_instance()
    config = GdsConfig(
        start=0, target=GoalSet.from_states([1], 2), node_budget=1
    )
    with pytest.raises(NodeBudgetExceeded) as exc:
        gds_search(inst, config)
    assert exc.value.budget == 1


def test_search_requires_nonpositive_rewards():
    base = generate(3, 2, 2, 2, 0.5)
    reward = base.reward.copy()
    reward[0, 0, 0] = 0.5
    bad = DmdpInstance(
        num_states=2, num_actions=2, horizon=2, gamma=0.5, r_max=1.0,
        transition=base.transition, reward=reward,
    )
    with pytest.raises(InstanceValidationError):
        gds_search(bad, GdsConfig(start=0, target=GoalSet.full(2)))


def test_config_validation():
    with pytest.raises(ValueError):
        GdsConfig(start=0, target=GoalSet.from_states([], 2))
    with pytest.raises(ValueError):
        GdsConfig(start=0, target=GoalSet.full(2), mode="sideways")
    with pytest.raises(ValueError):
        GdsConfig(start=0, target=GoalSet.full(2), node_budget=0)
    inst = generate(0, 2, 2, 2, 0.5)
    with pytest.raises(ValueError):
        gds_search(inst, GdsConfig(start=5, target=GoalSet.full(2)))
    with pytest.raises(ValueError):
        gds_search(inst, GdsConfig(start=0, target=GoalSet.full(3)))


def test_search_is_deterministic_including_trace():
    inst = sparse_instance(7)
    config = GdsConfig(start=1, target=GoalSet.from_states([0, 1], 3), trace=True)
    assert gds_search(inst, config) == gds_search(inst, config)
