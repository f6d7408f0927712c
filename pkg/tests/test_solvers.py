"""Core iteration machinery: step operators, action selection, certified
bounds, the solver engines, and the brute-force oracle."""

import math

import numpy as np
import pytest

import soundreach as sr
from conftest import random_model

INF = float("inf")


def prepared(model, direction=sr.Direction.MAXIMIZE, objective=sr.Objective.PROBABILITY):
    goal = model.label_mask("goal")
    absorbed = sr.make_absorbing(model, goal)
    if objective is sr.Objective.REWARD:
        return absorbed, sr.reward_partition(absorbed, goal)
    return absorbed, sr.reach_partition(absorbed, goal, direction)


# ---------------------------------------------------------------------------
# one-step operators
# ---------------------------------------------------------------------------


def test_bellman_f_pins_and_propagates(slow_chain):
    model, part = prepared(slow_chain)
    x0 = np.zeros(5)
    x1 = sr.bellman_step_f(model, part, x0)
    np.testing.assert_allclose(x1, [0, 0, 0, 0, 1])
    x2 = sr.bellman_step_f(model, part, x1)
    # state 2 now sees the goal through its 0.3 edge; the sure-loser stays 0
    np.testing.assert_allclose(x2, [0, 0, 0.3, 0, 1])
    x3 = sr.bellman_step_f(model, part, x2)
    np.testing.assert_allclose(x3, [0, 0.003, 0.3, 0, 1])


def test_bellman_f_direction(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    up = sr.bellman_step_f(model, part, x)
    down = sr.bellman_step_f(model, part, x, sr.Direction.MINIMIZE)
    # state 0: keep-trying yields 0, jumping yields 0.24
    assert up[0] == pytest.approx(0.24)
    assert down[0] == pytest.approx(0.0)


def test_bellman_g_adds_reward():
    model = sr.validate_model(
        [[{0: 0.5, 1: 0.5}], [{1: 1.0}]],
        rewards=[[1.0], [0.0]],
        labels={"init": [0], "goal": [1]},
    )
    part = sr.reward_partition(model, model.label_mask("goal"))
    g0 = sr.bellman_step_g(model, part, np.zeros(2))
    np.testing.assert_allclose(g0, [1.0, 0.0])
    g1 = sr.bellman_step_g(model, part, g0)
    np.testing.assert_allclose(g1, [1.5, 0.0])


def test_bellman_h_shrinks_undecided_mass(slow_chain):
    model, part = prepared(slow_chain)
    y = np.zeros(5)
    y[part.maybe] = 1.0
    y1 = sr.bellman_step_h(model, part, y)
    np.testing.assert_allclose(y1, [1.0, 1.0, 0.6, 0.0, 0.0])
    y2 = sr.bellman_step_h(model, part, y1)
    np.testing.assert_allclose(y2, [1.0, 0.996, 0.6, 0.0, 0.0])


def test_bellman_h_needs_scheduler_on_mdp(branching_mdp):
    model, part = prepared(branching_mdp)
    y = np.zeros(5)
    y[part.maybe] = 1.0
    with pytest.raises(sr.ConfigError):
        sr.bellman_step_h(model, part, y)
    picked = sr.bellman_step_h(model, part, y, scheduler=np.array([1, 0, 0, 0, 0]))
    np.testing.assert_allclose(picked, [0.8, 1.0, 0.6, 0.0, 0.0])


# ---------------------------------------------------------------------------
# action selection and the decision value
# ---------------------------------------------------------------------------


def test_find_action_weighs_bound(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    y = np.array([1.0, 1.0, 0.6, 0.0, 0.0])
    # low bound: undecided mass is worth little, the immediate jump wins;
    # high bound: keeping mass in play wins
    assert sr.find_action(model, x, y, 0, 0.0) == 1
    assert sr.find_action(model, x, y, 0, 1.0) == 0


def test_find_action_breaks_ties_low():
    model = sr.validate_model(
        [[{1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5}], [{1: 1.0}], [{2: 1.0}]],
        labels={"init": [0], "goal": [1]},
    )
    model, part = prepared(model)
    x = np.array([0.0, 1.0, 0.0])
    y = np.array([1.0, 0.0, 0.0])
    assert sr.find_action(model, x, y, 0, 0.7) == 0


def test_find_action_unbounded_prefers_survival(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    y = np.array([1.0, 1.0, 0.6, 0.0, 0.0])
    # with no finite bound the undecided mass dominates lexicographically:
    # retrying keeps weight 1.0 in play versus 0.48 for the jump.  The same
    # tilt applies when minimizing — there the implicit weight is -inf, so a
    # larger undecided share again wins the comparison
    assert sr.find_action(model, x, y, 0, INF) == 0
    assert sr.find_action(model, x, y, 0, -INF, sr.Direction.MINIMIZE) == 0


def test_find_action_unbounded_secondary_component():
    # equal y on both choices: the tie moves to the decided part x
    model = sr.validate_model(
        [
            [{1: 0.5, 3: 0.5}, {2: 0.5, 3: 0.5}],
            [{1: 1.0}],
            [{2: 1.0}],
            [{3: 1.0}],
        ],
        labels={"init": [0], "goal": [1]},
    )
    goal = model.label_mask("goal")
    model = sr.make_absorbing(model, goal)
    x = np.array([0.0, 1.0, 0.4, 0.0])
    y = np.array([1.0, 0.0, 0.0, 0.0])
    assert sr.find_action(model, x, y, 0, INF) == 0
    assert sr.find_action(model, x, y, 0, INF, sr.Direction.MINIMIZE) == 1


def test_find_action_reward_counts_immediate_gain():
    model = sr.validate_model(
        [[{1: 1.0}, {1: 1.0}], [{1: 1.0}]],
        rewards=[[0.0, 5.0], [0.0]],
        labels={"init": [0], "goal": [1]},
    )
    x = np.array([0.0, 0.0])
    y = np.array([0.0, 0.0])
    picked = sr.find_action(
        model, x, y, 0, 0.0, sr.Direction.MAXIMIZE, sr.Objective.REWARD
    )
    assert picked == 1
    picked_min = sr.find_action(
        model, x, y, 0, 0.0, sr.Direction.MINIMIZE, sr.Objective.REWARD
    )
    assert picked_min == 0


def test_decision_value_hand_computed(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    y = np.array([1.0, 1.0, 0.6, 0.0, 0.0])
    # chosen: retry (X=0, Y=1); alternative: jump (X=0.24, Y=0.48)
    # the alternative overtakes once the bound drops to 0.24/0.52
    d = sr.decision_value(model, x, y, 0, 0)
    assert d == pytest.approx(0.24 / 0.52, abs=1e-15)


def test_decision_value_no_eligible_alternative(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    y = np.array([1.0, 1.0, 0.6, 0.0, 0.0])
    # chosen: jump (lower y) -> the retry alternative has larger y, so no
    # smaller bound can make the chosen one look worse
    assert sr.decision_value(model, x, y, 0, 1) == -INF
    assert (
        sr.decision_value(model, x, y, 0, 1, sr.Direction.MINIMIZE) == INF
    )


def test_decision_value_neutral_on_single_choice(slow_chain):
    model, part = prepared(slow_chain)
    x = np.zeros(5)
    y = np.zeros(5)
    assert sr.decision_value(model, x, y, 0, 0) == -INF


# ---------------------------------------------------------------------------
# certified global bounds
# ---------------------------------------------------------------------------


def test_update_global_bounds_blocked_while_mass_stuck(slow_chain):
    model, part = prepared(slow_chain)
    x = np.array([0.0, 0.0, 0.3, 0.0, 1.0])
    y = np.array([1.0, 1.0, 0.6, 0.0, 0.0])  # state 0 still fully undecided
    lo, up = sr.update_global_bounds(x, y, part, 0.0, 1.0, -INF)
    assert (lo, up) == (0.0, 1.0)


def test_update_global_bounds_ratio_window():
    model = sr.validate_model(
        [[{1: 0.5, 2: 0.25, 0: 0.25}], [{1: 1.0}], [{2: 1.0}]],
        labels={"init": [0], "goal": [1]},
    )
    model, part = prepared(model)
    x = np.array([0.5, 1.0, 0.0])
    y = np.array([0.25, 0.0, 0.0])
    lo, up = sr.update_global_bounds(x, y, part, 0.0, 1.0, -INF)
    # single maybe state: both ratios are x/(1-y) = 0.5/0.75
    assert lo == pytest.approx(2 / 3)
    assert up == pytest.approx(2 / 3)


def test_update_global_bounds_decision_holds_upper(branching_mdp):
    model, part = prepared(branching_mdp)
    x = np.array([0.2, 0.3, 0.5, 0.0, 1.0])
    y = np.array([0.5, 0.5, 0.25, 0.0, 0.0])
    plain_lo, plain_up = sr.update_global_bounds(x, y, part, 0.0, 1.0, -INF)
    held_lo, held_up = sr.update_global_bounds(x, y, part, 0.0, 1.0, 0.95)
    assert held_lo == plain_lo
    assert held_up == pytest.approx(0.95)  # the decision value props the upper bound
    assert plain_up < 0.95


def test_update_global_bounds_never_widens():
    model = sr.validate_model(
        [[{1: 0.5, 2: 0.25, 0: 0.25}], [{1: 1.0}], [{2: 1.0}]],
        labels={"init": [0], "goal": [1]},
    )
    model, part = prepared(model)
    x = np.array([0.5, 1.0, 0.0])
    y = np.array([0.25, 0.0, 0.0])
    lo, up = sr.update_global_bounds(x, y, part, 0.68, 0.66, -INF)
    assert lo == 0.68 and up == 0.66  # stale tighter bounds win


def test_update_global_bounds_min_mirror(two_route_mdp):
    model, part = prepared(two_route_mdp, sr.Direction.MINIMIZE)
    x = np.array([0.1, 0.19, 0.1, 1.0, 1.0, 0.0, 0.0])
    y = np.array([0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    lo, up = sr.update_global_bounds(
        x, y, part, 0.0, 1.0, 0.05, sr.Direction.MINIMIZE
    )
    # minimizing: the decision value can drag the lower bound down,
    # the upper bound comes from the largest ratio
    ratios = [0.1 / 0.6, 0.19, 0.1]
    assert up == pytest.approx(max(ratios))
    assert lo == pytest.approx(0.05)


# ---------------------------------------------------------------------------
# the sound engine
# ---------------------------------------------------------------------------


def test_svi_golden_chain(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.svi_solve(model, part, sr.SolverConfig(epsilon=1e-6, record_trace=True))
    assert res.iterations == 3
    assert res.sound
    assert res.method is sr.Method.SVI
    assert res.value == pytest.approx(0.75, abs=1e-9)
    assert res.lower == pytest.approx(0.75, abs=1e-11)
    assert res.upper == pytest.approx(0.75, abs=1e-11)
    assert res.lower <= res.value <= res.upper + 1e-15
    # the two-hop feeder keeps full mass undecided for two rounds, so the
    # certified window only snaps shut at the third step
    assert res.trace[0].lower == -INF and res.trace[0].upper == INF
    assert res.trace[1].lower == -INF and res.trace[1].upper == INF
    assert res.trace[2].lower == pytest.approx(0.75, abs=1e-11)


def test_svi_exact_when_everything_decides():
    model = sr.validate_model(
        [[{1: 0.5, 2: 0.5}], [{1: 1.0}], [{2: 1.0}]],
        labels={"init": [0], "goal": [1]},
    )
    model2, part = prepared(model)
    res = sr.svi_solve(model2, part, sr.SolverConfig(epsilon=1e-10))
    assert res.iterations == 1
    assert res.value == 0.5
    assert res.lower == res.upper == 0.5


def test_svi_two_route_min(two_route_mdp):
    model, part = prepared(two_route_mdp, sr.Direction.MINIMIZE)
    res = sr.svi_solve(
        model, part,
        sr.SolverConfig(direction=sr.Direction.MINIMIZE, epsilon=1e-6),
    )
    assert res.value == pytest.approx(0.152, abs=1e-9)
    assert res.iterations == 3


def test_svi_reward_exact():
    model = sr.validate_model(
        [[{0: 0.5, 1: 0.5}], [{1: 1.0}]],
        rewards=[[1.0], [0.0]],
        labels={"init": [0], "goal": [1]},
    )
    part = sr.reward_partition(model, model.label_mask("goal"))
    res = sr.svi_solve(
        model, part, sr.SolverConfig(objective=sr.Objective.REWARD, epsilon=1e-6)
    )
    # expected visits of the self-loop state: 2, one unit of reward each
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert res.iterations == 1  # y hits zero immediately: single maybe state


def test_svi_iteration_limit_carries_partial(slow_chain):
    model, part = prepared(slow_chain)
    with pytest.raises(sr.IterationLimit) as info:
        sr.svi_solve(model, part, sr.SolverConfig(epsilon=1e-6, max_iterations=2))
    partial = info.value.partial
    assert partial is not None
    assert partial.iterations == 2
    assert not partial.sound


def test_svi_hook_sees_every_iteration(slow_chain):
    model, part = prepared(slow_chain)
    seen = []

    def hook(state, previous):
        seen.append((state.k, previous.k))
        assert state.scheduler is None  # chains carry no scheduler

    sr.svi_solve(model, part, sr.SolverConfig(epsilon=1e-6), hook)
    assert [k for k, _ in seen] == [1, 2, 3]
    # the first call pairs iteration 1 with the starting vectors (k = 0)
    assert [p for _, p in seen] == [0, 1, 2]


def test_svi_trace_absent_by_default(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.svi_solve(model, part, sr.SolverConfig(epsilon=1e-6))
    assert res.trace is None


# ---------------------------------------------------------------------------
# the classic engines
# ---------------------------------------------------------------------------


def test_vi_is_marked_unsound_and_undershoots(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.vi_solve(model, part, sr.SolverConfig(method=sr.Method.VI, epsilon=1e-6))
    assert not res.sound
    # the slow feeder makes plain value iteration stop 2.5% short of 0.75
    assert 0.72 < res.value < 0.73
    assert res.iterations > 10_000


def test_vi_gauss_seidel_agrees(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.vi_solve(
        model, part,
        sr.SolverConfig(method=sr.Method.VI, epsilon=1e-6, gauss_seidel=True),
    )
    assert not res.sound
    assert 0.70 < res.value <= 0.7500000001


def test_ii_chain_converges_slowly(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.ii_solve(model, part, sr.SolverConfig(method=sr.Method.II, epsilon=1e-6))
    assert res.sound
    assert res.value == pytest.approx(0.75, abs=1e-6)
    assert res.lower <= res.value <= res.upper
    assert res.iterations > 100_000  # pays one sweep per side of the window


def test_ii_requires_reward_bounds():
    model = sr.validate_model(
        [[{0: 0.5, 1: 0.5}], [{1: 1.0}]],
        rewards=[[1.0], [0.0]],
        labels={"init": [0], "goal": [1]},
    )
    part = sr.reward_partition(model, model.label_mask("goal"))
    with pytest.raises(sr.MissingRewardBounds):
        sr.ii_solve(
            model, part,
            sr.SolverConfig(method=sr.Method.II, objective=sr.Objective.REWARD),
        )
    res = sr.ii_solve(
        model, part,
        sr.SolverConfig(
            method=sr.Method.II, objective=sr.Objective.REWARD,
            epsilon=1e-6, lower=0.0, upper=10.0,
        ),
    )
    assert res.value == pytest.approx(2.0, abs=1e-6)


def test_ii_accepts_vector_bounds(slow_chain):
    model, part = prepared(slow_chain)
    res = sr.ii_solve(
        model, part,
        sr.SolverConfig(
            method=sr.Method.II, epsilon=1e-6,
            lower_vector=np.zeros(5), upper_vector=np.ones(5),
        ),
    )
    assert res.value == pytest.approx(0.75, abs=1e-6)


# ---------------------------------------------------------------------------
# the brute-force oracle
# ---------------------------------------------------------------------------


def test_oracle_chain_values(slow_chain):
    model, part = prepared(slow_chain)
    values = sr.oracle_solve(model, part)
    np.testing.assert_allclose(values, [0.75, 0.75, 0.75, 0.0, 1.0], atol=1e-12)


def test_oracle_two_route_both_directions(two_route_mdp):
    model, part = prepared(two_route_mdp)
    up = sr.oracle_solve(model, part)
    np.testing.assert_allclose(up, [0.5, 0.19, 0.1, 1, 1, 0, 0], atol=1e-12)
    model_min, part_min = prepared(two_route_mdp, sr.Direction.MINIMIZE)
    down = sr.oracle_solve(
        model_min, part_min, direction=sr.Direction.MINIMIZE
    )
    np.testing.assert_allclose(down, [0.152, 0.19, 0.1, 1, 1, 0, 0], atol=1e-12)


def test_oracle_against_direct_linear_solve():
    # independent cross-check: solve (I - P) v = b restricted to the maybe
    # block of a chain, assembled here from scratch
    rng = np.random.default_rng(5)
    for _ in range(20):
        model, goal = random_model(rng, force_mdp=False)
        absorbed = sr.make_absorbing(model, goal)
        part = sr.reach_partition(absorbed, goal, sr.Direction.MAXIMIZE)
        values = sr.oracle_solve(absorbed, part)

        maybe = np.flatnonzero(part.maybe)
        pos = {int(s): i for i, s in enumerate(maybe)}
        a = np.eye(len(maybe))
        b = np.zeros(len(maybe))
        for i, s in enumerate(maybe):
            targets, probs = absorbed.entries_of(int(absorbed.row_group_start[s]))
            for t, p in zip(targets.tolist(), probs.tolist()):
                if part.goal[t]:
                    b[i] += p
                elif t in pos:
                    a[i, pos[t]] -= p
        expected = np.linalg.solve(a, b)
        np.testing.assert_allclose(values[maybe], expected, atol=1e-9)
        np.testing.assert_allclose(values[part.goal], 1.0)
        np.testing.assert_allclose(values[part.s0], 0.0)


def test_oracle_size_limits():
    big = sr.validate_model(
        [[{min(s + 1, 12): 1.0}] for s in range(13)],
        labels={"init": [0], "goal": [12]},
    )
    model, part = prepared(big)
    with pytest.raises(sr.TooLargeForOracle):
        sr.oracle_solve(model, part)


def test_oracle_scheduler_limit():
    # nine non-goal states with 3 choices each: 3^9 positional schedulers
    model = sr.validate_model(
        [
            [{(s + 1) % 10: 1.0}, {s: 0.5, (s + 1) % 10: 0.5}, {9: 1.0}]
            for s in range(10)
        ],
        labels={"init": [0], "goal": [9]},
    )
    goal = model.label_mask("goal")
    absorbed = sr.make_absorbing(model, goal)
    part = sr.reach_partition(absorbed, goal, sr.Direction.MAXIMIZE)
    with pytest.raises(sr.TooLargeForOracle):
        sr.oracle_solve(absorbed, part)


def test_oracle_rejects_noncontracting_rewards(slow_chain):
    goal = np.zeros(5, dtype=bool)
    goal[4] = True  # state 3 keeps looping outside the goal
    absorbed = sr.make_absorbing(slow_chain, goal)
    part = sr.reward_partition(absorbed, goal)
    with pytest.raises(sr.NotContracting):
        sr.oracle_solve(absorbed, part, sr.Objective.REWARD)


# ---------------------------------------------------------------------------
# the full query pipeline
# ---------------------------------------------------------------------------


def test_solve_accepts_label_and_mask(slow_chain):
    cfg = sr.SolverConfig(epsilon=1e-6)
    by_label = sr.solve(slow_chain, "goal", cfg)
    mask = np.zeros(5, dtype=bool)
    mask[4] = True
    by_mask = sr.solve(slow_chain, mask, cfg)
    assert by_label.value == by_mask.value
    with pytest.raises(KeyError):
        sr.solve(slow_chain, "nonexistent", cfg)


def test_solve_shortcut_initial_in_goal():
    model = sr.validate_model(
        [[{0: 1.0}], [{0: 1.0}]],
        labels={"init": [0], "goal": [0]},
    )
    res = sr.solve(model, "goal", sr.SolverConfig())
    assert res.value == 1.0 and res.iterations == 0
    assert res.lower == res.upper == 1.0
    reward = sr.solve(
        model, "goal", sr.SolverConfig(objective=sr.Objective.REWARD)
    )
    assert reward.value == 0.0


def test_solve_shortcut_initial_sure_zero():
    model = sr.validate_model(
        [[{0: 1.0}], [{1: 1.0}]],
        labels={"init": [0], "goal": [1]},
    )
    res = sr.solve(model, "goal", sr.SolverConfig())
    assert res.value == 0.0 and res.iterations == 0


def test_solve_rejects_reward_on_escaping_model(slow_chain):
    # target only the winning sink: the losing sink loops forever, so total
    # reward up to the goal is not well defined
    mask = np.zeros(5, dtype=bool)
    mask[4] = True
    with pytest.raises(sr.RewardOnMec):
        sr.solve(
            slow_chain, mask, sr.SolverConfig(objective=sr.Objective.REWARD)
        )


def test_solve_min_routes_avoidance_into_sure_zero():
    # a state that can dodge the goal forever has minimal value 0; the
    # qualitative pass classifies it up front and the query short-circuits
    model = sr.validate_model(
        [
            [{1: 1.0}, {2: 1.0}],
            [{1: 1.0}],
            [{2: 1.0}],
        ],
        labels={"init": [0], "goal": [2]},
    )
    res = sr.solve(
        model, "goal",
        sr.SolverConfig(direction=sr.Direction.MINIMIZE, epsilon=1e-6),
    )
    assert res.value == 0.0
    assert res.iterations == 0
    assert res.sound


def test_solve_collapses_components_for_max():
    # 0 <-> 1 swap mass forever unless the exit fires; the collapsed model
    # still reports the exact value
    model = sr.validate_model(
        [
            [{1: 1.0}, {2: 0.5, 3: 0.5}],
            [{0: 1.0}],
            [{2: 1.0}],
            [{3: 1.0}],
        ],
        labels={"init": [0], "goal": [2]},
    )
    res = sr.solve(model, "goal", sr.SolverConfig(epsilon=1e-8))
    assert res.value == pytest.approx(0.5, abs=1e-8)
    assert res.sound


def test_solve_methods_agree(branching_mdp):
    svi = sr.solve(branching_mdp, "goal", sr.SolverConfig(epsilon=1e-8))
    ii = sr.solve(
        branching_mdp, "goal", sr.SolverConfig(method=sr.Method.II, epsilon=1e-8)
    )
    vi = sr.solve(
        branching_mdp, "goal", sr.SolverConfig(method=sr.Method.VI, epsilon=1e-8)
    )
    assert svi.value == pytest.approx(ii.value, abs=1e-7)
    assert svi.value == pytest.approx(0.75, abs=1e-8)
    assert vi.value < svi.value  # cut short, and knows it: vi.sound is False


def test_solve_time_covers_preprocessing(slow_chain):
    res = sr.solve(slow_chain, "goal", sr.SolverConfig(epsilon=1e-6))
    assert res.time_ms > 0.0


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"epsilon": 0.0},
        {"epsilon": -1e-9},
        {"max_iterations": 0},
        {"lower": 1.0, "upper": 0.0},
        {"method": sr.Method.VI, "topological": True},
        {"method": sr.Method.II, "topological": True},
    ],
)
def test_bad_configs_rejected(kwargs):
    with pytest.raises(sr.ConfigError):
        sr.SolverConfig(**kwargs).validated()


def test_config_is_frozen():
    cfg = sr.SolverConfig()
    with pytest.raises(AttributeError):
        cfg.epsilon = 2.0


# ---------------------------------------------------------------------------
# randomized agreement
# ---------------------------------------------------------------------------


def test_random_models_sound_methods_match_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        model, goal = random_model(rng)
        res = sr.solve(model, goal, sr.SolverConfig(epsilon=1e-8))
        absorbed = sr.make_absorbing(model, goal)
        part = sr.reach_partition(absorbed, goal, sr.Direction.MAXIMIZE)
        quotient = sr.collapse_end_components(absorbed, part)
        oracle = sr.oracle_solve(quotient.model, quotient.partition)
        want = oracle[quotient.state_map[model.initial_state]]
        assert res.value == pytest.approx(want, abs=1e-8)
        assert res.lower - 1e-12 <= want <= res.upper + 1e-12
