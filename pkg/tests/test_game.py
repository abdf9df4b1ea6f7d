import math

import numpy as np
import pytest

from conftest import assert_close, feasible_instances, make_instance
from noma_grouping import (
    Action,
    action_effect,
    enumerate_leagues,
    initial_grouping,
    is_nash_equilibrium,
    run_game,
    solve_all_powers,
)
from noma_grouping.power import total_power_or_inf
from noma_grouping.scenario import ChannelGains


class TestInitialGrouping:
    def test_argmax_channel(self):
        gain = np.zeros((1, 3, 1))
        gain[0, :, 0] = [1e-12, 3e-12, 2e-12]
        scenario, _ = make_instance(1, 3, 1, seed=1)
        scenario.association = np.array([0])
        grouping = initial_grouping(ChannelGains(gain=gain), scenario)
        assert int(grouping.channel_of[0]) == 1

    def test_tie_breaks_to_lowest_channel(self):
        gain = np.full((1, 3, 1), 2e-12)
        scenario, _ = make_instance(1, 3, 1, seed=2)
        scenario.association = np.array([0])
        grouping = initial_grouping(ChannelGains(gain=gain), scenario)
        assert int(grouping.channel_of[0]) == 0

    def test_single_channel(self):
        scenario, gains = make_instance(9, 1, 2, seed=3)
        grouping = initial_grouping(gains, scenario)
        assert np.all(grouping.channel_of == 0)


class TestActionEffect:
    def test_empty_action_is_zero(self):
        for scenario, gains, grouping, _sol in feasible_instances(1, 10, 2, 2, start_seed=10):
            assert action_effect(gains, scenario, grouping, Action(bs=0, moves=[])) == 0.0

    def test_action_and_inverse_cancel(self):
        for scenario, gains, grouping, _sol in feasible_instances(2, 10, 3, 2, start_seed=20):
            users = scenario.users_of_bs(0)
            n = users[0]
            old = int(grouping.channel_of[n])
            new = (old + 1) % 3
            forward = action_effect(gains, scenario, grouping, Action(bs=0, moves=[(n, new)]))
            if not math.isfinite(forward):
                continue
            moved = grouping.with_moves([(n, new)])
            backward = action_effect(gains, scenario, moved, Action(bs=0, moves=[(n, old)]))
            assert_close(forward + backward, 0.0)

    def test_validation(self):
        scenario, gains = make_instance(8, 2, 2, seed=4)
        grouping = initial_grouping(gains, scenario)
        foreign = scenario.users_of_bs(1)[0]
        with pytest.raises(ValueError):
            action_effect(gains, scenario, grouping, Action(bs=0, moves=[(foreign, 0)]))
        own = scenario.users_of_bs(0)[0]
        cur = int(grouping.channel_of[own])
        with pytest.raises(ValueError):
            action_effect(gains, scenario, grouping, Action(bs=0, moves=[(own, cur)]))

    def test_repair_move_is_always_attractive(self):
        # wreck a feasible grouping by piling one BS's users onto one
        # channel; the action restoring them must rate as -inf
        for scenario, gains, grouping, _sol in feasible_instances(4, 12, 3, 2, start_seed=15):
            users = scenario.users_of_bs(0)
            wreck = grouping.with_moves([(n, 0) for n in users])
            if solve_all_powers(gains, wreck, scenario).feasible:
                continue
            restore = [
                (n, int(grouping.channel_of[n]))
                for n in users
                if int(wreck.channel_of[n]) != int(grouping.channel_of[n])
            ]
            effect = action_effect(gains, scenario, wreck, Action(bs=0, moves=restore))
            assert effect == -math.inf
            return
        pytest.skip("no wreckable instance found in the scanned range")

    def test_exact_potential_identity(self):
        # two alternative actions of one BS: effect difference equals the
        # difference of the resulting totals (regression for the potential)
        for scenario, gains, grouping, _sol in feasible_instances(3, 12, 3, 2, start_seed=30):
            users = scenario.users_of_bs(0)
            n = users[0]
            old = int(grouping.channel_of[n])
            act1 = Action(bs=0, moves=[(n, (old + 1) % 3)])
            act2 = Action(bs=0, moves=[(n, (old + 2) % 3)])
            d1 = action_effect(gains, scenario, grouping, act1)
            d2 = action_effect(gains, scenario, grouping, act2)
            if not (math.isfinite(d1) and math.isfinite(d2)):
                continue
            t1 = total_power_or_inf(solve_all_powers(gains, grouping.with_moves(act1.moves), scenario))
            t2 = total_power_or_inf(solve_all_powers(gains, grouping.with_moves(act2.moves), scenario))
            assert_close(d1 - d2, t1 - t2)


class TestNashEquilibrium:
    def test_single_user_total(self):
        scenario, gains = make_instance(1, 2, 1, seed=5)
        grouping = initial_grouping(gains, scenario)
        assert is_nash_equilibrium(gains, scenario, grouping, 2)

    def test_planted_improvement_is_detected(self):
        # search instances until one has an improving league at the start
        found = False
        for seed in range(60):
            scenario, gains = make_instance(10, 3, 1, seed=seed)
            grouping = initial_grouping(gains, scenario)
            solution = solve_all_powers(gains, grouping, scenario)
            if not solution.feasible:
                continue
            leagues = enumerate_leagues(gains, scenario, grouping, 3)
            if leagues:
                found = True
                assert not is_nash_equilibrium(gains, scenario, grouping, 3)
                break
        assert found

    def test_eba_result_is_equilibrium(self):
        done = 0
        for scenario, gains, _grouping, _sol in feasible_instances(3, 9, 3, 2, start_seed=40):
            grouping, solution, trace = run_game(gains, scenario, finder="eba")
            assert trace.converged
            assert is_nash_equilibrium(gains, scenario, grouping, 3)
            done += 1
        assert done == 3


class TestRunGame:
    def test_no_moves_possible(self):
        # one user per BS and a single channel: nothing can move
        scenario, gains = make_instance(2, 1, 2, seed=6)
        grouping, solution, trace = run_game(gains, scenario, finder="fga")
        assert trace.iterations == []
        assert trace.converged == solution.feasible

    def test_trace_strictly_decreasing_and_finite(self):
        for scenario, gains, _grouping, _sol in feasible_instances(3, 14, 3, 2, start_seed=50):
            _g, solution, trace = run_game(gains, scenario, finder="fga", alpha=5.0)
            last = math.inf
            for step in trace.iterations:
                assert step.total_power_after_w < step.total_power_before_w
                assert step.total_power_before_w <= last * (1 + 1e-12)
                last = step.total_power_after_w
            assert trace.converged
            assert trace.final_total_power_w == pytest.approx(
                total_power_or_inf(solution)
            )

    def test_no_grouping_repeats(self):
        for scenario, gains, grouping, _sol in feasible_instances(2, 14, 3, 2, start_seed=60):
            seen = {grouping.key()}
            current = grouping
            _g, _s, trace = run_game(gains, scenario, finder="fga", start_grouping=grouping)
            from noma_grouping.game import apply_action

            for step in trace.iterations:
                current = apply_action(current, step.action)
                key = current.key()
                assert key not in seen
                seen.add(key)

    def test_trace_totals_match_fresh_solves(self):
        for scenario, gains, grouping, solution in feasible_instances(2, 12, 3, 2, start_seed=70):
            current = grouping
            _g, _s, trace = run_game(gains, scenario, finder="fga", start_grouping=grouping)
            from noma_grouping.game import apply_action

            before = total_power_or_inf(solution)
            for step in trace.iterations:
                assert_close(step.total_power_before_w, before)
                current = apply_action(current, step.action)
                after = total_power_or_inf(solve_all_powers(gains, current, scenario))
                assert_close(step.total_power_after_w, after)
                before = after

    def test_resume_from_converged_state_is_stable(self):
        for scenario, gains, _grouping, _sol in feasible_instances(2, 10, 2, 2, start_seed=80):
            grouping, solution, trace = run_game(gains, scenario, finder="fga")
            again, solution2, trace2 = run_game(
                gains, scenario, finder="fga", start_grouping=grouping
            )
            assert trace2.iterations == []
            assert np.array_equal(again.channel_of, grouping.channel_of)

    def test_unknown_finder_rejected(self):
        scenario, gains = make_instance(4, 2, 1, seed=7)
        with pytest.raises(ValueError):
            run_game(gains, scenario, finder="magic")

    def test_infeasible_start_without_repair(self):
        # hunt for an instance whose starting grouping cannot be powered
        found = False
        for seed in range(80):
            scenario, gains = make_instance(14, 2, 2, seed=seed)
            grouping = initial_grouping(gains, scenario)
            if solve_all_powers(gains, grouping, scenario).feasible:
                continue
            found = True
            _g, solution, trace = run_game(gains, scenario, finder="fga")
            if not solution.feasible:
                assert not trace.converged
                assert trace.final_total_power_w == math.inf
            break
        assert found
