"""Walkthrough: the best-response grouping game.

Each BS in turn looks for a set of user moves that lowers total transmit
power (everyone shares that objective, which is what makes the game an
exact potential game). The run prints the strictly descending power trace
and cross-checks the endpoint with the enumeration oracle.
"""

from noma_grouping import (
    draw_channel_gains,
    generate_scenario,
    initial_grouping,
    is_nash_equilibrium,
    default_config,
    run_game,
    solve_all_powers,
    total_power,
)
from noma_grouping.harness import watts_to_dbm

config = default_config(num_users=14, num_channels=3, num_bs=2, seed=8)
scenario = generate_scenario(config, seed=8)
gains = draw_channel_gains(scenario, seed=9)

start = initial_grouping(gains, scenario)
start_solution = solve_all_powers(gains, start, scenario)
print(f"starting total power: {total_power(start_solution):.4e} W "
      f"({watts_to_dbm(total_power(start_solution)):.2f} dBm)")

grouping, solution, trace = run_game(gains, scenario, finder="fga", alpha=5.0)

print(f"\naccepted actions ({len(trace.iterations)}):")
for k, step in enumerate(trace.iterations):
    moves = ", ".join(f"u{u}->ch{g}" for u, g in step.action.moves)
    print(
        f"  {k:2d}: BS {step.bs} [{moves}]  "
        f"{watts_to_dbm(step.total_power_before_w):7.2f} -> "
        f"{watts_to_dbm(step.total_power_after_w):7.2f} dBm"
    )

print(f"\nconverged: {trace.converged}")
print(f"final total power: {trace.final_total_power_w:.4e} W "
      f"({watts_to_dbm(trace.final_total_power_w):.2f} dBm)")
print(f"final grouping: {grouping.channel_of.tolist()}")

stable = is_nash_equilibrium(gains, scenario, grouping, config.num_channels)
print(f"equilibrium per the enumeration oracle: {stable}")

# a user connects later: resume from the current state instead of restarting
resumed, resumed_solution, resumed_trace = run_game(
    gains, scenario, finder="fga", alpha=5.0, start_grouping=grouping
)
print(f"resume from the equilibrium: {len(resumed_trace.iterations)} further actions")
