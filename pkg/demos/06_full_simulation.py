"""A full repeated-game run: signals, decisions, transcripts, ledgers.

Each round the mediator draws a joint action from its announcement and tells
each agent its own component. Agents follow while they trust the mediator;
at the end of each sampling test everyone re-runs the decision on that
test's public counts. Rejected agents play their fixed fall-back during
tests and their (reset) learning algorithm during free periods.
"""

from advicecheck import (
    build_ledger,
    empirical_frequency,
    load_game,
    load_strategy,
    phase_average,
    run_game,
    toy_schedule,
    tv_distance,
)

game = load_game("fixtures/small_game.json")

print("== good announcement: agents keep following ==")
good = load_strategy("fixtures/ce_strategy.json")
sched = toy_schedule(game, good, alpha=0.1, delta_hat=0.01,
                     test_lengths=[400, 400], free_lengths=[800, 800])
tr = run_game(game, good, sched, seed=3)
for (agent, j), d in sorted(tr.decisions.items()):
    print(f"  agent {agent + 1} at test {j}: {d.outcome.value}")
emp = empirical_frequency(tr, 1, tr.num_rounds)
print("  whole-run distance to announcement:", round(tv_distance(emp.distribution(), good), 4))
ledger = build_ledger(tr)
print("  free-period average utilities:",
      [round(phase_average(ledger, a, 'F'), 3) for a in range(2)])

print()
print("== bad announcement: screening, rejection, learning ==")
bad = load_strategy("fixtures/non_ce_strategy.json")
configs = [
    {"learner": {"name": "fictitious-play"}},
    {"learner": {"name": "trigger", "initial_action": 0, "switch_action": 1,
                 "watch_agent": 0, "watch_action": 1}, "fallback": [0.75, 0.25]},
]
sched = toy_schedule(game, bad, alpha=0.1, delta_hat=0.01,
                     test_lengths=[400, 400], free_lengths=[800, 800])
tr = run_game(game, bad, sched, configs, seed=3)
for (agent, j), d in sorted(tr.decisions.items()):
    stat = "" if d.statistic is None else f" (statistic {d.statistic:.1f})"
    print(f"  agent {agent + 1} at test {j}: {d.outcome.value}{stat}")
ledger = build_ledger(tr)
print("  test-period averages:  ",
      [round(phase_average(ledger, a, 'R'), 3) for a in range(2)])
print("  free-period averages:  ",
      [round(phase_average(ledger, a, 'F'), 3) for a in range(2)])
