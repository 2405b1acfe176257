"""Checking whether announced advice is a correlated equilibrium.

The bundled 2x2 game has payoffs

                agent 2
                first   second
  agent 1 first  0,1     2,5
         second  5,2     1,0

A mediator announces a distribution over the four joint actions and sends
each agent its own component as a private suggestion. The announcement is
worth following only if no agent can gain by deviating after seeing its
suggestion.
"""

from advicecheck import (
    MixedStrategy,
    check_correlated_equilibrium,
    conditional_given_signal,
    expected_utility,
    load_game,
    load_strategy,
)

game = load_game("fixtures/small_game.json")

print("== a good announcement ==")
good = load_strategy("fixtures/ce_strategy.json")
print("announced probabilities:", good.probs.round(4))
verdict = check_correlated_equilibrium(game, good)
print("is a correlated equilibrium:", verdict.is_equilibrium)

# what agent 1 knows after being told to play its first action
cond = conditional_given_signal(good, game, agent=0, signal=0)
print("agent 1's belief about agent 2 given suggestion 0:", cond.round(4))

print()
print("== the same numbers reordered are not ==")
bad = load_strategy("fixtures/non_ce_strategy.json")
verdict = check_correlated_equilibrium(game, bad)
print("is a correlated equilibrium:", verdict.is_equilibrium)
for v in verdict.violations:
    print(
        f"agent {v.agent + 1}: when suggested action {v.signal}, switching to "
        f"action {v.deviation} gains {v.gap:.4f}"
    )

print()
print("== expected utilities under independent mixing ==")
uniform = [MixedStrategy([0.5, 0.5]), MixedStrategy([0.5, 0.5])]
print("both uniform:", expected_utility(game, uniform))
print("pure (second, first):", expected_utility(game, [[0, 1], [1, 0]]))
