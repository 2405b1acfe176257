"""Repeated testing: schedules of sampling tests and free periods.

One test always leaves a residual error probability. Repeating tests with a
shrinking sensitivity delta(j) and a summable error p(j) drives the residual
to zero, provided the tests grow superlinearly while staying negligible next
to the free periods. These asymptotic requirements are validated on a finite
prefix as monotonicity checks.
"""

from advicecheck import (
    build_schedule,
    geometric_rules,
    harmonic_rules,
    literal_layout,
    load_game,
    load_strategy,
    locate,
    validate_schedule,
)

game = load_game("fixtures/small_game.json")

print("== timeline bookkeeping ==")
lay = literal_layout([1, 2], [2, 2])
for ph in lay.phases:
    print(f"  {ph.kind.value}{ph.index}: starts at t={ph.begin}, length {ph.length}")
phase, offset = locate(lay, 5)
print(f"round 5 falls in {phase.kind.value}{phase.index} at offset {offset}")

print()
print("== harmonic rules on a strongly correlated announcement ==")
corr = load_strategy("fixtures/correlated_strategy.json")
sched = build_schedule(game, corr, harmonic_rules(), horizon_tests=5,
                       mc_samples=50_000, seed=11)
print("  j   delta     p        l_R      l_F")
for j, (test, free) in enumerate(zip(sched.tests(), sched.free_periods()), start=1):
    plan = sched.plan_for(j)
    print(f"  {j}   {plan.delta_hat:<8.4g}{plan.p_target:<9.4g}{test.length:<9d}{free.length}")
report = validate_schedule(sched, prefix_tests=5)
for name, check in report.checks.items():
    print(f"  {name}: {'pass' if check.passed else 'FAIL'}")
print(" ", report.note)

print()
print("== geometric rules work even on product announcements ==")
# on a full-support product announcement, the undetectable-deviation measure
# shrinks only like sqrt(delta), so delta must decay faster than p^2
ce = load_strategy("fixtures/ce_strategy.json")
sched = build_schedule(game, ce, geometric_rules(1e-4, 0.1), horizon_tests=3,
                       mc_samples=50_000, seed=11)
for j, test in enumerate(sched.tests(), start=1):
    plan = sched.plan_for(j)
    print(f"  test {j}: delta={plan.delta_hat:.3g} p={plan.p_target:.3g} l_R={test.length}")
