"""Command-line front end.

Commands: check-ce, plan, test, schedule, simulate. Exit codes: 0 for
success/accept, 1 for a domain negative (not an equilibrium / reject), 2 for
usage or validation errors. Outputs are deterministic for a fixed config and
seed; only the manifest carries a timestamp.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import schedule as sched
from . import sim, verifier
from .errors import InvalidInputError, ZeroCellObserved
from .games import check_correlated_equilibrium, compose_deviation, load_game, load_strategy

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _load_inputs(args):
    game = load_game(args.game)
    sigma = load_strategy(args.strategy)
    if len(sigma) != game.num_joint_actions:
        raise InvalidInputError(
            f"strategy has {len(sigma)} entries, game has {game.num_joint_actions} joint actions"
        )
    return game, sigma


def cmd_check_ce(args) -> int:
    game, sigma = _load_inputs(args)
    verdict = check_correlated_equilibrium(game, sigma, tolerance=args.tolerance)
    if verdict.is_equilibrium:
        print("correlated equilibrium: yes")
        return EXIT_OK
    print("correlated equilibrium: no")
    for v in verdict.violations:
        print(
            f"  agent {v.agent + 1}: at signal {v.signal} deviating to {v.deviation} "
            f"gains {v.gap:.6g}"
        )
    return EXIT_DOMAIN


def cmd_plan(args) -> int:
    game, sigma = _load_inputs(args)
    plan = verifier.plan_test(
        game, sigma, p=args.p, delta_hat=args.delta_hat,
        mc_samples=args.mc_samples, seed=args.seed,
    )
    text = json.dumps(plan.as_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write(Path(args.out) / "plan.json", text + "\n")
        _manifest(args, Path(args.out))
    return EXIT_OK


def _simulated_counts(args, game, sigma, sample_size):
    rng = np.random.default_rng(args.seed)
    if args.simulate_under == "mediator":
        dist = sigma.probs
    else:
        with open(args.simulate_under) as fh:
            profile = json.load(fh)
        deviations = {int(k) - 1: v for k, v in profile.items()}
        dist = compose_deviation(sigma, game, deviations).probs
    return rng.multinomial(sample_size, dist).astype(np.int64)


def cmd_test(args) -> int:
    game, sigma = _load_inputs(args)
    if args.counts:
        # the counts are the sample: size the test from them
        with open(args.counts) as fh:
            counts = json.load(fh)
        if not isinstance(counts, list):
            raise InvalidInputError("counts file must be a flat JSON array")
        counts = np.asarray(counts, dtype=np.int64)
        plan = verifier.manual_plan(
            game, sigma, alpha=args.p, delta_hat=args.delta_hat,
            sample_size=int(counts.sum()),
        )
    else:
        plan = verifier.plan_test(
            game, sigma, p=args.p, delta_hat=args.delta_hat,
            mc_samples=args.mc_samples, seed=args.seed,
        )
        counts = _simulated_counts(args, game, sigma, plan.sample_size)
    decision = verifier.run_sampling_decision(plan, game, sigma, args.agent - 1, counts)
    out = {
        "outcome": decision.outcome.value,
        "statistic": decision.statistic,
        "p_value": decision.p_value,
        "critical_value": plan.critical_value,
        "sample_size": plan.sample_size,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    print("do not reject" if not decision.rejected else "reject")
    return EXIT_OK if not decision.rejected else EXIT_DOMAIN


def _rules_from_config(cfg) -> sched.ScheduleRules:
    kind = cfg.get("kind", "harmonic")
    if kind == "harmonic":
        return sched.harmonic_rules()
    if kind == "geometric":
        return sched.geometric_rules(
            delta0=cfg["delta0"],
            p0=cfg["p0"],
            delta_decay=cfg.get("delta_decay", 16.0),
            p_decay=cfg.get("p_decay", 2.0),
        )
    raise InvalidInputError(f"unknown schedule rule kind {kind!r}")


def _schedule_from_config(game, sigma, cfg, mc_samples, seed):
    if cfg.get("kind") == "toy":
        return sched.toy_schedule(
            game, sigma,
            alpha=cfg.get("alpha", 0.1),
            delta_hat=cfg.get("delta_hat", 0.01),
            test_lengths=cfg["test_lengths"],
            free_lengths=cfg["free_lengths"],
        )
    rules = _rules_from_config(cfg)
    return sched.build_schedule(
        game, sigma, rules,
        horizon_tests=int(cfg.get("horizon_tests", 3)),
        mc_samples=mc_samples, seed=seed,
    )


def _schedule_rows(schedule: sched.Schedule):
    rows = []
    for ph in schedule.phases:
        row = {
            "kind": ph.kind.value,
            "j": ph.index,
            "begin": ph.begin,
            "length": ph.length,
            "delta": "",
            "p": "",
            "alpha": "",
            "beta": "",
            "psi": "",
            "l_T": "",
        }
        if ph.kind is sched.PhaseKind.SAMPLING_TEST:
            plan = schedule.plan_for(ph.index)
            if plan is not None:
                row.update(
                    delta=plan.delta_hat,
                    p=plan.p_target,
                    alpha=plan.alpha,
                    beta=plan.beta,
                    psi="" if plan.psi is None else plan.psi,
                    l_T=plan.sample_size,
                )
        rows.append(row)
    return rows


def cmd_schedule(args) -> int:
    game, sigma = _load_inputs(args)
    cfg = {"kind": args.rules, "horizon_tests": args.tests}
    if args.rules == "geometric":
        cfg.update(delta0=args.delta0, p0=args.p0)
    schedule = _schedule_from_config(game, sigma, cfg, args.mc_samples, args.seed)
    fieldnames = ["kind", "j", "begin", "length", "delta", "p", "alpha", "beta", "psi", "l_T"]
    writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
    writer.writeheader()
    for row in _schedule_rows(schedule):
        writer.writerow(row)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "schedule.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fieldnames)
            w.writeheader()
            for row in _schedule_rows(schedule):
                w.writerow(row)
        _manifest(args, outdir)
    return EXIT_OK


def cmd_simulate(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    mc_samples = args.mc_samples or int(cfg.get("mc_samples", verifier.DEFAULT_MC_SAMPLES))
    game = load_game(cfg["game"])
    sigma = load_strategy(cfg["strategy"])
    if len(sigma) != game.num_joint_actions:
        raise InvalidInputError("strategy length does not match the game")
    schedule = _schedule_from_config(game, sigma, cfg.get("schedule", {}), mc_samples, seed)
    agent_configs = cfg.get("agents")
    rounds = cfg.get("rounds")
    outdir = Path(args.out or cfg.get("output_dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    if args.seeds:
        # batch mode: independent generators per seed, order-free aggregation
        runs = [
            sim.run_game_counts(game, sigma, schedule, agent_configs, seed=s, rounds=rounds)
            for s in range(seed, seed + args.seeds)
        ]
        batch = sim.batch_summary_dict(runs)
        with open(outdir / "batch_summary.json", "w") as fh:
            json.dump(batch, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _manifest(args, outdir, extra={"config": cfg, "seed": seed})
        print(f"wrote {outdir}/batch_summary.json")
        return EXIT_OK
    if cfg.get("record", "full") == "counts":
        run = sim.run_game_counts(game, sigma, schedule, agent_configs, seed=seed, rounds=rounds)
    else:
        run = sim.run_game(game, sigma, schedule, agent_configs, seed=seed, rounds=rounds)
        sim.transcript_to_csv(run, outdir / "transcript.csv")
    sim.write_summary_json(run, outdir / "summary.json")
    _manifest(args, outdir, extra={"config": cfg, "seed": seed})
    print(f"wrote {outdir}/summary.json")
    return EXIT_OK


def _write(path: Path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _manifest(args, outdir: Path, extra: dict | None = None) -> None:
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()
    ).hexdigest()
    manifest = {
        "config_hash": digest,
        "seed": getattr(args, "seed", None),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        manifest.update(
            config_hash=hashlib.sha256(
                json.dumps(extra.get("config", {}), sort_keys=True).encode()
            ).hexdigest(),
            seed=extra.get("seed"),
        )
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_common(p, strategy=True):
    p.add_argument("--game", required=True, help="game JSON file")
    if strategy:
        p.add_argument("--strategy", required=True, help="announced strategy JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--mc-samples", type=int, default=verifier.DEFAULT_MC_SAMPLES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advicecheck",
        description="Verify a mediator's correlated-strategy advice statistically.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check-ce", help="check the incentive constraints")
    p.add_argument("--game", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_check_ce)

    p = subs.add_parser("plan", help="derive a sampling-test plan")
    _add_common(p)
    p.add_argument("--p", type=float, required=True, help="target error probability")
    p.add_argument("--delta-hat", type=float, required=True, help="sensitivity threshold")
    p.set_defaults(func=cmd_plan)

    p = subs.add_parser("test", help="run one sampling decision on counts")
    _add_common(p)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--delta-hat", type=float, default=0.01)
    p.add_argument("--agent", type=int, default=1, help="1-based agent index")
    p.add_argument("--counts", help="JSON array of observed counts")
    p.add_argument(
        "--simulate-under",
        default="mediator",
        help='"mediator" or a deviation-profile JSON file {agent: [probs]}',
    )
    p.set_defaults(func=cmd_test)

    p = subs.add_parser("schedule", help="emit a repeated-testing phase table (CSV)")
    _add_common(p)
    p.add_argument("--rules", choices=["harmonic", "geometric"], default="harmonic")
    p.add_argument("--tests", type=int, default=3)
    p.add_argument("--delta0", type=float, default=1e-4)
    p.add_argument("--p0", type=float, default=0.1)
    p.set_defaults(func=cmd_schedule)

    p = subs.add_parser("simulate", help="run the repeated game from a config file")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None,
                   help="batch mode: run this many consecutive seeds, aggregate only")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--mc-samples", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, ZeroCellObserved, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
