"""Command-line interface.

Every subcommand prints a single JSON run report to stdout: command,
library version, instance digest, an echo of the effective configuration,
the result payload, and wall-clock timing.  Exit codes: 0 success, 2 when
a requested solution does not exist, 1 on errors, 64 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .bellman import evaluate_policy, optimal_values, policy_iteration
from .composition import GoalSet
from .core import (
    DmdpError,
    EMPTY_POLICY,
    TimeVaryingPolicy,
    make_static_gap_instance,
    validate,
)
from .gds import DEFAULT_NODE_BUDGET, GdsConfig, gds_search
from .oracle import DEFAULT_POLICY_BUDGET, brute_force_cover, brute_force_reach
from .storage import digest, dumps_json, generate, load, save


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract says 64.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _parse_states(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated state ids, got {text!r}")


def _parse_policy(text: str) -> TimeVaryingPolicy:
    try:
        rows = [[int(a) for a in epoch.split(",")] for epoch in text.split(";") if epoch]
        return TimeVaryingPolicy.from_actions(rows)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected ';'-separated epochs of comma-separated actions, got {text!r}"
        )


def _policy_payload(policy: TimeVaryingPolicy) -> list[list[int]]:
    return [list(rule.actions) for rule in policy.rules]


def _emit(command: str, instance_digest: str, config: dict, result: dict, started: float) -> None:
    report = {
        "command": command,
        "library_version": __version__,
        "instance_digest": instance_digest,
        "config": config,
        "result": result,
        "timing": {"seconds": time.perf_counter() - started},
    }
    print(dumps_json(report))


def _node_budget(args) -> int:
    if args.node_budget is not None:
        return args.node_budget
    env = os.environ.get("GDS_NODE_BUDGET")
    if env is not None:
        return int(env)
    return DEFAULT_NODE_BUDGET


def _cmd_validate(args) -> int:
    started = time.perf_counter()
    instance = load(args.file, check=False)
    report = validate(instance, sign_mode=args.sign_mode)
    result = {
        "ok": report.ok,
        "sign_mode_checked": args.sign_mode or instance.sign_mode,
        "violations": [
            {"rule": rule, "location": list(loc), "value": value}
            for rule, loc, value in report.violations
        ],
    }
    config = {"file": args.file, "sign_mode": args.sign_mode}
    _emit("validate", digest(instance), config, result, started)
    return 0 if report.ok else 1


def _cmd_value_star(args) -> int:
    started = time.perf_counter()
    instance = load(args.file)
    values = optimal_values(instance)
    config = {"file": args.file}
    _emit("value-star", digest(instance), config, {"values": values.values}, started)
    return 0


def _cmd_policy_iter(args) -> int:
    started = time.perf_counter()
    instance = load(args.file)
    init = args.init if args.init is not None else EMPTY_POLICY
    result = policy_iteration(instance, init)
    payload = {
        "policy": _policy_payload(result.policy),
        "values": result.values.values,
        "iterations": result.iterations,
    }
    config = {
        "file": args.file,
        "init": _policy_payload(init) if args.init is not None else None,
    }
    _emit("policy-iter", digest(instance), config, payload, started)
    return 0


def _cmd_solve(args, mode: str) -> int:
    started = time.perf_counter()
    instance = load(args.file)
    budget = _node_budget(args)
    config_obj = GdsConfig(
        start=args.start,
        target=GoalSet.from_states(args.target, instance.num_states),
        mode=mode,
        strict_subset=args.strict,
        trace=args.trace is not None,
        verify=args.verify,
        node_budget=budget,
    )
    result = gds_search(instance, config_obj)
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps_json(list(result.trace)) + "\n")
    payload = {
        "found": result.found,
        "policy": _policy_payload(result.policy) if result.found else None,
        "value": result.value,
        "goal": list(result.goal.members()) if result.found else None,
        "nodes_popped": result.nodes_popped,
        "nodes_pruned": result.nodes_pruned,
    }
    config = {
        "file": args.file,
        "start": args.start,
        "target": list(args.target),
        "strict": args.strict,
        "verify": args.verify,
        "node_budget": budget,
        "trace": args.trace,
    }
    _emit(f"solve-{mode}", digest(instance), config, payload, started)
    return 0 if result.found else 2


def _cmd_brute_check(args) -> int:
    started = time.perf_counter()
    instance = load(args.file)
    target = GoalSet.from_states(args.target, instance.num_states)
    max_len = args.max_len if args.max_len is not None else instance.horizon
    solver = brute_force_reach if args.mode == "reach" else brute_force_cover
    best = solver(instance, args.start, target, max_len, budget=args.budget)
    if best is None:
        payload = {"found": False, "policy": None, "value": None, "goal": None}
    else:
        payload = {
            "found": True,
            "policy": _policy_payload(best.policy),
            "value": best.value,
            "goal": list(best.goal.members()),
        }
    config = {
        "file": args.file,
        "start": args.start,
        "target": list(args.target),
        "mode": args.mode,
        "max_len": max_len,
        "budget": args.budget,
    }
    _emit("brute-check", digest(instance), config, payload, started)
    return 0 if best is not None else 2


def _cmd_gen(args) -> int:
    started = time.perf_counter()
    instance = generate(args.seed, args.states, args.actions, args.horizon, args.gamma)
    save(instance, args.out)
    config = {
        "seed": args.seed,
        "states": args.states,
        "actions": args.actions,
        "horizon": args.horizon,
        "gamma": args.gamma,
        "out": args.out,
    }
    _emit("gen", digest(instance), config, {"path": args.out, "digest": digest(instance)}, started)
    return 0


def _cmd_demo_static_gap(args) -> int:
    started = time.perf_counter()
    instance = make_static_gap_instance(gamma=args.gamma)
    statics = {}
    for a in range(instance.num_actions):
        policy = TimeVaryingPolicy.from_actions([[a]] * instance.horizon)
        statics[f"static-action-{a}"] = float(
            evaluate_policy(instance, policy).values[0, 0]
        )
    star = optimal_values(instance)
    result = policy_iteration(instance, EMPTY_POLICY)
    payload = {
        "gamma": instance.gamma,
        "static_values": statics,
        "static_best": max(statics.values()),
        "dynamic_best": float(star.values[0, 0]),
        "dynamic_policy": _policy_payload(result.policy),
    }
    _emit("demo-static-gap", digest(instance), {"gamma": args.gamma}, payload, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dmdp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check an instance file's model invariants")
    p.add_argument("file")
    p.add_argument("--sign-mode", choices=["any", "nonpositive"], default=None,
                   help="override the file's declared reward sign regime")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("value-star", help="optimal value table by backward induction")
    p.add_argument("file")
    p.set_defaults(func=_cmd_value_star)

    p = sub.add_parser("policy-iter", help="policy iteration to a fixed point")
    p.add_argument("file")
    p.add_argument("--init", type=_parse_policy, default=None,
                   help="initial policy, e.g. '0,1;1,0' (epochs ';', actions ',')")
    p.set_defaults(func=_cmd_policy_iter)

    for mode in ("reach", "cover"):
        p = sub.add_parser(
            f"solve-{mode}",
            help=f"best-first search for the best {mode}ing policy",
        )
        p.add_argument("file")
        p.add_argument("--start", type=int, required=True)
        p.add_argument("--target", type=_parse_states, required=True,
                       help="comma-separated state ids")
        p.add_argument("--strict", action="store_true",
                       help="use proper-subset goal inclusions")
        p.add_argument("--verify", action="store_true",
                       help="re-derive queued values by exact evaluation")
        p.add_argument("--trace", default=None, metavar="PATH",
                       help="write the search event log to PATH")
        p.add_argument("--node-budget", type=int, default=None)
        p.set_defaults(func=lambda a, m=mode: _cmd_solve(a, m))

    p = sub.add_parser("brute-check", help="exhaustive baseline for solve results")
    p.add_argument("file")
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--target", type=_parse_states, required=True)
    p.add_argument("--mode", choices=["reach", "cover"], default="reach")
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--budget", type=int, default=DEFAULT_POLICY_BUDGET)
    p.set_defaults(func=_cmd_brute_check)

    p = sub.add_parser("gen", help="generate a reproducible random instance file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser(
        "demo-static-gap",
        help="show time-varying policies beating every static one",
    )
    p.add_argument("--gamma", type=float, default=1.0 - 1e-9)
    p.set_defaults(func=_cmd_demo_static_gap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DmdpError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
