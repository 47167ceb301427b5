"""Command-line front end: ``simulate``, ``bounds`` and ``scenarios``."""

import argparse
import sys
import warnings
from importlib.metadata import PackageNotFoundError, version

from .arm_models import CONVENTIONS, RAW, SYMMETRIZED
from .exceptions import BanditLabError, IrreducibilityViolated
from .regret_bounds import BelowThresholdWarning, bound_report
from .scenario_io import (
    fmt,
    load_scenario_file,
    regret_svg,
    resolve_scenario,
    scenario_hash,
    write_result_csv,
)
from .sim_engine import DEFAULT_STRIDE, PolicySpec, builtin_scenarios, monte_carlo


def tool_version():
    try:
        return version("bandit-lab")
    except PackageNotFoundError:
        return "0+unknown"


def parse_policy(text, n_arms, L, a):
    """Turn ``--policy``/``--L``/``--a`` into a :class:`PolicySpec`."""
    arm = None
    kind = text
    if text.startswith("fixed:"):
        kind = "fixed"
        try:
            arm = int(text.split(":", 1)[1]) - 1
        except ValueError:
            raise ValueError(f"bad fixed policy {text!r}; use fixed:<arm number>") from None
        if not 0 <= arm < n_arms:
            raise ValueError(f"fixed arm must be in 1..{n_arms}")
    if a is not None and a != "auto":
        a = float(a)
    return PolicySpec(kind, L=L, a=a, arm=arm)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bandit-lab",
        description="Restless Markovian bandit experiments and regret-bound constants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo regret of one policy")
    sim.add_argument("--scenario", required=True, help="S1, S2 or a scenario JSON path")
    sim.add_argument("--policy", required=True,
                     help="rca | ucb1 | exp3 | oracle | fixed:<i> | random")
    sim.add_argument("--L", type=float, help="exploration constant (rca, ucb1)")
    sim.add_argument("--a", help="Exp3 mixing rate, a float or 'auto' (horizon-tuned)")
    sim.add_argument("--horizon", type=int, default=100_000)
    sim.add_argument("--runs", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    sim.add_argument("--initial-states",
                     help="comma-separated fixed initial state per arm instead of stationary draws")
    sim.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")
    sim.add_argument("--svg", help="optional SVG chart of mean regret")
    sim.add_argument("--svg-logx", action="store_true", help="log-scale slot axis in the SVG")

    bnd = sub.add_parser("bounds", help="regret-bound constants and L threshold")
    bnd.add_argument("--scenario", required=True)
    bnd.add_argument("--convention", choices=CONVENTIONS, default=SYMMETRIZED)
    bnd.add_argument("--L", type=float)
    bnd.add_argument("--n", type=int)

    lst = sub.add_parser("scenarios", help="list built-in scenarios")
    lst.add_argument("--file", help="describe a scenario JSON file instead")
    return parser


def _usage_error(parser, message):
    parser.print_usage(sys.stderr)
    print(f"bandit-lab: error: {message}", file=sys.stderr)
    return 2


def cmd_simulate(args, parser):
    try:
        scenario = resolve_scenario(args.scenario)
    except FileNotFoundError:
        return _usage_error(parser, f"unknown scenario {args.scenario!r}")
    try:
        spec = parse_policy(args.policy, scenario.n_arms, args.L, args.a)
    except ValueError as exc:
        return _usage_error(parser, str(exc))
    if args.horizon < 1 or args.runs < 1 or args.stride < 1:
        return _usage_error(parser, "--horizon, --runs and --stride must be positive")
    initial = None
    if args.initial_states:
        initial = [int(s) for s in args.initial_states.split(",")]

    result = monte_carlo(scenario, spec, args.horizon, args.runs, args.seed,
                         stride=args.stride, initial_states=initial)

    manifest = {
        "tool": "bandit-lab",
        "version": tool_version(),
        "scenario": scenario.name,
        "scenario_sha256": scenario_hash(scenario),
        "policy": spec.label,
    }
    if spec.L is not None:
        manifest["L"] = repr(float(spec.L))
    if spec.kind == "exp3":
        manifest["a"] = repr(spec.resolved_a(scenario.n_arms, args.horizon))
        manifest["a_mode"] = "auto" if spec.a == "auto" else "fixed"
    manifest.update({
        "horizon": args.horizon,
        "runs": args.runs,
        "master_seed": args.seed,
        "stride": args.stride,
        "initial_states": "stationary" if initial is None else ",".join(map(str, initial)),
        "best_arm": scenario.optimal_arm + 1,
        "best_mean": fmt(scenario.best_mean),
    })

    if args.out == "-":
        write_result_csv(sys.stdout, result, manifest)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_result_csv(fh, result, manifest)
    if args.svg:
        title = f"{scenario.name} {spec.label} mean regret ({args.runs} runs)"
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(regret_svg(result.t, result.mean_regret, title=title, logx=args.svg_logx))
    return 0


def format_bounds(scenario, convention, L=None, n=None):
    report = bound_report(scenario, convention)
    lines = [
        f"scenario={scenario.name}",
        f"convention={convention}",
        f"arms={scenario.n_arms}",
        f"best_arm={report.best_arm + 1}",
        f"best_mean={fmt(report.best_mean)}",
        f"pi_min={fmt(report.pi_min)}",
        f"r_max={fmt(report.r_max)}",
        f"S_max={report.s_max}",
        f"pi_hat_max={fmt(report.pi_hat_max)}",
        f"eps_min={fmt(report.eps_min)}",
        f"beta={fmt(report.beta)}",
        f"F={fmt(report.F)}",
        f"L_threshold={fmt(report.l_threshold)}",
    ]
    if convention == RAW:
        lines.append("note=raw convention takes the eigenvalue gap of P itself (reversible arms)")
    lines.append("arm,mu,pi_min,M_max,eps,C,D,E")
    for i in range(scenario.n_arms):
        lines.append(",".join([
            str(i + 1), fmt(report.mu[i]), fmt(report.arm_pi_min[i]), fmt(report.arm_m_max[i]),
            fmt(report.arm_eps[i]), fmt(report.C[i]), fmt(report.D[i]), fmt(report.E[i]),
        ]))
    if L is not None and n is not None:
        if L < report.l_threshold:
            lines.append(f"warning=L below L_threshold; bound not guaranteed")
        lines.append(f"L={fmt(L)}")
        lines.append(f"n={n}")
        lines.append(f"theorem1_bound={fmt(report.theorem1(L, n))}")
        lines.append(f"theorem2_bound={fmt(report.theorem2(L, n))}")
        plays = report.play_bounds(L, n)
        for i in report.suboptimal:
            lines.append(f"play_bound_{i + 1}={fmt(plays[i])}")
    return "\n".join(lines) + "\n"


def cmd_bounds(args, parser):
    try:
        scenario = resolve_scenario(args.scenario)
    except FileNotFoundError:
        return _usage_error(parser, f"unknown scenario {args.scenario!r}")
    if (args.L is None) != (args.n is None):
        return _usage_error(parser, "--L and --n must be given together")
    if args.n is not None and args.n < 1:
        return _usage_error(parser, "--n must be positive")
    try:
        sys.stdout.write(format_bounds(scenario, args.convention, args.L, args.n))
    except IrreducibilityViolated as exc:
        print(f"bandit-lab: error: {exc}", file=sys.stderr)
        return 1
    return 0


def format_scenario(scenario):
    lines = [f"{scenario.name}: {scenario.n_arms} arms, optimal arm {scenario.optimal_arm + 1} "
             f"(mu*={fmt(scenario.best_mean)})"]
    two_state = all(arm.n_states == 2 for arm in scenario.arms)
    if two_state:
        lines.append("  arm,p01,p10,r0,r1,pi1,mu")
        for i, arm in enumerate(scenario.arms, start=1):
            P, r = arm.transition, arm.rewards
            lines.append("  " + ",".join([str(i), fmt(P[0, 1]), fmt(P[1, 0]), fmt(r[0]), fmt(r[1]),
                                          fmt(arm.stationary[1]), fmt(arm.mean_reward)]))
    else:
        lines.append("  arm,states,mu")
        for i, arm in enumerate(scenario.arms, start=1):
            lines.append(f"  {i},{arm.n_states},{fmt(arm.mean_reward)}")
    return "\n".join(lines) + "\n"


def cmd_scenarios(args, parser):
    if args.file:
        sys.stdout.write(format_scenario(load_scenario_file(args.file)))
        return 0
    for scenario in builtin_scenarios().values():
        sys.stdout.write(format_scenario(scenario))
    return 0


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "scenarios": cmd_scenarios}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BelowThresholdWarning)
            return COMMANDS[args.command](args, parser)
    except (BanditLabError, OSError) as exc:
        print(f"bandit-lab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
