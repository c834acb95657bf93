"""Command-line front door.

Subcommands::

    rentdiv solve <scenario.json> [--format text|json|csv]
    rentdiv verify (<scenario.json> | --builtin <slug> | --all-builtin) [--format ...]
    rentdiv manipulate <scenario.json> --coalition A,B --objective SPEC
            (--template exclusionary|flatten|defensive | --search)
            [--contested D:R1+R2,...] [--target-rooms D:R4,E:R5]
            [--step N] [--format ...]
    rentdiv table [--format ...]

Objective grammar: ``exclude:D,E@R1,R2,R3`` | ``min-pay:D[,E]`` |
``subsidize:E@R1<=7`` | ``max-util:A``.

Exit codes: 0 success, 1 verification mismatch, 2 invalid input, 3 search
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import manipulation, pricing, scenarios
from .model import (
    Outcome,
    RentDivisionError,
    format_exact,
    render_money,
)
from .scenarios import BUILTIN_SLUGS

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _rational_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator, "decimal": render_money(x)}


def _outcome_json(instance, outcome: Outcome) -> dict:
    return {
        "assignment": dict(outcome.assignment.mapping),
        "prices": {
            r: _rational_json(outcome.prices.price_of(r)) for r in instance.room_ids
        },
        "utilities": {
            a: _rational_json(outcome.utilities[a]) for a in instance.agent_ids
        },
        "welfare": _rational_json(outcome.welfare),
        "min_utility": _rational_json(outcome.min_utility),
    }


def _print_outcome_text(instance, outcome: Outcome, out):
    out.write(f"{'room':<6} {'agent':<6} {'price':>8} {'utility':>8}\n")
    for r in instance.room_ids:
        a = outcome.assignment.agent_of(r)
        out.write(
            f"{r:<6} {a:<6} {render_money(outcome.prices.price_of(r)):>8} "
            f"{render_money(outcome.utilities[a]):>8}\n"
        )
    out.write(f"minimum utility: {render_money(outcome.min_utility)}\n")


def _print_outcome_csv(instance, outcome: Outcome, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["room", "agent", "price", "utility"])
    for r in instance.room_ids:
        a = outcome.assignment.agent_of(r)
        w.writerow(
            [r, a, render_money(outcome.prices.price_of(r)), render_money(outcome.utilities[a])]
        )


def cmd_solve(args) -> int:
    scenario = scenarios.load_scenario(args.scenario)
    outcome = pricing.solve(scenario.instance, scenario.reported_matrix)
    if args.format == "json":
        json.dump(_outcome_json(scenario.instance, outcome), sys.stdout, indent=2)
        sys.stdout.write("\n")
    elif args.format == "csv":
        _print_outcome_csv(scenario.instance, outcome, sys.stdout)
    else:
        _print_outcome_text(scenario.instance, outcome, sys.stdout)
    return EXIT_OK


def _report_json(scenario, outcome, report) -> dict:
    return {
        "scenario": scenario.slug,
        "verdict": report.verdict,
        "price_diffs": {
            r: _rational_json(d) for r, d in report.price_diffs.items()
        },
        "assignment_equivalent": report.assignment_equivalent,
        "expected_is_envy_free": report.expected_is_envy_free,
        "expected_is_maximin": report.expected_is_maximin,
        "computed": _outcome_json(scenario.instance, outcome),
    }


def _report_text(scenario, outcome, report, out):
    out.write(f"== {scenario.name} [{scenario.slug}]: {report.verdict}\n")
    if report.verdict != "match":
        out.write(
            f"   assignment equivalent to expected: "
            f"{'yes' if report.assignment_equivalent else 'no'}\n"
        )
    nonzero = {r: d for r, d in report.price_diffs.items() if d}
    if nonzero:
        for r, d in nonzero.items():
            out.write(f"   price diff {r}: {render_money(d)}\n")
        out.write(
            f"   expected prices envy-free: "
            f"{'yes' if report.expected_is_envy_free else 'no'}; "
            f"maximin-optimal: {'yes' if report.expected_is_maximin else 'no'}\n"
        )
        out.write(f"   computed minimum utility: {render_money(outcome.min_utility)}\n")


def cmd_verify(args) -> int:
    if args.all_builtin:
        items = scenarios.builtin_scenarios()
    elif args.builtin:
        try:
            items = [scenarios.builtin_scenario(args.builtin)]
        except KeyError:
            _err(f"unknown builtin scenario {args.builtin!r}; pick from {', '.join(BUILTIN_SLUGS)}")
            return EXIT_INVALID
    else:
        if not args.scenario:
            _err("verify needs a scenario file, --builtin or --all-builtin")
            return EXIT_INVALID
        items = [scenarios.load_scenario(args.scenario)]

    results = []
    for s in items:
        if s.expected is None:
            _err(f"scenario {s.slug!r} has no expected outcome to verify against")
            return EXIT_INVALID
        outcome, report = scenarios.run_scenario(s)
        results.append((s, outcome, report))

    if args.format == "json":
        json.dump(
            [_report_json(s, o, r) for s, o, r in results], sys.stdout, indent=2
        )
        sys.stdout.write("\n")
    elif args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["scenario", "verdict", "assignment_equivalent"])
        for s, _, r in results:
            w.writerow([s.slug, r.verdict, r.assignment_equivalent])
    else:
        for s, o, r in results:
            _report_text(s, o, r, sys.stdout)
    any_mismatch = any(r.verdict == "mismatch" for _, _, r in results)
    return EXIT_MISMATCH if any_mismatch else EXIT_OK


def _parse_objective(spec: str):
    try:
        kind, rest = spec.split(":", 1)
    except ValueError:
        raise ValueError(f"objective {spec!r} is missing a ':'")
    if kind == "exclude":
        agents_part, rooms_part = rest.split("@", 1)
        return manipulation.ExcludeFromRooms(
            agents_part.split(","), rooms_part.split(",")
        )
    if kind == "min-pay":
        agents = rest.split(",")
        if len(agents) == 1:
            return manipulation.MinimizeOwnPayment(agents[0])
        return manipulation.MinimizeCoalitionPayments(agents)
    if kind == "subsidize":
        agent, rest = rest.split("@", 1)
        room, cap = rest.split("<=", 1)
        return manipulation.SubsidizeAgent(agent, room, Fraction(cap))
    if kind == "max-util":
        return manipulation.MaximizeTrueUtility(rest)
    raise ValueError(f"unknown objective kind {kind!r}")


def _parse_contested(spec: str) -> dict:
    out = {}
    for part in spec.split(","):
        agent, rooms = part.split(":", 1)
        out[agent] = tuple(rooms.split("+"))
    return out


def _deviation_json(instance, report, reported_matrix) -> dict:
    return {
        "reported_values": {
            a: [format_exact(v) for v in reported_matrix.row(i)]
            for i, a in enumerate(instance.agent_ids)
        },
        "objective_satisfied": report.objective_satisfied,
        "objective_value": (
            report.objective_value
            if isinstance(report.objective_value, bool)
            else _rational_json(report.objective_value)
        ),
        "honest": _outcome_json(instance, report.honest_outcome),
        "manipulated": _outcome_json(instance, report.manipulated_outcome),
        "payment_delta": {
            a: _rational_json(d) for a, d in report.payment_delta.items()
        },
        "true_utility_delta": {
            a: _rational_json(d) for a, d in report.true_utility_delta.items()
        },
        "envy_under_truth": [list(pair) for pair in report.envy_under_truth],
    }


def _deviation_text(instance, report, out):
    out.write("honest outcome:\n")
    _print_outcome_text(instance, report.honest_outcome, out)
    out.write("manipulated outcome:\n")
    _print_outcome_text(instance, report.manipulated_outcome, out)
    out.write(f"{'agent':<6} {'pay delta':>10} {'true-util delta':>16}\n")
    for a in instance.agent_ids:
        out.write(
            f"{a:<6} {render_money(report.payment_delta[a]):>10} "
            f"{render_money(report.true_utility_delta[a]):>16}\n"
        )
    if report.envy_under_truth:
        pairs = ", ".join(f"{a} envies {b}" for a, b in report.envy_under_truth)
        out.write(f"envy under truth: {pairs}\n")
    out.write(f"objective satisfied: {'yes' if report.objective_satisfied else 'no'}\n")


def cmd_manipulate(args) -> int:
    scenario = scenarios.load_scenario(args.scenario)
    instance = scenario.instance
    true_matrix = scenario.truth()
    coalition = args.coalition.split(",") if args.coalition else []
    unknown = [a for a in coalition if a not in instance.agent_ids]
    if unknown:
        _err(f"unknown coalition agent(s): {', '.join(unknown)}")
        return EXIT_INVALID
    try:
        objective = _parse_objective(args.objective)
        manipulation._check_objective(instance, objective)
    except (ValueError, TypeError) as exc:
        _err(str(exc))
        return EXIT_INVALID

    step = Fraction(args.step)
    if args.template:
        if not coalition:
            _err("--template needs --coalition")
            return EXIT_INVALID
        if args.template == "exclusionary":
            if not isinstance(objective, manipulation.ExcludeFromRooms):
                _err("the exclusionary template needs an exclude:... objective")
                return EXIT_INVALID
            claimed = [
                r for r in instance.room_ids if r in objective.rooms
            ]
            victims = [r for r in instance.room_ids if r not in objective.rooms]
            if len(claimed) != len(coalition):
                _err("coalition size must match the number of claimed rooms")
                return EXIT_INVALID
            reported = manipulation.template_exclusionary(
                instance, true_matrix, coalition, claimed, victims
            )
        elif args.template == "flatten":
            if args.target_rooms:
                own = {}
                for part in args.target_rooms.split(","):
                    agent, _, room = part.partition(":")
                    own[agent.strip()] = room.strip()
            else:
                honest = pricing.solve(instance, true_matrix)
                own = {a: honest.assignment.room_of(a) for a in coalition}
            reported = manipulation.template_flatten(
                instance, true_matrix, coalition, own
            )
        elif args.template == "defensive":
            if not args.contested:
                _err("the defensive template needs --contested D:R1+R2,...")
                return EXIT_INVALID
            contested = _parse_contested(args.contested)
            reported = manipulation.template_defensive(
                instance, true_matrix, coalition, contested
            )
        else:  # pragma: no cover - argparse restricts choices
            _err(f"unknown template {args.template!r}")
            return EXIT_INVALID
    elif args.search:
        if len(coalition) == 1:
            row, _ = manipulation.best_response_search(
                instance, true_matrix, coalition[0], objective, step=step
            )
            reported = true_matrix.replace_row(
                instance.agent_index(coalition[0]), row
            )
        else:
            reported, _, _ = manipulation.coalition_search(
                instance, true_matrix, coalition, objective, step=step
            )
    else:
        _err("pick one of --template or --search")
        return EXIT_INVALID

    report = manipulation.evaluate_deviation(
        instance, true_matrix, reported, objective
    )
    if args.format == "json":
        json.dump(_deviation_json(instance, report, reported), sys.stdout, indent=2)
        sys.stdout.write("\n")
    elif args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["agent", "payment_delta", "true_utility_delta"])
        for a in instance.agent_ids:
            w.writerow(
                [
                    a,
                    render_money(report.payment_delta[a]),
                    render_money(report.true_utility_delta[a]),
                ]
            )
    else:
        _deviation_text(instance, report, sys.stdout)
    return EXIT_OK


def cmd_table(args) -> int:
    blocks = []
    for s in scenarios.builtin_scenarios():
        outcome, report = scenarios.run_scenario(s)
        blocks.append((s, outcome, report))

    if args.format == "json":
        json.dump(
            [
                {
                    "name": s.name,
                    "slug": s.slug,
                    "verdict": r.verdict if r else None,
                    "expected_prices": {
                        room: _rational_json(s.expected.prices.price_of(room))
                        for room in s.instance.room_ids
                    }
                    if s.expected
                    else None,
                    "computed": _outcome_json(s.instance, o),
                }
                for s, o, r in blocks
            ],
            sys.stdout,
            indent=2,
        )
        sys.stdout.write("\n")
        return EXIT_OK
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["scenario", "room", "agent", "computed_price", "expected_price", "verdict"])
        for s, o, r in blocks:
            for room in s.instance.room_ids:
                w.writerow(
                    [
                        s.slug,
                        room,
                        o.assignment.agent_of(room),
                        render_money(o.prices.price_of(room)),
                        render_money(s.expected.prices.price_of(room)) if s.expected else "",
                        r.verdict if r else "",
                    ]
                )
        return EXIT_OK

    for s, o, r in blocks:
        sys.stdout.write(f"== {s.name}\n")
        sys.stdout.write(
            f"{'room':<6} {'agent':<6} {'computed':>9} {'expected':>9}\n"
        )
        for room in s.instance.room_ids:
            expected = (
                render_money(s.expected.prices.price_of(room)) if s.expected else "-"
            )
            sys.stdout.write(
                f"{room:<6} {o.assignment.agent_of(room):<6} "
                f"{render_money(o.prices.price_of(room)):>9} {expected:>9}\n"
            )
        sys.stdout.write(f"verdict: {r.verdict if r else 'n/a'}\n\n")
    return EXIT_OK


def _err(msg: str) -> None:
    print(f"rentdiv: {msg}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rentdiv",
        description="Exact maximin envy-free rent division and manipulation lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument(
            "--format", choices=("text", "json", "csv"), default="text"
        )

    p = sub.add_parser("solve", help="solve a scenario file")
    p.add_argument("scenario")
    add_format(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="compare computed and expected outcomes")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--builtin", metavar="SLUG")
    p.add_argument("--all-builtin", action="store_true")
    add_format(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("manipulate", help="build and score a misreport")
    p.add_argument("scenario")
    p.add_argument("--coalition", metavar="A,B,...")
    p.add_argument("--objective", required=True, metavar="SPEC")
    p.add_argument("--template", choices=("exclusionary", "flatten", "defensive"))
    p.add_argument("--search", action="store_true")
    p.add_argument("--contested", metavar="D:R1+R2,...")
    p.add_argument(
        "--target-rooms",
        metavar="D:R4,E:R5",
        help="flatten template: room receiving each member's leftover unit "
        "(default: the member's room under honest reports)",
    )
    p.add_argument("--step", default="1")
    add_format(p)
    p.set_defaults(func=cmd_manipulate)

    p = sub.add_parser("table", help="reproduce all builtin scenarios side by side")
    add_format(p)
    p.set_defaults(func=cmd_table)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except manipulation.SearchSpaceTooLarge as exc:
        _err(str(exc))
        return EXIT_BUDGET
    except (RentDivisionError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INVALID


def entry() -> None:  # console-script shim
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
