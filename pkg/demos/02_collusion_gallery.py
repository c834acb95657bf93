"""Walk through the built-in collusion scenarios and measure the damage.

For each scenario the mechanism is solved twice -- once on everyone's true
values and once on the manipulated reports -- and the per-agent payment and
true-utility changes are printed.

Usage: python3 demos/02_collusion_gallery.py
"""

from rentdiv import render_money
from rentdiv.manipulation import MinimizeCoalitionPayments, evaluate_deviation
from rentdiv.scenarios import BUILTIN_SLUGS, builtin_scenario


def main():
    for slug in BUILTIN_SLUGS:
        sc = builtin_scenario(slug)
        if sc.true_matrix is None:
            continue  # the baseline has no manipulation to evaluate
        movers = tuple(
            a
            for i, a in enumerate(sc.instance.agent_ids)
            if sc.reported_matrix.row(i) != sc.truth().row(i)
        )
        report = evaluate_deviation(
            sc.instance,
            sc.truth(),
            sc.reported_matrix,
            MinimizeCoalitionPayments(movers),
        )
        print(f"== {sc.name}")
        print(f"   movers: {', '.join(movers)}")
        print(f"   {'agent':<6} {'role':<12} {'pay delta':>10} {'true-util delta':>16}")
        for agent in sc.instance.agent_ids:
            print(
                f"   {agent:<6} {sc.roles[agent]:<12} "
                f"{render_money(report.payment_delta[agent]):>10} "
                f"{render_money(report.true_utility_delta[agent]):>16}"
            )
        if report.envy_under_truth:
            pairs = ", ".join(f"{a}->{b}" for a, b in report.envy_under_truth)
            print(f"   envy under true values: {pairs}")
        else:
            print("   no envy under true values")
        print()


if __name__ == "__main__":
    main()
