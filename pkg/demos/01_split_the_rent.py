"""Split the rent for five housemates and show the envy-free outcome.

Usage: python3 demos/01_split_the_rent.py
"""

from rentdiv import render_money, solve
from rentdiv.scenarios import builtin_scenario


def main():
    sc = builtin_scenario("baseline")
    inst = sc.instance
    out = solve(inst, sc.reported_matrix)

    print(f"Total rent: {render_money(inst.total_rent)}")
    print()
    print(f"{'agent':<6} {'room':<5} {'price':>7} {'utility':>8}")
    for agent in inst.agent_ids:
        room = out.assignment.room_of(agent)
        print(
            f"{agent:<6} {room:<5} {render_money(out.payment_of(agent)):>7} "
            f"{render_money(out.utilities[agent]):>8}"
        )
    print()
    print(f"welfare: {out.welfare}, minimum utility: {render_money(out.min_utility)}")
    print("Every agent weakly prefers their own room-plus-price to everyone")
    print("else's, and the minimum utility is as large as it can possibly be.")


if __name__ == "__main__":
    main()
