"""Misreport templates, deviation scoring and exhaustive best-response search."""

import random
from fractions import Fraction

import pytest

from conftest import make_instance, random_rows
from rentdiv.manipulation import (
    ExcludeFromRooms,
    InfeasibleTemplate,
    MaximizeTrueUtility,
    MinimizeCoalitionPayments,
    MinimizeOwnPayment,
    SearchSpaceTooLarge,
    SubsidizeAgent,
    _compositions,
    _FastMechanism,
    best_response_search,
    coalition_search,
    evaluate_deviation,
    exclusion_check,
    objective_satisfied,
    objective_value,
    template_defensive,
    template_exclusionary,
    template_flatten,
)
from rentdiv.matching import max_welfare_assignment
from rentdiv.pricing import maximin_prices, solve
from rentdiv.scenarios import builtin_scenario

F = Fraction


class TestObjectives:
    def test_unknown_agent_rejected(self, baseline):
        inst, mat = baseline
        with pytest.raises(Exception):
            evaluate_deviation(inst, mat, mat, MinimizeOwnPayment("Z"))

    def test_exclusion_check(self):
        sc = builtin_scenario("exclusionary-collusion")
        out = solve(sc.instance, sc.reported_matrix)
        assert exclusion_check(out, ("D", "E"), ("R1", "R2", "R3"))
        assert not exclusion_check(out, ("A",), ("R1",))

    def test_predicate_vs_optimization_semantics(self, baseline):
        inst, truth = baseline
        honest = solve(inst, truth)
        # Honesty never *strictly improves* on itself.
        assert not objective_satisfied(
            inst, truth, honest, honest, MinimizeOwnPayment("D")
        )
        assert not objective_satisfied(
            inst, truth, honest, honest, MaximizeTrueUtility("D")
        )
        # Predicates just check the condition on the manipulated outcome.
        assert objective_satisfied(
            inst, truth, honest, honest, SubsidizeAgent("D", "R1", F(46, 5))
        )
        assert not objective_satisfied(
            inst, truth, honest, honest, ExcludeFromRooms(("D",), ("R1",))
        )

    def test_objective_value_uses_true_preferences(self):
        sc = builtin_scenario("exclusionary-collusion")
        out = solve(sc.instance, sc.reported_matrix)
        # B sits in R2 at 9.20; B's TRUE value for R2 is 9, not the reported 15.
        v = objective_value(
            sc.instance, sc.truth(), out, MaximizeTrueUtility("B")
        )
        assert v == F(-1, 5)


class TestEvaluateDeviation:
    def test_exclusionary_scenario_report(self):
        sc = builtin_scenario("exclusionary-collusion")
        objective = ExcludeFromRooms(("D", "E"), ("R1", "R2", "R3"))
        rep = evaluate_deviation(sc.instance, sc.truth(), sc.reported_matrix, objective)
        assert rep.objective_satisfied is True
        assert rep.objective_value is True
        assert rep.payment_delta == {
            "A": F(5),
            "B": F(4),
            "C": F(0),
            "D": F(-4),
            "E": F(-5),
        }
        assert rep.true_utility_delta == {
            "A": F(0),
            "B": F(-1),
            "C": F(-2),
            "D": F(0),
            "E": F(0),
        }
        # Overpaying coalitionists envy the cheap rooms; the victims, whose
        # payments dropped with their room quality, envy nobody.
        assert set(rep.envy_under_truth) == {
            ("A", "E"),
            ("B", "A"),
            ("B", "D"),
            ("B", "E"),
            ("C", "A"),
            ("C", "B"),
            ("C", "D"),
            ("C", "E"),
        }

    def test_honest_deviation_is_neutral(self, baseline):
        inst, truth = baseline
        rep = evaluate_deviation(inst, truth, truth, MinimizeOwnPayment("A"))
        assert set(rep.payment_delta.values()) == {F(0)}
        assert set(rep.true_utility_delta.values()) == {F(0)}
        assert rep.envy_under_truth == ()
        assert rep.objective_satisfied is False


class TestTemplates:
    def test_exclusionary_regenerates_coalition_rows(self, baseline):
        inst, truth = baseline
        sc = builtin_scenario("exclusionary-collusion")
        rep = template_exclusionary(
            inst, truth, ["A", "B", "C"], ["R1", "R2", "R3"], ["R4", "R5"]
        )
        for agent in ("A", "B", "C"):
            i = inst.agent_index(agent)
            assert rep.row(i) == sc.reported_matrix.row(i)
        # Non-members keep their true rows.
        for agent in ("D", "E"):
            i = inst.agent_index(agent)
            assert rep.row(i) == truth.row(i)

    def test_defensive_regenerates_defender_rows(self, baseline):
        inst, truth = baseline
        sc = builtin_scenario("failed-counter-attack")
        rep = template_defensive(
            inst, truth, ["D", "E"], {"D": ("R1", "R2"), "E": ("R2", "R3")}
        )
        for agent in ("D", "E"):
            i = inst.agent_index(agent)
            assert rep.row(i) == sc.reported_matrix.row(i)

    def test_flatten_regenerates_coalition_rows(self, baseline):
        inst, truth = baseline
        sc = builtin_scenario("cost-minimization")
        rep = template_flatten(inst, truth, ["D", "E"], {"D": "R4", "E": "R5"})
        for agent in ("D", "E"):
            i = inst.agent_index(agent)
            assert rep.row(i) == sc.reported_matrix.row(i)

    def test_template_rows_sum_to_rent(self, baseline):
        inst, truth = baseline
        rep = template_exclusionary(
            inst, truth, ["A", "B"], ["R1", "R2"], ["R4", "R5"]
        )
        for i in range(inst.n):
            assert sum(rep.row(i)) == inst.total_rent

    def test_exclusionary_infeasible_when_overcommitted(self, baseline):
        inst, truth = baseline
        with pytest.raises(InfeasibleTemplate):
            template_exclusionary(
                inst, truth, ["A", "B"], ["R1", "R2"], ["R3", "R4", "R5"]
            )

    def test_defensive_infeasible_when_bids_exceed_rent(self, baseline):
        inst, truth = baseline
        with pytest.raises(InfeasibleTemplate):
            template_defensive(
                inst,
                truth,
                ["D"],
                {"D": ("R1", "R2")},
                inflate_value=F(20),
            )


class TestFastMechanism:
    def test_agrees_with_exact_route(self):
        import numpy as np

        rng = random.Random(1234)
        for _ in range(40):
            n = rng.randint(2, 5)
            inst, mat = make_instance(random_rows(rng, n))
            fast = _FastMechanism(inst, mat, scale=1)
            arr = np.array(
                [[int(v) for v in row] for row in mat.values], dtype=np.int64
            )
            perm, assigned, u_num = fast.solve(arr)
            exact = max_welfare_assignment(inst, mat)
            assert tuple(int(j) for j in perm) == exact.assignment.to_indices(inst)
            sol = maximin_prices(inst, mat, exact.assignment)
            for i, agent in enumerate(inst.agent_ids):
                assert F(int(u_num[i]), n) == sol.utilities[agent]

    def test_compositions_lexicographic(self):
        got = list(_compositions(3, 2))
        assert got == [(0, 3), (1, 2), (2, 1), (3, 0)]
        assert len(list(_compositions(4, 3))) == 15


class TestSearch:
    def test_budget_guard(self, baseline):
        inst, truth = baseline
        with pytest.raises(SearchSpaceTooLarge) as ei:
            best_response_search(
                inst, truth, "A", MinimizeOwnPayment("A"), step=F(1, 100)
            )
        assert ei.value.count > ei.value.budget

    def test_step_must_divide_rent(self, baseline):
        inst, truth = baseline
        with pytest.raises(ValueError):
            best_response_search(inst, truth, "A", MinimizeOwnPayment("A"), step=F(7))

    def test_truth_in_candidate_set(self):
        # Small instance, step 1: exhaustive search can never do worse than
        # honesty because honesty is one of the enumerated rows.
        inst, truth = make_instance([(4, 1, 1), (1, 4, 1), (1, 1, 4)], total=6)
        honest = solve(inst, truth)
        for agent in inst.agent_ids:
            row, value = best_response_search(
                inst, truth, agent, MinimizeOwnPayment(agent), step=F(1)
            )
            assert sum(row) == inst.total_rent
            assert value <= honest.payment_of(agent)

    def test_single_agent_can_cut_own_payment(self, baseline):
        inst, truth = baseline
        honest = solve(inst, truth)
        row, value = best_response_search(
            inst, truth, "A", MinimizeOwnPayment("A"), step=F(1)
        )
        # The true row lies on the unit grid, so honesty is a candidate and
        # the optimum can only improve on it; here it strictly does.
        assert value < honest.payment_of("A")
        assert value == F(17, 5)

    def test_coalition_search_converges_on_small_instance(self):
        inst, truth = make_instance([(4, 1, 1), (1, 4, 1), (1, 1, 4)], total=6)
        honest = solve(inst, truth)
        objective = MinimizeCoalitionPayments(("A", "B"))
        reported, value, converged = coalition_search(
            inst, truth, ("A", "B"), objective, step=F(1)
        )
        assert converged
        honest_total = honest.payment_of("A") + honest.payment_of("B")
        assert value <= honest_total
        # Non-members are never touched.
        assert reported.row(2) == truth.row(2)
