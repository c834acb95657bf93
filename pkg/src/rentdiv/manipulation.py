"""Coalition modelling: strategy templates, misreport search, deviation scoring.

Templates construct the three archetypal coordinated misreports (room capture,
defensive inflation, preference flattening).  The search operations enumerate
every report row on a value grid and solve the full mechanism for each
candidate; a fast integer path (verified against the simplex route in the test
suite) keeps exhaustive enumeration tractable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import matching, pricing
from .model import (
    Assignment,
    Instance,
    Outcome,
    PriceVector,
    RentDivisionError,
    ValuationMatrix,
    build_outcome,
    to_rational,
    validate_instance,
)

ROLES = ("coalition", "victim", "defender", "helper", "beneficiary", "honest")


class InfeasibleTemplate(RentDivisionError):
    pass


class SearchSpaceTooLarge(RentDivisionError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"{count} candidate rows exceed the budget of {budget}")


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExcludeFromRooms:
    targets: frozenset
    rooms: frozenset

    def __init__(self, targets: Iterable[str], rooms: Iterable[str]):
        object.__setattr__(self, "targets", frozenset(targets))
        object.__setattr__(self, "rooms", frozenset(rooms))


@dataclass(frozen=True)
class MinimizeOwnPayment:
    agent: str


@dataclass(frozen=True)
class MinimizeCoalitionPayments:
    coalition: frozenset

    def __init__(self, coalition: Iterable[str]):
        object.__setattr__(self, "coalition", frozenset(coalition))


@dataclass(frozen=True)
class SubsidizeAgent:
    beneficiary: str
    room: str
    max_price: Fraction

    def __post_init__(self):
        object.__setattr__(self, "max_price", to_rational(self.max_price))


@dataclass(frozen=True)
class MaximizeTrueUtility:
    agent: str


Objective = object  # any of the five dataclasses above


def _check_objective(instance: Instance, objective) -> None:
    agents = set(instance.agent_ids)
    rooms = set(instance.room_ids)
    if isinstance(objective, ExcludeFromRooms):
        bad = (objective.targets - agents) | (objective.rooms - rooms)
    elif isinstance(objective, MinimizeOwnPayment):
        bad = {objective.agent} - agents
    elif isinstance(objective, MinimizeCoalitionPayments):
        bad = objective.coalition - agents
    elif isinstance(objective, SubsidizeAgent):
        bad = ({objective.beneficiary} - agents) | ({objective.room} - rooms)
    elif isinstance(objective, MaximizeTrueUtility):
        bad = {objective.agent} - agents
    else:
        raise TypeError(f"unknown objective {objective!r}")
    if bad:
        raise ValueError(f"objective references unknown labels: {sorted(bad)}")


def exclusion_check(outcome: Outcome, targets: Iterable[str], rooms: Iterable[str]) -> bool:
    """True iff no target agent is assigned any of the listed rooms."""
    rooms = set(rooms)
    return all(outcome.assignment.room_of(a) not in rooms for a in targets)


def objective_value(
    instance: Instance, true_matrix: ValuationMatrix, outcome: Outcome, objective
):
    """The quantity the objective cares about, always measured against true
    values (payments are report-independent facts)."""
    if isinstance(objective, ExcludeFromRooms):
        return exclusion_check(outcome, objective.targets, objective.rooms)
    if isinstance(objective, MinimizeOwnPayment):
        return outcome.payment_of(objective.agent)
    if isinstance(objective, MinimizeCoalitionPayments):
        return sum(outcome.payment_of(a) for a in sorted(objective.coalition))
    if isinstance(objective, SubsidizeAgent):
        return (
            outcome.assignment.room_of(objective.beneficiary) == objective.room
            and outcome.payment_of(objective.beneficiary) <= objective.max_price
        )
    if isinstance(objective, MaximizeTrueUtility):
        i = instance.agent_index(objective.agent)
        room = outcome.assignment.room_of(objective.agent)
        j = instance.room_index(room)
        return true_matrix.value(i, j) - outcome.prices.price_of(room)
    raise TypeError(f"unknown objective {objective!r}")


def objective_satisfied(
    instance: Instance,
    true_matrix: ValuationMatrix,
    honest: Outcome,
    manipulated: Outcome,
    objective,
) -> bool:
    """Predicate objectives: did the condition hold.  Optimization objectives:
    did the manipulation strictly improve on the honest outcome."""
    value = objective_value(instance, true_matrix, manipulated, objective)
    if isinstance(objective, (ExcludeFromRooms, SubsidizeAgent)):
        return bool(value)
    baseline = objective_value(instance, true_matrix, honest, objective)
    if isinstance(objective, (MinimizeOwnPayment, MinimizeCoalitionPayments)):
        return value < baseline
    return value > baseline


# ---------------------------------------------------------------------------
# Deviation reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeviationReport:
    honest_outcome: Outcome
    manipulated_outcome: Outcome
    payment_delta: dict  # agent -> Fraction (manipulated payment - honest payment)
    true_utility_delta: dict  # agent -> Fraction, both sides under TRUE values
    envy_under_truth: tuple  # (agent, agent) pairs
    objective_satisfied: bool
    objective_value: object  # Fraction or bool


def evaluate_deviation(
    instance: Instance,
    true_matrix: ValuationMatrix,
    reported_matrix: ValuationMatrix,
    objective,
) -> DeviationReport:
    """Solve the mechanism on truth and on the reports, compare under truth."""
    validate_instance(instance, true_matrix)
    validate_instance(instance, reported_matrix)
    _check_objective(instance, objective)
    honest = pricing.solve(instance, true_matrix)
    manipulated = pricing.solve(instance, reported_matrix)

    payment_delta = {
        a: manipulated.payment_of(a) - honest.payment_of(a)
        for a in instance.agent_ids
    }
    true_honest = _true_utilities(instance, true_matrix, honest)
    true_manip = _true_utilities(instance, true_matrix, manipulated)
    true_utility_delta = {
        a: true_manip[a] - true_honest[a] for a in instance.agent_ids
    }
    envy = []
    for i, a in enumerate(instance.agent_ids):
        for b in instance.agent_ids:
            if b == a:
                continue
            room_b = manipulated.assignment.room_of(b)
            jb = instance.room_index(room_b)
            if true_matrix.value(i, jb) - manipulated.prices.price_of(room_b) > true_manip[a]:
                envy.append((a, b))
    return DeviationReport(
        honest_outcome=honest,
        manipulated_outcome=manipulated,
        payment_delta=payment_delta,
        true_utility_delta=true_utility_delta,
        envy_under_truth=tuple(envy),
        objective_satisfied=objective_satisfied(
            instance, true_matrix, honest, manipulated, objective
        ),
        objective_value=objective_value(instance, true_matrix, manipulated, objective),
    )


def _true_utilities(instance, true_matrix, outcome):
    out = {}
    for i, a in enumerate(instance.agent_ids):
        room = outcome.assignment.room_of(a)
        j = instance.room_index(room)
        out[a] = true_matrix.value(i, j) - outcome.prices.price_of(room)
    return out


# ---------------------------------------------------------------------------
# Strategy templates
# ---------------------------------------------------------------------------


def template_exclusionary(
    instance: Instance,
    true_matrix: ValuationMatrix,
    coalition: list,
    claimed_rooms: list,
    victim_rooms: Iterable[str],
    claim_value=Fraction(15),
    filler_value=Fraction(9),
) -> ValuationMatrix:
    """Room-capture misreport: each member overbids its claimed room, parks
    filler mass on the victims' rooms, and splits the exact leftover over the
    other members' claimed rooms.

    The leftover is split into near-equal descending parts handed out in
    cyclic coalition order starting from the member after oneself.
    """
    validate_instance(instance, true_matrix)
    claim_value = to_rational(claim_value)
    filler_value = to_rational(filler_value)
    if len(coalition) != len(claimed_rooms):
        raise ValueError("coalition and claimed_rooms must pair up")
    victim_rooms = list(dict.fromkeys(victim_rooms))
    if set(claimed_rooms) & set(victim_rooms):
        raise ValueError("claimed and victim rooms overlap")
    if claim_value < 0 or filler_value < 0:
        raise ValueError("claim and filler values must be nonnegative")

    room_of_member = dict(zip(coalition, claimed_rooms))
    matrix = true_matrix
    remainder = instance.total_rent - claim_value - filler_value * len(victim_rooms)
    if remainder < 0:
        raise InfeasibleTemplate(
            f"claim {claim_value} plus fillers exceed the rent by {-remainder}"
        )
    k = len(coalition) - 1
    if k == 0 and remainder != 0:
        raise InfeasibleTemplate(
            "a lone member cannot place the leftover on other claimed rooms"
        )
    for m, agent in enumerate(coalition):
        row = [Fraction(0)] * instance.n
        row[instance.room_index(room_of_member[agent])] = claim_value
        for r in victim_rooms:
            row[instance.room_index(r)] = filler_value
        if k:
            parts = _descending_parts(remainder, k)
            others = coalition[m + 1 :] + coalition[:m]
            for other, part in zip(others, parts):
                row[instance.room_index(room_of_member[other])] = part
        matrix = matrix.replace_row(instance.agent_index(agent), row)
    validate_instance(instance, matrix)
    return matrix


def _descending_parts(total: Fraction, k: int) -> list:
    """Split a nonnegative amount into k near-equal parts, largest first."""
    if total.denominator == 1:
        base, extra = divmod(total.numerator, k)
        return [Fraction(base + 1)] * extra + [Fraction(base)] * (k - extra)
    return [total / k] * k


def template_flatten(
    instance: Instance,
    true_matrix: ValuationMatrix,
    coalition: Iterable[str],
    own_room: dict,
) -> ValuationMatrix:
    """Indifference misreport: floor(R/n) on every room, the leftover cent
    mass on the member's own room."""
    validate_instance(instance, true_matrix)
    coalition = list(coalition)
    for agent in coalition:
        if agent not in own_room:
            raise ValueError(f"own_room missing for {agent}")
    n = instance.n
    base = Fraction(math.floor(instance.total_rent / n))
    leftover = instance.total_rent - n * base
    matrix = true_matrix
    for agent in coalition:
        row = [base] * n
        row[instance.room_index(own_room[agent])] += leftover
        matrix = matrix.replace_row(instance.agent_index(agent), row)
    validate_instance(instance, matrix)
    return matrix


def template_defensive(
    instance: Instance,
    true_matrix: ValuationMatrix,
    defenders: Iterable[str],
    contested: dict,
    inflate_value=Fraction(12),
) -> ValuationMatrix:
    """Counter-bidding misreport: each defender inflates its two contested
    rooms and spreads the exact leftover over the remaining rooms.

    Leftover rule (calibrated against the archetypal defender rows): the
    remaining room the defender truly values most is sacrificed down to a
    token 1, the others start from their true values, and the row is then
    corrected in unit steps - additions go to the currently cheapest
    non-sacrificed room, removals come off the currently richest (ties break
    to the lower room index).
    """
    validate_instance(instance, true_matrix)
    inflate_value = to_rational(inflate_value)
    defenders = list(defenders)
    matrix = true_matrix
    remainder = instance.total_rent - 2 * inflate_value
    if remainder < 0:
        raise InfeasibleTemplate(
            f"two bids of {inflate_value} exceed the rent {instance.total_rent}"
        )
    for agent in defenders:
        pair = contested[agent]
        if len(set(pair)) != 2:
            raise ValueError(f"{agent} must contest two distinct rooms")
        i = instance.agent_index(agent)
        row = [Fraction(0)] * instance.n
        for r in pair:
            row[instance.room_index(r)] = inflate_value
        rest = [
            j
            for j in range(instance.n)
            if instance.room_ids[j] not in pair
        ]
        if rest and remainder > 0:
            _fill_defensive_rest(row, rest, [true_matrix.value(i, j) for j in rest], remainder)
        elif remainder > 0:
            raise InfeasibleTemplate("no rooms left to carry the leftover")
        matrix = matrix.replace_row(i, row)
    validate_instance(instance, matrix)
    return matrix


def _fill_defensive_rest(row, rest, true_values, remainder):
    sacrifice = max(range(len(rest)), key=lambda k: (true_values[k], -rest[k]))
    alloc = list(true_values)
    alloc[sacrifice] = min(Fraction(1), remainder)
    diff = remainder - sum(alloc)
    movable = [k for k in range(len(rest)) if k != sacrifice] or [sacrifice]
    while diff > 0:
        step = min(Fraction(1), diff)
        k = min(movable, key=lambda k: (alloc[k], rest[k]))
        alloc[k] += step
        diff -= step
    while diff < 0:
        candidates = [k for k in movable if alloc[k] > 0] or [sacrifice]
        k = max(candidates, key=lambda k: (alloc[k], -rest[k]))
        step = min(Fraction(1), -diff, alloc[k])
        alloc[k] -= step
        diff += step
    for k, j in enumerate(rest):
        row[j] = alloc[k]


# ---------------------------------------------------------------------------
# Exhaustive misreport search
# ---------------------------------------------------------------------------

SEARCH_BUDGET = 10**7
_PERM_LIMIT = 9


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative ints summing to `total`, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


class _FastMechanism:
    """Integer-scaled mechanism solver for the search hot loop.

    Values are scaled to a common integer grid; the welfare-maximizing
    assignment comes from vectorized enumeration with the same canonical
    tie-break as the exact route, and the maximin utilities from longest
    paths in the envy graph: u_i = (surplus - sum(m))/n + m_i where m_i is
    the largest envy-chain weight ending at agent i.  The test suite pins
    this path against the simplex route.
    """

    def __init__(self, instance: Instance, matrix: ValuationMatrix, scale: int):
        self.instance = instance
        self.n = instance.n
        if self.n > _PERM_LIMIT:
            raise matching.InstanceTooLarge(self.n)
        self.scale = scale
        self.rent_scaled = instance.total_rent * scale
        assert self.rent_scaled.denominator == 1
        self.rent_int = int(self.rent_scaled)
        self.base = np.array(
            [[int(v * scale) for v in row] for row in matrix.values], dtype=np.int64
        )
        self.perms = np.array(
            list(itertools.permutations(range(self.n))), dtype=np.intp
        )
        self.ar = np.arange(self.n)

    def scaled_row(self, row) -> np.ndarray:
        return np.array([int(v * self.scale) for v in row], dtype=np.int64)

    def solve(self, mat: np.ndarray):
        """Returns (perm, utility numerators); utilities are numer/(n*scale)."""
        n = self.n
        welfare = mat[self.ar[None, :], self.perms].sum(axis=1)
        best_w = welfare.max()
        ties = np.nonzero(welfare == best_w)[0]
        if len(ties) == 1:
            k = int(ties[0])
        else:
            rows = mat.tolist()
            k = int(
                max(ties, key=lambda t: matching.tie_break_key(self.perms[t], rows))
            )
        perm = self.perms[k]
        assigned = mat[self.ar, perm]
        grid = mat[:, perm]
        d = grid - assigned[None, :]
        for kk in range(n):
            d = np.maximum(d, d[:, kk : kk + 1] + d[kk : kk + 1, :])
        m = d.max(axis=1)
        surplus = int(welfare[k]) - self.rent_int
        shared = surplus - int(m.sum())
        # u_i * n * scale = shared + n * m_i
        u_num = shared + n * m
        return perm, assigned, u_num

    def payments_num(self, assigned, u_num):
        """Payment numerators on the same n*scale grid, per agent."""
        return self.n * assigned - u_num


def _search_iteration(fast, true_int, objective, instance, agent_index, step):
    """Yield (candidate_key, score) for every composition row of one agent.

    Scores are exact integer tuples where larger is better; candidate_key is
    the raw composition so ties resolve to the lexicographically smallest row.
    """
    n = fast.n
    nscale = n * fast.scale
    total_units = instance.total_rent / step
    mat = fast.base.copy()
    step_scaled = step * fast.scale
    assert step_scaled.denominator == 1
    step_int = int(step_scaled)

    room_index = {r: j for j, r in enumerate(instance.room_ids)}
    agent_pos = {a: i for i, a in enumerate(instance.agent_ids)}

    if isinstance(objective, ExcludeFromRooms):
        targets = sorted(agent_pos[a] for a in objective.targets)
        rooms = {room_index[r] for r in objective.rooms}
    elif isinstance(objective, MinimizeOwnPayment):
        who = agent_pos[objective.agent]
    elif isinstance(objective, MinimizeCoalitionPayments):
        members = sorted(agent_pos[a] for a in objective.coalition)
    elif isinstance(objective, SubsidizeAgent):
        ben = agent_pos[objective.beneficiary]
        ben_room = room_index[objective.room]
        cap_num = objective.max_price * nscale
        assert cap_num.denominator == 1
        cap_num = int(cap_num)
    elif isinstance(objective, MaximizeTrueUtility):
        who = agent_pos[objective.agent]
    else:
        raise TypeError(f"unknown objective {objective!r}")

    for cand in _compositions(int(total_units), n):
        mat[agent_index] = np.array(cand, dtype=np.int64) * step_int
        perm, assigned, u_num = fast.solve(mat)
        if isinstance(objective, ExcludeFromRooms):
            ok = all(int(perm[t]) not in rooms for t in targets)
            score = (1 if ok else 0,)
        elif isinstance(objective, MinimizeOwnPayment):
            pay = n * int(assigned[who]) - int(u_num[who])
            score = (-pay,)
        elif isinstance(objective, MinimizeCoalitionPayments):
            pay = sum(n * int(assigned[i]) - int(u_num[i]) for i in members)
            score = (-pay,)
        elif isinstance(objective, SubsidizeAgent):
            pay = n * int(assigned[ben]) - int(u_num[ben])
            ok = int(perm[ben]) == ben_room and pay <= cap_num
            score = (1 if ok else 0,)
        else:  # MaximizeTrueUtility
            room = int(perm[who])
            pay = n * int(assigned[who]) - int(u_num[who])
            score = (n * int(true_int[who][room]) - pay,)
        yield cand, score


def _prepare_search(instance, true_matrix, step, budget):
    validate_instance(instance, true_matrix)
    step = to_rational(step)
    if step <= 0:
        raise ValueError("step must be positive")
    units = instance.total_rent / step
    if units.denominator != 1:
        raise ValueError("step must divide the total rent")
    count = math.comb(int(units) + instance.n - 1, instance.n - 1)
    if count > budget:
        raise SearchSpaceTooLarge(count, budget)
    scale = step.denominator
    for row in true_matrix.values:
        for v in row:
            scale = scale * v.denominator // math.gcd(scale, v.denominator)
    scale = scale * instance.total_rent.denominator // math.gcd(
        scale, instance.total_rent.denominator
    )
    return step, scale


def best_response_search(
    instance: Instance,
    true_matrix: ValuationMatrix,
    agent: str,
    objective,
    step=Fraction(1),
    budget: int = SEARCH_BUDGET,
):
    """Exhaustively enumerate one agent's report rows, all others truthful.

    Returns (best_row, achieved_value) where the value is measured against
    true preferences.  Ties go to the lexicographically smallest row; honesty
    is always in the candidate set, so the result never scores worse than it.
    """
    _check_objective(instance, objective)
    step, scale = _prepare_search(instance, true_matrix, step, budget)
    agent_index = instance.agent_index(agent)
    fast = _FastMechanism(instance, true_matrix, scale)
    true_int = [[int(v * scale) for v in row] for row in true_matrix.values]

    best_key = None
    best_score = None
    for cand, score in _search_iteration(
        fast, true_int, objective, instance, agent_index, step
    ):
        if best_score is None or score > best_score:
            best_score = score
            best_key = cand
    row = tuple(k * step for k in best_key)
    reported = true_matrix.replace_row(agent_index, row)
    outcome = pricing.solve(instance, reported)
    return row, objective_value(instance, true_matrix, outcome, objective)


def coalition_search(
    instance: Instance,
    true_matrix: ValuationMatrix,
    coalition: Iterable[str],
    objective,
    step=Fraction(1),
    max_rounds: int = 10,
    budget: int = SEARCH_BUDGET,
):
    """Coordinate-ascent over coalition members' rows.

    Cycles through members in roster order, replacing each row with its best
    response holding the others fixed, until a full round changes nothing or
    max_rounds is hit.  Returns (reported_matrix, achieved_value, converged).
    """
    _check_objective(instance, objective)
    step, scale = _prepare_search(instance, true_matrix, step, budget)
    members = [a for a in instance.agent_ids if a in set(coalition)]
    if not members:
        raise ValueError("coalition is empty")
    true_int = [[int(v * scale) for v in row] for row in true_matrix.values]

    current = true_matrix
    converged = False
    for _ in range(max_rounds):
        changed = False
        for agent in members:
            agent_index = instance.agent_index(agent)
            fast = _FastMechanism(instance, current, scale)
            best_key = None
            best_score = None
            for cand, score in _search_iteration(
                fast, true_int, objective, instance, agent_index, step
            ):
                if best_score is None or score > best_score:
                    best_score = score
                    best_key = cand
            row = tuple(k * step for k in best_key)
            if row != current.row(agent_index):
                current = current.replace_row(agent_index, row)
                changed = True
        if not changed:
            converged = True
            break
    outcome = pricing.solve(instance, current)
    return current, objective_value(instance, true_matrix, outcome, objective), converged
