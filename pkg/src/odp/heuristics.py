"""Fast non-exact planners: greedy packing and the fixed-policy baselines.

None of these prove anything about optimality; they exist to seed the exact
search with good incumbents and to reproduce the single-mode reference
policies (carrier for everyone, or one truck type for everyone).
"""

from __future__ import annotations

import numpy as np

from .model import Instance, ScenarioSet, Solution, assemble_solution
from .routing import build_route, order_values, route_edges, tour_cost, within_limits


def _routes_for(instance, scenarios, assigned: dict[int, list[int]]):
    """Per-scenario tours for each truck over its demanding customers."""
    plans = []
    for demand, _ in scenarios.scenarios():
        per_truck = {}
        for t, custs in assigned.items():
            visits = [i for i in custs if demand[i - 1]]
            order = build_route(instance, visits)
            if not within_limits(instance, order):
                return None
            per_truck[t] = order
        plans.append(per_truck)
    return plans


def _expected_route_cost(instance, scenarios, plans) -> float:
    total = 0.0
    for (_, p), per_truck in zip(scenarios.scenarios(), plans):
        total += p * sum(tour_cost(instance, order) for order in per_truck.values())
    return total


def _assemble(instance, scenarios, truck_customers, plans, carrier_of) -> Solution:
    n, t_, r_ = instance.n_customers, instance.n_trucks, instance.n_carriers
    q = scenarios.n_scenarios
    x = np.zeros((n, t_))
    w = np.zeros(t_)
    y = np.zeros((q, n, r_))
    v = np.zeros((q, n + 1, n + 1, t_))
    s = np.zeros((q, n, t_))
    for t, custs in truck_customers.items():
        for i in custs:
            x[i - 1, t] = 1
        if custs:
            w[t] = 1
    for k, (demand, _) in enumerate(scenarios.scenarios()):
        for i, r in carrier_of.items():
            if demand[i - 1]:
                y[k, i - 1, r] = 1
        for t in range(t_):
            order = plans[k].get(t, []) if plans else []
            v[k, :, :, t] = route_edges(n + 1, order)
            s[k, :, t] = order_values(instance, order, demand)
    return assemble_solution(instance, scenarios, x, w, y, v, s)


def greedy_plan(instance: Instance, scenarios: ScenarioSet) -> Solution:
    """Construct-and-improve plan.

    Customers are ranked by expected demand times cheapest carrier charge
    (descending, ties by id) and packed onto each truck in turn while the
    capacity and window budgets allow; a truck is only opened when the packed
    batch is cheaper on the truck than with the carriers.  Whoever remains is
    served by their cheapest carrier.  Tours come from nearest-neighbour
    construction plus window-preserving 2-opt.
    """
    n = instance.n_customers
    expected_demand = scenarios.probabilities @ scenarios.demands.astype(float)
    carrier_price = np.array(
        [
            (instance.cheapest_carrier(i) or (0.0, -1))[0]
            for i in range(1, n + 1)
        ]
    )
    score = expected_demand * carrier_price
    ranked = sorted(range(1, n + 1), key=lambda i: (-score[i - 1], i))

    unassigned = set(ranked)
    truck_customers: dict[int, list[int]] = {}
    committed_plans: dict[int, list] = {}
    for truck in instance.trucks:
        batch: list[int] = []
        load = 0.0
        plans = [dict() for _ in range(scenarios.n_scenarios)]
        for i in ranked:
            if i not in unassigned:
                continue
            if load + instance.weights[i - 1] > truck.capacity_kg:
                continue
            trial = _routes_for(instance, scenarios, {truck.id: batch + [i]})
            if trial is None:
                continue
            batch.append(i)
            load += instance.weights[i - 1]
            plans = trial
        if not batch:
            continue
        truck_cost = (
            truck.initial_cost
            + instance.assignment_weight * len(batch)
            + _expected_route_cost(instance, scenarios, plans)
        )
        carrier_cost = float(sum(score[i - 1] for i in batch))
        if truck_cost < carrier_cost:
            truck_customers[truck.id] = batch
            committed_plans[truck.id] = plans
            unassigned -= set(batch)

    carrier_of = {}
    for i in sorted(unassigned):
        pick = instance.cheapest_carrier(i)
        if pick is None:
            if expected_demand[i - 1] > 0:
                raise ValueError(
                    f"customer {i} cannot be served: no carriers and no truck room"
                )
            continue
        carrier_of[i] = pick[1]

    plans = [
        {t: committed_plans[t][k][t] for t in truck_customers}
        for k in range(scenarios.n_scenarios)
    ]
    return _assemble(instance, scenarios, truck_customers, plans, carrier_of)


def baseline_carrier_only(instance: Instance, scenarios: ScenarioSet) -> Solution:
    """Every demanding customer goes to its cheapest carrier; no trucks."""
    if instance.n_carriers == 0:
        raise ValueError("carrier-only baseline needs at least one carrier")
    carrier_of = {
        i: instance.cheapest_carrier(i)[1] for i in range(1, instance.n_customers + 1)
    }
    return _assemble(instance, scenarios, {}, None, carrier_of)


def baseline_single_truck_type(
    instance: Instance, scenarios: ScenarioSet, truck_type: int
) -> Solution | None:
    """All demand on trucks of one type (no carriers), or None if impossible.

    ``truck_type`` indexes a representative truck; every truck sharing its
    (capacity, initial cost) signature belongs to the fleet.  The smallest
    fleet prefix that admits a first-fit packing by descending weight plus
    feasible tours in every scenario wins.
    """
    rep = instance.trucks[truck_type]
    fleet = [
        t for t in instance.trucks
        if (t.capacity_kg, t.initial_cost) == (rep.capacity_kg, rep.initial_cost)
    ]
    must_cover = [
        i for i in range(1, instance.n_customers + 1)
        if scenarios.demands[:, i - 1].any()
    ]
    order = sorted(must_cover, key=lambda i: (-instance.weights[i - 1], i))
    for k in range(0 if not must_cover else 1, len(fleet) + 1):
        trucks = fleet[:k]
        room = {t.id: t.capacity_kg for t in trucks}
        assigned: dict[int, list[int]] = {t.id: [] for t in trucks}
        ok = True
        for i in order:
            placed = False
            for t in trucks:
                if instance.weights[i - 1] <= room[t.id]:
                    room[t.id] -= instance.weights[i - 1]
                    assigned[t.id].append(i)
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        plans = _routes_for(instance, scenarios, assigned)
        if plans is None:
            continue
        return _assemble(instance, scenarios, assigned, plans, {})
    return None
