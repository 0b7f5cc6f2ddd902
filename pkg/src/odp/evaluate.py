"""Ground truth: constraint checking, cost accounting, exhaustive optimum.

The validator checks the literal constraint families (3)-(16) plus variable
domains, with exact arithmetic everywhere except the distance-budget rows
(11)-(13), which get a 1e-9 tolerance.  The brute-force optimum enumerates
stage-one assignments and all window-respecting tours directly, without going
through the MILP, so it serves as an independent oracle for the solvers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (
    AFTERNOON, DEPOT, EVENING, CostBreakdown, Instance, MORNING, ScenarioSet,
    Solution, WINDOW_ORDER, assemble_solution, compute_cost,
)
from .routing import blocked_windows, order_values, route_edges, window_blocks

ORACLE_MAX_CUSTOMERS = 6
ORACLE_MAX_TRUCKS = 2
ORACLE_MAX_CARRIERS = 2
ORACLE_MAX_SCENARIOS = 3

_LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    eq: int              # constraint family, (3)..(16), or 17/18/19 for domains
    indices: tuple
    slack: float         # negative by how much the row is violated
    detail: str

    def __str__(self):
        return f"({self.eq}) {self.indices}: {self.detail}"


def _check_dims(instance: Instance, scenarios: ScenarioSet, solution: Solution):
    n, t_, r_ = instance.n_customers, instance.n_trucks, instance.n_carriers
    q = scenarios.n_scenarios
    if scenarios.n_customers != n:
        raise ValueError("scenario set and instance disagree on customer count")
    expected = {
        "x": (n, t_),
        "w": (t_,),
        "y": (q, n, r_),
        "v": (q, n + 1, n + 1, t_),
        "s": (q, n, t_),
    }
    for name, shape in expected.items():
        got = getattr(solution, name).shape
        if got != shape:
            raise ValueError(f"solution field {name} has shape {got}, expected {shape}")


def validate(
    instance: Instance, scenarios: ScenarioSet, solution: Solution
) -> list[Violation]:
    """All constraint violations of a solution; an empty list means feasible."""
    _check_dims(instance, scenarios, solution)
    n, t_, r_ = instance.n_customers, instance.n_trucks, instance.n_carriers
    q = scenarios.n_scenarios
    D = scenarios.demands
    K = instance.distance_km
    x = solution.x.astype(np.int64)
    w = solution.w.astype(np.int64)
    y = solution.y.astype(np.int64)
    v = solution.v.astype(np.int64)
    s = solution.s.astype(np.int64)
    out: list[Violation] = []

    def bad(eq, indices, slack, detail):
        out.append(Violation(eq, tuple(indices), float(slack), detail))

    # domains (17)-(19)
    for name, arr, eq in (("x", x, 17), ("w", w, 17), ("y", y, 18), ("v", v, 18)):
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            bad(eq, (name,), 0.0, f"{name} entries must be 0/1")
    if s.size and (np.any(s < 0) or np.any(s > n)):
        bad(19, ("s",), 0.0, f"order values must lie in [0, {n}]")

    # (3) coverage
    for w_ix in range(q):
        for i in range(1, n + 1):
            lhs = int(x[i - 1].sum() + y[w_ix, i - 1].sum())
            rhs = int(D[w_ix, i - 1])
            if lhs < rhs:
                bad(3, (i, w_ix), lhs - rhs,
                    f"customer {i} demands in scenario {w_ix} but is unserved")

    # (4) capacity
    for t in range(t_):
        load = float(instance.weights @ x[:, t]) if n else 0.0
        cap = instance.trucks[t].capacity_kg
        if load > cap:
            bad(4, (t,), cap - load, f"truck {t} loaded {load} over capacity {cap}")

    # (5) activation
    for t in range(t_):
        lhs = int(x[:, t].sum())
        rhs = instance.big_m * int(w[t])
        if lhs > rhs:
            bad(5, (t,), rhs - lhs, f"truck {t} has assignments but W={int(w[t])}")

    # (6) no self-arcs
    for w_ix in range(q):
        for t in range(t_):
            for u in range(n + 1):
                if v[w_ix, u, u, t] != 0:
                    bad(6, (u, t, w_ix), -1.0, f"self-arc at location {u}")

    # (7)/(8) depot degree
    for w_ix in range(q):
        for t in range(t_):
            into = int(v[w_ix, :, DEPOT, t].sum())
            if into > 1:
                bad(7, (t, w_ix), 1 - into, f"{into} arcs into the depot")
            outof = int(v[w_ix, DEPOT, :, t].sum())
            if outof > 1:
                bad(8, (t, w_ix), 1 - outof, f"{outof} arcs out of the depot")

    # (9)/(10) customer visit degrees
    for w_ix in range(q):
        for t in range(t_):
            for i in range(1, n + 1):
                want = int(x[i - 1, t]) * int(D[w_ix, i - 1])
                into = int(v[w_ix, :, i, t].sum())
                if into != want:
                    bad(9, (i, t, w_ix), want - into,
                        f"customer {i} has {into} inbound arcs, needs {want}")
                outof = int(v[w_ix, i, :, t].sum())
                if outof != want:
                    bad(10, (i, t, w_ix), want - outof,
                        f"customer {i} has {outof} outbound arcs, needs {want}")

    # (11)-(13) window travel budgets
    for eq, window in ((11, MORNING), (12, AFTERNOON), (13, EVENING)):
        members = instance.window_sets[window]
        limit = instance.window_limits.limit(window)
        for w_ix in range(q):
            for t in range(t_):
                used = float(
                    sum(
                        K[u, i] * v[w_ix, u, i, t]
                        for u in range(n + 1)
                        for i in members
                    )
                )
                if used > limit + _LIMIT_TOL:
                    bad(eq, (t, w_ix), limit - used,
                        f"{window} travel {used} exceeds limit {limit}")

    # (14) subtour elimination
    for w_ix in range(q):
        for t in range(t_):
            sv = s[w_ix, :, t]
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    if i == j:
                        continue
                    lhs = int(sv[i - 1] - sv[j - 1] + n * v[w_ix, i, j, t])
                    if lhs > n - 1:
                        bad(14, (i, j, t, w_ix), (n - 1) - lhs,
                            f"order values {int(sv[i-1])},{int(sv[j-1])} break the "
                            f"arc {i}->{j}")

    # (15)/(16) window ordering through order values
    for eq, early, late in ((15, MORNING, AFTERNOON), (16, AFTERNOON, EVENING)):
        early_ids = instance.window_sets[early]
        late_ids = instance.window_sets[late]
        block = len(early_ids)
        for w_ix in range(q):
            for t in range(t_):
                for i in early_ids:
                    d = int(D[w_ix, i - 1])
                    for j in late_ids:
                        lhs = d * int(s[w_ix, i - 1, t])
                        rhs = int(s[w_ix, j - 1, t]) + block * (1 - d)
                        if lhs > rhs:
                            bad(eq, (i, j, t, w_ix), rhs - lhs,
                                f"{early} customer {i} ordered after {late} customer {j}")

    return out


def cost_of(instance: Instance, scenarios: ScenarioSet, solution: Solution) -> CostBreakdown:
    """Objective decomposition at a solution (defined for infeasible points too)."""
    _check_dims(instance, scenarios, solution)
    return compute_cost(
        instance, scenarios, solution.x, solution.w, solution.y, solution.v
    )


def _tour_orders(instance: Instance, visit_ids: tuple[int, ...], blocked: bool):
    """Candidate visit orders permitted by the window-order rows.

    With blocked windows the tour must run morning block, afternoon block,
    evening block (any order inside each block).  Otherwise no afternoon
    customer demands anywhere, so only morning and evening stops exist and
    they may interleave in any order.
    """
    if not blocked:
        yield from itertools.permutations(visit_ids)
        return
    blocks = window_blocks(instance, visit_ids)
    for perm_m in itertools.permutations(blocks[0]):
        for perm_a in itertools.permutations(blocks[1]):
            for perm_e in itertools.permutations(blocks[2]):
                yield perm_m + perm_a + perm_e


def _min_route(instance: Instance, visit_ids: tuple[int, ...], blocked: bool):
    """Cheapest feasible tour over a visit set, or None if none fits.

    Every candidate order is checked against the per-window travel budgets
    (distance entering each window's customers along the tour).
    """
    if not visit_ids:
        return 0.0, ()
    K = instance.distance_km
    C = instance.routing_cost
    limits = {w: instance.window_limits.limit(w) for w in WINDOW_ORDER}
    best = None
    for order in _tour_orders(instance, visit_ids, blocked):
        used = {w: 0.0 for w in WINDOW_ORDER}
        cost = 0.0
        here = DEPOT
        feasible = True
        for i in order:
            window = instance.window_of(i)
            used[window] += K[here, i]
            if used[window] > limits[window] + _LIMIT_TOL:
                feasible = False
                break
            cost += C[here, i]
            here = i
        if not feasible:
            continue
        cost += C[here, DEPOT]
        if best is None or cost < best[0]:
            best = (float(cost), order)
    return best


def brute_force_optimum(
    instance: Instance, scenarios: ScenarioSet
) -> tuple[Solution, float]:
    """Global optimum by exhaustive enumeration (small instances only).

    Stage one enumerates, per customer, either no reservation or one truck;
    stage two picks the cheapest carrier for each uncovered demanding customer
    and the cheapest feasible window-ordered tour per truck and scenario.
    Points dominated in every term (double reservations, redundant carriers,
    unused-but-paid trucks) are skipped, which never changes the minimum.
    """
    n, t_, r_ = instance.n_customers, instance.n_trucks, instance.n_carriers
    q = scenarios.n_scenarios
    if n > ORACLE_MAX_CUSTOMERS or t_ > ORACLE_MAX_TRUCKS \
            or r_ > ORACLE_MAX_CARRIERS or q > ORACLE_MAX_SCENARIOS:
        raise ValueError(
            "instance exceeds the enumeration guard "
            f"(n<={ORACLE_MAX_CUSTOMERS}, trucks<={ORACLE_MAX_TRUCKS}, "
            f"carriers<={ORACLE_MAX_CARRIERS}, scenarios<={ORACLE_MAX_SCENARIOS})"
        )
    if instance.assignment_weight < 0:
        # dominance pruning below assumes extra reservations never pay off
        raise ValueError("enumeration requires a non-negative assignment weight")
    D = scenarios.demands
    P = scenarios.probabilities
    cheapest = [instance.cheapest_carrier(i) for i in range(1, n + 1)]
    scenario_blocked = [blocked_windows(instance, D[w]) for w in range(q)]

    route_memo: dict[tuple, tuple[float, tuple[int, ...]] | None] = {}

    def min_route(visits: tuple[int, ...], blocked: bool):
        key = (visits, blocked)
        if key not in route_memo:
            route_memo[key] = _min_route(instance, visits, blocked)
        return route_memo[key]

    best_total = None
    best_plan = None
    # assignment code per customer: 0 = no reservation, 1+t = truck t
    for code in itertools.product(range(t_ + 1), repeat=n):
        loads = [0.0] * t_
        ok = True
        for i in range(1, n + 1):
            if code[i - 1]:
                loads[code[i - 1] - 1] += instance.weights[i - 1]
        for t in range(t_):
            if loads[t] > instance.trucks[t].capacity_kg:
                ok = False
                break
        if not ok:
            continue
        assigned = [tuple(i for i in range(1, n + 1) if code[i - 1] == t + 1)
                    for t in range(t_)]
        used = [bool(a) for a in assigned]
        stage1 = instance.assignment_weight * sum(1 for c in code if c) + sum(
            instance.trucks[t].initial_cost for t in range(t_) if used[t]
        )
        if best_total is not None and stage1 > best_total:
            continue
        expected = 0.0
        tours: list[list[tuple[int, ...]]] = []  # [scenario][truck] -> visit order
        feasible = True
        for w_ix in range(q):
            carrier_cost = 0.0
            for i in range(1, n + 1):
                if code[i - 1] == 0 and D[w_ix, i - 1]:
                    if cheapest[i - 1] is None:
                        feasible = False
                        break
                    carrier_cost += cheapest[i - 1][0]
            if not feasible:
                break
            routing_cost = 0.0
            scenario_tours = []
            for t in range(t_):
                visits = tuple(i for i in assigned[t] if D[w_ix, i - 1])
                found = min_route(visits, scenario_blocked[w_ix])
                if found is None:
                    feasible = False
                    break
                routing_cost += found[0]
                scenario_tours.append(found[1])
            if not feasible:
                break
            expected += float(P[w_ix]) * (carrier_cost + routing_cost)
            tours.append(scenario_tours)
        if not feasible:
            continue
        total = stage1 + expected
        if best_total is None or total < best_total:
            best_total = total
            best_plan = (code, tours)

    if best_plan is None:
        raise ValueError("no feasible plan exists for this instance")

    code, tours = best_plan
    x = np.zeros((n, t_))
    w = np.zeros(t_)
    y = np.zeros((q, n, r_))
    v = np.zeros((q, n + 1, n + 1, t_))
    s = np.zeros((q, n, t_))
    for i in range(1, n + 1):
        if code[i - 1]:
            x[i - 1, code[i - 1] - 1] = 1
            w[code[i - 1] - 1] = 1
    for w_ix in range(q):
        for i in range(1, n + 1):
            if code[i - 1] == 0 and D[w_ix, i - 1]:
                y[w_ix, i - 1, cheapest[i - 1][1]] = 1
        for t in range(t_):
            order = list(tours[w_ix][t])
            v[w_ix, :, :, t] = route_edges(n + 1, order)
            s[w_ix, :, t] = order_values(instance, order, D[w_ix])
    solution = assemble_solution(instance, scenarios, x, w, y, v, s)
    problems = validate(instance, scenarios, solution)
    if problems:
        raise AssertionError(f"oracle produced an infeasible plan: {problems[:3]}")
    return solution, solution.cost.total
