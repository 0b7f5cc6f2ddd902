"""Tour construction shared by the heuristics and solution assembly.

A truck visits its demanding customers in window order (all morning stops,
then afternoon, then evening).  Within that order we build tours by nearest
neighbour and improve them with 2-opt restricted to same-window segment
reversals, which preserves window order and never increases tour length.
"""

from __future__ import annotations

import numpy as np

from .model import AFTERNOON, DEPOT, EVENING, Instance, MORNING, WINDOW_ORDER


def window_blocks(instance: Instance, customer_ids) -> list[list[int]]:
    """Split ids into [morning, afternoon, evening] blocks, each sorted."""
    blocks = {w: [] for w in WINDOW_ORDER}
    for i in sorted(customer_ids):
        blocks[instance.window_of(i)].append(i)
    return [blocks[w] for w in WINDOW_ORDER]


def tour_cost(instance: Instance, order: list[int]) -> float:
    """Routing cost of depot -> order... -> depot (0 for an empty order)."""
    if not order:
        return 0.0
    cost = instance.routing_cost
    total = cost[DEPOT, order[0]]
    for a, b in zip(order, order[1:]):
        total += cost[a, b]
    return float(total + cost[order[-1], DEPOT])


def window_travel(instance: Instance, order: list[int]) -> dict[str, float]:
    """Distance entering each window's customers along the tour."""
    used = {w: 0.0 for w in WINDOW_ORDER}
    prev = DEPOT
    for i in order:
        used[instance.window_of(i)] += float(instance.distance_km[prev, i])
        prev = i
    return used


def within_limits(instance: Instance, order: list[int], tol: float = 1e-9) -> bool:
    used = window_travel(instance, order)
    return all(
        used[w] <= instance.window_limits.limit(w) + tol for w in WINDOW_ORDER
    )


def nearest_neighbor_order(instance: Instance, customer_ids) -> list[int]:
    """Window-ordered tour: greedy nearest next stop inside each block."""
    dist = instance.distance_km
    order: list[int] = []
    here = DEPOT
    for block in window_blocks(instance, customer_ids):
        remaining = list(block)
        while remaining:
            nxt = min(remaining, key=lambda j: (dist[here, j], j))
            order.append(nxt)
            remaining.remove(nxt)
            here = nxt
    return order


def two_opt(instance: Instance, order: list[int]) -> list[int]:
    """First-improvement 2-opt, reversing only same-window segments.

    Moves are accepted only when they strictly shorten the tour and keep the
    per-window distance budgets satisfied, so the result is always at least as
    good and as feasible as the input.
    """
    if len(order) < 3:
        return list(order)
    order = list(order)
    window = [instance.window_of(i) for i in order]
    base = tour_cost(instance, order)
    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                if window[i] != window[j]:
                    break  # blocks are contiguous; later j only crosses further
                cand = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                cost = tour_cost(instance, cand)
                if cost < base - 1e-12 and within_limits(instance, cand):
                    order = cand
                    window = [instance.window_of(k) for k in order]
                    base = cost
                    improved = True
                    break
            if improved:
                break
    return order


def build_route(instance: Instance, customer_ids) -> list[int]:
    return two_opt(instance, nearest_neighbor_order(instance, customer_ids))


def blocked_windows(instance: Instance, demand) -> bool:
    """Whether this scenario forces strict morning -> afternoon -> evening.

    The order rows only chain adjacent windows, and the afternoon-to-evening
    row needs a demanding afternoon customer.  So morning and evening stops
    are mutually ordered exactly when some afternoon customer demands in the
    scenario (it pins an order value between them on every truck); otherwise
    they may interleave freely.
    """
    return any(demand[j - 1] for j in instance.window_sets[AFTERNOON])


def order_values(instance: Instance, order: list[int], demand) -> np.ndarray:
    """Visit-order values witnessing feasibility of one truck's tour.

    Visited customers get consecutive positions 1..k along the tour; the
    unvisited defaults must respect the window-order coupling (which binds
    unvisited customers too) and keep all values within n-1 of each other for
    the subtour rows.  With blocked windows the tour is block-ordered and
    unvisited customers anchor at the end of the preceding visited block;
    otherwise anchoring morning at 0 and the later windows at the tour length
    satisfies every row.
    """
    n = instance.n_customers
    s = np.zeros(n, dtype=np.int32)
    k = len(order)
    if blocked_windows(instance, demand):
        visited_per_window = {w: 0 for w in WINDOW_ORDER}
        for i in order:
            visited_per_window[instance.window_of(i)] += 1
        anchor = {}
        running = 0
        for w in WINDOW_ORDER:
            anchor[w] = running
            running += visited_per_window[w]
    else:
        anchor = {MORNING: 0, AFTERNOON: k, EVENING: k}
    for i in range(1, n + 1):
        s[i - 1] = anchor[instance.window_of(i)]
    for pos, i in enumerate(order, start=1):
        s[i - 1] = pos
    return s


def route_edges(n_locations: int, order: list[int]) -> np.ndarray:
    """0/1 arc matrix of the closed tour depot -> order... -> depot."""
    v = np.zeros((n_locations, n_locations), dtype=np.int8)
    if order:
        path = [DEPOT] + list(order) + [DEPOT]
        for a, b in zip(path, path[1:]):
            v[a, b] = 1
    return v


def extract_routes(instance: Instance, v_slice: np.ndarray) -> dict[int, list[int]]:
    """Per-truck visit order recovered from an arc tensor (n+1, n+1, t)."""
    routes = {}
    for t in range(instance.n_trucks):
        arcs = v_slice[:, :, t]
        succ = {}
        for u in range(instance.n_locations):
            heads = np.nonzero(arcs[u])[0]
            for h in heads:
                succ[u] = int(h)
        order = []
        here = DEPOT
        seen = set()
        while here in succ:
            nxt = succ[here]
            if nxt == DEPOT or nxt in seen:
                break
            order.append(nxt)
            seen.add(nxt)
            here = nxt
        routes[t] = order
    return routes
