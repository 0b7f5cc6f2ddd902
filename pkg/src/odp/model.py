"""Domain types for delivery planning under demand uncertainty.

Everything lives on one location index set: index 0 is the depot and customer
``i`` sits at location ``i``.  Customers carry a package weight and exactly one
hard delivery window (morning / afternoon / evening).  Trucks are reserved
before demand is observed, for a fixed initial cost plus per-edge routing
costs; carriers deliver individual packages on demand at a per-customer
charge.  Uncertainty is a finite set of binary demand vectors with
probabilities.

All types are immutable after construction (frozen dataclasses holding
read-only numpy arrays) and safe to share between solver workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

MORNING = "morning"
AFTERNOON = "afternoon"
EVENING = "evening"
WINDOW_ORDER = (MORNING, AFTERNOON, EVENING)

DEPOT = 0
DEFAULT_BIG_M = 1000

# per-km routing cost factor: fuel price (currency/litre) x consumption (litre/km)
FUEL_PRICE = 1.05
FUEL_RATE = 0.1


def _owned_readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Location:
    """A routing node: 0 is the depot, customer i occupies location i."""

    id: int
    label: str = ""


@dataclass(frozen=True)
class Customer:
    id: int                 # 1-based; doubles as the location index
    package_weight: float   # kg, > 0
    window: str             # one of WINDOW_ORDER


@dataclass(frozen=True)
class Truck:
    id: int                 # 0-based fleet index
    capacity_kg: float      # > 0
    initial_cost: float     # >= 0, paid once if the truck is used


@dataclass(frozen=True)
class Carrier:
    """An on-demand carrier with one delivery charge per customer."""

    id: int
    charge_per_customer: np.ndarray  # shape (n_customers,), entry i-1 is customer i

    def __post_init__(self):
        object.__setattr__(
            self, "charge_per_customer", _owned_readonly(self.charge_per_customer, np.float64)
        )


@dataclass(frozen=True)
class WindowLimits:
    """Per-window travel distance budgets (km) for each truck."""

    morning: float
    afternoon: float
    evening: float

    def limit(self, window: str) -> float:
        return getattr(self, window)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.morning, self.afternoon, self.evening)


@dataclass(frozen=True)
class Instance:
    """A fully specified planning problem (demand distribution lives apart).

    ``distance_km`` is the symmetric location-by-location distance matrix with
    row/column 0 for the depot; ``routing_cost`` the per-edge truck cost over
    the same index set.  ``assignment_weight`` is the objective weight of each
    customer-to-truck assignment; ``big_m`` the activation constant linking
    assignments to truck usage.
    """

    customers: tuple[Customer, ...]
    trucks: tuple[Truck, ...]
    carriers: tuple[Carrier, ...]
    distance_km: np.ndarray
    routing_cost: np.ndarray
    window_limits: WindowLimits
    assignment_weight: float = 1.0
    big_m: int = DEFAULT_BIG_M

    @cached_property
    def n_customers(self) -> int:
        return len(self.customers)

    @cached_property
    def n_trucks(self) -> int:
        return len(self.trucks)

    @cached_property
    def n_carriers(self) -> int:
        return len(self.carriers)

    @cached_property
    def n_locations(self) -> int:
        return self.n_customers + 1

    @cached_property
    def weights(self) -> np.ndarray:
        """Package weights as an array, entry i-1 for customer i."""
        return _owned_readonly([c.package_weight for c in self.customers], np.float64)

    @cached_property
    def window_sets(self) -> dict[str, tuple[int, ...]]:
        """Customer ids partitioned by window, each sorted ascending."""
        sets: dict[str, list[int]] = {w: [] for w in WINDOW_ORDER}
        for c in self.customers:
            sets[c.window].append(c.id)
        return {w: tuple(ids) for w, ids in sets.items()}

    def window_of(self, customer_id: int) -> str:
        return self.customers[customer_id - 1].window

    @cached_property
    def carrier_charges(self) -> np.ndarray:
        """Charge matrix with shape (n_customers, n_carriers)."""
        if self.n_carriers == 0:
            return _owned_readonly(np.zeros((self.n_customers, 0)), np.float64)
        return _owned_readonly(
            np.column_stack([r.charge_per_customer for r in self.carriers]), np.float64
        )

    def cheapest_carrier(self, customer_id: int) -> tuple[float, int] | None:
        """(charge, carrier id) of the cheapest carrier, or None if none exist."""
        if self.n_carriers == 0:
            return None
        row = self.carrier_charges[customer_id - 1]
        r = int(np.argmin(row))  # argmin takes the lowest index on ties
        return float(row[r]), r

    def locations(self) -> list[Location]:
        return [Location(DEPOT, "depot")] + [
            Location(c.id, f"customer {c.id}") for c in self.customers
        ]


def default_routing_cost(distance_km) -> np.ndarray:
    """Per-edge truck routing cost: distance x fuel price x consumption rate."""
    dist = np.asarray(distance_km, dtype=np.float64)
    if not np.all(np.isfinite(dist)):
        raise ValueError("distance matrix contains non-finite entries")
    if np.any(dist < 0):
        raise ValueError("distance matrix contains negative entries")
    return dist * FUEL_PRICE * FUEL_RATE


def make_instance(
    customers: Sequence[Customer],
    trucks: Sequence[Truck],
    carriers: Sequence[Carrier],
    distance_km,
    window_limits: WindowLimits,
    routing_cost=None,
    assignment_weight: float = 1.0,
    big_m: int = DEFAULT_BIG_M,
) -> Instance:
    """Validate raw fields and build an Instance.

    Customer ids must be exactly 1..n in listed order; the distance matrix
    must be square of size n+1, symmetric, non-negative with a zero diagonal.
    When ``routing_cost`` is omitted it is derived with
    :func:`default_routing_cost`.
    """
    n = len(customers)
    for pos, c in enumerate(customers, start=1):
        if c.id != pos:
            raise ValueError(f"customer ids must be 1..{n} in order, got {c.id} at position {pos}")
        if not (c.package_weight > 0):
            raise ValueError(f"customer {c.id}: package weight must be > 0")
        if c.window not in WINDOW_ORDER:
            raise ValueError(
                f"customer {c.id}: window {c.window!r} violates the window partition"
            )
    for pos, t in enumerate(trucks):
        if t.id != pos:
            raise ValueError(f"truck ids must be 0..{len(trucks) - 1} in order, got {t.id}")
        if not (t.capacity_kg > 0):
            raise ValueError(f"truck {t.id}: capacity must be > 0")
        if t.initial_cost < 0:
            raise ValueError(f"truck {t.id}: initial cost must be >= 0")
    for pos, r in enumerate(carriers):
        if r.id != pos:
            raise ValueError(f"carrier ids must be 0..{len(carriers) - 1} in order, got {r.id}")
        if len(r.charge_per_customer) != n:
            raise ValueError(
                f"carrier {r.id}: charge table covers {len(r.charge_per_customer)} "
                f"customers, expected {n}"
            )
        if np.any(np.asarray(r.charge_per_customer) < 0):
            raise ValueError(f"carrier {r.id}: charges must be >= 0")

    dist = np.array(distance_km, dtype=np.float64, copy=True)
    if dist.shape != (n + 1, n + 1):
        raise ValueError(f"distance matrix must be {(n + 1, n + 1)}, got {dist.shape}")
    if not np.all(np.isfinite(dist)):
        raise ValueError("distance matrix contains non-finite entries")
    if np.any(dist < 0):
        raise ValueError("distance matrix contains negative entries")
    if np.any(np.diag(dist) != 0):
        raise ValueError("distance matrix diagonal must be zero")
    if not np.array_equal(dist, dist.T):
        raise ValueError("distance matrix must be symmetric")

    if routing_cost is None:
        cost = default_routing_cost(dist)
    else:
        cost = np.array(routing_cost, dtype=np.float64, copy=True)
        if cost.shape != dist.shape:
            raise ValueError(f"routing cost matrix must be {dist.shape}, got {cost.shape}")
        if not np.all(np.isfinite(cost)):
            raise ValueError("routing cost matrix contains non-finite entries")
        if np.any(cost < 0):
            raise ValueError("routing cost matrix contains negative entries")

    if not (isinstance(big_m, (int, np.integer)) and big_m > 0):
        raise ValueError("big_m must be a positive integer")
    if n >= big_m:
        raise ValueError(f"{n} customers but big_m={big_m}; need n < big_m")
    for w in window_limits.as_tuple():
        if not (math.isfinite(w) and w >= 0):
            raise ValueError("window limits must be finite and >= 0")
    if not math.isfinite(assignment_weight):
        raise ValueError("assignment weight must be finite")

    dist.setflags(write=False)
    cost.setflags(write=False)
    return Instance(
        customers=tuple(customers),
        trucks=tuple(trucks),
        carriers=tuple(carriers),
        distance_km=dist,
        routing_cost=cost,
        window_limits=window_limits,
        assignment_weight=float(assignment_weight),
        big_m=int(big_m),
    )


def first_n_customers(instance: Instance, n: int) -> Instance:
    """Sub-instance keeping customers 1..n (trucks, carriers, prices intact)."""
    if not (0 <= n <= instance.n_customers):
        raise ValueError(f"cannot keep {n} of {instance.n_customers} customers")
    keep = instance.customers[:n]
    carriers = [
        Carrier(r.id, r.charge_per_customer[:n]) for r in instance.carriers
    ]
    return make_instance(
        customers=keep,
        trucks=instance.trucks,
        carriers=carriers,
        distance_km=instance.distance_km[: n + 1, : n + 1],
        window_limits=instance.window_limits,
        routing_cost=instance.routing_cost[: n + 1, : n + 1],
        assignment_weight=instance.assignment_weight,
        big_m=instance.big_m,
    )


def with_remote_customer(
    instance: Instance,
    distance_km: float,
    window: str = EVENING,
    weight_kg: float = 30.0,
    carrier_charge: float = 21.0,
) -> Instance:
    """Append one customer on a ray from the depot pointing away from everyone.

    The new customer sits ``distance_km`` from the depot and
    ``distance_km + d(depot, j)`` from every existing location ``j``, which is
    the tight symmetric completion for a point placed opposite the rest of the
    map.  Routing costs are re-derived with the default formula.
    """
    if distance_km < 0:
        raise ValueError("distance must be >= 0")
    n = instance.n_customers
    old = instance.distance_km
    dist = np.zeros((n + 2, n + 2))
    dist[: n + 1, : n + 1] = old
    dist[n + 1, : n + 1] = distance_km + old[DEPOT]
    dist[: n + 1, n + 1] = distance_km + old[DEPOT]
    customers = list(instance.customers) + [Customer(n + 1, weight_kg, window)]
    carriers = [
        Carrier(r.id, np.append(r.charge_per_customer, carrier_charge))
        for r in instance.carriers
    ]
    return make_instance(
        customers=customers,
        trucks=instance.trucks,
        carriers=carriers,
        distance_km=dist,
        window_limits=instance.window_limits,
        assignment_weight=instance.assignment_weight,
        big_m=instance.big_m,
    )


@dataclass(frozen=True)
class ScenarioSet:
    """A finite demand distribution: binary demand vectors with probabilities."""

    demands: np.ndarray        # shape (n_scenarios, n_customers), entries 0/1
    probabilities: np.ndarray  # shape (n_scenarios,), sums to 1 within 1e-9

    def __post_init__(self):
        dem = np.array(self.demands, dtype=np.int8, copy=True)
        prob = np.array(self.probabilities, dtype=np.float64, copy=True)
        if dem.ndim != 2:
            raise ValueError("demands must be a 2-d array (scenarios x customers)")
        if prob.shape != (dem.shape[0],):
            raise ValueError("one probability per scenario required")
        if dem.shape[0] == 0:
            raise ValueError("a scenario set must contain at least one scenario")
        if not np.all((dem == 0) | (dem == 1)):
            raise ValueError("demand entries must be 0 or 1")
        if np.any(prob < 0) or np.any(prob > 1):
            raise ValueError("probabilities must be in [0, 1]")
        if abs(float(prob.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {prob.sum()!r}, expected 1 within 1e-9")
        dem.setflags(write=False)
        prob.setflags(write=False)
        object.__setattr__(self, "demands", dem)
        object.__setattr__(self, "probabilities", prob)

    @property
    def n_scenarios(self) -> int:
        return self.demands.shape[0]

    @property
    def n_customers(self) -> int:
        return self.demands.shape[1]

    def scenarios(self) -> Iterator[tuple[np.ndarray, float]]:
        for k in range(self.n_scenarios):
            yield self.demands[k], float(self.probabilities[k])


@dataclass(frozen=True)
class CostBreakdown:
    """Objective decomposition; ``total`` is the exact sum of the four parts."""

    assignment_term: float
    truck_initial: float
    expected_carrier: float
    expected_routing: float
    total: float

    @classmethod
    def from_terms(
        cls, assignment_term: float, truck_initial: float,
        expected_carrier: float, expected_routing: float,
    ) -> "CostBreakdown":
        return cls(
            assignment_term=assignment_term,
            truck_initial=truck_initial,
            expected_carrier=expected_carrier,
            expected_routing=expected_routing,
            total=assignment_term + truck_initial + expected_carrier + expected_routing,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "assignment_term": self.assignment_term,
            "truck_initial": self.truck_initial,
            "expected_carrier": self.expected_carrier,
            "expected_routing": self.expected_routing,
            "total": self.total,
        }


@dataclass(frozen=True)
class Solution:
    """First-stage decisions plus per-scenario recourse.

    Shapes: x is (n_customers, n_trucks), w is (n_trucks,),
    y is (n_scenarios, n_customers, n_carriers),
    v is (n_scenarios, n_locations, n_locations, n_trucks) and
    s is (n_scenarios, n_customers, n_trucks).
    Customer i maps to row i-1 of x / y / s; v is indexed by raw location.
    """

    x: np.ndarray
    w: np.ndarray
    y: np.ndarray
    v: np.ndarray
    s: np.ndarray
    cost: CostBreakdown


def compute_cost(
    instance: Instance, scenarios: ScenarioSet,
    x: np.ndarray, w: np.ndarray, y: np.ndarray, v: np.ndarray,
) -> CostBreakdown:
    """Objective terms for raw decision arrays (feasibility not required)."""
    assignment = instance.assignment_weight * float(x.sum())
    initial = float(sum(t.initial_cost * int(w[t.id]) for t in instance.trucks))
    carrier = 0.0
    routing = 0.0
    charges = instance.carrier_charges
    for k, (_, p) in enumerate(scenarios.scenarios()):
        if instance.n_carriers:
            carrier += p * float((y[k] * charges).sum())
        if instance.n_trucks:
            routing += p * float(
                (v[k] * instance.routing_cost[:, :, None]).sum()
            )
    return CostBreakdown.from_terms(assignment, initial, carrier, routing)


def assemble_solution(
    instance: Instance, scenarios: ScenarioSet,
    x, w, y, v, s,
) -> Solution:
    """Bundle decision arrays into a Solution, computing its cost breakdown."""
    n, t_, r_, q = (
        instance.n_customers, instance.n_trucks, instance.n_carriers,
        scenarios.n_scenarios,
    )
    x = _owned_readonly(x, np.int8).reshape(n, t_)
    w = _owned_readonly(w, np.int8).reshape(t_)
    y = _owned_readonly(y, np.int8).reshape(q, n, r_)
    v = _owned_readonly(v, np.int8).reshape(q, n + 1, n + 1, t_)
    s = _owned_readonly(s, np.int32).reshape(q, n, t_)
    return Solution(x=x, w=w, y=y, v=v, s=s, cost=compute_cost(instance, scenarios, x, w, y, v))


def zero_solution(instance: Instance, scenarios: ScenarioSet) -> Solution:
    n, t_, r_, q = (
        instance.n_customers, instance.n_trucks, instance.n_carriers,
        scenarios.n_scenarios,
    )
    return assemble_solution(
        instance, scenarios,
        np.zeros((n, t_)), np.zeros(t_), np.zeros((q, n, r_)),
        np.zeros((q, n + 1, n + 1, t_)), np.zeros((q, n, t_)),
    )
