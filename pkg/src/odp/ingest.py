"""Instance parsing and serialization.

Two on-disk formats are supported:

* Solomon VRPTW benchmark text (header, VEHICLE section, CUSTOMER table with
  CUST NO. / XCOORD. / YCOORD. / DEMAND / READY TIME / DUE DATE / SERVICE
  TIME).  Coordinates become Euclidean distances in km, READY TIME maps each
  customer to a delivery window, and a pricing profile supplies trucks,
  carrier tariff, uniform package weight and window budgets.  The DEMAND,
  DUE DATE and SERVICE TIME columns are parsed but not used by the model.

* A JSON interchange document carrying a complete instance plus its scenario
  set; writing and re-parsing reproduces both exactly (floats round-trip via
  repr).  Routing costs are always derived from distances with the default
  per-km formula, so instances with custom routing costs cannot be written.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    AFTERNOON, Carrier, Customer, EVENING, Instance, MORNING, ScenarioSet,
    Solution, Truck, WINDOW_ORDER, WindowLimits, assemble_solution,
    default_routing_cost, make_instance,
)

# ready time -> clock hour; the three windows split the day at 12 and 15
_READY_SCALE = 150.0
_READY_OFFSET = 9.0
_NOON = 12.0
_MID_AFTERNOON = 15.0


@dataclass(frozen=True)
class PricingProfile:
    """Bundled tariffs so benchmark files need no extra configuration."""

    name: str
    trucks: tuple[tuple[float, float], ...]   # (capacity_kg, initial_cost)
    carrier_charge: float                     # flat charge per package
    package_weight_kg: float
    window_limits: WindowLimits
    assignment_weight: float = 1.0
    big_m: int = 1000


SG_2017 = PricingProfile(
    name="sg-2017",
    trucks=((1060.0, 280.0), (1360.0, 440.0), (2268.0, 640.0)),
    carrier_charge=21.0,
    package_weight_kg=30.0,
    window_limits=WindowLimits(50.0, 50.0, 50.0),
)

PROFILES = {SG_2017.name: SG_2017}


@dataclass(frozen=True)
class SolomonRecord:
    cust_no: int
    x: float
    y: float
    demand: float
    ready_time: float
    due_date: float
    service_time: float


def window_from_ready_time(ready_time: float) -> str:
    """Map a Solomon READY TIME to a delivery window."""
    hour = ready_time / _READY_SCALE + _READY_OFFSET
    if hour < _NOON:
        return MORNING
    if hour < _MID_AFTERNOON:
        return AFTERNOON
    return EVENING


def parse_solomon_records(text: str) -> list[SolomonRecord]:
    lines = text.splitlines()
    try:
        start = next(
            k for k, line in enumerate(lines) if line.strip().upper().startswith("CUSTOMER")
        )
    except StopIteration:
        raise ValueError("malformed Solomon file: no CUSTOMER section") from None
    records = []
    for line in lines[start + 1 :]:
        fields = line.split()
        if not fields:
            continue
        if not fields[0].lstrip("-").isdigit():
            continue  # column header line
        if len(fields) < 7:
            raise ValueError(f"malformed Solomon record: {line.strip()!r}")
        try:
            records.append(
                SolomonRecord(
                    cust_no=int(fields[0]),
                    x=float(fields[1]),
                    y=float(fields[2]),
                    demand=float(fields[3]),
                    ready_time=float(fields[4]),
                    due_date=float(fields[5]),
                    service_time=float(fields[6]),
                )
            )
        except ValueError:
            raise ValueError(f"non-numeric field in Solomon record: {line.strip()!r}") from None
    if not records:
        raise ValueError("malformed Solomon file: no customer records")
    return records


def parse_solomon(
    text: str,
    first_n_customers: int | None = None,
    profile: PricingProfile = SG_2017,
    package_weight_kg: float | None = None,
    truck_indices: tuple[int, ...] | None = None,
) -> Instance:
    """Instance from a Solomon benchmark file.

    Record 0 is the depot.  ``first_n_customers`` keeps the leading customers
    only; ``truck_indices`` selects a subset of the profile's trucks.
    """
    records = parse_solomon_records(text)
    depot, customers = records[0], records[1:]
    if first_n_customers is not None:
        if first_n_customers > len(customers):
            raise ValueError(
                f"requested {first_n_customers} customers, file has {len(customers)}"
            )
        customers = customers[:first_n_customers]
    weight = profile.package_weight_kg if package_weight_kg is None else package_weight_kg

    points = [(depot.x, depot.y)] + [(c.x, c.y) for c in customers]
    n = len(customers)
    dist = np.zeros((n + 1, n + 1))
    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            d = math.dist(points[a], points[b])
            dist[a, b] = dist[b, a] = d

    chosen = profile.trucks
    if truck_indices is not None:
        chosen = tuple(profile.trucks[k] for k in truck_indices)
    trucks = [Truck(t, cap, cost) for t, (cap, cost) in enumerate(chosen)]
    carriers = [Carrier(0, np.full(n, profile.carrier_charge))]
    return make_instance(
        customers=[
            Customer(i, weight, window_from_ready_time(c.ready_time))
            for i, c in enumerate(customers, start=1)
        ],
        trucks=trucks,
        carriers=carriers,
        distance_km=dist,
        window_limits=profile.window_limits,
        assignment_weight=profile.assignment_weight,
        big_m=profile.big_m,
    )


def parse_instance_file(text: str) -> tuple[Instance, ScenarioSet]:
    """Parse the JSON interchange document into an instance and scenarios."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ValueError("top level must be a JSON object")
    for key in ("customers", "trucks", "carriers", "distance_km",
                "window_limits_km", "scenarios"):
        if key not in doc:
            raise ValueError(f"missing required key {key!r}")

    customers = []
    for k, row in enumerate(doc["customers"], start=1):
        if row.get("id") != k:
            raise ValueError(f"customer ids must be 1..n in order, got {row.get('id')!r}")
        if row.get("window") not in WINDOW_ORDER:
            raise ValueError(f"customer {k}: bad window {row.get('window')!r}")
        customers.append(Customer(k, float(row["weight_kg"]), row["window"]))

    trucks = [
        Truck(t, float(row["capacity_kg"]), float(row["initial_cost"]))
        for t, row in enumerate(doc["trucks"])
    ]
    carriers = []
    for r, row in enumerate(doc["carriers"]):
        charges = row["charges"]
        if len(charges) != len(customers):
            raise ValueError(
                f"carrier {r}: expected {len(customers)} charges, got {len(charges)}"
            )
        carriers.append(Carrier(r, np.asarray(charges, dtype=float)))

    limits_doc = doc["window_limits_km"]
    try:
        limits = WindowLimits(
            float(limits_doc[MORNING]), float(limits_doc[AFTERNOON]),
            float(limits_doc[EVENING]),
        )
    except (KeyError, TypeError):
        raise ValueError("window_limits_km must map morning/afternoon/evening to km") from None

    instance = make_instance(
        customers=customers,
        trucks=trucks,
        carriers=carriers,
        distance_km=np.asarray(doc["distance_km"], dtype=float),
        window_limits=limits,
        assignment_weight=float(doc.get("assignment_weight", 1.0)),
        big_m=int(doc.get("big_m", 1000)),
    )

    rows = doc["scenarios"]
    if not isinstance(rows, list) or not rows:
        raise ValueError("scenarios must be a non-empty list")
    demands = []
    probs = []
    for row in rows:
        demands.append(row["demand"])
        probs.append(float(row["p"]))
    lengths = {len(d) for d in demands}
    if lengths != {len(customers)}:
        raise ValueError("each scenario demand vector must cover every customer")
    scenarios = ScenarioSet(
        demands=np.asarray(demands, dtype=np.int8).reshape(len(rows), len(customers)),
        probabilities=np.asarray(probs),
    )
    return instance, scenarios


def write_instance_file(instance: Instance, scenarios: ScenarioSet) -> str:
    """Serialize to the JSON interchange format (exact round-trip)."""
    if scenarios.n_scenarios == 0:
        raise ValueError("cannot write an empty scenario set")
    if scenarios.n_customers != instance.n_customers:
        raise ValueError("scenario set and instance disagree on customer count")
    if not np.array_equal(
        instance.routing_cost, default_routing_cost(instance.distance_km)
    ):
        raise ValueError(
            "interchange format carries distances only; routing costs must be "
            "the default derived values"
        )
    doc = {
        "customers": [
            {"id": c.id, "weight_kg": c.package_weight, "window": c.window}
            for c in instance.customers
        ],
        "trucks": [
            {"capacity_kg": t.capacity_kg, "initial_cost": t.initial_cost}
            for t in instance.trucks
        ],
        "carriers": [
            {"charges": [float(v) for v in r.charge_per_customer]}
            for r in instance.carriers
        ],
        "distance_km": [[float(v) for v in row] for row in instance.distance_km],
        "window_limits_km": {
            MORNING: instance.window_limits.morning,
            AFTERNOON: instance.window_limits.afternoon,
            EVENING: instance.window_limits.evening,
        },
        "scenarios": [
            {"demand": [int(d) for d in demand], "p": p}
            for demand, p in scenarios.scenarios()
        ],
        "assignment_weight": instance.assignment_weight,
        "big_m": instance.big_m,
    }
    return json.dumps(doc, indent=2)


def solution_to_json(
    instance: Instance, scenarios: ScenarioSet, solution: Solution
) -> str:
    """Solution file: full decision tensors plus readable per-scenario routes."""
    from .routing import extract_routes

    scenarios_doc = []
    for k in range(scenarios.n_scenarios):
        routes = extract_routes(instance, solution.v[k])
        carriers = {
            str(i): int(np.argmax(solution.y[k, i - 1]))
            for i in range(1, instance.n_customers + 1)
            if solution.y[k, i - 1].sum() > 0
        }
        scenarios_doc.append(
            {
                "routes": {
                    str(t): [0] + order + [0]
                    for t, order in routes.items()
                    if order
                },
                "carriers": carriers,
            }
        )
    doc = {
        "cost": solution.cost.as_dict(),
        "x": solution.x.tolist(),
        "w": solution.w.tolist(),
        "y": solution.y.tolist(),
        "v": solution.v.tolist(),
        "s": solution.s.tolist(),
        "scenarios": scenarios_doc,
    }
    return json.dumps(doc, indent=2)


def solution_from_json(
    text: str, instance: Instance, scenarios: ScenarioSet
) -> Solution:
    doc = json.loads(text)
    return assemble_solution(
        instance, scenarios, doc["x"], doc["w"], doc["y"], doc["v"], doc["s"]
    )
