"""Command-line front end and experiment harness.

Subcommands:

    odp plan             solve one instance, write solution + solve report
    odp sweep-customers  re-solve truncations of an instance, one CSV row per n
    odp compare-schemes  single-mode baselines vs the optimizer, per n
    odp far-customer     move one extra customer outward and watch the mode flip

Reports are CSV with a JSON sidecar carrying the full solutions; `plan` writes
`solution.json` and `solve_report.json`.  Exit codes: 0 solved/feasible,
1 infeasible, 2 input errors, 3 solver hit a node/time limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .evaluate import validate
from .exact import (
    STATUS_GAP_LIMIT, STATUS_INFEASIBLE, STATUS_NODE_LIMIT, STATUS_OPTIMAL,
    STATUS_TIME_LIMIT, SolveConfig, branch_and_bound,
)
from .heuristics import baseline_carrier_only, baseline_single_truck_type, greedy_plan
from .ingest import (
    PROFILES, parse_instance_file, parse_solomon, solution_to_json,
)
from .milp import build_model
from .model import (
    EVENING, Instance, ScenarioSet, Solution, WINDOW_ORDER, first_n_customers,
    with_remote_customer,
)
from .scenarios import deterministic_all_demand

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--instance", required=True, help="instance file (JSON or Solomon)")
    parser.add_argument("--solver", default="exact",
                        help="exact | greedy | carrier-only | truck-only:K")
    parser.add_argument("--profile", default="sg-2017", choices=sorted(PROFILES),
                        help="pricing profile for Solomon files")
    parser.add_argument("--gap", type=float, default=1e-6, help="relative gap tolerance")
    parser.add_argument("--nodes", type=int, default=1_000_000, help="node limit")
    parser.add_argument("--time-limit", type=float, default=None, help="seconds")
    parser.add_argument("--seed", type=int, default=0, help="reserved for sampled scenarios")
    parser.add_argument("--out-dir", default="odp_out", help="directory for reports")
    parser.add_argument("--first-n", type=int, default=None,
                        help="keep only the first n customers (Solomon files)")
    parser.add_argument("--trucks", default=None,
                        help="comma-separated profile truck indices, e.g. 0 or 0,2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odp",
        description="delivery planning: truck reservations vs on-demand carriers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve one instance")
    _add_common(p)

    p = sub.add_parser("sweep-customers", help="cost as the customer count grows")
    _add_common(p)
    p.add_argument("--from", dest="n_from", type=int, required=True)
    p.add_argument("--to", dest="n_to", type=int, required=True)

    p = sub.add_parser("compare-schemes", help="baselines vs optimizer per customer count")
    _add_common(p)
    p.add_argument("--from", dest="n_from", type=int, required=True)
    p.add_argument("--to", dest="n_to", type=int, required=True)

    p = sub.add_parser("far-customer", help="push one extra customer away from the depot")
    _add_common(p)
    p.add_argument("--distances", required=True,
                   help="comma-separated km values for the extra customer")
    p.add_argument("--window", default=EVENING, choices=WINDOW_ORDER)
    p.add_argument("--weight", type=float, default=30.0)
    p.add_argument("--extra-charge", type=float, default=21.0)
    return parser


def load_instance(args) -> tuple[Instance, ScenarioSet]:
    """Read a JSON interchange or Solomon file per the common flags."""
    text = Path(args.instance).read_text()
    if text.lstrip().startswith("{"):
        instance, scenarios = parse_instance_file(text)
        if args.first_n is not None:
            instance = first_n_customers(instance, args.first_n)
            scenarios = ScenarioSet(
                demands=scenarios.demands[:, : args.first_n],
                probabilities=scenarios.probabilities,
            )
        return instance, scenarios
    trucks = None
    if args.trucks is not None:
        trucks = tuple(int(k) for k in args.trucks.split(","))
    instance = parse_solomon(
        text,
        first_n_customers=args.first_n,
        profile=PROFILES[args.profile],
        truck_indices=trucks,
    )
    return instance, deterministic_all_demand(instance.n_customers)


def _solve_config(args) -> SolveConfig:
    return SolveConfig(
        gap_tolerance=args.gap, node_limit=args.nodes, time_limit=args.time_limit
    )


def run_solver(
    solver: str, instance: Instance, scenarios: ScenarioSet, config: SolveConfig
) -> tuple[str, Solution | None, dict]:
    """(status, solution, report dict) for any of the named solvers."""
    if solver == "exact":
        report = branch_and_bound(build_model(instance, scenarios), config)
        info = report.as_dict()
        info["solver"] = "exact"
        return report.status, report.incumbent, info
    if solver == "greedy":
        solution = greedy_plan(instance, scenarios)
        return "feasible", solution, {"solver": "greedy", "status": "feasible",
                                      "total": solution.cost.total}
    if solver == "carrier-only":
        solution = baseline_carrier_only(instance, scenarios)
        return "feasible", solution, {"solver": "carrier-only", "status": "feasible",
                                      "total": solution.cost.total}
    if solver.startswith("truck-only:"):
        k = int(solver.split(":", 1)[1])
        if not (0 <= k < instance.n_trucks):
            raise ValueError(f"no truck {k} in this instance")
        solution = baseline_single_truck_type(instance, scenarios, k)
        if solution is None:
            return "infeasible", None, {"solver": solver, "status": "infeasible"}
        return "feasible", solution, {"solver": solver, "status": "feasible",
                                      "total": solution.cost.total}
    raise ValueError(f"unknown solver {solver!r}")


def _status_exit(status: str, solution: Solution | None) -> int:
    if status in (STATUS_OPTIMAL, STATUS_GAP_LIMIT, "feasible"):
        return EXIT_OK
    if status in (STATUS_NODE_LIMIT, STATUS_TIME_LIMIT):
        return EXIT_LIMIT
    return EXIT_INFEASIBLE


def _mode_counts(solution: Solution, scenarios: ScenarioSet) -> tuple[int, float]:
    truck_customers = int((solution.x.sum(axis=1) > 0).sum())
    expected_carrier_customers = float(
        sum(
            p * float((solution.y[k].sum(axis=1) > 0).sum())
            for k, (_, p) in enumerate(scenarios.scenarios())
        )
    )
    return truck_customers, expected_carrier_customers


def cmd_plan(args) -> int:
    instance, scenarios = load_instance(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status, solution, info = run_solver(args.solver, instance, scenarios, _solve_config(args))
    (out / "solve_report.json").write_text(json.dumps(info, indent=2))
    if solution is not None:
        problems = validate(instance, scenarios, solution)
        if problems:
            raise AssertionError(f"solver emitted an infeasible plan: {problems[:3]}")
        (out / "solution.json").write_text(
            solution_to_json(instance, scenarios, solution)
        )
    return _status_exit(status, solution)


def _write_report(out: Path, header: list[str], rows: list[dict], sidecar: dict):
    out.mkdir(parents=True, exist_ok=True)
    with (out / "report.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    (out / "solutions.json").write_text(json.dumps(sidecar, indent=2))


def cmd_sweep_customers(args) -> int:
    instance, _ = load_instance(args)
    if args.n_to > instance.n_customers or args.n_from < 0 or args.n_from > args.n_to:
        print(
            f"sweep range {args.n_from}..{args.n_to} outside 0..{instance.n_customers}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    config = _solve_config(args)
    rows = []
    sidecar = {}
    for n in range(args.n_from, args.n_to + 1):
        sub = first_n_customers(instance, n)
        scen = deterministic_all_demand(n)
        status, solution, info = run_solver(args.solver, sub, scen, config)
        row = {"n": n, "solver": args.solver, "status": status}
        if solution is not None:
            trucks, carriers = _mode_counts(solution, scen)
            row.update(
                truck_customers=trucks,
                carrier_customers=carriers,
                **solution.cost.as_dict(),
            )
            sidecar[str(n)] = json.loads(solution_to_json(sub, scen, solution))
        rows.append(row)
    header = [
        "n", "solver", "status", "truck_customers", "carrier_customers",
        "assignment_term", "truck_initial", "expected_carrier", "expected_routing",
        "total",
    ]
    _write_report(Path(args.out_dir), header, rows, sidecar)
    return EXIT_OK


def _scheme_columns(instance: Instance) -> list[tuple[str, str]]:
    """(csv column, solver name) per scheme: one per truck type, carrier, exact."""
    schemes = [("carrier_only", "carrier-only")]
    seen = set()
    for t in instance.trucks:
        sig = (t.capacity_kg, t.initial_cost)
        if sig in seen:
            continue
        seen.add(sig)
        schemes.append((f"truck{t.id}_only", f"truck-only:{t.id}"))
    schemes.append(("odp", "exact"))
    return schemes


def cmd_compare_schemes(args) -> int:
    instance, _ = load_instance(args)
    if args.n_to > instance.n_customers or args.n_from < 0 or args.n_from > args.n_to:
        print(
            f"sweep range {args.n_from}..{args.n_to} outside 0..{instance.n_customers}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    config = _solve_config(args)
    schemes = _scheme_columns(instance)
    rows = []
    sidecar = {}
    for n in range(args.n_from, args.n_to + 1):
        sub = first_n_customers(instance, n)
        scen = deterministic_all_demand(n)
        row = {"n": n}
        for column, solver in schemes:
            status, solution, _ = run_solver(solver, sub, scen, config)
            if solution is None:
                row[column] = "infeasible"
            else:
                row[column] = solution.cost.total
                sidecar.setdefault(str(n), {})[column] = json.loads(
                    solution_to_json(sub, scen, solution)
                )
        rows.append(row)
    header = ["n"] + [column for column, _ in schemes]
    _write_report(Path(args.out_dir), header, rows, sidecar)
    return EXIT_OK


def cmd_far_customer(args) -> int:
    instance, _ = load_instance(args)
    try:
        distances = [float(v) for v in args.distances.split(",")]
    except ValueError:
        print(f"bad --distances value {args.distances!r}", file=sys.stderr)
        return EXIT_INPUT
    config = _solve_config(args)
    rows = []
    sidecar = {}
    for d in distances:
        extended = with_remote_customer(
            instance, d, window=args.window, weight_kg=args.weight,
            carrier_charge=args.extra_charge,
        )
        scen = deterministic_all_demand(extended.n_customers)
        status, solution, _ = run_solver(args.solver, extended, scen, config)
        extra = extended.n_customers
        if solution is None:
            mode = "unserved"
            total = ""
        else:
            if solution.x[extra - 1].sum() > 0:
                mode = "truck"
            elif any(solution.y[k, extra - 1].sum() > 0 for k in range(scen.n_scenarios)):
                mode = "carrier"
            else:
                mode = "none"
            total = solution.cost.total
            sidecar[str(d)] = json.loads(solution_to_json(extended, scen, solution))
        rows.append({"distance_km": d, "mode": mode, "status": status, "total": total})
    _write_report(Path(args.out_dir), ["distance_km", "mode", "status", "total"], rows, sidecar)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "plan": cmd_plan,
        "sweep-customers": cmd_sweep_customers,
        "compare-schemes": cmd_compare_schemes,
        "far-customer": cmd_far_customer,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
