"""Delivery planning under demand uncertainty.

Reserve trucks before demand is known, then per demand scenario assign
leftover customers to on-demand carriers and route the trucks under hard
delivery windows.  The package provides the MILP deterministic equivalent,
an exact branch-and-bound solver, greedy and single-mode baselines, a
constraint validator with a brute-force optimality oracle, and a CLI.
"""

from .evaluate import Violation, brute_force_optimum, cost_of, validate
from .exact import LpResult, SolveConfig, SolveReport, branch_and_bound, solve_lp_relaxation
from .heuristics import baseline_carrier_only, baseline_single_truck_type, greedy_plan
from .ingest import (
    PROFILES, PricingProfile, SG_2017, SolomonRecord, parse_instance_file,
    parse_solomon, parse_solomon_records, solution_from_json, solution_to_json,
    window_from_ready_time, write_instance_file,
)
from .milp import (
    MilpModel, Row, RowTag, VarRef, build_model, column_count, explain_row,
    solution_to_vector, to_lp_text, vector_to_solution,
)
from .model import (
    AFTERNOON, Carrier, CostBreakdown, Customer, DEPOT, EVENING, Instance,
    Location, MORNING, ScenarioSet, Solution, Truck, WINDOW_ORDER, WindowLimits,
    assemble_solution, compute_cost, default_routing_cost, first_n_customers,
    make_instance, with_remote_customer, zero_solution,
)
from .scenarios import bernoulli_scenarios, deterministic_all_demand, uniform_scenarios

__version__ = "0.1.0"

__all__ = [
    "AFTERNOON", "Carrier", "CostBreakdown", "Customer", "DEPOT", "EVENING",
    "Instance", "Location", "LpResult", "MilpModel", "MORNING", "PROFILES",
    "PricingProfile", "Row", "RowTag", "SG_2017", "ScenarioSet",
    "SolomonRecord", "Solution", "SolveConfig", "SolveReport", "Truck",
    "VarRef", "Violation", "WINDOW_ORDER", "WindowLimits",
    "assemble_solution", "baseline_carrier_only", "baseline_single_truck_type",
    "bernoulli_scenarios", "branch_and_bound", "brute_force_optimum",
    "build_model", "column_count", "compute_cost", "cost_of",
    "default_routing_cost", "deterministic_all_demand", "explain_row",
    "first_n_customers", "greedy_plan", "make_instance", "parse_instance_file",
    "parse_solomon", "parse_solomon_records", "solution_from_json",
    "solution_to_json", "solution_to_vector", "solve_lp_relaxation",
    "to_lp_text", "uniform_scenarios", "validate", "vector_to_solution",
    "window_from_ready_time", "with_remote_customer", "write_instance_file",
    "zero_solution",
]
