"""Extensive-form MILP of the two-stage delivery planning problem.

The deterministic equivalent replicates every recourse variable per demand
scenario and weights its objective contribution by the scenario probability.
Variables:

    X[i,t]      truck t reserved for customer i          (stage one, binary)
    W[t]        truck t used at all                      (stage one, binary)
    Y[i,r,w]    carrier r delivers to i in scenario w    (binary)
    V[u,v,t,w]  truck t drives arc u->v in scenario w    (binary)
    S[i,t,w]    visit order of i on truck t              (integer 0..n)

Constraint families carry their equation tags (3)-(16):

    (3)  coverage        every demanding customer gets a truck or a carrier
    (4)  capacity        reserved package weight fits the truck
    (5)  activation      assignments force the truck's initial cost
    (6)  no self-arcs
    (7)  depot return    at most one arc into the depot per truck
    (8)  depot depart    at most one arc out of the depot per truck
    (9)  inbound degree  exactly one arc into each visited customer
    (10) outbound degree exactly one arc out of each visited customer
    (11)-(13)            per-window travel distance budgets
    (14) subtour         order values increase along selected arcs
    (15) (16)            morning before afternoon before evening

Rows are emitted family by family in lexicographic index order, so identical
inputs always produce identical models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    AFTERNOON, DEPOT, EVENING, Instance, MORNING, ScenarioSet, Solution,
    assemble_solution,
)

SENSE_LE = "<="
SENSE_EQ = "="
SENSE_GE = ">="

FAMILY_NAMES = {
    3: "coverage",
    4: "capacity",
    5: "activation",
    6: "no self-arc",
    7: "depot return",
    8: "depot departure",
    9: "inbound degree",
    10: "outbound degree",
    11: "morning distance limit",
    12: "afternoon distance limit",
    13: "evening distance limit",
    14: "subtour elimination",
    15: "window order morning/afternoon",
    16: "window order afternoon/evening",
    17: "stage-one domain",
    18: "recourse domain",
    19: "order value domain",
}


@dataclass(frozen=True)
class VarRef:
    kind: str            # "X" | "W" | "Y" | "V" | "S"
    indices: tuple       # index tuple, scenario index last where present
    column: int

    @property
    def name(self) -> str:
        return "_".join([self.kind] + [str(k) for k in self.indices])


@dataclass(frozen=True)
class RowTag:
    eq: int              # constraint family (3)..(16)
    indices: tuple


@dataclass
class Row:
    cols: np.ndarray     # column indices
    vals: np.ndarray     # matching coefficients
    sense: str
    rhs: float
    tag: RowTag


@dataclass
class MilpModel:
    """Immutable-by-convention explicit linear model over integer columns."""

    num_cols: int
    objective: np.ndarray
    rows: list[Row]
    col_lb: np.ndarray
    col_ub: np.ndarray
    binary: np.ndarray            # bool mask; non-binary columns are general integers
    columns: list[VarRef]
    col_of: dict[tuple, int]
    source: tuple[Instance, ScenarioSet] | None = None
    caches: dict = field(default_factory=dict, repr=False)

    def var(self, kind: str, *indices: int) -> int:
        return self.col_of[(kind,) + indices]

    def rows_satisfied(self, point: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Per-row satisfaction at a point (tolerance absorbs float noise)."""
        ok = np.empty(len(self.rows), dtype=bool)
        for k, row in enumerate(self.rows):
            lhs = float(point[row.cols] @ row.vals) if len(row.cols) else 0.0
            if row.sense == SENSE_LE:
                ok[k] = lhs <= row.rhs + tol
            elif row.sense == SENSE_GE:
                ok[k] = lhs >= row.rhs - tol
            else:
                ok[k] = abs(lhs - row.rhs) <= tol
        return ok

    def objective_value(self, point: np.ndarray) -> float:
        return float(self.objective @ point)


def column_count(n: int, t: int, r: int, q: int) -> int:
    """Closed-form column count for n customers, t trucks, r carriers, q scenarios."""
    return n * t + t + n * r * q + (n + 1) ** 2 * t * q + n * t * q


def build_model(instance: Instance, scenarios: ScenarioSet) -> MilpModel:
    if scenarios.n_customers != instance.n_customers:
        raise ValueError("scenario set and instance disagree on customer count")
    n = instance.n_customers
    t_ = instance.n_trucks
    r_ = instance.n_carriers
    q_ = scenarios.n_scenarios
    locs = range(n + 1)
    custs = range(1, n + 1)
    D = scenarios.demands
    K = instance.distance_km

    columns: list[VarRef] = []
    col_of: dict[tuple, int] = {}

    def add_col(kind, *indices):
        ref = VarRef(kind, tuple(indices), len(columns))
        columns.append(ref)
        col_of[(kind,) + ref.indices] = ref.column

    for i in custs:
        for t in range(t_):
            add_col("X", i, t)
    for t in range(t_):
        add_col("W", t)
    for i in custs:
        for r in range(r_):
            for w in range(q_):
                add_col("Y", i, r, w)
    for u in locs:
        for v in locs:
            for t in range(t_):
                for w in range(q_):
                    add_col("V", u, v, t, w)
    for i in custs:
        for t in range(t_):
            for w in range(q_):
                add_col("S", i, t, w)

    num_cols = len(columns)
    assert num_cols == column_count(n, t_, r_, q_)

    objective = np.zeros(num_cols)
    for i in custs:
        for t in range(t_):
            objective[col_of[("X", i, t)]] = instance.assignment_weight
    for t in range(t_):
        objective[col_of[("W", t)]] = instance.trucks[t].initial_cost
    charges = instance.carrier_charges
    for i in custs:
        for r in range(r_):
            for w in range(q_):
                objective[col_of[("Y", i, r, w)]] = (
                    float(scenarios.probabilities[w]) * float(charges[i - 1, r])
                )
    for u in locs:
        for v in locs:
            for t in range(t_):
                for w in range(q_):
                    objective[col_of[("V", u, v, t, w)]] = (
                        float(scenarios.probabilities[w]) * float(instance.routing_cost[u, v])
                    )

    col_lb = np.zeros(num_cols)
    col_ub = np.ones(num_cols)
    binary = np.ones(num_cols, dtype=bool)
    for ref in columns:
        if ref.kind == "S":
            binary[ref.column] = False
            col_ub[ref.column] = n

    rows: list[Row] = []

    def add_row(eq, indices, cols_vals, sense, rhs):
        cols, vals = [], []
        for c, v in cols_vals:
            if v != 0.0:
                cols.append(c)
                vals.append(float(v))
        rows.append(
            Row(
                cols=np.array(cols, dtype=np.int64),
                vals=np.array(vals, dtype=np.float64),
                sense=sense,
                rhs=float(rhs),
                tag=RowTag(eq, tuple(indices)),
            )
        )

    # (3) coverage: sum_t X[i,t] + sum_r Y[i,r,w] >= D_i(w)
    for i in custs:
        for w in range(q_):
            terms = [(col_of[("X", i, t)], 1.0) for t in range(t_)]
            terms += [(col_of[("Y", i, r, w)], 1.0) for r in range(r_)]
            add_row(3, (i, w), terms, SENSE_GE, float(D[w, i - 1]))

    # (4) capacity: sum_i A_i X[i,t] <= F_t
    for t in range(t_):
        terms = [(col_of[("X", i, t)], instance.weights[i - 1]) for i in custs]
        add_row(4, (t,), terms, SENSE_LE, instance.trucks[t].capacity_kg)

    # (5) activation: sum_i X[i,t] <= big_m * W[t]
    for t in range(t_):
        terms = [(col_of[("X", i, t)], 1.0) for i in custs]
        terms.append((col_of[("W", t)], -float(instance.big_m)))
        add_row(5, (t,), terms, SENSE_LE, 0.0)

    # (6) no self-arcs: V[u,u,t,w] = 0
    for u in locs:
        for t in range(t_):
            for w in range(q_):
                add_row(6, (u, t, w), [(col_of[("V", u, u, t, w)], 1.0)], SENSE_EQ, 0.0)

    # (7) at most one arc into the depot / (8) out of the depot
    for t in range(t_):
        for w in range(q_):
            add_row(7, (t, w), [(col_of[("V", u, DEPOT, t, w)], 1.0) for u in locs],
                    SENSE_LE, 1.0)
    for t in range(t_):
        for w in range(q_):
            add_row(8, (t, w), [(col_of[("V", DEPOT, u, t, w)], 1.0) for u in locs],
                    SENSE_LE, 1.0)

    # (9)/(10) visit degree: arcs into/out of i equal X[i,t] * D_i(w)
    for i in custs:
        for t in range(t_):
            for w in range(q_):
                terms = [(col_of[("V", u, i, t, w)], 1.0) for u in locs]
                terms.append((col_of[("X", i, t)], -float(D[w, i - 1])))
                add_row(9, (i, t, w), terms, SENSE_EQ, 0.0)
    for i in custs:
        for t in range(t_):
            for w in range(q_):
                terms = [(col_of[("V", i, u, t, w)], 1.0) for u in locs]
                terms.append((col_of[("X", i, t)], -float(D[w, i - 1])))
                add_row(10, (i, t, w), terms, SENSE_EQ, 0.0)

    # (11)-(13) per-window travel budgets on distance entering window customers
    for eq, window in ((11, MORNING), (12, AFTERNOON), (13, EVENING)):
        members = instance.window_sets[window]
        for t in range(t_):
            for w in range(q_):
                terms = [
                    (col_of[("V", u, i, t, w)], float(K[u, i]))
                    for u in locs
                    for i in members
                ]
                add_row(eq, (t, w), terms, SENSE_LE, instance.window_limits.limit(window))

    # (14) subtour elimination: S_i - S_j + n V[i,j] <= n - 1 for i != j
    for i in custs:
        for j in custs:
            if i == j:
                continue
            for t in range(t_):
                for w in range(q_):
                    add_row(
                        14, (i, j, t, w),
                        [
                            (col_of[("S", i, t, w)], 1.0),
                            (col_of[("S", j, t, w)], -1.0),
                            (col_of[("V", i, j, t, w)], float(n)),
                        ],
                        SENSE_LE, float(n - 1),
                    )

    # (15)/(16) window order: D_i S_i <= S_j + |block|(1 - D_i)
    for eq, early, late in ((15, MORNING, AFTERNOON), (16, AFTERNOON, EVENING)):
        early_ids = instance.window_sets[early]
        late_ids = instance.window_sets[late]
        block = len(early_ids)
        for i in early_ids:
            for j in late_ids:
                for t in range(t_):
                    for w in range(q_):
                        d = float(D[w, i - 1])
                        add_row(
                            eq, (i, j, t, w),
                            [
                                (col_of[("S", i, t, w)], d),
                                (col_of[("S", j, t, w)], -1.0),
                            ],
                            SENSE_LE, block * (1.0 - d),
                        )

    return MilpModel(
        num_cols=num_cols,
        objective=objective,
        rows=rows,
        col_lb=col_lb,
        col_ub=col_ub,
        binary=binary,
        columns=columns,
        col_of=col_of,
        source=(instance, scenarios),
    )


def explain_row(model: MilpModel, row_index: int) -> str:
    """Human-readable name of a constraint row, e.g. 'capacity (4) for truck 2'."""
    if not (0 <= row_index < len(model.rows)):
        raise IndexError(f"row {row_index} out of range (model has {len(model.rows)} rows)")
    tag = model.rows[row_index].tag
    ix = tag.indices
    eq = tag.eq
    name = FAMILY_NAMES[eq]
    if eq == 3:
        return f"{name} (3) for customer {ix[0]}, scenario {ix[1]}"
    if eq in (4, 5):
        return f"{name} ({eq}) for truck {ix[0]}"
    if eq == 6:
        return f"{name} (6) at location {ix[0]}, truck {ix[1]}, scenario {ix[2]}"
    if eq in (7, 8, 11, 12, 13):
        return f"{name} ({eq}) for truck {ix[0]}, scenario {ix[1]}"
    if eq in (9, 10):
        return f"{name} ({eq}) for customer {ix[0]}, truck {ix[1]}, scenario {ix[2]}"
    if eq == 14:
        return (
            f"{name} (14) for customers {ix[0]}->{ix[1]}, truck {ix[2]}, scenario {ix[3]}"
        )
    return f"{name} ({eq}) for customers {ix[0]} before {ix[1]}, truck {ix[2]}, scenario {ix[3]}"


def solution_to_vector(model: MilpModel, solution: Solution) -> np.ndarray:
    """Flatten a Solution into the model's column vector."""
    point = np.zeros(model.num_cols)
    for ref in model.columns:
        if ref.kind == "X":
            i, t = ref.indices
            point[ref.column] = solution.x[i - 1, t]
        elif ref.kind == "W":
            (t,) = ref.indices
            point[ref.column] = solution.w[t]
        elif ref.kind == "Y":
            i, r, w = ref.indices
            point[ref.column] = solution.y[w, i - 1, r]
        elif ref.kind == "V":
            u, v, t, w = ref.indices
            point[ref.column] = solution.v[w, u, v, t]
        else:
            i, t, w = ref.indices
            point[ref.column] = solution.s[w, i - 1, t]
    return point


def vector_to_solution(model: MilpModel, point: np.ndarray) -> Solution:
    """Round a (near-)integral column vector back into a Solution."""
    if model.source is None:
        raise ValueError("model carries no source instance/scenarios")
    instance, scenarios = model.source
    n, t_, r_, q_ = (
        instance.n_customers, instance.n_trucks, instance.n_carriers,
        scenarios.n_scenarios,
    )
    x = np.zeros((n, t_))
    w = np.zeros(t_)
    y = np.zeros((q_, n, r_))
    v = np.zeros((q_, n + 1, n + 1, t_))
    s = np.zeros((q_, n, t_))
    vals = np.rint(point)
    for ref in model.columns:
        val = vals[ref.column]
        if ref.kind == "X":
            i, t = ref.indices
            x[i - 1, t] = val
        elif ref.kind == "W":
            (t,) = ref.indices
            w[t] = val
        elif ref.kind == "Y":
            i, r, ww = ref.indices
            y[ww, i - 1, r] = val
        elif ref.kind == "V":
            u, vv, t, ww = ref.indices
            v[ww, u, vv, t] = val
        else:
            i, t, ww = ref.indices
            s[ww, i - 1, t] = val
    return assemble_solution(instance, scenarios, x, w, y, v, s)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def to_lp_text(model: MilpModel) -> str:
    """Serialize the model in CPLEX LP text format for external cross-checks."""
    lines = ["Minimize", " obj:"]
    terms = []
    for ref in model.columns:
        c = model.objective[ref.column]
        if c != 0.0:
            terms.append(f" {'+' if c >= 0 else '-'} {_fmt(abs(c))} {ref.name}")
    if terms:
        lines[-1] += "".join(terms)
    else:
        lines[-1] += " 0 " + (model.columns[0].name if model.columns else "x0")
    lines.append("Subject To")
    for k, row in enumerate(model.rows):
        body = []
        for c, v in zip(row.cols, row.vals):
            body.append(f" {'+' if v >= 0 else '-'} {_fmt(abs(v))} {model.columns[c].name}")
        if not body:
            body = [" 0 " + (model.columns[0].name if model.columns else "x0")]
        sense = {SENSE_LE: "<=", SENSE_GE: ">=", SENSE_EQ: "="}[row.sense]
        lines.append(f" r{k}_eq{row.tag.eq}:{''.join(body)} {sense} {_fmt(row.rhs)}")
    generals = [ref for ref in model.columns if not model.binary[ref.column]]
    if generals:
        lines.append("Bounds")
        for ref in generals:
            lines.append(
                f" {_fmt(model.col_lb[ref.column])} <= {ref.name}"
                f" <= {_fmt(model.col_ub[ref.column])}"
            )
    binaries = [ref for ref in model.columns if model.binary[ref.column]]
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(ref.name for ref in binaries))
    if generals:
        lines.append("Generals")
        lines.append(" " + " ".join(ref.name for ref in generals))
    lines.append("End")
    return "\n".join(lines) + "\n"
