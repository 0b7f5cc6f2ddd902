"""Constructors for demand scenario sets.

All solvers accept any finite ScenarioSet; these helpers cover the common
cases: a single certain-demand scenario, a uniform distribution over explicit
vectors, and independent per-customer Bernoulli demand (enumerated exactly
while the support is small, sampled otherwise).
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

import numpy as np

from .model import ScenarioSet


def deterministic_all_demand(n_customers: int) -> ScenarioSet:
    """One scenario in which every customer has demand."""
    if n_customers < 0:
        raise ValueError("customer count must be >= 0")
    return ScenarioSet(
        demands=np.ones((1, n_customers), dtype=np.int8), probabilities=np.array([1.0])
    )


def uniform_scenarios(demand_vectors: Sequence[Sequence[int]]) -> ScenarioSet:
    """Equal probability 1/|Q| for each given demand vector (duplicates allowed)."""
    if len(demand_vectors) == 0:
        raise ValueError("at least one demand vector required")
    lengths = {len(d) for d in demand_vectors}
    if len(lengths) != 1:
        raise ValueError("demand vectors must all have the same length")
    q = len(demand_vectors)
    return ScenarioSet(
        demands=np.array(demand_vectors, dtype=np.int8).reshape(q, lengths.pop()),
        probabilities=np.full(q, 1.0 / q),
    )


def bernoulli_scenarios(
    demand_probability: Sequence[float], max_scenarios: int, rng_seed: int = 0
) -> ScenarioSet:
    """Scenarios for independent per-customer demand probabilities.

    While the support (outcomes with nonzero probability) fits within
    ``max_scenarios`` the set is enumerated exhaustively with exact product
    probabilities; otherwise ``max_scenarios`` vectors are sampled i.i.d. and
    weighted 1/``max_scenarios`` each.  Same seed, same result.
    """
    p = np.asarray(demand_probability, dtype=np.float64)
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("demand probabilities must lie in [0, 1]")
    if max_scenarios < 1:
        raise ValueError("max_scenarios must be >= 1")
    n = len(p)

    free = [i for i in range(n) if 0.0 < p[i] < 1.0]
    support_size = 2 ** len(free)
    if support_size <= max_scenarios:
        base = (p >= 1.0).astype(np.int8)
        vectors = []
        probs = []
        for bits in itertools.product((0, 1), repeat=len(free)):
            d = base.copy()
            prob = 1.0
            for i, b in zip(free, bits):
                d[i] = b
                prob *= p[i] if b else (1.0 - p[i])
            vectors.append(d)
            probs.append(prob)
        return ScenarioSet(demands=np.array(vectors, dtype=np.int8).reshape(len(vectors), n),
                           probabilities=np.array(probs))

    rng = random.Random(rng_seed)
    vectors = [
        [1 if rng.random() < p[i] else 0 for i in range(n)] for _ in range(max_scenarios)
    ]
    return ScenarioSet(
        demands=np.array(vectors, dtype=np.int8).reshape(max_scenarios, n),
        probabilities=np.full(max_scenarios, 1.0 / max_scenarios),
    )
