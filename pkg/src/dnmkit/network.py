"""Discrete belief networks over finite-state variables.

A network is a list of variables, each with a conditional probability
table (CPT) over an ordered parent list.  Roots are nodes with an empty
parent list and a single-row CPT (their prior).  The module also provides
validation, deterministic topological ordering, and a chain-rule joint
probability used as a test oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CycleError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    """A discrete variable with ``cardinality`` states.

    ``kind`` is "continuous" for discretized continuous channels and
    "categorical" for natively discrete ones; it only affects reporting.
    """

    name: str
    cardinality: int
    kind: str = "categorical"


def row_index(states, cards) -> int:
    # Mixed-radix encoding, first parent most significant. This row order
    # is part of the model file format; do not change it.
    idx = 0
    for s, c in zip(states, cards):
        idx = idx * c + s
    return idx


@dataclass
class Cpt:
    """Conditional probability table over an ordered parent list.

    ``table`` has one row per parent configuration (mixed-radix order,
    first parent most significant) and one column per child state.
    """

    parents: tuple[int, ...]
    parent_cards: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        self.parents = tuple(self.parents)
        self.parent_cards = tuple(self.parent_cards)
        self.table = np.asarray(self.table, dtype=float)
        if self.table.ndim != 2:
            raise ValueError("CPT table must be 2-D (rows x child states)")

    @property
    def n_states(self) -> int:
        return self.table.shape[1]

    def row(self, parent_states) -> np.ndarray:
        return self.table[row_index(parent_states, self.parent_cards)]


def prior_cpt(dist) -> Cpt:
    """Single-row CPT for a root node."""
    dist = np.asarray(dist, dtype=float)
    return Cpt((), (), dist[None, :])


@dataclass
class BeliefNetwork:
    variables: list[Variable]
    cpts: list[Cpt]

    @property
    def n_nodes(self) -> int:
        return len(self.variables)

    def parents(self, i) -> tuple[int, ...]:
        return self.cpts[i].parents

    def arcs(self) -> list[tuple[int, int]]:
        return [(p, i) for i in range(self.n_nodes) for p in self.cpts[i].parents]

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)


def validate_network(bn: BeliefNetwork) -> list[str]:
    """Check every structural invariant; return one message per violation.

    An empty list means the network is valid.
    """
    report = []
    n = bn.n_nodes
    if len(bn.cpts) != n:
        report.append(f"{len(bn.cpts)} CPTs for {n} variables")
        return report
    names = [v.name for v in bn.variables]
    if len(set(names)) != n:
        dupes = sorted({x for x in names if names.count(x) > 1})
        report.append("duplicate variable names: " + ", ".join(dupes))
    for i, var in enumerate(bn.variables):
        if var.cardinality < 1:
            report.append(f"node {var.name}: cardinality {var.cardinality} < 1")
            continue
        cpt = bn.cpts[i]
        bad_parent = False
        for p in cpt.parents:
            if not 0 <= p < n:
                report.append(f"node {var.name}: parent index {p} out of range")
                bad_parent = True
        if bad_parent:
            continue
        expected_cards = tuple(bn.variables[p].cardinality for p in cpt.parents)
        if cpt.parent_cards != expected_cards:
            report.append(
                f"node {var.name}: parent cardinalities {cpt.parent_cards} "
                f"do not match parents {expected_cards}"
            )
            continue
        n_rows = int(np.prod(expected_cards)) if expected_cards else 1
        if cpt.table.shape != (n_rows, var.cardinality):
            report.append(
                f"node {var.name}: CPT shape {cpt.table.shape}, "
                f"expected {(n_rows, var.cardinality)}"
            )
            continue
        if np.any(cpt.table < -ROW_SUM_TOL) or np.any(cpt.table > 1 + ROW_SUM_TOL):
            report.append(f"node {var.name}: CPT entries outside [0, 1]")
        sums = cpt.table.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        for j in bad[:5]:
            report.append(
                f"node {var.name}: CPT row {j} sums to {sums[j]:.12g}, expected 1"
            )
        if len(bad) > 5:
            report.append(f"node {var.name}: {len(bad) - 5} more unnormalized rows")
    try:
        topological_order(bn)
    except CycleError as e:
        report.append(str(e))
    return report


def topological_order(bn: BeliefNetwork) -> list[int]:
    """Parent-before-child node order, ties broken by node index."""
    n = bn.n_nodes
    children = [[] for _ in range(n)]
    indeg = [0] * n
    for i in range(n):
        for p in set(bn.cpts[i].parents):
            children[p].append(i)
            indeg[i] += 1
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        changed = False
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
                changed = True
        if changed:
            ready.sort()
    if len(order) < n:
        raise CycleError(_find_cycle(bn, set(range(n)) - set(order)))
    return order


def _find_cycle(bn, remaining):
    # Walk parent links inside the leftover set until a node repeats.
    start = min(remaining)
    path, seen = [], {}
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(p for p in bn.cpts[v].parents if p in remaining)
    cycle = path[seen[v]:]
    return [bn.variables[i].name for i in cycle]


def joint_probability(bn: BeliefNetwork, assignment) -> float:
    """Chain-rule probability of a total assignment {node: state}."""
    n = bn.n_nodes
    missing = [i for i in range(n) if i not in assignment]
    if missing:
        raise ValueError(
            f"assignment must be total; missing nodes {missing}"
        )
    p = 1.0
    for i in range(n):
        cpt = bn.cpts[i]
        row = cpt.row([assignment[q] for q in cpt.parents])
        p *= row[assignment[i]]
        if p == 0.0:
            return 0.0
    return p
