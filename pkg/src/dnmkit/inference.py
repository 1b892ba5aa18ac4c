"""Posterior marginal inference for discrete belief networks.

Three engines with one signature:

* ``exact_posterior``: variable elimination, run once per query node.
* ``approximate_posterior``: vectorized likelihood weighting.
* ``brute_force_posterior``: full joint enumeration, the test oracle.

Evidence whose probability is zero under the model raises
``ImpossibleEvidenceError`` rather than returning NaNs.
"""

import numpy as np

from .errors import ImpossibleEvidenceError, JointSizeError, NoSampleMassError
from .network import BeliefNetwork, topological_order

MAX_ENUM_STATES = 1 << 20


class _Factor:
    """Table over a sorted tuple of node ids.

    Keeping the scope sorted lets two factors multiply by broadcasting:
    each reshapes its table onto the union scope with size-1 axes for the
    nodes it lacks.
    """

    __slots__ = ("nodes", "table")

    def __init__(self, nodes, table):
        self.nodes = tuple(nodes)
        self.table = table

    @classmethod
    def from_cpt(cls, bn, i):
        cpt = bn.cpts[i]
        scope = cpt.parents + (i,)
        # Row-major over (parents..., child) matches the CPT row order.
        table = cpt.table.reshape(cpt.parent_cards + (cpt.n_states,))
        order = np.argsort(scope)
        return cls(tuple(scope[j] for j in order), table.transpose(order))

    def multiply(self, other):
        union = sorted(set(self.nodes) | set(other.nodes))
        return _Factor(
            union,
            _expand(self, union) * _expand(other, union),
        )

    def sum_out(self, node):
        ax = self.nodes.index(node)
        return _Factor(
            self.nodes[:ax] + self.nodes[ax + 1:],
            self.table.sum(axis=ax),
        )

    def reduce(self, node, state):
        ax = self.nodes.index(node)
        return _Factor(
            self.nodes[:ax] + self.nodes[ax + 1:],
            np.take(self.table, state, axis=ax),
        )


def _expand(factor, union):
    shape = [1] * len(union)
    for ax, node in enumerate(factor.nodes):
        shape[union.index(node)] = factor.table.shape[ax]
    return factor.table.reshape(shape)


def _elimination_order(bn, keep, factors):
    """Min-degree order over the moralized graph, ties by node index."""
    neighbors = {}
    for f in factors:
        for v in f.nodes:
            neighbors.setdefault(v, set()).update(f.nodes)
    for v in neighbors:
        neighbors[v].discard(v)
    todo = set(neighbors) - set(keep)
    order = []
    while todo:
        v = min(todo, key=lambda u: (len(neighbors[u] & todo), u))
        order.append(v)
        todo.discard(v)
        nb = neighbors[v] & todo
        for u in nb:
            neighbors[u].update(nb)
            neighbors[u].discard(u)
    return order


def exact_posterior(bn: BeliefNetwork, query, evidence=None) -> list[np.ndarray]:
    """Posterior marginals P(Q | evidence) for each node in ``query``.

    evidence maps node id -> observed state. Runs one variable
    elimination per query node; the first elimination also checks that
    the evidence has positive probability.
    """
    evidence = dict(evidence or {})
    results = []
    for q in query:
        results.append(_eliminate_single(bn, q, evidence))
    return results


def _eliminate_single(bn, q, evidence):
    cards = bn.cardinalities()
    if q in evidence:
        dist = np.zeros(cards[q])
        dist[evidence[q]] = 1.0
        # Still validate the evidence itself.
        _eliminate_partition(bn, None, evidence)
        return dist
    dist = _eliminate_partition(bn, q, evidence)
    return dist


def _eliminate_partition(bn, q, evidence):
    factors = []
    for i in range(bn.n_nodes):
        f = _Factor.from_cpt(bn, i)
        for node in sorted(set(f.nodes) & set(evidence)):
            f = f.reduce(node, evidence[node])
        factors.append(f)
    keep = [] if q is None else [q]
    for v in _elimination_order(bn, keep, factors):
        bucket = [f for f in factors if v in f.nodes]
        rest = [f for f in factors if v not in f.nodes]
        prod = bucket[0]
        for f in bucket[1:]:
            prod = prod.multiply(f)
        rest.append(prod.sum_out(v))
        factors = rest
    out = _Factor((), np.array(1.0))
    for f in factors:
        out = out.multiply(f)
    if q is None:
        z = float(out.table)
        if z <= 0.0:
            raise ImpossibleEvidenceError(
                f"evidence {evidence} has probability {z} under the model"
            )
        return None
    z = out.table.sum()
    if z <= 0.0:
        raise ImpossibleEvidenceError(
            f"evidence {evidence} has probability 0 under the model"
        )
    return out.table / z


def approximate_posterior(
    bn: BeliefNetwork,
    query,
    evidence=None,
    n_samples: int = 5000,
    seed=None,
) -> list[np.ndarray]:
    """Likelihood-weighted posterior marginals.

    Evidence nodes are clamped and their CPT row probability folded into
    the sample weight; other nodes are forward-sampled in topological
    order, all samples at once. Raises ``NoSampleMassError`` when every
    weight is zero (evidence never achieved positive likelihood).
    """
    evidence = dict(evidence or {})
    rng = np.random.default_rng(seed)
    cards = bn.cardinalities()
    n = bn.n_nodes
    states = np.empty((n_samples, n), dtype=np.int64)
    weights = np.ones(n_samples)
    for i in topological_order(bn):
        cpt = bn.cpts[i]
        if cpt.parents:
            rows = np.zeros(n_samples, dtype=np.int64)
            for p, c in zip(cpt.parents, cpt.parent_cards):
                rows = rows * c + states[:, p]
            probs = cpt.table[rows]
        else:
            probs = np.broadcast_to(cpt.table[0], (n_samples, cards[i]))
        if i in evidence:
            states[:, i] = evidence[i]
            weights *= probs[:, evidence[i]]
        else:
            u = rng.random(n_samples)
            cum = np.cumsum(probs, axis=1)
            states[:, i] = np.minimum(
                (u[:, None] >= cum).sum(axis=1), cards[i] - 1
            )
    total = weights.sum()
    if total <= 0.0:
        raise NoSampleMassError(
            f"all {n_samples} sample weights are zero for evidence {evidence}"
        )
    out = []
    for q in query:
        tally = np.bincount(states[:, q], weights=weights, minlength=cards[q])
        out.append(tally / total)
    return out


def brute_force_posterior(bn: BeliefNetwork, query, evidence=None) -> list[np.ndarray]:
    """Posterior marginals by materializing the full joint tensor.

    Exponential in the node count; refuses joints above
    ``MAX_ENUM_STATES`` states. Intended as an oracle for small networks.
    """
    evidence = dict(evidence or {})
    cards = bn.cardinalities()
    total = 1
    for c in cards:
        total *= c
    if total > MAX_ENUM_STATES:
        raise JointSizeError(
            f"joint has {total} states, enumeration cap is {MAX_ENUM_STATES}"
        )
    n = bn.n_nodes
    joint = np.ones(cards)
    for i in range(n):
        cpt = bn.cpts[i]
        scope = cpt.parents + (i,)
        table = cpt.table.reshape(cpt.parent_cards + (cpt.n_states,))
        shape = [1] * n
        perm = np.argsort(scope)
        for ax, node in enumerate(sorted(scope)):
            shape[node] = cards[node]
        joint = joint * table.transpose(perm).reshape(shape)
    for node, state in evidence.items():
        mask = np.zeros(cards[node])
        mask[state] = 1.0
        shape = [1] * n
        shape[node] = cards[node]
        joint = joint * mask.reshape(shape)
    z = joint.sum()
    if z <= 0.0:
        raise ImpossibleEvidenceError(
            f"evidence {evidence} has probability 0 under the model"
        )
    out = []
    for q in query:
        axes = tuple(ax for ax in range(n) if ax != q)
        out.append(joint.sum(axis=axes) / z)
    return out
