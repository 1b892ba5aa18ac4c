"""Dynamic network models: temporal structure, convex CPDs, unrolling.

A dynamic model has one variable set repeated across time slices. Each
variable has two parent sets: contemporaneous parents at lag 0 and
lagged parents at lags 1..order. Its conditional distribution is a
convex combination of a CPT over each set,

    P(X | both) = (1 - alpha) * P(X | contemporaneous) + alpha * P(X | lagged)

with a per-variable mixing weight alpha in [0, 1] that forecasting may
adapt over time.

``build_forecast_network`` unrolls the model over a window of
``order + 1`` slices into an ordinary belief network that the inference
engines accept. Window cells may be observed states, missing, or prior
distributions (used when forecasting promotes earlier posteriors to
root priors).
"""

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .network import BeliefNetwork, Cpt, Variable, prior_cpt, row_index, validate_network


class LagRef(NamedTuple):
    """Reference to ``var`` at ``lag`` slices before the leading slice."""

    var: int
    lag: int


@dataclass(frozen=True)
class DnmStructure:
    """Temporal structure: variables plus per-variable parent lists.

    ``contemporaneous[i]`` holds lag-0 refs, ``lagged[i]`` holds refs with
    lag 1..order. The lag-0 graph must be acyclic.
    """

    variables: tuple[Variable, ...]
    order: int
    contemporaneous: tuple[tuple[LagRef, ...], ...]
    lagged: tuple[tuple[LagRef, ...], ...]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def max_lag(self) -> int:
        """Largest lag actually used (window length minus one)."""
        lags = [ref.lag for refs in self.lagged for ref in refs]
        return max(lags, default=1)


def validate_structure(s: DnmStructure) -> list[str]:
    report = []
    n = s.n_vars
    if s.order < 1:
        report.append(f"order {s.order} < 1")
    if len(s.contemporaneous) != n or len(s.lagged) != n:
        report.append("parent lists do not match variable count")
        return report
    names = [v.name for v in s.variables]
    if len(set(names)) != n:
        report.append("duplicate variable names")
    for i in range(n):
        for ref in s.contemporaneous[i]:
            if ref.lag != 0:
                report.append(f"{names[i]}: contemporaneous parent with lag {ref.lag}")
            if not 0 <= ref.var < n:
                report.append(f"{names[i]}: parent var {ref.var} out of range")
            if ref.var == i and ref.lag == 0:
                report.append(f"{names[i]}: self-loop at lag 0")
        for ref in s.lagged[i]:
            if not 1 <= ref.lag <= s.order:
                report.append(f"{names[i]}: lagged parent with lag {ref.lag}")
            if not 0 <= ref.var < n:
                report.append(f"{names[i]}: parent var {ref.var} out of range")
    # Lag-0 acyclicity via the shared Kahn check on a throwaway network.
    if not report:
        cpts = []
        for i in range(n):
            parents = tuple(ref.var for ref in s.contemporaneous[i])
            cards = tuple(s.variables[p].cardinality for p in parents)
            rows = int(np.prod(cards)) if cards else 1
            table = np.full((rows, s.variables[i].cardinality), 1.0 / s.variables[i].cardinality)
            cpts.append(Cpt(parents, cards, table))
        report.extend(validate_network(BeliefNetwork(list(s.variables), cpts)))
    return report


@dataclass
class ConvexCpd:
    """Per-variable pair of CPTs mixed by ``alpha``.

    ``table_c`` rows run over contemporaneous parent configurations,
    ``table_nc`` over lagged ones, both in mixed-radix order with the
    first listed parent most significant.
    """

    parent_cards_c: tuple[int, ...]
    parent_cards_nc: tuple[int, ...]
    table_c: np.ndarray
    table_nc: np.ndarray
    alpha: float = 0.5

    def __post_init__(self):
        self.table_c = np.asarray(self.table_c, dtype=float)
        self.table_nc = np.asarray(self.table_nc, dtype=float)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha {self.alpha} outside [0, 1]")

    def row(self, states_c, states_nc) -> np.ndarray:
        rc = self.table_c[row_index(states_c, self.parent_cards_c)]
        rn = self.table_nc[row_index(states_nc, self.parent_cards_nc)]
        return (1.0 - self.alpha) * rc + self.alpha * rn

    def flatten(self) -> np.ndarray:
        """Joint-parent CPT: contemporaneous block most significant."""
        mixed = (
            (1.0 - self.alpha) * self.table_c[:, None, :]
            + self.alpha * self.table_nc[None, :, :]
        )
        return mixed.reshape(-1, mixed.shape[-1])


@dataclass(frozen=True)
class Dnm:
    """A fitted dynamic model.

    ``marginals[i]`` is the empirical state distribution of variable i,
    used as the root prior when a parent falls off the window edge.
    ``values[i]`` maps each state to a representative numeric value for
    expected-value forecasts.
    """

    structure: DnmStructure
    cpds: tuple[ConvexCpd, ...]
    marginals: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    @property
    def n_vars(self) -> int:
        return self.structure.n_vars

    def alphas(self) -> np.ndarray:
        return np.array([c.alpha for c in self.cpds])

    def with_alpha(self, var: int, alpha: float) -> "Dnm":
        cpds = list(self.cpds)
        cpds[var] = dataclasses.replace(cpds[var], alpha=float(alpha))
        return dataclasses.replace(self, cpds=tuple(cpds))

    def with_alphas(self, alphas) -> "Dnm":
        cpds = tuple(
            dataclasses.replace(c, alpha=float(a)) for c, a in zip(self.cpds, alphas)
        )
        return dataclasses.replace(self, cpds=cpds)


MISSING = -1


class UnrolledNetwork(NamedTuple):
    """An unrolled window plus bookkeeping for forecasting.

    ``network`` spans ``window_len + 1`` slices; node id of variable v in
    slice s is ``s * n_vars + v`` with slice ``window_len`` leading (the
    step being predicted). ``evidence`` maps observed nodes to states.
    ``signature`` fingerprints the graph shape alone (per-node parent
    tuples): equal signatures mean the same network was rebuilt with
    different priors or evidence, which multi-step forecasting uses to
    count how many distinct networks a horizon actually needs.
    """

    network: BeliefNetwork
    evidence: dict[int, int]
    leading_slice: int
    signature: tuple


def build_forecast_network(dnm: Dnm, cells) -> UnrolledNetwork:
    """Unroll ``dnm`` over a window plus one leading slice.

    ``cells`` is a list of ``window_len`` slices, oldest first, each a
    list of ``n_vars`` entries: an int state (observed), ``MISSING``, or
    a distribution array (a promoted prior). window_len must equal
    ``structure.max_lag()`` so every leading-slice lag resolves inside
    the window.

    A historical node keeps its convex CPT when every parent lands
    inside the window and its cell is observed or genuinely missing
    (a missing cell stays latent and inference marginalizes it). A
    promoted cell always becomes a root carrying its distribution: the
    forecast that produced it already marginalized the node's parents,
    so the arcs are dropped rather than double-counted. Nodes whose
    parents fall off the window edge are roots with the empirical
    marginal as prior.
    """
    s = dnm.structure
    n = s.n_vars
    wl = s.max_lag()
    if len(cells) != wl:
        raise ValidationError(f"window has {len(cells)} slices, model needs {wl}")
    n_slices = wl + 1
    variables = []
    for sl in range(n_slices):
        # Most recent window slice is time t, the leading slice is t+1.
        shift = wl - 1 - sl
        tag = "[t+1]" if sl == wl else "[t]" if shift == 0 else f"[t-{shift}]"
        for v in s.variables:
            variables.append(Variable(v.name + tag, v.cardinality, v.kind))

    def node_id(slice_pos, var):
        return slice_pos * n + var

    evidence = {}
    cpts = [None] * (n_slices * n)
    sig_nodes = []
    for sl in range(n_slices):
        for v in range(n):
            nid = node_id(sl, v)
            refs_c = [(ref.var, sl) for ref in s.contemporaneous[v]]
            refs_nc = [(ref.var, sl - ref.lag) for ref in s.lagged[v]]
            in_window = all(sp >= 0 for _, sp in refs_c + refs_nc)
            cell = cells[sl][v] if sl < wl else MISSING
            promoted = sl < wl and isinstance(cell, np.ndarray)
            observed = (
                sl < wl
                and not promoted
                and isinstance(cell, (int, np.integer))
                and cell != MISSING
            )
            if in_window and not promoted:
                cpd = dnm.cpds[v]
                parents = tuple(node_id(sp, pv) for pv, sp in refs_c + refs_nc)
                cards = tuple(variables[p].cardinality for p in parents)
                cpts[nid] = Cpt(parents, cards, cpd.flatten())
            elif promoted:
                cpts[nid] = prior_cpt(cell)
            else:
                cpts[nid] = prior_cpt(dnm.marginals[v])
            if observed:
                evidence[nid] = int(cell)
            # Shape only: which nodes carry arcs, and from where. Evidence
            # and prior contents re-instantiate an existing shape.
            sig_nodes.append(cpts[nid].parents)
    bn = BeliefNetwork(variables, cpts)
    signature = (n, wl, tuple(sig_nodes))
    return UnrolledNetwork(bn, evidence, wl, signature)


def leading_nodes(un: UnrolledNetwork, n_vars: int) -> list[int]:
    return [un.leading_slice * n_vars + v for v in range(n_vars)]
