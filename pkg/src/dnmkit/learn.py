"""Structure learning and parameter estimation from discretized series.

Structure search is a greedy parent-set builder per leading-slice
variable under a Bayesian-Dirichlet score (uniform priors): starting
from no parents it repeatedly adds the single candidate parent that most
improves the score, stopping when no candidate improves it or the parent
budget is reached. Candidates are every variable at lags 1..order plus
earlier-in-ordering variables at lag 0, so the lag-0 graph is acyclic by
construction.

Parameters come from smoothed counts over the same sliding-window
records, tallied separately for the contemporaneous and the lagged
parent set of each variable.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ValidationError
from .model import ConvexCpd, Dnm, DnmStructure, LagRef


@dataclass
class WindowRecords:
    """Sliding windows over a discretized table, ready for counting.

    ``states[r, s, v]`` is variable v at window slice s of record r,
    slices oldest first, so a parent at lag d lives at slice index
    ``order - d`` and the child at slice ``order``. Missing cells are -1;
    ``complete`` flags records with no missing cell.
    """

    states: np.ndarray
    complete: np.ndarray
    cards: tuple[int, ...]
    order: int

    @property
    def n_records(self) -> int:
        return self.states.shape[0]

    def column(self, ref: LagRef) -> np.ndarray:
        return self.states[:, self.order - ref.lag, ref.var]


def build_windows(states: np.ndarray, cards, order: int) -> WindowRecords:
    """Slice an (n_steps, n_vars) state array into overlapping windows.

    Record r covers rows r..r+order with the child row last. Rows with
    value -1 mark missing observations.
    """
    states = np.asarray(states, dtype=np.int64)
    if states.ndim != 2:
        raise ValidationError("state array must be 2-D (steps x variables)")
    n_steps = states.shape[0]
    if n_steps <= order:
        raise ValidationError(
            f"{n_steps} steps cannot form any window of order {order}"
        )
    idx = np.arange(order + 1)[None, :] + np.arange(n_steps - order)[:, None]
    windows = states[idx]
    complete = (windows >= 0).all(axis=(1, 2))
    return WindowRecords(windows, complete, tuple(int(c) for c in cards), order)


def family_score(records: WindowRecords, child: int, parents) -> float:
    """Log marginal likelihood of one child given an ordered parent list.

    Counts come from complete records only. With r child states, parent
    configurations j, and counts N_jk:

        sum_j [ lgamma(r) - lgamma(N_j + r) + sum_k lgamma(N_jk + 1) ]
    """
    rows = records.states[records.complete]
    r = records.cards[child]
    child_col = rows[:, records.order, child]
    q = 1
    cfg = np.zeros(len(rows), dtype=np.int64)
    for ref in parents:
        card = records.cards[ref.var]
        cfg = cfg * card + rows[:, records.order - ref.lag, ref.var]
        q *= card
    counts = np.bincount(cfg * r + child_col, minlength=q * r).reshape(q, r)
    n_j = counts.sum(axis=1)
    return float(
        np.sum(gammaln(r) - gammaln(n_j + r)) + np.sum(gammaln(counts + 1.0))
    )


class _ScoreCache:
    def __init__(self, records):
        self.records = records
        self.memo = {}

    def __call__(self, child, parents):
        key = (child, tuple(parents))
        if key not in self.memo:
            self.memo[key] = family_score(self.records, child, parents)
        return self.memo[key]


def candidate_parents(n_vars: int, order: int, child: int, ordering) -> list[LagRef]:
    """All admissible parents for ``child``: any variable at lags
    1..order, plus lag-0 variables earlier in ``ordering``."""
    child_pos = ordering.index(child)
    cands = [
        LagRef(v, lag) for lag in range(1, order + 1) for v in range(n_vars)
    ]
    cands.extend(LagRef(v, 0) for v in ordering[:child_pos])
    return cands


def learn_structure(
    records: WindowRecords,
    variables,
    ordering=None,
    max_parents: int = 4,
) -> DnmStructure:
    """Greedy per-variable parent search over the window records.

    ``ordering`` constrains lag-0 arcs (parents must precede children);
    by default it is the variable index order. Parent lists are stored
    sorted: lag-0 parents by variable, lagged parents by (lag, variable).
    """
    variables = tuple(variables)
    n = len(variables)
    if ordering is None:
        ordering = list(range(n))
    if sorted(ordering) != list(range(n)):
        raise ValidationError(f"ordering {ordering} is not a permutation of 0..{n - 1}")
    if not records.complete.any():
        raise ValidationError("no complete window records to learn from")
    score = _ScoreCache(records)
    contemporaneous, lagged = [], []
    for child in range(n):
        parents: list[LagRef] = []
        cands = candidate_parents(n, records.order, child, ordering)
        best = score(child, parents)
        while len(parents) < max_parents:
            gains = []
            for cand in cands:
                if cand in parents:
                    continue
                trial = sorted(parents + [cand], key=lambda ref: (ref.lag, ref.var))
                gains.append((score(child, trial), cand))
            if not gains:
                break
            top_score, top_cand = max(gains, key=lambda g: (g[0], -g[1].lag, -g[1].var))
            if top_score <= best:
                break
            best = top_score
            parents = sorted(parents + [top_cand], key=lambda ref: (ref.lag, ref.var))
        contemporaneous.append(
            tuple(ref for ref in parents if ref.lag == 0)
        )
        lagged.append(tuple(ref for ref in parents if ref.lag > 0))
    return DnmStructure(
        variables=variables,
        order=records.order,
        contemporaneous=tuple(contemporaneous),
        lagged=tuple(lagged),
    )


def estimate_cpds(
    structure: DnmStructure,
    records: WindowRecords,
    smoothing: float = 1.0,
    values=None,
    alpha0: float = 0.5,
) -> Dnm:
    """Fit both CPTs of every variable by smoothed counting.

    Each CPT row is (N_jk + smoothing) / (N_j + smoothing * r) over the
    complete records; with no usable records every row is uniform.
    ``values[i]`` gives per-state representative values for
    expected-value forecasts; defaults to the state indices.
    """
    rows = records.states[records.complete]
    n = structure.n_vars
    cpds = []
    marginals = []
    for child in range(n):
        r = records.cards[child]
        child_col = rows[:, records.order, child]
        tables = []
        for refs in (structure.contemporaneous[child], structure.lagged[child]):
            q = 1
            cfg = np.zeros(len(rows), dtype=np.int64)
            for ref in refs:
                card = records.cards[ref.var]
                cfg = cfg * card + rows[:, records.order - ref.lag, ref.var]
                q *= card
            counts = np.bincount(cfg * r + child_col, minlength=q * r).reshape(q, r)
            tables.append(
                (counts + smoothing) / (counts.sum(axis=1, keepdims=True) + smoothing * r)
            )
        cards_c = tuple(records.cards[ref.var] for ref in structure.contemporaneous[child])
        cards_nc = tuple(records.cards[ref.var] for ref in structure.lagged[child])
        cpds.append(
            ConvexCpd(cards_c, cards_nc, tables[0], tables[1], alpha=alpha0)
        )
        counts = np.bincount(child_col, minlength=r).astype(float)
        marginals.append((counts + smoothing) / (counts.sum() + smoothing * r))
    if values is None:
        values = [np.arange(records.cards[i], dtype=float) for i in range(n)]
    return Dnm(
        structure=structure,
        cpds=tuple(cpds),
        marginals=tuple(marginals),
        values=tuple(np.asarray(v, dtype=float) for v in values),
    )
