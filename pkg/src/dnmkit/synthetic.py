"""Synthetic generators for tests, benchmarks, and demo data.

Includes random belief networks and dynamic models for fuzz checks, a
two-state Markov chain, a mixture series with a known best mixing
weight, a three-variable generator with a known temporal structure, and
a four-channel physiological-style series (one fast oscillating
channel, two slow channels, one binary state channel) whose regime
shifts give online adaptation something to chase.

Run as a module to write the four-channel series to CSV:

    python3 -m dnmkit.synthetic --out demo.csv --steps 4000 --seed 7
"""

import argparse
import csv
import sys

import numpy as np

from .model import ConvexCpd, Dnm, DnmStructure, LagRef
from .network import BeliefNetwork, Cpt, Variable

APNEA_COLUMNS = ("HR", "CV", "SaO2", "REM")


def _dirichlet_rows(rng, n_rows, n_cols):
    return rng.dirichlet(np.ones(n_cols), size=n_rows)


def random_network(rng, max_nodes: int = 6, max_card: int = 4) -> BeliefNetwork:
    """Random DAG with random CPTs; arcs only from lower to higher index."""
    n = int(rng.integers(1, max_nodes + 1))
    cards = rng.integers(2, max_card + 1, size=n)
    variables = [Variable(f"n{i}", int(cards[i])) for i in range(n)]
    cpts = []
    for i in range(n):
        pool = list(range(i))
        rng.shuffle(pool)
        n_par = int(rng.integers(0, min(len(pool), 3) + 1))
        parents = tuple(sorted(pool[:n_par]))
        pcards = tuple(int(cards[p]) for p in parents)
        rows = int(np.prod(pcards)) if pcards else 1
        cpts.append(Cpt(parents, pcards, _dirichlet_rows(rng, rows, int(cards[i]))))
    return BeliefNetwork(variables, cpts)


def random_dnm(rng, max_vars: int = 3, max_card: int = 3, max_order: int = 2) -> Dnm:
    """Random small dynamic model with a random acyclic lag-0 graph."""
    n = int(rng.integers(1, max_vars + 1))
    order = int(rng.integers(1, max_order + 1))
    cards = [int(rng.integers(2, max_card + 1)) for _ in range(n)]
    variables = tuple(Variable(f"v{i}", cards[i]) for i in range(n))
    contemporaneous, lagged, cpds, marginals = [], [], [], []
    for i in range(n):
        c_pool = list(range(i))
        rng.shuffle(c_pool)
        refs_c = tuple(
            LagRef(v, 0) for v in sorted(c_pool[: rng.integers(0, len(c_pool) + 1)])
        )
        nc_pool = [(v, lag) for v in range(n) for lag in range(1, order + 1)]
        rng.shuffle(nc_pool)
        n_nc = int(rng.integers(1, min(len(nc_pool), 2) + 1))
        refs_nc = tuple(
            LagRef(v, lag) for v, lag in sorted(nc_pool[:n_nc], key=lambda p: (p[1], p[0]))
        )
        cards_c = tuple(cards[r.var] for r in refs_c)
        cards_nc = tuple(cards[r.var] for r in refs_nc)
        rows_c = int(np.prod(cards_c)) if cards_c else 1
        rows_nc = int(np.prod(cards_nc)) if cards_nc else 1
        contemporaneous.append(refs_c)
        lagged.append(refs_nc)
        cpds.append(
            ConvexCpd(
                cards_c, cards_nc,
                _dirichlet_rows(rng, rows_c, cards[i]),
                _dirichlet_rows(rng, rows_nc, cards[i]),
                alpha=float(rng.random()),
            )
        )
        marginals.append(rng.dirichlet(np.ones(cards[i])))
    structure = DnmStructure(
        variables=variables,
        order=order,
        contemporaneous=tuple(contemporaneous),
        lagged=tuple(lagged),
    )
    values = tuple(np.sort(rng.normal(size=c)) for c in cards)
    return Dnm(structure, tuple(cpds), tuple(marginals), values)


def random_window(rng, dnm: Dnm):
    """Fully observed random window for ``dnm``."""
    cards = dnm.structure.cardinalities()
    return [
        [int(rng.integers(0, cards[v])) for v in range(dnm.n_vars)]
        for _ in range(dnm.structure.max_lag())
    ]


def markov_series(transition, n_steps: int, seed=None, init: int = 0) -> np.ndarray:
    """Sample a Markov chain; returns int states."""
    transition = np.asarray(transition, dtype=float)
    rng = np.random.default_rng(seed)
    out = np.empty(n_steps, dtype=np.int64)
    state = init
    for t in range(n_steps):
        out[t] = state
        state = int(rng.choice(len(transition), p=transition[state]))
    return out


def mixture_series(
    transition, marginal, weight: float, n_steps: int, seed=None, init: int = 0
) -> np.ndarray:
    """Chain where each step follows the transition row with probability
    ``weight`` and draws fresh from ``marginal`` otherwise.

    The best convex mixing weight for one-step expected-value forecasts
    of this process is ``weight`` itself.
    """
    transition = np.asarray(transition, dtype=float)
    marginal = np.asarray(marginal, dtype=float)
    rng = np.random.default_rng(seed)
    out = np.empty(n_steps, dtype=np.int64)
    state = init
    for t in range(n_steps):
        out[t] = state
        if rng.random() < weight:
            state = int(rng.choice(len(transition), p=transition[state]))
        else:
            state = int(rng.choice(len(marginal), p=marginal))
    return out


def single_var_chain_dnm(
    transition, marginal=None, values=None, alpha: float = 1.0, name: str = "x"
) -> Dnm:
    """One-variable model: lagged parent = itself at lag 1.

    The lagged CPT is ``transition``; the contemporaneous side has no
    parents, so its single row is ``marginal`` (default uniform).
    """
    transition = np.asarray(transition, dtype=float)
    card = transition.shape[1]
    if marginal is None:
        marginal = np.full(card, 1.0 / card)
    marginal = np.asarray(marginal, dtype=float)
    if values is None:
        values = np.arange(card, dtype=float)
    structure = DnmStructure(
        variables=(Variable(name, card, "continuous"),),
        order=1,
        contemporaneous=((),),
        lagged=((LagRef(0, 1),),),
    )
    cpd = ConvexCpd((), (card,), marginal[None, :], transition, alpha=alpha)
    return Dnm(structure, (cpd,), (marginal.copy(),), (np.asarray(values, dtype=float),))


def persistence_dnm(card: int, values=None, name: str = "x") -> Dnm:
    """Deterministic identity-transition model: tomorrow equals today."""
    return single_var_chain_dnm(np.eye(card), values=values, alpha=1.0, name=name)


RECOVERY_CARDS = (3, 3, 2)


def recovery_structure() -> DnmStructure:
    """The generator structure ``recovery_series`` samples from.

    a follows its own previous value; b follows a in the same slice;
    c follows b in the same slice and its own previous value.
    """
    variables = tuple(
        Variable(name, card) for name, card in zip("abc", RECOVERY_CARDS)
    )
    return DnmStructure(
        variables=variables,
        order=1,
        contemporaneous=((), (LagRef(0, 0),), (LagRef(1, 0),)),
        lagged=((LagRef(0, 1),), (), (LagRef(2, 1),)),
    )


def recovery_series(n_steps: int, seed=None) -> np.ndarray:
    """Sample the known-structure generator; returns (n_steps, 3) states.

    Dependencies are sharp (dominant probability 0.8) so a few thousand
    rows pin the structure down.
    """
    rng = np.random.default_rng(seed)
    # a: 3-state rotation; b copies a; c xors b with its own past.
    a_trans = np.full((3, 3), 0.1)
    for s in range(3):
        a_trans[s, (s + 1) % 3] = 0.8
    b_given_a = np.full((3, 3), 0.1)
    for s in range(3):
        b_given_a[s, s] = 0.8
    # Both parents must matter marginally, not only jointly, or a greedy
    # single-addition search has no first step to find.
    c_given_bc = np.array(
        [
            [0.9, 0.1],  # b=0, c_prev=0
            [0.6, 0.4],  # b=0, c_prev=1
            [0.5, 0.5],  # b=1, c_prev=0
            [0.2, 0.8],  # b=1, c_prev=1
            [0.3, 0.7],  # b=2, c_prev=0
            [0.1, 0.9],  # b=2, c_prev=1
        ]
    )
    out = np.empty((n_steps, 3), dtype=np.int64)
    a_prev, c_prev = 0, 0
    for t in range(n_steps):
        a = int(rng.choice(3, p=a_trans[a_prev])) if t else 0
        b = int(rng.choice(3, p=b_given_a[a]))
        c = int(rng.choice(2, p=c_given_bc[b * 2 + c_prev]))
        out[t] = (a, b, c)
        a_prev, c_prev = a, c
    return out


def apnea_structure() -> DnmStructure:
    """Four-channel topology used by the demo and the replication tests.

    HR and SaO2 each depend on CV in the same slice and on themselves
    one step back; CV depends on REM in the same slice and on itself at
    lags 1 and 2 (its oscillation needs two lags); REM follows itself.
    """
    variables = (
        Variable("HR", 7, "continuous"),
        Variable("CV", 7, "continuous"),
        Variable("SaO2", 7, "continuous"),
        Variable("REM", 2, "categorical"),
    )
    hr, cv, sao2, rem = range(4)
    return DnmStructure(
        variables=variables,
        order=2,
        contemporaneous=(
            (LagRef(cv, 0),),
            (LagRef(rem, 0),),
            (LagRef(cv, 0),),
            (),
        ),
        lagged=(
            (LagRef(hr, 1),),
            (LagRef(cv, 1), LagRef(cv, 2)),
            (LagRef(sao2, 1),),
            (LagRef(rem, 1),),
        ),
    )


def generate_apnea_like(n_steps: int, seed=None) -> np.ndarray:
    """Four-channel series with regime shifts, columns ``APNEA_COLUMNS``.

    A hidden two-state regime (stable / disturbed) modulates everything:
    CV oscillates with period 6 at high amplitude in the stable regime
    and nearly flattens in the disturbed one; HR rides the regime plus a
    same-step CV coupling; SaO2 ramps down during disturbances and
    recovers after; REM is a slow independent switch. All channels stay
    strictly positive.
    """
    rng = np.random.default_rng(seed)
    regime = np.empty(n_steps, dtype=np.int64)
    r = 0
    stay = {0: 0.97, 1: 0.94}
    for t in range(n_steps):
        regime[t] = r
        r = r if rng.random() < stay[r] else 1 - r
    rem = np.empty(n_steps, dtype=np.int64)
    s = 0
    for t in range(n_steps):
        rem[t] = s
        s = s if rng.random() < 0.985 else 1 - s
    amp = np.where(regime == 0, 6.0, 0.8)
    cv = 10.0 + amp * np.sin(2 * np.pi * np.arange(n_steps) / 6.0)
    cv += rng.normal(0.0, 0.4, size=n_steps)
    hr = 70.0 + 7.0 * regime + 0.5 * (cv - 10.0) + rng.normal(0.0, 1.0, size=n_steps)
    sao2 = np.empty(n_steps)
    level = 96.0
    for t in range(n_steps):
        level += -0.9 if regime[t] else 0.5
        level = min(97.0, max(86.0, level))
        sao2[t] = level + rng.normal(0.0, 0.3)
    return np.column_stack([hr, cv, sao2, rem.astype(float)])


def write_csv(path, data: np.ndarray, columns=APNEA_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *columns])
        for t, row in enumerate(data):
            out = []
            for name, x in zip(columns, row):
                out.append(f"{int(x)}" if name == "REM" else f"{x:.4f}")
            writer.writerow([t, *out])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="write a synthetic four-channel series to CSV"
    )
    parser.add_argument("--out", required=True)
    parser.add_argument("--steps", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    write_csv(args.out, generate_apnea_like(args.steps, args.seed))
    print(f"wrote {args.steps} steps to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
