"""End-to-end acceptance checks.

Each test exercises one release criterion and prints a single
``[acceptance] criterion N: PASS/FAIL`` line (run with ``pytest -s`` to
see them). The checks are property-based: oracle agreement, algebraic
identities, seeded recovery rates, tracking ratios, and a scaled
four-channel replication with qualitative orderings.
"""

import time

import numpy as np

from dnmkit import (
    AlphaState,
    ConvexCpd,
    Dnm,
    DnmStructure,
    LagRef,
    ResidualCoeffs,
    Variable,
    best_alpha_from_residuals,
    brute_force_posterior,
    build_windows,
    distinct_structures,
    estimate_cpds,
    exact_posterior,
    k_step_forecast,
    learn_structure,
    one_step_forecast,
    prediction_metrics,
    replay_residuals,
    rolling_forecast_evaluate,
)
from dnmkit.preprocess import apply_bins, fit_bins
from dnmkit.synthetic import (
    APNEA_COLUMNS,
    RECOVERY_CARDS,
    apnea_structure,
    generate_apnea_like,
    mixture_series,
    persistence_dnm,
    random_dnm,
    random_network,
    random_window,
    recovery_series,
    recovery_structure,
    single_var_chain_dnm,
)


def _report(n, ok, detail):
    print(f"\n[acceptance] criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {n} failed: {detail}"


def test_criterion_01_inference_oracle_equivalence():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        bn = random_network(rng, max_nodes=6, max_card=4)
        n = bn.n_nodes
        k = int(rng.integers(0, n))
        picked = rng.choice(n, size=k, replace=False)
        evidence = {
            int(e): int(rng.integers(0, bn.variables[e].cardinality))
            for e in picked
        }
        query = [i for i in range(n) if i not in evidence] or [0]
        got = exact_posterior(bn, query, evidence)
        want = brute_force_posterior(bn, query, evidence)
        for dg, dw in zip(got, want):
            worst = max(worst, float(np.max(np.abs(dg - dw))))
    dt = time.perf_counter() - t0
    _report(
        1,
        worst < 1e-9 and dt < 30.0,
        f"1000 networks, max deviation {worst:.2e}, {dt:.1f}s",
    )


def _single_side_model(dnm, side):
    """Rebuild ``dnm`` keeping only one CPT per variable."""
    uniform = lambda card: np.full((1, card), 1.0 / card)
    cpds, contemporaneous, lagged = [], [], []
    for i, cpd in enumerate(dnm.cpds):
        card = dnm.structure.variables[i].cardinality
        if side == "c":
            cpds.append(ConvexCpd(cpd.parent_cards_c, (), cpd.table_c,
                                  uniform(card), alpha=0.0))
            contemporaneous.append(dnm.structure.contemporaneous[i])
            lagged.append(())
        else:
            cpds.append(ConvexCpd((), cpd.parent_cards_nc, uniform(card),
                                  cpd.table_nc, alpha=1.0))
            contemporaneous.append(())
            lagged.append(dnm.structure.lagged[i])
    structure = DnmStructure(
        variables=dnm.structure.variables,
        order=dnm.structure.order,
        contemporaneous=tuple(contemporaneous),
        lagged=tuple(lagged),
    )
    return Dnm(structure=structure, cpds=tuple(cpds),
               marginals=dnm.marginals, values=dnm.values)


def test_criterion_02_endpoint_equivalence():
    rng = np.random.default_rng(1)
    worst = 0.0
    cpts_exact = True
    for _ in range(40):
        dnm = random_dnm(rng)
        window = random_window(rng, dnm)
        for side, alpha in (("c", 0.0), ("nc", 1.0)):
            pinned = dnm.with_alphas([alpha] * dnm.n_vars)
            ref = _single_side_model(dnm, side)
            ref_window = window[-ref.structure.max_lag():]
            a = one_step_forecast(pinned, window)
            b = one_step_forecast(ref, ref_window)
            for da, db in zip(a.distributions, b.distributions):
                worst = max(worst, float(np.max(np.abs(da - db))))
            # flattened CPT blocks must be bit-identical to the kept table
            for cpd in pinned.cpds:
                flat = cpd.flatten()
                q = cpd.table_nc.shape[0]
                for c in range(cpd.table_c.shape[0]):
                    block = flat[c * q:(c + 1) * q]
                    target = cpd.table_c[c][None, :] if alpha == 0.0 else cpd.table_nc
                    cpts_exact &= bool(np.array_equal(block, np.broadcast_to(
                        target, block.shape)))
    _report(
        2,
        cpts_exact and worst < 1e-12,
        f"40 models x 2 endpoints, CPTs exact={cpts_exact}, "
        f"forecast deviation {worst:.2e}",
    )


def test_criterion_03_expected_value_affine_in_alpha():
    # every one-step expectation is affine in each single mixing weight
    # (the joint is multilinear, so weights move one at a time)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        dnm = random_dnm(rng)
        window = random_window(rng, dnm)
        for v in range(dnm.n_vars):
            e0 = one_step_forecast(dnm.with_alpha(v, 0.0), window).expected
            e1 = one_step_forecast(dnm.with_alpha(v, 1.0), window).expected
            eh = one_step_forecast(dnm.with_alpha(v, 0.5), window).expected
            worst = max(worst, float(np.max(np.abs(eh - 0.5 * (e0 + e1)))))
    _report(3, worst < 1e-9, f"100 models, midpoint deviation {worst:.2e}")


def test_criterion_04_adaptation_closed_form():
    rng = np.random.default_rng(3)
    worst_gap = 0.0
    worst_tel = 0.0
    for _ in range(100):
        theta = float(rng.uniform(0.3, 0.99))
        n = int(rng.integers(1, 30))
        coeffs = [ResidualCoeffs(float(rng.normal()), float(rng.normal()))
                  for _ in range(n)]
        state = replay_residuals(coeffs, theta)
        grid = best_alpha_from_residuals(coeffs, theta, resolution=1001)
        worst_gap = max(worst_gap, abs(state.alpha[0] - grid))
        direct_ab = sum(theta ** (n - 1 - i) * c.a * c.b
                        for i, c in enumerate(coeffs))
        direct_b2 = sum(theta ** (n - 1 - i) * c.b ** 2
                        for i, c in enumerate(coeffs))
        scale = max(1.0, abs(direct_ab), abs(direct_b2))
        worst_tel = max(
            worst_tel,
            abs(state.ab_sum[0] - direct_ab) / scale,
            abs(state.b2_sum[0] - direct_b2) / scale,
        )
    _report(
        4,
        worst_gap <= 2e-3 and worst_tel < 1e-12,
        f"100 histories, grid gap {worst_gap:.2e}, "
        f"recursion drift {worst_tel:.2e}",
    )


def test_criterion_05_structure_recovery():
    truth = recovery_structure()
    hits = 0
    worst_dt = 0.0
    for seed in range(10):
        t0 = time.perf_counter()
        states = recovery_series(5000, seed=seed)
        records = build_windows(states, RECOVERY_CARDS, 1)
        learned = learn_structure(records, truth.variables)
        worst_dt = max(worst_dt, time.perf_counter() - t0)
        hits += int(
            learned.contemporaneous == truth.contemporaneous
            and learned.lagged == truth.lagged
        )
    _report(
        5,
        hits >= 9 and worst_dt < 30.0,
        f"{hits}/10 exact recoveries from 5000 samples, "
        f"worst run {worst_dt:.2f}s",
    )


def _two_lag_model():
    # x follows its lag-1 state, z follows its own lag-2 state
    tx = np.array([[0.8, 0.2], [0.35, 0.65]])
    tz = np.array([[0.7, 0.3], [0.1, 0.9]])
    uniform = np.full((1, 2), 0.5)
    structure = DnmStructure(
        variables=(Variable("x", 2), Variable("z", 2)),
        order=2,
        contemporaneous=((), ()),
        lagged=((LagRef(0, 1),), (LagRef(1, 2),)),
    )
    return Dnm(
        structure=structure,
        cpds=(
            ConvexCpd((), (2,), uniform, tx, alpha=1.0),
            ConvexCpd((), (2,), uniform, tz, alpha=1.0),
        ),
        marginals=(np.array([0.5, 0.5]), np.array([0.5, 0.5])),
        values=(np.arange(2.0), np.arange(2.0)),
    )


def test_criterion_06_markov_powers_and_structure_count():
    M = np.array([
        [0.7, 0.2, 0.1],
        [0.15, 0.6, 0.25],
        [0.05, 0.35, 0.6],
    ])
    dnm = single_var_chain_dnm(M, marginal=[0.4, 0.35, 0.25], alpha=1.0)
    worst = 0.0
    counts_ok = True
    for start in range(3):
        steps = k_step_forecast(dnm, [[start]], horizon=10)
        power = np.eye(3)
        for st in steps:
            power = power @ M
            worst = max(worst, float(np.max(np.abs(st.distributions[0] - power[start]))))
        counts_ok &= distinct_structures(steps) == 1
    two_lag = _two_lag_model()
    for k in range(1, 11):
        steps = k_step_forecast(two_lag, [[0, 1], [1, 0]], horizon=k)
        counts_ok &= distinct_structures(steps) == min(2, k)
    _report(
        6,
        worst < 1e-8 and counts_ok,
        f"k<=10 power deviation {worst:.2e}, distinct structures track "
        f"min(order, horizon)={counts_ok}",
    )


def test_criterion_07_adaptation_tracking_ratio():
    M = np.array([[0.85, 0.15], [0.2, 0.8]])
    marginal = np.array([0.5, 0.5])
    theta = 0.95
    worst_ratio = 0.0
    for seed in range(3):
        dnm = single_var_chain_dnm(M, marginal=marginal, alpha=0.5)
        states = mixture_series(M, marginal, 0.5, 501, seed=seed).reshape(-1, 1)
        state = AlphaState.fresh(1, discount=theta)
        result = rolling_forecast_evaluate(
            dnm, states, states.astype(float), origins=range(1, 501),
            horizon=1, update="dls", alpha_state=state,
        )
        rows = [r for r in result.audit_rows if r["status"] == "updated"]
        a = np.array([r["a"] for r in rows])
        b = np.array([r["b"] for r in rows])
        used = np.array([r["alpha_before"] for r in rows])
        w = theta ** np.arange(len(rows) - 1, -1, -1)
        adaptive = float(np.sum(w * (a + b * used) ** 2))
        best_fixed = min(
            float(np.sum(w * (a + b * g) ** 2)) for g in np.linspace(0, 1, 11)
        )
        worst_ratio = max(worst_ratio, adaptive / best_fixed)
    _report(
        7,
        worst_ratio <= 1.10,
        f"500 origins x 3 seeds, worst discounted-error ratio "
        f"{worst_ratio:.4f} vs best fixed weight",
    )


def test_criterion_08_metric_definitions():
    m = prediction_metrics([100.0, 200.0], [90.0, 220.0])
    exact = m.mpe == 0.0 and abs(m.mape - 0.1) < 1e-15
    rng = np.random.default_rng(4)
    bound = True
    for _ in range(300):
        n = int(rng.integers(1, 40))
        observed = rng.normal(size=n)
        observed[observed == 0] = 1.0
        predicted = observed + rng.normal(scale=0.7, size=n)
        s = prediction_metrics(observed, predicted)
        bound &= s.mape >= abs(s.mpe) - 1e-15
    _report(
        8,
        exact and bound,
        f"hand example MPE={m.mpe} MAPE={m.mape}; "
        f"MAPE>=|MPE| on 300 fuzzed inputs={bound}",
    )


def test_criterion_09_four_channel_replication():
    t0 = time.perf_counter()
    raw = generate_apnea_like(2000, seed=42)
    train_end = 1600
    structure = apnea_structure()
    cards = tuple(v.cardinality for v in structure.variables)
    states = np.zeros(raw.shape, dtype=np.int64)
    values = []
    for j, name in enumerate(APNEA_COLUMNS):
        col = raw[:, j]
        if name == "REM":
            states[:, j] = col.astype(np.int64)
            values.append(np.arange(2, dtype=float))
        else:
            spec = fit_bins(col[:train_end], 7)
            states[:, j] = apply_bins(spec, col)
            values.append(spec.representative)
    records = build_windows(states[:train_end], cards, structure.order)
    dnm = estimate_cpds(structure, records, smoothing=1.0, values=values)
    result = rolling_forecast_evaluate(
        dnm, states, raw, origins=range(train_end, 2000), horizon=1,
        update="dls", seed=0,
    )
    dt = time.perf_counter() - t0

    drift = max(
        abs(sum(probs) - 1.0) for (_, _, _, _, probs) in result.forecast_rows
    )
    step1 = {
        name: result.report["variables"][name]["per_step"][0]
        for name in APNEA_COLUMNS
    }
    mapes = {n: step1[n]["mape"] for n in ("HR", "CV", "SaO2")}
    fast_worst = mapes["CV"] > mapes["HR"] and mapes["CV"] > mapes["SaO2"]
    slow_unbiased = (
        abs(step1["HR"]["mpe"]) <= 0.05 and abs(step1["SaO2"]["mpe"]) <= 0.05
    )
    _report(
        9,
        drift < 1e-9 and fast_worst and slow_unbiased and dt < 300.0,
        f"400 origins in {dt:.1f}s; dist drift {drift:.1e}; "
        f"MAPE CV {mapes['CV']:.3f} > HR {mapes['HR']:.3f}, "
        f"SaO2 {mapes['SaO2']:.3f}; HR MPE {step1['HR']['mpe']:+.4f}, "
        f"SaO2 MPE {step1['SaO2']['mpe']:+.4f}",
    )


def test_criterion_10_persistence_sanity():
    dnm = persistence_dnm(3, values=[4.0, 8.0, 12.0])
    states = np.full((60, 1), 1, dtype=np.int64)
    raw = np.full((60, 1), 8.0)
    result = rolling_forecast_evaluate(
        dnm, states, raw, origins=range(1, 50), horizon=10, update="off"
    )
    per_step = result.report["variables"]["x"]["per_step"]
    worst = max(max(abs(e["mpe"]), abs(e["mape"])) for e in per_step)
    _report(
        10,
        len(per_step) == 10 and worst == 0.0,
        f"horizons 1..10 on a constant series, worst error {worst}",
    )
