"""Rolling-origin forecast evaluation with optional online adaptation.

For each origin t the current model forecasts the next ``horizon``
steps. With adaptation on, the realized values at t then update each
variable's mixing weight before the next origin. Metrics compare
expected values against the raw observed series, per variable and per
horizon step: relative-error summaries for continuous channels, modal
accuracy for categorical ones.
"""

from dataclasses import dataclass, field

import numpy as np

from .adapt import AlphaState, residual_coefficients, update_alpha
from .errors import MissingHistoryError, ValidationError
from .forecast import k_step_forecast
from .metrics import prediction_metrics
from .model import MISSING, Dnm


@dataclass
class EvaluationResult:
    """Everything a rolling run produces.

    ``forecast_rows`` holds (origin, step, variable name, expected,
    probability list); ``audit_rows`` holds one adaptation record per
    (origin, variable). ``report`` is the JSON-ready metrics document.
    """

    report: dict
    forecast_rows: list = field(default_factory=list)
    audit_rows: list = field(default_factory=list)
    alpha_state: AlphaState = None


def rolling_forecast_evaluate(
    dnm: Dnm,
    states: np.ndarray,
    raw: np.ndarray,
    origins,
    horizon: int = 1,
    update: str = "dls",
    alpha_state: AlphaState = None,
    inference: str = "exact",
    n_samples: int = 5000,
    seed=None,
) -> EvaluationResult:
    """Run the rolling forecast loop.

    ``states`` is the discretized series (-1 missing), ``raw`` the
    original values (NaN missing; for categorical columns the state
    index as float). Origin t forecasts rows t .. t+horizon-1 from the
    window rows t-l .. t-1. ``update`` is "dls" or "off".
    """
    if update not in ("dls", "off"):
        raise ValidationError(f"update must be 'dls' or 'off', got {update!r}")
    states = np.asarray(states, dtype=np.int64)
    raw = np.asarray(raw, dtype=float)
    if states.shape != raw.shape or states.ndim != 2:
        raise ValidationError("states and raw must be equal-shape 2-D arrays")
    n_steps, n_vars = states.shape
    if n_vars != dnm.n_vars:
        raise ValidationError(
            f"series has {n_vars} variables, model has {dnm.n_vars}"
        )
    lag = dnm.structure.max_lag()
    origins = list(origins)
    if not origins:
        raise ValidationError("no origins to evaluate")
    if min(origins) < lag:
        raise ValidationError(
            f"origin {min(origins)} needs {lag} history rows before it"
        )
    if max(origins) > n_steps:
        raise ValidationError(
            f"origin {max(origins)} is past the end of the series ({n_steps} rows)"
        )
    if alpha_state is None:
        alpha_state = AlphaState.fresh(n_vars)
        alpha_state.alpha = dnm.alphas()
    else:
        alpha_state = alpha_state.copy()
    names = [v.name for v in dnm.structure.variables]
    kinds = [v.kind for v in dnm.structure.variables]
    model = dnm.with_alphas(alpha_state.alpha)
    forecast_rows = []
    audit_rows = []
    # pairs[(step, var)] collects (origin, observed_raw, expected, dist)
    pairs = {}
    for t in origins:
        window = [list(states[t - lag + i]) for i in range(lag)]
        run_seed = None if seed is None else seed + t
        steps = k_step_forecast(
            model, window, horizon,
            inference=inference, n_samples=n_samples, seed=run_seed,
        )
        for st in steps:
            row_t = t + st.step - 1
            for v in range(n_vars):
                forecast_rows.append(
                    (t, st.step, names[v], float(st.expected[v]),
                     st.distributions[v].tolist())
                )
                if row_t < n_steps:
                    pairs.setdefault((st.step, v), []).append(
                        (t, raw[row_t, v], states[row_t, v], float(st.expected[v]),
                         st.distributions[v])
                    )
        if update == "off":
            for v in range(n_vars):
                audit_rows.append(
                    {
                        "t": t, "variable": names[v], "a": None, "b": None,
                        "alpha_before": float(alpha_state.alpha[v]),
                        "alpha_after": float(alpha_state.alpha[v]),
                        "status": "off",
                    }
                )
            continue
        for v in range(n_vars):
            before = float(alpha_state.alpha[v])
            if t >= n_steps or np.isnan(raw[t, v]):
                audit_rows.append(
                    {
                        "t": t, "variable": names[v], "a": None, "b": None,
                        "alpha_before": before, "alpha_after": before,
                        "status": "skipped: observation missing",
                    }
                )
                continue
            try:
                coeffs = residual_coefficients(
                    model, v, window, raw[t, v],
                    inference=inference, n_samples=n_samples, seed=run_seed,
                )
            except MissingHistoryError:
                audit_rows.append(
                    {
                        "t": t, "variable": names[v], "a": None, "b": None,
                        "alpha_before": before, "alpha_after": before,
                        "status": "skipped: window incomplete",
                    }
                )
                continue
            alpha_state = update_alpha(alpha_state, v, coeffs)
            audit_rows.append(
                {
                    "t": t, "variable": names[v],
                    "a": coeffs.a, "b": coeffs.b,
                    "alpha_before": before,
                    "alpha_after": float(alpha_state.alpha[v]),
                    "status": "updated",
                }
            )
        model = model.with_alphas(alpha_state.alpha)
    report = _build_report(pairs, names, kinds, horizon, update, origins)
    return EvaluationResult(report, forecast_rows, audit_rows, alpha_state)


def _build_report(pairs, names, kinds, horizon, update, origins):
    variables = {}
    for v, name in enumerate(names):
        per_step = []
        for step in range(1, horizon + 1):
            rows = pairs.get((step, v), [])
            entry = {"step": step, "n_evaluated": len(rows)}
            if kinds[v] == "categorical":
                scored = [
                    (obs_state, dist)
                    for (_, _, obs_state, _, dist) in rows
                    if obs_state != MISSING
                ]
                entry["n_scored"] = len(scored)
                entry["accuracy"] = (
                    sum(int(np.argmax(d)) == s for s, d in scored) / len(scored)
                    if scored else None
                )
            else:
                obs = np.array([o for (_, o, _, _, _) in rows])
                exp = np.array([e for (_, _, _, e, _) in rows])
                seen = ~np.isnan(obs)
                entry["n_scored"] = int(seen.sum())
                if seen.any() and (obs[seen] != 0).any():
                    m = prediction_metrics(obs[seen], exp[seen])
                    entry.update(
                        mpe=m.mpe, mape=m.mape,
                        ppe=m.pe.tolist(), skipped_zeros=m.skipped_zeros,
                    )
                else:
                    entry.update(mpe=None, mape=None, ppe=[], skipped_zeros=0)
            per_step.append(entry)
        variables[name] = {"kind": kinds[v], "per_step": per_step}
    return {
        "origins": [int(min(origins)), int(max(origins))],
        "n_origins": len(origins),
        "horizon": horizon,
        "update": update,
        "variables": variables,
    }
