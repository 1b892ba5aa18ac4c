"""One-step and multi-step forecasting over a dynamic model.

Multi-step forecasts slide the window forward one slice at a time.
Positions the model has already predicted enter the next window as root
priors carrying the predicted posterior marginals, which drops any
dependence between them; observed cells stay hard evidence. The number
of structurally distinct unrolled networks over a k-step run is
min(window length, k) for the usual fully-specified models, and the
forecaster deduplicates by structural signature to report it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .inference import approximate_posterior, exact_posterior
from .model import MISSING, Dnm, build_forecast_network, leading_nodes


@dataclass
class ForecastStep:
    """Predicted leading-slice marginals for one step ahead.

    ``structure_id`` indexes into the run's distinct network shapes;
    consecutive steps sharing a shape share the id.
    """

    step: int
    distributions: list[np.ndarray]
    expected: np.ndarray
    structure_id: int


def expected_value(dist, values) -> float:
    dist = np.asarray(dist, dtype=float)
    values = np.asarray(values, dtype=float)
    if dist.shape != values.shape:
        raise ValidationError(
            f"distribution over {dist.shape[0]} states, {values.shape[0]} values"
        )
    return float(dist @ values)


def _posteriors(un, query, inference, n_samples, seed):
    if inference == "exact":
        return exact_posterior(un.network, query, un.evidence)
    if inference == "approx":
        return approximate_posterior(
            un.network, query, un.evidence, n_samples=n_samples, seed=seed
        )
    raise ValidationError(f"unknown inference method {inference!r}")


def one_step_forecast(
    dnm: Dnm,
    window,
    inference: str = "exact",
    n_samples: int = 5000,
    seed=None,
) -> ForecastStep:
    """Predict the slice following ``window``.

    ``window`` is ``structure.max_lag()`` slices, oldest first; each cell
    an int state, ``MISSING``, or a prior distribution.
    """
    steps = k_step_forecast(
        dnm, window, 1, inference=inference, n_samples=n_samples, seed=seed
    )
    return steps[0]


def k_step_forecast(
    dnm: Dnm,
    window,
    horizon: int,
    inference: str = "exact",
    n_samples: int = 5000,
    seed=None,
) -> list[ForecastStep]:
    """Forecast ``horizon`` consecutive slices.

    After each step the window advances: the oldest slice drops, the
    just-predicted marginals join as priors, and any still-missing cells
    in the remaining observed slices are replaced by their posterior
    marginals from the step that computed them.
    """
    if horizon < 1:
        raise ValidationError(f"horizon {horizon} < 1")
    n = dnm.n_vars
    window = [list(slice_) for slice_ in window]
    signatures = {}
    steps = []
    for step in range(1, horizon + 1):
        un = build_forecast_network(dnm, window)
        sid = signatures.setdefault(un.signature, len(signatures))
        step_seed = None if seed is None else seed + step
        missing = [
            (sl, v)
            for sl in range(len(window))
            for v in range(n)
            if isinstance(window[sl][v], (int, np.integer)) and window[sl][v] == MISSING
        ]
        query = leading_nodes(un, n) + [sl * n + v for sl, v in missing]
        posts = _posteriors(un, query, inference, n_samples, step_seed)
        dists = posts[:n]
        expected = np.array(
            [expected_value(d, dnm.values[v]) for v, d in enumerate(dists)]
        )
        steps.append(ForecastStep(step, dists, expected, sid))
        if step == horizon:
            break
        # Fill remaining missing history with its inferred marginals so
        # later windows never carry unexplained gaps.
        for (sl, v), d in zip(missing, posts[n:]):
            window[sl][v] = d
        window = window[1:] + [list(dists)]
    return steps


def distinct_structures(steps) -> int:
    return len({s.structure_id for s in steps})
