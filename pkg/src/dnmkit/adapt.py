"""Online adaptation of the convex mixing weights.

For each variable the one-step forecast error is an affine function of
that variable's own mixing weight alpha when the window is fully
observed: err(alpha) = a + b * alpha, where

    a = expected value at alpha = 0, minus the realized value
    b = expected value at alpha = 1, minus the expected value at alpha = 0.

Minimizing the discounted error sum  sum_i theta**(t-i) * err_i(alpha)**2
over the history gives a closed form: with running sums
A = sum theta**(t-i) a_i b_i and B = sum theta**(t-i) b_i**2, the optimum
is alpha* = -A / B, clamped to [0, 1]. The sums update recursively,
A <- theta * A + a b and B <- theta * B + b**2, so adaptation is O(1)
per step per variable.

``grid_search_alpha`` is the fallback when the affine form does not hold
(missing values in the window): it scores a grid of alphas by direct
forecasting over a short history.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import MissingHistoryError
from .forecast import one_step_forecast
from .inference import approximate_posterior, exact_posterior
from .model import MISSING, Dnm, build_forecast_network

DEFAULT_DISCOUNT = 0.65
_B_FLOOR = 1e-12


class ResidualCoeffs(NamedTuple):
    """Affine forecast-error coefficients err(alpha) = a + b * alpha."""

    a: float
    b: float


@dataclass
class AlphaState:
    """Per-variable discounted sums and current mixing weights."""

    ab_sum: np.ndarray
    b2_sum: np.ndarray
    alpha: np.ndarray
    discount: float = DEFAULT_DISCOUNT

    @classmethod
    def fresh(cls, n_vars: int, discount: float = DEFAULT_DISCOUNT, alpha0: float = 0.5):
        return cls(
            ab_sum=np.zeros(n_vars),
            b2_sum=np.zeros(n_vars),
            alpha=np.full(n_vars, float(alpha0)),
            discount=float(discount),
        )

    def copy(self) -> "AlphaState":
        return AlphaState(
            self.ab_sum.copy(), self.b2_sum.copy(), self.alpha.copy(), self.discount
        )


def _check_observed(window):
    for sl, slice_ in enumerate(window):
        for v, cell in enumerate(slice_):
            if not isinstance(cell, (int, np.integer)) or cell == MISSING:
                raise MissingHistoryError(
                    f"window slice {sl} variable {v} is not an observed state; "
                    "the affine error form needs a fully observed window "
                    "(use grid_search_alpha instead)"
                )


def residual_coefficients(
    dnm: Dnm,
    var: int,
    window,
    realized: float,
    inference: str = "exact",
    n_samples: int = 5000,
    seed=None,
) -> ResidualCoeffs:
    """Coefficients of the affine error in variable ``var``'s alpha.

    Evaluates the one-step expected value at alpha = 0 and alpha = 1
    (other variables keep their current alphas); ``realized`` is the
    observed value the forecast is judged against. The window must be
    fully observed or ``MissingHistoryError`` is raised.
    """
    _check_observed(window)
    e0 = _leading_expectation(
        dnm.with_alpha(var, 0.0), var, window, inference, n_samples, seed
    )
    e1 = _leading_expectation(
        dnm.with_alpha(var, 1.0), var, window, inference, n_samples, seed
    )
    return ResidualCoeffs(a=e0 - float(realized), b=e1 - e0)


def _leading_expectation(dnm, var, window, inference, n_samples, seed):
    # Query just the one leading node; the full forecast would eliminate
    # once per variable.
    un = build_forecast_network(dnm, window)
    node = un.leading_slice * dnm.n_vars + var
    if inference == "exact":
        dist = exact_posterior(un.network, [node], un.evidence)[0]
    else:
        dist = approximate_posterior(
            un.network, [node], un.evidence, n_samples=n_samples, seed=seed
        )[0]
    return float(dist @ dnm.values[var])


def update_alpha(state: AlphaState, var: int, coeffs: ResidualCoeffs) -> AlphaState:
    """Fold one step's coefficients into the sums; return the new state.

    When the discounted b**2 sum is effectively zero the two CPTs agree
    on this history and alpha is left unchanged.
    """
    new = state.copy()
    new.ab_sum[var] = state.discount * state.ab_sum[var] + coeffs.a * coeffs.b
    new.b2_sum[var] = state.discount * state.b2_sum[var] + coeffs.b ** 2
    if new.b2_sum[var] > _B_FLOOR:
        new.alpha[var] = min(1.0, max(0.0, -new.ab_sum[var] / new.b2_sum[var]))
    return new


def residual_objective(history, alpha: float, discount: float) -> float:
    """Discounted squared-error sum of an affine residual history.

    ``history`` is a sequence of ResidualCoeffs, oldest first; the most
    recent term carries weight 1, earlier terms decay by ``discount``.
    """
    t_last = len(history) - 1
    return float(
        sum(
            discount ** (t_last - i) * (c.a + c.b * alpha) ** 2
            for i, c in enumerate(history)
        )
    )


def best_alpha_from_residuals(
    history, discount: float, resolution: int = 1001
) -> float:
    """Grid minimizer of ``residual_objective`` over [0, 1].

    Reference implementation for checking the closed form; ties resolve
    toward the smaller alpha.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    scores = [residual_objective(history, a, discount) for a in grid]
    return float(grid[int(np.argmin(scores))])


def replay_residuals(history, discount: float, alpha0: float = 0.5) -> AlphaState:
    """Run the recursive update over a recorded coefficient history."""
    state = AlphaState.fresh(1, discount=discount, alpha0=alpha0)
    for coeffs in history:
        state = update_alpha(state, 0, coeffs)
    return state


def grid_search_alpha(
    dnm: Dnm,
    var: int,
    history,
    discount: float = DEFAULT_DISCOUNT,
    resolution: int = 11,
    inference: str = "exact",
    n_samples: int = 5000,
    seed=None,
) -> float:
    """Pick alpha for ``var`` by direct search over a uniform grid.

    ``history`` is a sequence of (window, realized_value) pairs, oldest
    first; each window may contain missing cells. Scores each grid alpha
    by the discounted sum of squared one-step errors and returns the
    best, ties resolved toward the smaller alpha.
    """
    if not history:
        raise MissingHistoryError("empty history")
    grid = np.linspace(0.0, 1.0, resolution)
    scores = np.zeros(resolution)
    t_last = len(history) - 1
    for g, alpha in enumerate(grid):
        model = dnm.with_alpha(var, float(alpha))
        total = 0.0
        for t, (window, realized) in enumerate(history):
            step = one_step_forecast(
                model, window, inference=inference, n_samples=n_samples, seed=seed
            )
            err = step.expected[var] - float(realized)
            total += discount ** (t_last - t) * err * err
        scores[g] = total
    return float(grid[int(np.argmin(scores))])
