import numpy as np
import pytest

from dnmkit import (
    AlphaState,
    MISSING,
    MissingHistoryError,
    ResidualCoeffs,
    best_alpha_from_residuals,
    grid_search_alpha,
    one_step_forecast,
    replay_residuals,
    residual_coefficients,
    residual_objective,
    update_alpha,
)
from dnmkit.synthetic import random_dnm, random_window, single_var_chain_dnm


def test_update_alpha_single_step_interior():
    # err(alpha) = -0.4 + 0.8 alpha minimized at 0.5
    state = AlphaState.fresh(1)
    state = update_alpha(state, 0, ResidualCoeffs(-0.4, 0.8))
    assert state.alpha[0] == pytest.approx(0.5)


def test_update_alpha_clamps_both_ends():
    lo = update_alpha(AlphaState.fresh(1), 0, ResidualCoeffs(0.3, 0.5))
    hi = update_alpha(AlphaState.fresh(1), 0, ResidualCoeffs(-0.9, 0.6))
    assert lo.alpha[0] == 0.0
    assert hi.alpha[0] == 1.0


def test_update_alpha_two_steps_discounted():
    # theta=0.5: A = 0.5*(-0.4) + 0.2*0.4 = -0.12, B = 0.5*1 + 0.16 = 0.66
    state = AlphaState.fresh(1, discount=0.5)
    state = update_alpha(state, 0, ResidualCoeffs(-0.4, 1.0))
    state = update_alpha(state, 0, ResidualCoeffs(0.2, 0.4))
    assert state.ab_sum[0] == pytest.approx(-0.12)
    assert state.b2_sum[0] == pytest.approx(0.66)
    assert state.alpha[0] == pytest.approx(0.12 / 0.66)


def test_update_alpha_keeps_alpha_when_b_vanishes():
    state = AlphaState.fresh(1, alpha0=0.5)
    for _ in range(5):
        state = update_alpha(state, 0, ResidualCoeffs(0.7, 0.0))
    assert state.alpha[0] == 0.5


def test_update_alpha_is_functional():
    state = AlphaState.fresh(2)
    out = update_alpha(state, 1, ResidualCoeffs(-0.2, 0.4))
    assert state.ab_sum[1] == 0.0
    assert out.ab_sum[1] != 0.0
    assert out.ab_sum[0] == 0.0


def test_telescoping_identity():
    # the recursion reproduces the explicit discounted sums
    rng = np.random.default_rng(17)
    for _ in range(50):
        theta = float(rng.uniform(0.3, 0.99))
        n = int(rng.integers(1, 40))
        coeffs = [
            ResidualCoeffs(float(rng.normal()), float(rng.normal())) for _ in range(n)
        ]
        state = replay_residuals(coeffs, theta)
        direct_ab = sum(
            theta ** (n - 1 - i) * c.a * c.b for i, c in enumerate(coeffs)
        )
        direct_b2 = sum(
            theta ** (n - 1 - i) * c.b ** 2 for i, c in enumerate(coeffs)
        )
        assert abs(state.ab_sum[0] - direct_ab) < 1e-12 * max(1.0, abs(direct_ab))
        assert abs(state.b2_sum[0] - direct_b2) < 1e-12 * max(1.0, abs(direct_b2))


def test_closed_form_matches_objective_grid():
    rng = np.random.default_rng(23)
    for _ in range(50):
        theta = float(rng.uniform(0.4, 0.95))
        n = int(rng.integers(2, 30))
        coeffs = [
            ResidualCoeffs(float(rng.normal()), float(rng.normal())) for _ in range(n)
        ]
        closed = replay_residuals(coeffs, theta).alpha[0]
        grid = best_alpha_from_residuals(coeffs, theta, resolution=1001)
        assert abs(closed - grid) <= 2e-3


def test_residual_objective_quadratic_shape():
    coeffs = [ResidualCoeffs(-0.4, 0.8)]
    at0 = residual_objective(coeffs, 0.0, 0.9)
    at_half = residual_objective(coeffs, 0.5, 0.9)
    at1 = residual_objective(coeffs, 1.0, 0.9)
    assert at0 == pytest.approx(0.16)
    assert at_half == pytest.approx(0.0)
    assert at1 == pytest.approx(0.16)


def test_residual_coefficients_predict_any_alpha():
    # the one-step expected value really is affine: z(alpha) = realized + a + b alpha
    rng = np.random.default_rng(31)
    for _ in range(15):
        dnm = random_dnm(rng)
        window = random_window(rng, dnm)
        var = int(rng.integers(0, dnm.n_vars))
        realized = float(rng.normal())
        coeffs = residual_coefficients(dnm, var, window, realized)
        for alpha in (0.0, 0.25, 0.6, 1.0):
            got = one_step_forecast(dnm.with_alpha(var, alpha), window).expected[var]
            assert got - realized == pytest.approx(
                coeffs.a + coeffs.b * alpha, abs=1e-9
            )


def test_residual_coefficients_reject_missing_window():
    dnm = single_var_chain_dnm(np.array([[0.8, 0.2], [0.3, 0.7]]))
    with pytest.raises(MissingHistoryError, match="grid_search_alpha"):
        residual_coefficients(dnm, 0, [[MISSING]], realized=1.0)
    with pytest.raises(MissingHistoryError):
        residual_coefficients(dnm, 0, [[np.array([0.5, 0.5])]], realized=1.0)


def test_grid_search_matches_closed_form_when_observable():
    M = np.array([[0.9, 0.1], [0.2, 0.8]])
    dnm = single_var_chain_dnm(M, marginal=[0.6, 0.4], alpha=0.5)
    rng = np.random.default_rng(3)
    history = [([[int(rng.integers(0, 2))]], float(rng.random())) for _ in range(6)]
    theta = 0.8
    coeffs = [
        residual_coefficients(dnm, 0, window, realized)
        for window, realized in history
    ]
    closed = replay_residuals(coeffs, theta).alpha[0]
    searched = grid_search_alpha(dnm, 0, history, discount=theta, resolution=101)
    assert abs(closed - searched) <= 1.0 / 100 + 1e-9


def test_grid_search_handles_missing_history():
    M = np.array([[0.9, 0.1], [0.2, 0.8]])
    dnm = single_var_chain_dnm(M, marginal=[0.6, 0.4])
    history = [([[MISSING]], 0.3), ([[1]], 0.8)]
    alpha = grid_search_alpha(dnm, 0, history, resolution=11)
    assert 0.0 <= alpha <= 1.0


def test_grid_search_tie_prefers_smaller_alpha():
    # identical tables on both sides: every alpha scores the same
    M = np.array([[0.5, 0.5], [0.5, 0.5]])
    dnm = single_var_chain_dnm(M, marginal=[0.5, 0.5])
    alpha = grid_search_alpha(dnm, 0, [([[0]], 0.4)], resolution=11)
    assert alpha == 0.0


def test_grid_search_empty_history_errors():
    dnm = single_var_chain_dnm(np.eye(2))
    with pytest.raises(MissingHistoryError):
        grid_search_alpha(dnm, 0, [])
