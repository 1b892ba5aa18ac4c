"""Estimator-style wrappers around the functional core.

``QuantileDiscretizer`` is a transformer (continuous matrix in, state
matrix out); ``DnmForecaster`` bundles discretization, structure
learning, parameter fitting, forecasting, and online adaptation behind
a fit/predict interface. Both follow scikit-learn conventions: plain
``__init__`` assignment, fitted attributes with trailing underscores,
``get_params``/``set_params`` from ``BaseEstimator``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .adapt import AlphaState, residual_coefficients, update_alpha
from .errors import ValidationError
from .forecast import k_step_forecast
from .learn import build_windows, estimate_cpds, learn_structure
from .network import Variable
from .preprocess import MISSING_STATE, LabelMap, apply_bins, fit_bins


def _as_float_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValidationError(f"{name} is empty")
    return X


class QuantileDiscretizer(BaseEstimator, TransformerMixin):
    """Per-column equal-frequency binning with missing-value passthrough.

    fit learns interior cut points at the j/n_bins empirical quantiles
    of each column; transform maps values to integer states (-1 for
    NaN); inverse_transform maps states back to each bin's mean training
    value.

    Parameters
    ----------
    n_bins : int, default 7
        Requested states per column. Ties in the training data can
        reduce the effective count (a warning is issued).
    """

    def __init__(self, n_bins: int = 7):
        self.n_bins = n_bins

    def fit(self, X, y=None):
        X = _as_float_matrix(X)
        self.bin_specs_ = [fit_bins(X[:, j], self.n_bins) for j in range(X.shape[1])]
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "bin_specs_"):
            raise NotFittedError(
                f"this {type(self).__name__} instance is not fitted yet"
            )

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = _as_float_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"X has {X.shape[1]} columns, fitted on {self.n_features_in_}"
            )
        out = np.empty(X.shape, dtype=np.int64)
        for j, spec in enumerate(self.bin_specs_):
            out[:, j] = apply_bins(spec, X[:, j])
        return out

    def inverse_transform(self, states) -> np.ndarray:
        self._check_fitted()
        states = np.asarray(states, dtype=np.int64)
        if states.ndim != 2 or states.shape[1] != self.n_features_in_:
            raise ValidationError("states shape does not match fitted columns")
        out = np.full(states.shape, np.nan)
        for j, spec in enumerate(self.bin_specs_):
            ok = states[:, j] != MISSING_STATE
            out[ok, j] = spec.representative[states[ok, j]]
        return out


class DnmForecaster(BaseEstimator):
    """Multivariate forecaster over a learned dynamic network model.

    fit discretizes each column, learns the temporal structure by
    greedy Bayesian-score search, and fits both conditional tables per
    variable. predict rolls the model forward from the most recent
    window of a supplied (or the training) series. update performs one
    online adaptation step of the mixing weights.

    Parameters
    ----------
    order : int, default 1
        Maximum lag of the learned dependencies.
    n_bins : int, default 7
        States per continuous column.
    max_parents : int, default 4
        Parent budget per variable during structure search.
    smoothing : float, default 1.0
        Additive count smoothing for the conditional tables.
    discount : float, default 0.65
        Exponential discount of past errors during adaptation.
    ordering : sequence of int, optional
        Variable order constraining same-slice arcs (parents precede
        children). Defaults to column order.
    categorical : sequence of int, optional
        Column indices holding nonnegative integer category codes;
        these skip binning.
    inference : {"exact", "approx"}, default "exact"
    n_samples : int, default 5000
        Sample count for approximate inference.
    random_state : int, optional
        Seed for approximate inference.
    """

    def __init__(
        self,
        order: int = 1,
        n_bins: int = 7,
        max_parents: int = 4,
        smoothing: float = 1.0,
        discount: float = 0.65,
        ordering=None,
        categorical=None,
        inference: str = "exact",
        n_samples: int = 5000,
        random_state=None,
    ):
        self.order = order
        self.n_bins = n_bins
        self.max_parents = max_parents
        self.smoothing = smoothing
        self.discount = discount
        self.ordering = ordering
        self.categorical = categorical
        self.inference = inference
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None, feature_names=None):
        X = _as_float_matrix(X)
        n_vars = X.shape[1]
        cat = set(self.categorical or ())
        bad = [j for j in cat if not 0 <= j < n_vars]
        if bad:
            raise ValidationError(f"categorical indices {bad} out of range")
        names = list(feature_names) if feature_names else [
            f"x{j}" for j in range(n_vars)
        ]
        if len(names) != n_vars:
            raise ValidationError(
                f"{len(names)} feature names for {n_vars} columns"
            )
        states = np.full(X.shape, MISSING_STATE, dtype=np.int64)
        codecs, variables, values = [], [], []
        for j in range(n_vars):
            col = X[:, j]
            if j in cat:
                seen = col[~np.isnan(col)]
                if seen.size == 0:
                    raise ValidationError(f"column {names[j]} has no observed values")
                if np.any(seen < 0) or np.any(seen != np.floor(seen)):
                    raise ValidationError(
                        f"categorical column {names[j]} must hold nonnegative integers"
                    )
                card = int(seen.max()) + 1
                ok = ~np.isnan(col)
                states[ok, j] = col[ok].astype(np.int64)
                codecs.append(LabelMap([str(s) for s in range(card)]))
                variables.append(Variable(names[j], card, "categorical"))
                values.append(np.arange(card, dtype=float))
            else:
                spec = fit_bins(col, self.n_bins)
                states[:, j] = apply_bins(spec, col)
                codecs.append(spec)
                variables.append(Variable(names[j], spec.n_bins, "continuous"))
                values.append(spec.representative.copy())
        cards = [v.cardinality for v in variables]
        records = build_windows(states, cards, self.order)
        structure = learn_structure(
            records, variables,
            ordering=list(self.ordering) if self.ordering is not None else None,
            max_parents=self.max_parents,
        )
        self.model_ = estimate_cpds(
            structure, records, smoothing=self.smoothing, values=values
        )
        self.codecs_ = codecs
        self.alpha_state_ = AlphaState.fresh(n_vars, discount=self.discount)
        self.feature_names_in_ = names
        self.n_features_in_ = n_vars
        self._train_states = states
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                f"this {type(self).__name__} instance is not fitted yet"
            )

    def _encode_window(self, X):
        lag = self.model_.structure.max_lag()
        if X is None:
            states = self._train_states[-lag:]
        else:
            X = _as_float_matrix(X)
            if X.shape[1] != self.n_features_in_:
                raise ValidationError(
                    f"X has {X.shape[1]} columns, fitted on {self.n_features_in_}"
                )
            if X.shape[0] < lag:
                raise ValidationError(
                    f"window needs at least {lag} rows, got {X.shape[0]}"
                )
            rows = X[-lag:]
            states = np.full(rows.shape, MISSING_STATE, dtype=np.int64)
            cat = set(self.categorical or ())
            for j in range(self.n_features_in_):
                col = rows[:, j]
                if j in cat:
                    ok = ~np.isnan(col)
                    states[ok, j] = col[ok].astype(np.int64)
                else:
                    states[:, j] = apply_bins(self.codecs_[j], col)
        return [list(row) for row in states]

    def _forecast(self, X, horizon):
        window = self._encode_window(X)
        model = self.model_.with_alphas(self.alpha_state_.alpha)
        return k_step_forecast(
            model, window, horizon,
            inference=self.inference, n_samples=self.n_samples,
            seed=self.random_state,
        )

    def predict(self, X=None, horizon: int = 1) -> np.ndarray:
        """Expected values, shape (horizon, n_features).

        ``X`` supplies the most recent raw rows (at least the model
        order); None forecasts past the end of the training series.
        """
        self._check_fitted()
        steps = self._forecast(X, horizon)
        return np.vstack([s.expected for s in steps])

    def predict_proba(self, X=None, horizon: int = 1) -> list:
        """Per-step, per-variable state distributions."""
        self._check_fitted()
        steps = self._forecast(X, horizon)
        return [[d.copy() for d in s.distributions] for s in steps]

    def update(self, X, y) -> "DnmForecaster":
        """One adaptation step: window ``X``, realized next row ``y``."""
        self._check_fitted()
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != self.n_features_in_:
            raise ValidationError(
                f"y has {y.shape[0]} values, expected {self.n_features_in_}"
            )
        window = self._encode_window(X)
        model = self.model_.with_alphas(self.alpha_state_.alpha)
        for v in range(self.n_features_in_):
            if np.isnan(y[v]):
                continue
            coeffs = residual_coefficients(
                model, v, window, y[v],
                inference=self.inference, n_samples=self.n_samples,
                seed=self.random_state,
            )
            self.alpha_state_ = update_alpha(self.alpha_state_, v, coeffs)
        return self
