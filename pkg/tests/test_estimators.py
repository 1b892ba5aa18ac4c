import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dnmkit import DnmForecaster, QuantileDiscretizer, ValidationError
from dnmkit.synthetic import markov_series, recovery_series


def test_discretizer_fit_transform_round_trip():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 2)) * [1.0, 10.0]
    disc = QuantileDiscretizer(n_bins=5).fit(X)
    states = disc.transform(X)
    assert states.shape == X.shape
    assert states.min() >= 0 and states.max() <= 4
    back = disc.inverse_transform(states)
    # representatives sit inside their bins, so re-encoding is stable
    assert np.array_equal(disc.transform(back), states)


def test_discretizer_handles_missing():
    X = np.array([[1.0], [2.0], [np.nan], [4.0]])
    disc = QuantileDiscretizer(n_bins=2).fit(X)
    states = disc.transform(X)
    assert states[2, 0] == -1
    back = disc.inverse_transform(states)
    assert np.isnan(back[2, 0])


def test_discretizer_not_fitted():
    with pytest.raises(NotFittedError):
        QuantileDiscretizer().transform(np.zeros((3, 1)))


def test_discretizer_column_mismatch():
    disc = QuantileDiscretizer(n_bins=2).fit(np.zeros((10, 2)) + np.arange(10)[:, None])
    with pytest.raises(ValidationError):
        disc.transform(np.zeros((3, 3)))


def test_discretizer_sklearn_protocol():
    disc = QuantileDiscretizer(n_bins=4)
    assert disc.get_params() == {"n_bins": 4}
    cloned = clone(disc)
    assert cloned.get_params() == {"n_bins": 4}
    assert not hasattr(cloned, "bin_specs_")


def training_matrix(n=400, seed=0):
    rng = np.random.default_rng(seed)
    z = markov_series(np.array([[0.9, 0.1], [0.2, 0.8]]), n, seed=seed)
    x0 = 5.0 * z + rng.normal(scale=0.3, size=n) + 10.0
    x1 = np.where(rng.random(n) < 0.85, z, 1 - z).astype(float)
    return np.column_stack([x0, x1])


def test_forecaster_fit_predict_shapes():
    X = training_matrix()
    est = DnmForecaster(order=1, n_bins=4, categorical=[1]).fit(X)
    pred = est.predict(horizon=3)
    assert pred.shape == (3, 2)
    # channel 0 forecasts live on the training value scale
    assert 8.0 < pred[0, 0] < 18.0
    proba = est.predict_proba(horizon=2)
    assert len(proba) == 2 and len(proba[0]) == 2
    for dists in proba:
        for d in dists:
            assert d.sum() == pytest.approx(1.0)


def test_forecaster_predict_from_supplied_window():
    X = training_matrix()
    est = DnmForecaster(order=1, n_bins=4, categorical=[1]).fit(X)
    lo = est.predict(X=np.array([[10.0, 0.0]]), horizon=1)
    hi = est.predict(X=np.array([[15.5, 1.0]]), horizon=1)
    # state is sticky, so the forecast should follow the window
    assert lo[0, 0] < hi[0, 0]


def test_forecaster_update_moves_alpha():
    X = training_matrix()
    est = DnmForecaster(order=1, n_bins=4, categorical=[1]).fit(X)
    before = est.alpha_state_.alpha.copy()
    est.update(X[-1:], y=[14.8, 1.0])
    after = est.alpha_state_.alpha
    assert not np.array_equal(before, after)
    # NaN entries are skipped
    alphas = after.copy()
    est.update(X[-1:], y=[np.nan, np.nan])
    assert np.array_equal(est.alpha_state_.alpha, alphas)


def test_forecaster_learns_planted_dependencies():
    states = recovery_series(4000, seed=3).astype(float)
    est = DnmForecaster(order=1, categorical=[0, 1, 2]).fit(states)
    lagged = est.model_.structure.lagged
    contemporaneous = est.model_.structure.contemporaneous
    assert any(len(p) for p in lagged)
    assert any(len(p) for p in contemporaneous)


def test_forecaster_errors():
    est = DnmForecaster()
    with pytest.raises(NotFittedError):
        est.predict()
    X = training_matrix(100)
    with pytest.raises(ValidationError, match="out of range"):
        DnmForecaster(categorical=[5]).fit(X)
    with pytest.raises(ValidationError, match="feature names"):
        DnmForecaster().fit(X, feature_names=["only_one"])
    # the 0/1 column binned as continuous collapses, with a warning
    with pytest.warns(UserWarning, match="ties reduce"):
        est = DnmForecaster(order=2, n_bins=3).fit(X)
    with pytest.raises(ValidationError, match="at least 2 rows"):
        est.predict(X=X[:1])
    with pytest.raises(ValidationError, match="columns"):
        est.predict(X=np.zeros((3, 5)))


def test_forecaster_sklearn_protocol():
    est = DnmForecaster(order=2, n_bins=3, random_state=9)
    params = est.get_params()
    assert params["order"] == 2
    assert params["n_bins"] == 3
    assert params["random_state"] == 9
    cloned = clone(est)
    assert cloned.get_params() == params
    assert not hasattr(cloned, "model_")


def test_forecaster_named_features():
    X = training_matrix(200)
    est = DnmForecaster(order=1, n_bins=3, categorical=[1]).fit(
        X, feature_names=["hr", "stage"]
    )
    assert est.feature_names_in_ == ["hr", "stage"]
    assert [v.name for v in est.model_.structure.variables] == ["hr", "stage"]
