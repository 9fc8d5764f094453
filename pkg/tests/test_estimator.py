import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from fuzzyagents.estimator import FuzzyInferenceRegressor, MembershipTransformer
from fuzzyagents.fuzzy import EmptyAggregateError
from fuzzyagents.watering import infer, reference_config

X = np.array([[35.0, 10.0], [40.0, 2.0], [0.0, 30.0]])


def test_predict_matches_direct_inference():
    cfg = reference_config()
    pred = FuzzyInferenceRegressor().fit(X).predict(X)
    assert pred[0] == infer(cfg, 35, 10)
    assert pred[1] == infer(cfg, 40, 2)
    assert np.isnan(pred[2])


def test_on_empty_raise():
    with pytest.raises(EmptyAggregateError):
        FuzzyInferenceRegressor(on_empty="raise").fit(X).predict(X)


def test_params_and_clone():
    est = FuzzyInferenceRegressor(t_norm="product")
    assert est.get_params()["t_norm"] == "product"
    twin = clone(est).set_params(on_empty="raise")
    assert twin.on_empty == "raise" and est.on_empty == "nan"


def test_dataframe_columns_are_reordered():
    df = pd.DataFrame({"humidity": [10.0], "temperature": [35.0]})
    est = FuzzyInferenceRegressor().fit(df)
    assert list(est.feature_names_in_) == ["humidity", "temperature"]
    assert est.predict(df)[0] == infer(reference_config(), 35, 10)


def test_wrong_width():
    est = FuzzyInferenceRegressor().fit(X)
    with pytest.raises(ValueError):
        est.predict(X[:, :1])


def test_bad_parameters():
    with pytest.raises(ValueError):
        FuzzyInferenceRegressor(output="temperature").fit(X)
    with pytest.raises(ValueError):
        FuzzyInferenceRegressor(on_empty="zero").fit(X)


def test_in_a_pipeline():
    pipe = make_pipeline(FunctionTransformer(), FuzzyInferenceRegressor())
    assert pipe.fit(X[:2]).predict(X[:2])[0] == pytest.approx(40.024, abs=1e-3)


def test_membership_transformer():
    tr = MembershipTransformer(variables=["humidity"]).fit(np.array([[10.0]]))
    assert tr.transform(np.array([[10.0]])).tolist() == [[0.35, 0.61]]
    assert list(tr.get_feature_names_out()) == ["humidity.dry", "humidity.wet"]


def test_transformer_feeds_all_terms():
    out = MembershipTransformer().fit_transform(np.array([[35.0, 10.0, 40.0]]))
    assert out.shape == (1, 10)
    assert out[0, 4] == 0.45
