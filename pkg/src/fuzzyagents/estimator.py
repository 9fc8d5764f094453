"""scikit-learn adapters around the Mamdani pipeline.

The rule base and membership functions come from configuration, so ``fit``
learns nothing; it resolves and validates the configuration and fixes the
input layout. Both estimators then drop into pipelines, grid searches over
``get_params``/``set_params`` and cross-validation helpers like any other.
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import ConfigError, SystemConfig, load_config
from .fuzzy import T_NORMS, EmptyAggregateError, infer_mamdani

__all__ = ["FuzzyInferenceRegressor", "MembershipTransformer", "resolve_config"]

ConfigLike = Union[None, str, Mapping, SystemConfig]


def resolve_config(config: ConfigLike) -> SystemConfig:
    if config is None:
        from .watering import reference_config

        return reference_config()
    if isinstance(config, SystemConfig):
        return config
    return load_config(config)


def _input_layout(est, X, variables: Sequence[str], reset: bool) -> np.ndarray:
    """Validate ``X`` and reorder named columns to ``variables``."""
    columns = getattr(X, "columns", None)
    if columns is not None:
        names = [str(c) for c in columns]
        if reset:
            est.feature_names_in_ = np.asarray(names, dtype=object)
        missing = [v for v in variables if v not in names]
        if missing:
            raise ValueError(f"X is missing columns {missing}")
        order = [names.index(v) for v in variables]
    else:
        if reset and hasattr(est, "feature_names_in_"):
            del est.feature_names_in_
        order = None
    arr = check_array(X, dtype=float, ensure_all_finite=True)
    if order is not None:
        arr = arr[:, order]
    if reset:
        est.n_features_in_ = arr.shape[1]
        if order is None and arr.shape[1] != len(variables):
            raise ValueError(f"X has {arr.shape[1]} features, the rule base reads {len(variables)}: {list(variables)}")
    elif arr.shape[1] != len(variables):
        raise ValueError(f"X has {arr.shape[1]} features, expected {len(variables)}")
    return arr


class FuzzyInferenceRegressor(RegressorMixin, BaseEstimator):
    """Crisp output of a Mamdani rule base, one prediction per input row.

    Parameters
    ----------
    config : path, mapping, SystemConfig or None
        Variables and inference rules; ``None`` uses the packaged watering system.
    output : str, optional
        Variable to predict; defaults to the single consequent variable.
    inputs : sequence of str, optional
        Column order of ``X``; defaults to premise variables in rule order.
    t_norm : str, optional
        Premise conjunction; defaults to the configured one.
    on_empty : {"nan", "raise"}
        What to do with rows for which no rule fires.
    """

    def __init__(self, config: ConfigLike = None, output: Optional[str] = None,
                 inputs: Optional[Sequence[str]] = None, t_norm: Optional[str] = None, on_empty: str = "nan"):
        self.config = config
        self.output = output
        self.inputs = inputs
        self.t_norm = t_norm
        self.on_empty = on_empty

    def fit(self, X, y=None):
        cfg = resolve_config(self.config)
        rules = cfg.canonical_rules()
        if not rules:
            raise ConfigError("configuration has no inference rules")
        outputs = sorted({r.consequent[0] for r in rules})
        output = self.output
        if output is None:
            if len(outputs) != 1:
                raise ValueError(f"rule base concludes on {outputs}; set output=")
            output = outputs[0]
        elif output not in outputs:
            raise ValueError(f"no rule concludes on {output!r}")
        t_norm = self.t_norm or cfg.t_norm
        if t_norm not in T_NORMS:
            raise ValueError(f"unknown t-norm {t_norm!r}")
        if self.on_empty not in ("nan", "raise"):
            raise ValueError("on_empty must be 'nan' or 'raise'")
        rules = [r for r in rules if r.consequent[0] == output]
        if self.inputs is None:
            inputs = list(dict.fromkeys(v for r in rules for v, _ in r.premises))
        else:
            inputs = list(self.inputs)
        self.config_ = cfg
        self.rules_ = rules
        self.output_ = output
        self.t_norm_ = t_norm
        self.input_variables_ = inputs
        _input_layout(self, X, inputs, reset=True)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "rules_")
        arr = _input_layout(self, X, self.input_variables_, reset=False)
        out = np.empty(arr.shape[0])
        for i, row in enumerate(arr):
            inputs = dict(zip(self.input_variables_, row))
            try:
                out[i] = infer_mamdani(self.rules_, self.config_.variables, inputs, self.t_norm_, output=self.output_)
            except EmptyAggregateError:
                if self.on_empty == "raise":
                    raise
                out[i] = np.nan
        return out


class MembershipTransformer(TransformerMixin, BaseEstimator):
    """Fuzzify each column into the membership degrees of its variable's terms.

    Output columns are named ``<variable>.<term>``.
    """

    def __init__(self, config: ConfigLike = None, variables: Optional[Sequence[str]] = None):
        self.config = config
        self.variables = variables

    def fit(self, X, y=None):
        cfg = resolve_config(self.config)
        names = list(self.variables) if self.variables is not None else list(cfg.variables)
        for name in names:
            cfg.variable(name)
        self.config_ = cfg
        self.variables_ = names
        _input_layout(self, X, names, reset=True)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "variables_")
        arr = _input_layout(self, X, self.variables_, reset=False)
        cols = []
        for j, name in enumerate(self.variables_):
            lv = self.config_.variables[name]
            for term in lv.terms:
                cols.append([term.membership(x) for x in arr[:, j]])
        return np.asarray(cols, dtype=float).T.reshape(arr.shape[0], -1)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "variables_")
        return np.asarray([f"{name}.{t.label}" for name in self.variables_
                           for t in self.config_.variables[name].terms], dtype=object)
