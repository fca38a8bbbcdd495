"""scikit-learn style wrappers around the mechanisms.

These let the entropy budgeting and the common releases sit inside a
``Pipeline``.  Every estimator takes ``random_state`` (an int seed, a
:class:`~entropydp.core.RandomSource`, or None) and draws its noise from a
fresh stream on each call, so refitting with the same seed reproduces the
same output.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import mechanisms as mech
from .core import RandomSource, SensitivityClass, as_source, tally
from .entropy_budget import Distribution, EntropyReport, allocate_budget, classify, shannon_entropy
from .errors import ParameterError


def _stream(random_state, label: str) -> RandomSource:
    if isinstance(random_state, RandomSource):
        return random_state.child(label)
    return as_source(random_state).child(label)


def _columns(X) -> tuple[list[str], list[np.ndarray]]:
    if isinstance(X, pd.DataFrame):
        return [str(c) for c in X.columns], [X[c].to_numpy() for c in X.columns]
    arr = check_array(X, dtype=None, ensure_2d=True)
    return [f"x{i}" for i in range(arr.shape[1])], [arr[:, i] for i in range(arr.shape[1])]


class EntropyBudgetAllocator(BaseEstimator):
    """Learn per-column entropies and split ``total_epsilon`` by inverse entropy.

    Args:
        total_epsilon: budget to distribute across columns.
        sensitivity: optional mapping column -> :class:`SensitivityClass`
            used for the level/risk labels; unknown columns count as Critical.

    Attributes:
        feature_names_in_: column names seen in ``fit``.
        entropy_: dict column -> entropy in bits.
        epsilon_: dict column -> allocated epsilon (constant columns absent).
        reports_: list of :class:`EntropyReport`.
    """

    def __init__(self, total_epsilon: float = 1.0, sensitivity=None):
        self.total_epsilon = total_epsilon
        self.sensitivity = sensitivity

    def fit(self, X, y=None):
        names, cols = _columns(X)
        if cols and len(cols[0]) == 0:
            raise ParameterError("cannot fit on zero rows")
        sens = dict(self.sensitivity or {})
        reports = []
        for name, col in zip(names, cols):
            counts = tally(col)
            h = shannon_entropy(Distribution.from_counts(counts))
            level, risk = classify(h, SensitivityClass(sens.get(name, SensitivityClass.CRITICAL)))
            reports.append(EntropyReport(name, h, level, risk, len(counts)))
        allocation = allocate_budget(reports, self.total_epsilon)
        self.feature_names_in_ = np.asarray(names, dtype=object)
        self.n_features_in_ = len(names)
        self.reports_ = reports
        self.entropy_ = {r.field: r.entropy_bits for r in reports}
        self.epsilon_ = dict(allocation.per_field)
        return self


class RandomizedResponseTransformer(TransformerMixin, BaseEstimator):
    """Flip each 0/1 entry independently; keep probability e^eps / (1 + e^eps)."""

    def __init__(self, epsilon: float = 1.0, random_state=None):
        self.epsilon = epsilon
        self.random_state = random_state

    def fit(self, X, y=None):
        arr = check_array(X, dtype=np.int64)
        if not np.isin(arr, (0, 1)).all():
            raise ParameterError("randomized response needs a 0/1 matrix")
        self.n_features_in_ = arr.shape[1]
        self.keep_probability_ = mech.keep_probability(self.epsilon)
        return self

    def transform(self, X):
        check_is_fitted(self, "keep_probability_")
        arr = check_array(X, dtype=np.int64)
        if arr.shape[1] != self.n_features_in_:
            raise ParameterError(f"expected {self.n_features_in_} columns, got {arr.shape[1]}")
        flat = mech.randomized_response_bits(arr.ravel(), self.epsilon, _stream(self.random_state, "rr"))
        return flat.reshape(arr.shape)

    def debiased_mean(self, reported) -> np.ndarray:
        """Column-wise unbiased estimate of the true share of ones."""
        check_is_fitted(self, "keep_probability_")
        arr = check_array(reported, dtype=np.int64)
        return np.array([mech.rr_debiased_mean(arr[:, j], self.epsilon) for j in range(arr.shape[1])])


class DPHistogram(BaseEstimator):
    """Noisy histogram of a single categorical column.

    Args:
        epsilon: privacy level.
        clip_min: lower clamp applied after noise; None releases raw Laplace
            counts (which may be negative).
    """

    def __init__(self, epsilon: float = 1.0, clip_min=0.0, random_state=None):
        self.epsilon = epsilon
        self.clip_min = clip_min
        self.random_state = random_state

    def fit(self, X, y=None):
        values = np.asarray(X.iloc[:, 0] if isinstance(X, pd.DataFrame) else X, dtype=object).ravel()
        if values.size == 0:
            raise ParameterError("cannot fit on zero rows")
        counts = tally(values)
        stream = _stream(self.random_state, "histogram")
        if self.clip_min is None:
            noisy = mech.laplace_counts(counts, 1.0, self.epsilon, stream)
        else:
            noisy = mech.histogram_release(counts, self.epsilon, self.clip_min, stream)
        self.labels_ = sorted(counts)
        self.noisy_counts_ = noisy
        self.distribution_ = Distribution.from_counts(noisy, floor=1e-12)
        return self


class PrivateMean(BaseEstimator):
    """Differentially private mean of a 1-D numeric sample.

    ``method`` is one of ``"laplace"`` (sensitivity (upper-lower)/n on
    unclipped data), ``"clipped"``, ``"smooth"`` or ``"gaussian"``.  For the
    Gaussian method the sensitivity is taken as (upper-lower)/n.
    """

    _METHODS = ("laplace", "clipped", "smooth", "gaussian")

    def __init__(self, method: str = "smooth", lower: float = 18.0, upper: float = 90.0,
                 epsilon: float = 1.0, delta: float = 1e-5, random_state=None):
        self.method = method
        self.lower = lower
        self.upper = upper
        self.epsilon = epsilon
        self.delta = delta
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.method not in self._METHODS:
            raise ParameterError(f"method must be one of {self._METHODS}, got {self.method!r}")
        values = check_array(np.asarray(X, dtype=float).reshape(-1, 1), dtype=float).ravel()
        stream = _stream(self.random_state, f"mean/{self.method}")
        if self.method == "laplace":
            self.mean_ = mech.laplace_mean(values, self.lower, self.upper, self.epsilon, stream)
        elif self.method == "clipped":
            self.mean_ = mech.clipped_laplace_mean(values, self.lower, self.upper, self.epsilon, stream)
        elif self.method == "smooth":
            self.mean_ = mech.smooth_sensitivity_mean(values, self.lower, self.upper, self.epsilon, stream)
        else:
            clipped = np.clip(values, self.lower, self.upper)
            sens = (self.upper - self.lower) / values.size
            self.mean_ = mech.gaussian_mean(clipped, sens, self.epsilon, self.delta, stream)
        self.n_samples_ = values.size
        return self
