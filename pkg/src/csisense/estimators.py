"""Estimator-style wrappers around the detection primitives.

These adapters follow the fit/transform/predict protocol (rows are
samples, which is transposed relative to the column-major core) so the
detectors compose with pipelines and grid-search tooling. They add no
statistical behavior of their own.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from ._validation import check_labels
from .channel import HypothesisPair
from .dataset import estimate_gaussian_params
from .detectors import (
    STABLE,
    decide_all,
    featurize,
    fit_feature_scaler,
    lrt_build,
    lrt_score,
    svm_score,
    svm_train,
)
from .subspace import _fit_columns, pca_project


def _rows_to_columns(x, name: str = "X") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D with rows as samples")
    return arr.astype(np.complex128).T


class SubspaceProjector(TransformerMixin, BaseEstimator):
    """Project complex observations onto their top principal directions.

    Unsupervised: both classes are pooled. ``transform`` returns complex
    rows of width ``p``; downstream estimators that need real features
    handle the conversion themselves.
    """

    def __init__(self, p: int = 20):
        self.p = p

    def fit(self, X, y=None):
        self.basis_ = _fit_columns(_rows_to_columns(X), self.p)
        return self

    def transform(self, X):
        return pca_project(self.basis_, _rows_to_columns(X)).T

    def get_feature_names_out(self, input_features=None):
        return np.array([f"pc{k}" for k in range(self.p)], dtype=object)


class MatchedGaussianDetector(ClassifierMixin, BaseEstimator):
    """Likelihood-ratio detector for two isotropic complex Gaussian laws.

    ``fit`` estimates each class law from the labeled rows; alternatively
    :meth:`from_pair` builds the detector directly from known laws. The
    decision function is the log likelihood ratio; prediction compares it
    to ``threshold`` with strict excess declaring the scatterer present.
    """

    def __init__(self, mode: str = STABLE, threshold: float = 0.0):
        self.mode = mode
        self.threshold = threshold

    def fit(self, X, y):
        cols = _rows_to_columns(X)
        labels = check_labels(y)
        if labels.shape[0] != cols.shape[1]:
            raise ValueError("X and y disagree on the sample count")
        if int(np.sum(labels == 0)) < 2 or int(np.sum(labels == 1)) < 2:
            raise ValueError("need at least two samples of each class")
        est0 = estimate_gaussian_params(cols[:, labels == 0])
        est1 = estimate_gaussian_params(cols[:, labels == 1])
        self.detector_ = lrt_build((est0, est1), mode=self.mode)
        self.classes_ = np.array([0, 1])
        return self

    @classmethod
    def from_pair(cls, pair: HypothesisPair, mode: str = STABLE, threshold: float = 0.0):
        """Model-driven construction; no training data involved."""
        est = cls(mode=mode, threshold=threshold)
        est.detector_ = lrt_build(pair, mode=mode)
        est.classes_ = np.array([0, 1])
        return est

    def decision_function(self, X):
        return np.atleast_1d(lrt_score(self.detector_, _rows_to_columns(X)))

    def predict(self, X):
        return decide_all(self.decision_function(X), self.threshold, self.mode)


class SvmDetector(ClassifierMixin, BaseEstimator):
    """Margin classifier on interleaved real features of complex rows.

    Featurization and per-feature standardization happen inside ``fit``;
    the frozen training statistics are reapplied at prediction time.
    """

    def __init__(
        self,
        kernel: str = "linear",
        c: float = 1.0,
        gamma: float | None = None,
        tol: float = 1e-4,
    ):
        self.kernel = kernel
        self.c = c
        self.gamma = gamma
        self.tol = tol

    def fit(self, X, y):
        cols = _rows_to_columns(X)
        labels = check_labels(y)
        if labels.shape[0] != cols.shape[1]:
            raise ValueError("X and y disagree on the sample count")
        raw = featurize(cols)
        scaler = fit_feature_scaler(raw)
        self.model_ = svm_train(
            (raw - scaler.mean) / scaler.scale,
            labels,
            kernel=self.kernel,
            c=self.c,
            gamma=self.gamma,
            tol=self.tol,
            scaler=scaler,
        )
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        feats = featurize(_rows_to_columns(X), self.model_.feature_scaler)
        return np.atleast_1d(svm_score(self.model_, feats))

    def predict(self, X):
        return (self.decision_function(X) > 0.0).astype(np.int64)
