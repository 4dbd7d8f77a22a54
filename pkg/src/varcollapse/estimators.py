"""scikit-learn style front ends.

These follow the usual convention of ``X`` with shape ``(n_samples, p)`` and
arbitrary hashable labels ``y``; internally the functional API works on
``(p, n)`` matrices with labels ``0..K-1``.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .featureio import LabeledFeatures
from .metrics import _evaluate
from .probe import mse_loss, solve_mse_probe
from .spectra import parse_policy

__all__ = ["check_labeled_features", "CollapseMetrics", "MSELinearProbe"]


def check_labeled_features(X, y):
    """Validate ``(X, y)`` and convert to :class:`LabeledFeatures`.

    Returns ``(features, classes)`` where ``classes[i]`` is the original label
    of encoded class ``i``.
    """
    X, y = check_X_y(X, y, dtype=np.float64, ensure_min_samples=2)
    check_classification_targets(y)
    classes, encoded = np.unique(y, return_inverse=True)
    return LabeledFeatures(X.T, encoded, len(classes)), classes


class CollapseMetrics(TransformerMixin, BaseEstimator):
    """Measure variability collapse of a labeled feature set.

    ``fit`` computes every metric; the full report is ``report_`` and the
    headline values are exposed as attributes. ``transform`` projects samples
    onto an orthonormal basis of the between-class space.

    Parameters
    ----------
    policy : str or EigenPolicy, default=None
        Pseudoinverse policy (``"rank:R"``, ``"rel:EPS"``, ``"abs:T"``).
        ``None`` or ``"rel:auto"`` selects the per-matrix defaults.
    """

    def __init__(self, policy=None):
        self.policy = policy

    def fit(self, X, y):
        f, self.classes_ = check_labeled_features(X, y)
        self.report_, self.covariances_, self.between_basis_ = _evaluate(
            f, parse_policy(self.policy)
        )
        self.mean_ = self.covariances_.stats.global_mean
        self.n_features_in_ = f.p
        for name in ("vci", "trace_ratio", "fuzziness", "squared_distance",
                     "cos_within", "class_separation"):
            setattr(self, name + "_", getattr(self.report_, name))
        return self

    def transform(self, X):
        check_is_fitted(self, "between_basis_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) @ self.between_basis_


class MSELinearProbe(ClassifierMixin, BaseEstimator):
    """Least-squares linear probe against one-hot targets, solved in closed form.

    Requires balanced classes. ``loss_`` is the achieved training loss.

    Parameters
    ----------
    policy : str or EigenPolicy, default=None
        Pseudoinverse policy for the overall covariance.
    """

    def __init__(self, policy=None):
        self.policy = policy

    def fit(self, X, y):
        f, self.classes_ = check_labeled_features(X, y)
        solution = solve_mse_probe(f, parse_policy(self.policy))
        self.coef_ = solution.weights
        self.intercept_ = solution.bias
        self.loss_ = solution.loss
        self.n_features_in_ = f.p
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def probe_loss(self, X, y):
        """MSE probe loss of the fitted weights on ``(X, y)``."""
        check_is_fitted(self, "coef_")
        X, y = check_X_y(X, y, dtype=np.float64)
        unknown = ~np.isin(y, self.classes_)
        if unknown.any():
            raise ValueError(f"labels not seen during fit: {np.unique(y[unknown])}")
        encoded = np.searchsorted(self.classes_, y)
        f = LabeledFeatures(X.T, encoded, len(self.classes_))
        return mse_loss(self.coef_, self.intercept_, f)
