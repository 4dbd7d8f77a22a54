"""Closed-form MSE linear probing.

For balanced classes the least-squares probe ``h -> W h + b`` against one-hot
targets has the optimum

    W = (1/K) (sum_k e_k mu_k^T) pinv(sigma_t),   b = (1/K) 1     (mu_G = 0)

with minimal loss ``-Tr[pinv(sigma_t) sigma_b] / (2K) + 1/2 - 1/(2K)``. Non-zero
``mu_G`` is handled by centering and then shifting the bias by ``-W mu_G``.

:func:`oracle_min_loss` solves the same problem as a plain least-squares
regression and shares no code with the closed form.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ImbalancedClasses, ShapeMismatch
from .spectra import default_total_policy, pseudo_inverse, trace_pinv_product
from .stats import covariances

__all__ = [
    "ProbeSolution",
    "mse_loss",
    "solve_mse_probe",
    "predicted_min_loss",
    "oracle_min_loss",
]


@dataclass
class ProbeSolution:
    weights: np.ndarray  # (K, p)
    bias: np.ndarray  # (K,)
    loss: float

    def to_dict(self):
        return {
            "weights": [[float(v) for v in row] for row in self.weights],
            "bias": [float(v) for v in self.bias],
            "loss": float(self.loss),
        }

    @classmethod
    def matches(cls, data):
        return set(data) == {"weights", "bias", "loss"}

    @classmethod
    def from_dict(cls, data):
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=np.asarray(data["bias"], dtype=np.float64),
            loss=data["loss"],
        )


def mse_loss(w, b, f, weight_decay=0.0, bias_decay=0.0):
    """Mean over samples of ``||W h + b - e_label||^2 / 2``.

    ``weight_decay`` and ``bias_decay`` add ``(lambda_W/2)||W||_F^2`` and
    ``(lambda_b/2)||b||^2``; both default to zero.
    """
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    k, p = f.class_count, f.p
    if w.shape != (k, p) or b.shape != (k,):
        raise ShapeMismatch(
            f"expected W of shape {(k, p)} and b of shape {(k,)}, "
            f"got {w.shape} and {b.shape}"
        )
    residual = w @ f.features + b[:, None]
    residual[f.labels, np.arange(f.n)] -= 1.0
    loss = 0.5 * float(np.sum(residual * residual)) / f.n
    if weight_decay:
        loss += 0.5 * weight_decay * float(np.sum(w * w))
    if bias_decay:
        loss += 0.5 * bias_decay * float(b @ b)
    return loss


def solve_mse_probe(f, policy=None):
    """Closed-form minimizer of :func:`mse_loss` for balanced classes.

    ``policy`` governs the pseudoinverse of ``sigma_t`` (machine-precision
    cutoff by default). The returned loss is evaluated, not predicted.

    Raises:
        ImbalancedClasses: class sizes differ; the closed form assumes balance.
    """
    if not f.is_balanced:
        raise ImbalancedClasses(
            f"class sizes {f.class_counts.tolist()} differ; use oracle_min_loss"
        )
    covs = covariances(f)
    if policy is None:
        policy = default_total_policy(f.p)
    k = f.class_count
    mu_g = covs.stats.global_mean
    # Rows are the globally centered class means, i.e. sum_k e_k mu_k^T.
    centered = covs.stats.centered_means.T
    weights = centered @ pseudo_inverse(covs.sigma_t, policy) / k
    bias = np.full(k, 1.0 / k) - weights @ mu_g
    return ProbeSolution(weights=weights, bias=bias, loss=mse_loss(weights, bias, f))


def predicted_min_loss(covs, policy=None):
    """``-Tr[pinv(sigma_t) sigma_b] / (2K) + 1/2 - 1/(2K)``."""
    if policy is None:
        policy = default_total_policy(covs.p)
    k = covs.class_count
    ratio, _ = trace_pinv_product(covs.sigma_t, covs.sigma_b, policy)
    return -ratio / (2 * k) + 0.5 - 0.5 / k


def oracle_min_loss(f):
    """Minimum of :func:`mse_loss` by direct least squares on ``[h; 1]``.

    Uses the minimum-norm solution when the design is rank deficient and also
    accepts imbalanced classes.
    """
    design = np.hstack([f.features.T, np.ones((f.n, 1))])
    targets = np.zeros((f.n, f.class_count))
    targets[np.arange(f.n), f.labels] = 1.0
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    residual = design @ coef - targets
    return 0.5 * float(np.sum(residual * residual)) / f.n
