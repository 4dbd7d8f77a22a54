"""Class statistics and the within / between / overall covariance triple.

For balanced data these are the usual neural-collapse covariances

    sigma_w = 1/(KN) sum_k sum_i (h_ki - mu_k)(h_ki - mu_k)^T
    sigma_b = 1/K    sum_k (mu_k - mu_G)(mu_k - mu_G)^T
    sigma_t = 1/(KN) sum_k sum_i (h_ki - mu_G)(h_ki - mu_G)^T

Imbalanced data uses sample weights (``sigma_b`` weights class ``k`` by
``n_k / n``) so that ``sigma_t == sigma_b + sigma_w`` still holds. There is
no Bessel correction.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import EmptyBetweenSpace
from .spectra import default_between_policy, psd_eigendecomp, retained_mask

__all__ = [
    "ClassStats",
    "CovarianceSet",
    "class_statistics",
    "covariances",
    "between_space_basis",
    "within_projection_split",
]

# Columns per accumulation block; bounds the temporary to ~64 MB.
_BLOCK_ELEMENTS = 1 << 23


def _blocks(n, p):
    step = max(1, _BLOCK_ELEMENTS // max(p, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


@dataclass
class ClassStats:
    class_means: np.ndarray  # (p, K), column k is mu_k
    global_mean: np.ndarray  # (p,)
    class_counts: np.ndarray  # (K,)

    @property
    def centered_means(self):
        return self.class_means - self.global_mean[:, None]


@dataclass
class CovarianceSet:
    """The covariance triple; ``stats`` is ``None`` when built from matrices."""

    sigma_w: np.ndarray
    sigma_b: np.ndarray
    sigma_t: np.ndarray
    class_count: int
    stats: ClassStats = None

    @classmethod
    def from_matrices(cls, sigma_b, sigma_w, class_count):
        """Build from given between/within matrices, with ``sigma_t`` as their sum."""
        sigma_b = np.asarray(sigma_b, dtype=np.float64)
        sigma_w = np.asarray(sigma_w, dtype=np.float64)
        return cls(sigma_w=sigma_w, sigma_b=sigma_b, sigma_t=sigma_b + sigma_w,
                   class_count=int(class_count))

    @property
    def p(self):
        return self.sigma_t.shape[0]


def _indicator(labels, k):
    """Sparse ``(K, n)`` class-membership matrix."""
    n = len(labels)
    return sp.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(k, n))


def class_statistics(f):
    """Per-class means, the global mean and class sizes of ``f``."""
    counts = f.class_counts
    sums = np.asarray(_indicator(f.labels, f.class_count) @ f.features.T).T
    means = sums / counts
    global_mean = f.features.sum(axis=1) / f.n
    return ClassStats(class_means=means, global_mean=global_mean, class_counts=counts)


def _scatter(features, offsets):
    """Sum of ``(h - offset)(h - offset)^T`` over columns, block by block.

    ``offsets`` is a callable mapping a column slice to the ``(p, m)`` matrix
    of vectors to subtract. Blocks are reduced in column order.
    """
    p, n = features.shape
    out = np.zeros((p, p))
    for block in _blocks(n, p):
        dev = features[:, block] - offsets(block)
        out += dev @ dev.T
    return out


def _symmetrize(a):
    return 0.5 * (a + a.T)


def covariances(f, stats=None):
    """The within-class, between-class and overall covariance matrices of ``f``."""
    if stats is None:
        stats = class_statistics(f)
    n = f.n
    means, mu_g = stats.class_means, stats.global_mean
    sigma_w = _scatter(f.features, lambda b: means[:, f.labels[b]]) / n
    sigma_t = _scatter(f.features, lambda b: mu_g[:, None]) / n
    centered = stats.centered_means
    sigma_b = (centered * (stats.class_counts / n)) @ centered.T
    return CovarianceSet(
        sigma_w=_symmetrize(sigma_w),
        sigma_b=_symmetrize(sigma_b),
        sigma_t=_symmetrize(sigma_t),
        class_count=f.class_count,
        stats=stats,
    )


def between_space_basis(covs, policy=None, decomp=None):
    """Orthonormal basis (``p x r``) of the column space of ``sigma_b``.

    The policy picks which eigenvectors count; at most ``min(p, K - 1)`` are
    ever kept since that is the largest rank ``sigma_b`` can have.

    Raises:
        EmptyBetweenSpace: the policy keeps no direction.
    """
    p, k = covs.p, covs.class_count
    if policy is None:
        policy = default_between_policy(p, k)
    vals, vecs = decomp if decomp is not None else psd_eigendecomp(covs.sigma_b)
    keep = retained_mask(vals, policy)
    keep[min(p, k - 1):] = False
    if not keep.any():
        raise EmptyBetweenSpace("between-class covariance has no retained direction")
    return vecs[:, keep]


def within_projection_split(f, basis, sigma_w=None):
    """Split the within-class scatter into its V_B and V_B-perp parts.

    Returns ``(proj_vb, proj_vb_perp)``: the mean squared norm of the
    class-centered features projected onto ``span(basis)`` and onto its
    orthogonal complement. Their sum is ``trace(sigma_w)``.

    If ``sigma_w`` is given it is used instead of another pass over ``f``.
    """
    basis = np.asarray(basis, dtype=np.float64)
    if sigma_w is not None:
        total = float(np.trace(sigma_w))
        inside = float(np.sum(basis * (sigma_w @ basis)))
    else:
        stats = class_statistics(f)
        total = inside = 0.0
        for block in _blocks(f.n, f.p):
            dev = f.features[:, block] - stats.class_means[:, f.labels[block]]
            total += float(np.sum(dev * dev))
            coords = basis.T @ dev
            inside += float(np.sum(coords * coords))
        total /= f.n
        inside /= f.n
    inside = max(inside, 0.0)
    return inside, max(total - inside, 0.0)
