"""Synthetic feature configurations and constructive counterexamples.

All randomness comes from a Philox counter-based generator keyed by the
caller's seed, so a given seed yields the same stream on every platform.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert

from .exceptions import ConfigError, DimensionTooSmall, NoNullVector, SingularTransform
from .featureio import LabeledFeatures

__all__ = [
    "GeneratorSpec",
    "GEOMETRIES",
    "make_rng",
    "simplex_means",
    "collapsed_config",
    "noisy_config",
    "generate",
    "nullspace_inflate",
    "random_orthogonal",
    "random_invertible",
    "random_block_transform",
    "apply_transform",
    "fuzziness_counterexample",
]

GEOMETRIES = ("simplex-collapsed", "vb-perp-noise", "vb-noise")

# Condition number above which a transform is treated as singular.
MAX_TRANSFORM_COND = 1e12


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a synthetic configuration.

    ``n`` is the number of samples per class; ``sigma`` is the noise scale of
    the noisy geometries and is ignored for ``simplex-collapsed``.
    """

    k: int
    p: int
    n: int
    geometry: str = "simplex-collapsed"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"unknown geometry {self.geometry!r}; pick one of {GEOMETRIES}")
        if self.k < 2 or self.p < 1 or self.n < 1:
            raise ConfigError(f"need k >= 2, p >= 1, n >= 1; got {self.k}, {self.p}, {self.n}")
        if self.geometry != "simplex-collapsed" and not self.sigma > 0:
            raise ConfigError(f"{self.geometry} needs sigma > 0, got {self.sigma}")
        if self.p < self.k - 1:
            raise DimensionTooSmall(
                f"a {self.k}-class simplex needs p >= {self.k - 1}, got p={self.p}"
            )


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def simplex_means(k, p):
    """``(p, k)`` centered simplex vertices with unit pairwise distance.

    The vertices occupy the first ``k - 1`` coordinates; the rest are zero.
    """
    if p < k - 1:
        raise DimensionTooSmall(f"a {k}-class simplex needs p >= {k - 1}, got p={p}")
    # Rows of the Helmert matrix (past the first) are an orthonormal basis of
    # the zero-sum subspace, so column j holds the coordinates of e_j - 1/k.
    coords = helmert(k) / np.sqrt(2.0)
    means = np.zeros((p, k))
    means[: k - 1] = coords
    return means


def _labels(k, n):
    return np.repeat(np.arange(k, dtype=np.int64), n)


def collapsed_config(spec):
    """Every sample sits exactly on its class's simplex vertex."""
    means = simplex_means(spec.k, spec.p)
    labels = _labels(spec.k, spec.n)
    return LabeledFeatures(means[:, labels], labels, spec.k)


def noisy_config(spec):
    """The collapsed configuration plus Gaussian noise in V_B or its complement.

    The noise is centered within each class, so class means and hence
    ``sigma_b`` are exactly those of :func:`collapsed_config`; only the
    within-class scatter changes.
    """
    if spec.geometry == "simplex-collapsed":
        raise ConfigError("noisy_config needs a noisy geometry")
    k, p, n = spec.k, spec.p, spec.n
    if spec.geometry == "vb-perp-noise" and p <= k - 1:
        raise DimensionTooSmall(
            f"no room for noise orthogonal to the class means: p={p}, k={k}"
        )
    base = collapsed_config(spec)
    noise = make_rng(spec.seed).standard_normal((p, k * n)) * spec.sigma
    if spec.geometry == "vb-perp-noise":
        noise[: k - 1] = 0.0
    else:
        noise[k - 1:] = 0.0
    noise = noise.reshape(p, k, n)
    noise -= noise.mean(axis=2, keepdims=True)
    return base.with_features(base.features + noise.reshape(p, k * n))


def generate(spec):
    if spec.geometry == "simplex-collapsed":
        return collapsed_config(spec)
    return noisy_config(spec)


def nullspace_inflate(f, w, lam):
    """Shift the first sample of every class by ``lam * v`` with ``W v = 0``.

    ``v`` is the unit right singular vector of ``w`` with the smallest singular
    value. Logits ``W h`` are unchanged and so are the class-mean differences,
    hence ``sigma_b``; the within-class scatter grows like ``lam**2``.

    Raises:
        NoNullVector: ``w`` has full column rank.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != f.p:
        raise ConfigError(f"W must have {f.p} columns, got shape {w.shape}")
    if not lam >= 0:
        raise ConfigError(f"lambda must be non-negative, got {lam}")
    _, s, vt = np.linalg.svd(w, full_matrices=True)
    tol = max(w.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank >= f.p:
        raise NoNullVector(f"W of shape {w.shape} has full column rank")
    v = vt[-1]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    firsts = np.array([np.flatnonzero(f.labels == c)[0] for c in range(f.class_count)])
    shifted = f.features.copy()
    shifted[:, firsts] += lam * v[:, None]
    return f.with_features(shifted)


def random_orthogonal(p, rng):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_invertible(p, seed, cond_max):
    """``Q1 diag(s) Q2^T`` with ``s`` log-spaced over ``[1, cond_max]``."""
    if not cond_max >= 1:
        raise ConfigError(f"cond_max must be >= 1, got {cond_max}")
    rng = make_rng(seed)
    q1 = random_orthogonal(p, rng)
    q2 = random_orthogonal(p, rng)
    s = np.geomspace(1.0, cond_max, p) if p > 1 else np.ones(1)
    return (q1 * s) @ q2.T


def random_block_transform(basis, seed, cond_max=10.0):
    """Invertible map acting separately on ``span(basis)`` and its complement."""
    basis = np.asarray(basis, dtype=np.float64)
    p, r = basis.shape
    # Full orthonormal frame whose first r columns span the basis.
    q, _ = np.linalg.qr(np.hstack([basis, make_rng(seed).standard_normal((p, p - r))]))
    inner = np.zeros((p, p))
    inner[:r, :r] = random_invertible(r, seed + 1, cond_max)
    if p > r:
        inner[r:, r:] = random_invertible(p - r, seed + 2, cond_max)
    return q @ inner @ q.T


def apply_transform(f, a):
    """Features ``a @ H`` with labels unchanged.

    Raises:
        SingularTransform: ``a`` is not square of size ``p`` or its condition
            number exceeds 1e12.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (f.p, f.p):
        raise SingularTransform(f"transform must be {f.p}x{f.p}, got {a.shape}")
    cond = np.linalg.cond(a)
    if not cond <= MAX_TRANSFORM_COND:
        raise SingularTransform(f"transform is numerically singular (cond {cond:.3g})")
    return f.with_features(a @ f.features)


def fuzziness_counterexample():
    """A covariance pair and a shear for which fuzziness is not invariant.

    Returns ``(sigma_b, sigma_w, u)``; fuzziness is 1 before and 2 after
    mapping both covariances through ``u``.
    """
    sigma_b = np.array([[1.0, 0.0], [0.0, 0.0]])
    sigma_w = np.eye(2)
    u = np.array([[1.0, 1.0], [0.0, 1.0]])
    return sigma_b, sigma_w, u
