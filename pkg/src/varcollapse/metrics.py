"""Variability-collapse metrics and the combined report.

Four metrics are computed for a labeled feature set:

* fuzziness, ``Tr[pinv(sigma_b) sigma_w]``;
* squared distance, total within-class over total between-class squared norm;
* cosine statistics: mean within-class cosine distance, mean overall cosine
  distance and the derived class separation;
* VCI, ``1 - Tr[pinv(sigma_t) sigma_b] / min(p, K - 1)``.

Only VCI is invariant under every invertible linear map of the features, and
only it avoids pseudoinverting ``sigma_b``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateBetweenVariance, EmptyBetweenSpace, ZeroNormFeature
from .spectra import (
    RelativeTol,
    default_between_policy,
    default_total_policy,
    format_policy,
    psd_eigendecomp,
    trace_pinv_product,
)
from .stats import (
    _blocks,
    _indicator,
    between_space_basis,
    class_statistics,
    covariances,
    within_projection_split,
)

__all__ = [
    "MetricReport",
    "fuzziness",
    "fuzziness_sensitivity",
    "squared_distance",
    "cosine_stats",
    "vci",
    "evaluate_all",
    "SENSITIVITY_TOLERANCES",
]

SENSITIVITY_TOLERANCES = (1e-3, 1e-6, 1e-9)

# sigma_b is treated as zero when its trace is this small relative to sigma_t.
_DEGENERATE_RTOL = 1e-28

_REPORT_KEYS = (
    "p", "n", "class_count", "fuzziness", "squared_distance", "cos_within",
    "cos_total", "class_separation", "trace_ratio", "vci", "rank_bound",
    "proj_vb", "proj_vb_perp", "policy", "eigs_sigma_b", "eigs_sigma_t",
)


@dataclass
class MetricReport:
    """All collapse metrics for one feature set.

    Fields that cannot be computed for degenerate input are ``None``.
    """

    p: int
    n: int
    class_count: int
    fuzziness: float
    squared_distance: float
    cos_within: float
    cos_total: float
    class_separation: float
    trace_ratio: float
    vci: float
    rank_bound: int
    proj_vb: float
    proj_vb_perp: float
    policy: str
    eigs_sigma_b: np.ndarray = field(repr=False)
    eigs_sigma_t: np.ndarray = field(repr=False)

    def to_dict(self):
        out = {}
        for key in _REPORT_KEYS:
            value = getattr(self, key)
            if key.startswith("eigs_"):
                value = [float(v) for v in value]
            elif isinstance(value, (np.floating, float)):
                value = float(value)
            elif isinstance(value, np.integer):
                value = int(value)
            out[key] = value
        return out

    @classmethod
    def matches(cls, data):
        return set(_REPORT_KEYS) <= set(data)

    @classmethod
    def from_dict(cls, data):
        kwargs = {key: data[key] for key in _REPORT_KEYS}
        kwargs["eigs_sigma_b"] = np.asarray(kwargs["eigs_sigma_b"], dtype=np.float64)
        kwargs["eigs_sigma_t"] = np.asarray(kwargs["eigs_sigma_t"], dtype=np.float64)
        return cls(**kwargs)


def _between_is_degenerate(covs):
    tr_b = float(np.trace(covs.sigma_b))
    tr_t = float(np.trace(covs.sigma_t))
    return tr_b <= _DEGENERATE_RTOL * tr_t or tr_b == 0.0


def fuzziness(covs, policy=None):
    """``Tr[pinv(sigma_b) @ sigma_w]``.

    The default policy keeps the top ``min(p, K - 1)`` eigenvalues of
    ``sigma_b``. The value is very sensitive to this choice when ``sigma_b``
    has small trailing eigenvalues; see :func:`fuzziness_sensitivity`.
    """
    if policy is None:
        policy = default_between_policy(covs.p, covs.class_count)
    value, _ = trace_pinv_product(covs.sigma_b, covs.sigma_w, policy)
    return value


def fuzziness_sensitivity(covs, tolerances=SENSITIVITY_TOLERANCES):
    """Fuzziness under each ``RelativeTol`` in ``tolerances``, keyed by policy string."""
    return {format_policy(RelativeTol(t)): fuzziness(covs, RelativeTol(t)) for t in tolerances}


def squared_distance(f):
    """Within-class over between-class squared deviation.

    For balanced data this is
    ``sum_ki ||h_ki - mu_k||^2 / (N sum_k ||mu_k - mu_G||^2)``; in general the
    between-class term weights class ``k`` by its size, which makes the value
    ``trace(sigma_w) / trace(sigma_b)``.

    Raises:
        DegenerateBetweenVariance: all class means coincide.
    """
    stats = class_statistics(f)
    within = 0.0
    for block in _blocks(f.n, f.p):
        dev = f.features[:, block] - stats.class_means[:, f.labels[block]]
        within += float(np.sum(dev * dev))
    centered = stats.centered_means
    between = float(np.sum(stats.class_counts * np.sum(centered * centered, axis=0)))
    if between == 0.0 or between <= _DEGENERATE_RTOL * (within + between):
        raise DegenerateBetweenVariance("all class means are equal")
    return within / between


def cosine_stats(f):
    """Mean within-class and overall cosine distances and the class separation.

    Averages run over all ordered pairs, self-pairs included. Because
    ``sum_ij sim(h_i, h_j) = ||sum_i h_i / ||h_i||| ^2``, no pairwise matrix is
    formed.

    Returns:
        ``(cos_within, cos_total, class_separation)``; the last is ``None``
        when ``cos_total`` is below 1e-15.

    Raises:
        ZeroNormFeature: some sample has norm at most 1e-12.
    """
    k = f.class_count
    class_sums = np.zeros((f.p, k))
    for block in _blocks(f.n, f.p):
        cols = f.features[:, block]
        norms = np.sqrt(np.sum(cols * cols, axis=0))
        small = np.flatnonzero(norms <= 1e-12)
        if small.size:
            index = block.start + int(small[0])
            raise ZeroNormFeature(f"sample {index} has zero norm", sample=index)
        unit = cols / norms
        class_sums += np.asarray(_indicator(f.labels[block], k) @ unit.T).T
    counts = f.class_counts.astype(np.float64)
    within_sim = float(np.sum(class_sums * class_sums))
    total_vec = class_sums.sum(axis=1)
    total_sim = float(total_vec @ total_vec)
    cos_within = min(max(1.0 - within_sim / float(np.sum(counts * counts)), 0.0), 2.0)
    cos_total = min(max(1.0 - total_sim / float(f.n) ** 2, 0.0), 2.0)
    separation = None if cos_total < 1e-15 else 1.0 - cos_within / cos_total
    return cos_within, cos_total, separation


def vci(covs, policy=None):
    """Variability Collapse Index.

    Returns:
        ``(trace_ratio, vci, rank_bound)`` with
        ``trace_ratio = Tr[pinv(sigma_t) @ sigma_b]``, ``rank_bound = min(p, K - 1)``
        and ``vci = 1 - trace_ratio / rank_bound``.

    Raises:
        DegenerateBetweenVariance: ``sigma_b`` is zero.
    """
    if _between_is_degenerate(covs):
        raise DegenerateBetweenVariance("between-class covariance is zero")
    p, k = covs.p, covs.class_count
    if policy is None:
        policy = default_total_policy(p)
    ratio, _ = trace_pinv_product(covs.sigma_t, covs.sigma_b, policy)
    bound = min(p, k - 1)
    return ratio, 1.0 - ratio / bound, bound


def evaluate_all(f, policy=None):
    """Compute every metric for ``f`` and collect them in a :class:`MetricReport`.

    ``policy=None`` uses the per-matrix defaults (rank cap for ``sigma_b``,
    machine-precision cutoff for ``sigma_t``); an explicit policy is applied
    to both matrices. Metrics undefined for degenerate input are reported as
    ``None`` instead of failing the whole report.
    """
    return _evaluate(f, policy)[0]


def _evaluate(f, policy):
    covs = covariances(f)
    p, k = covs.p, covs.class_count
    policy_b = policy if policy is not None else default_between_policy(p, k)
    policy_t = policy if policy is not None else default_total_policy(p)
    degenerate = _between_is_degenerate(covs)

    decomp_b = psd_eigendecomp(covs.sigma_b)
    decomp_t = psd_eigendecomp(covs.sigma_t)

    if degenerate:
        warnings.warn("between-class covariance is zero; fuzziness reported as 0")
    fuzz, _ = trace_pinv_product(covs.sigma_b, covs.sigma_w, policy_b, decomp=decomp_b)

    bound = min(p, k - 1)
    if degenerate:
        sq = ratio = index = None
    else:
        sq = float(np.trace(covs.sigma_w)) / float(np.trace(covs.sigma_b))
        ratio, _ = trace_pinv_product(covs.sigma_t, covs.sigma_b, policy_t, decomp=decomp_t)
        index = 1.0 - ratio / bound

    try:
        cos_within, cos_total, separation = cosine_stats(f)
    except ZeroNormFeature as exc:
        warnings.warn(str(exc))
        cos_within = cos_total = separation = None

    try:
        basis = between_space_basis(covs, policy_b, decomp=decomp_b)
        proj_vb, proj_perp = within_projection_split(f, basis, sigma_w=covs.sigma_w)
    except EmptyBetweenSpace:
        basis = np.zeros((p, 0))
        proj_vb, proj_perp = 0.0, float(np.trace(covs.sigma_w))

    report = MetricReport(
        p=p,
        n=f.n,
        class_count=k,
        fuzziness=fuzz,
        squared_distance=sq,
        cos_within=cos_within,
        cos_total=cos_total,
        class_separation=separation,
        trace_ratio=ratio,
        vci=index,
        rank_bound=bound,
        proj_vb=proj_vb,
        proj_vb_perp=proj_perp,
        policy=format_policy(policy),
        eigs_sigma_b=decomp_b[0],
        eigs_sigma_t=decomp_t[0],
    )
    return report, covs, basis
