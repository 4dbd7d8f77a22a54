"""Symmetric eigendecomposition and policy-controlled pseudoinversion.

A pseudoinverse of a PSD matrix is only as good as the rule that decides
which eigenvalues are "really" zero. That rule is an explicit
:class:`EigenPolicy` here, never a hidden library default.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import BadPolicy, NonSymmetricMatrix, NotPositiveSemidefinite

__all__ = [
    "EigenPolicy",
    "FixedRank",
    "RelativeTol",
    "AbsoluteTol",
    "SpectrumReport",
    "parse_policy",
    "format_policy",
    "default_total_policy",
    "default_between_policy",
    "sym_eigendecomp",
    "psd_eigendecomp",
    "retained_mask",
    "pseudo_inverse",
    "trace_pinv_product",
    "spectrum_report",
]

MACHINE_EPS = 2.0**-52
NEGATIVE_CLAMP = 1e-10
SYMMETRY_RTOL = 1e-8


class EigenPolicy:
    """Base class for the rules deciding which eigenvalues count as nonzero."""

    def retain(self, eigenvalues):
        """Boolean mask over descending, non-negative ``eigenvalues``."""
        raise NotImplementedError


@dataclass(frozen=True)
class FixedRank(EigenPolicy):
    """Keep the top ``rank`` eigenvalues that are strictly positive."""

    rank: int

    def __post_init__(self):
        if isinstance(self.rank, bool) or int(self.rank) != self.rank or self.rank < 1:
            raise BadPolicy(f"FixedRank needs a positive integer, got {self.rank!r}")

    def retain(self, eigenvalues):
        mask = np.zeros(len(eigenvalues), dtype=bool)
        mask[: min(int(self.rank), len(eigenvalues))] = True
        return mask & (eigenvalues > 0)


@dataclass(frozen=True)
class RelativeTol(EigenPolicy):
    """Keep eigenvalues strictly above ``eps * max(eigenvalues)``."""

    eps: float

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise BadPolicy(f"RelativeTol needs eps in (0, 1), got {self.eps!r}")

    def retain(self, eigenvalues):
        if len(eigenvalues) == 0:
            return np.zeros(0, dtype=bool)
        return eigenvalues > self.eps * eigenvalues.max()


@dataclass(frozen=True)
class AbsoluteTol(EigenPolicy):
    """Keep eigenvalues strictly above ``t``."""

    t: float

    def __post_init__(self):
        if not (self.t > 0.0 and np.isfinite(self.t)):
            raise BadPolicy(f"AbsoluteTol needs t > 0, got {self.t!r}")

    def retain(self, eigenvalues):
        return eigenvalues > self.t


def parse_policy(text):
    """Parse ``rank:R``, ``rel:EPS``, ``abs:T`` or ``rel:auto``.

    ``rel:auto`` (the default) returns ``None``, meaning each consumer applies
    its own default: see :func:`default_total_policy` and
    :func:`default_between_policy`.
    """
    if text is None or isinstance(text, EigenPolicy):
        return text
    kind, sep, arg = str(text).strip().partition(":")
    if not sep:
        raise BadPolicy(f"policy {text!r} is not of the form KIND:VALUE")
    kind = kind.lower()
    if kind == "rel" and arg == "auto":
        return None
    try:
        if kind == "rank":
            if not arg.strip().lstrip("+").isdigit():
                raise BadPolicy(f"rank must be a positive integer, got {arg!r}")
            return FixedRank(int(arg))
        if kind == "rel":
            return RelativeTol(float(arg))
        if kind == "abs":
            return AbsoluteTol(float(arg))
    except ValueError as exc:
        if isinstance(exc, BadPolicy):
            raise
        raise BadPolicy(f"bad policy value in {text!r}") from None
    raise BadPolicy(f"unknown policy kind {kind!r}; use rank, rel or abs")


def format_policy(policy):
    if policy is None:
        return "rel:auto"
    if isinstance(policy, FixedRank):
        return f"rank:{int(policy.rank)}"
    if isinstance(policy, RelativeTol):
        return f"rel:{policy.eps!r}"
    if isinstance(policy, AbsoluteTol):
        return f"abs:{policy.t!r}"
    raise TypeError(f"not an EigenPolicy: {policy!r}")


def default_total_policy(p):
    """Machine-precision cutoff for the overall covariance."""
    return RelativeTol(min(p * MACHINE_EPS, 0.5))


def default_between_policy(p, k):
    """The maximal possible rank of the between-class covariance."""
    return FixedRank(max(1, min(p, k - 1)))


# -- decompositions --------------------------------------------------------


def _check_symmetric(s):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise NonSymmetricMatrix(f"expected a square matrix, got shape {s.shape}")
    scale = np.linalg.norm(s)
    asym = np.linalg.norm(s - s.T)
    if asym > SYMMETRY_RTOL * scale:
        raise NonSymmetricMatrix(
            f"matrix is not symmetric (relative asymmetry {asym / scale:.3g})"
        )
    return s


def sym_eigendecomp(s):
    """Eigendecomposition of a symmetric matrix.

    Returns:
        ``(eigenvalues, eigenvectors)`` with eigenvalues in descending order and
        eigenvectors as orthonormal columns. Each eigenvector's largest-magnitude
        entry is made positive so results are reproducible.

    Raises:
        NonSymmetricMatrix: ``s`` deviates from symmetry by more than 1e-8 relative.
    """
    s = _check_symmetric(s)
    vals, vecs = np.linalg.eigh(0.5 * (s + s.T))
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    if vecs.size:
        pivot = np.argmax(np.abs(vecs), axis=0)
        signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
        signs[signs == 0] = 1.0
        vecs *= signs
    return vals, vecs


def psd_eigendecomp(s):
    """:func:`sym_eigendecomp` plus clamping of round-off negatives to zero.

    Raises:
        NotPositiveSemidefinite: an eigenvalue is below ``-1e-10 * lambda_max``.
    """
    vals, vecs = sym_eigendecomp(s)
    if vals.size:
        top = max(vals[0], 0.0)
        if vals[-1] < -NEGATIVE_CLAMP * top or (top == 0.0 and vals[-1] < 0.0):
            raise NotPositiveSemidefinite(
                f"eigenvalue {vals[-1]:.3g} is too negative for lambda_max {top:.3g}"
            )
        vals = np.maximum(vals, 0.0)
    return vals, vecs


def retained_mask(eigenvalues, policy):
    """Mask of the eigenvalues ``policy`` keeps (input descending, clamped)."""
    return np.asarray(policy.retain(np.asarray(eigenvalues, dtype=np.float64)), dtype=bool)


def pseudo_inverse(s, policy):
    """Policy-thresholded Moore-Penrose pseudoinverse of a symmetric PSD matrix.

    Dropped eigenvalues contribute nothing; if every eigenvalue is dropped the
    zero matrix is returned.
    """
    vals, vecs = psd_eigendecomp(s)
    keep = retained_mask(vals, policy)
    v = vecs[:, keep]
    return (v / vals[keep]) @ v.T


def trace_pinv_product(s, other, policy, decomp=None):
    """``Tr[pinv(s) @ other]`` without forming the pseudoinverse.

    ``decomp`` may carry a precomputed :func:`psd_eigendecomp` of ``s``.
    Returns ``(trace, retained_count)``.
    """
    vals, vecs = decomp if decomp is not None else psd_eigendecomp(s)
    keep = retained_mask(vals, policy)
    v = vecs[:, keep]
    quad = np.einsum("ij,ij->j", v, np.asarray(other, dtype=np.float64) @ v)
    return float(np.sum(quad / vals[keep])), int(keep.sum())


# -- diagnostics -----------------------------------------------------------


@dataclass
class SpectrumReport:
    """Eigenvalue spectra of the between-class and overall covariances.

    ``cond_t`` is ``None`` when the policy retains no eigenvalue of the
    overall covariance.
    """

    eigs_sigma_b: np.ndarray
    eigs_sigma_t: np.ndarray
    retained_b: int
    retained_t: int
    cond_t: float
    policy: str = "rel:auto"

    _keys = ("eigs_sigma_b", "eigs_sigma_t", "retained_b", "retained_t", "cond_t", "policy")

    def to_dict(self):
        return {
            "eigs_sigma_b": [float(v) for v in self.eigs_sigma_b],
            "eigs_sigma_t": [float(v) for v in self.eigs_sigma_t],
            "retained_b": int(self.retained_b),
            "retained_t": int(self.retained_t),
            "cond_t": None if self.cond_t is None else float(self.cond_t),
            "policy": self.policy,
        }

    @classmethod
    def matches(cls, data):
        return set(data) == set(cls._keys)

    @classmethod
    def from_dict(cls, data):
        return cls(
            eigs_sigma_b=np.asarray(data["eigs_sigma_b"], dtype=np.float64),
            eigs_sigma_t=np.asarray(data["eigs_sigma_t"], dtype=np.float64),
            retained_b=int(data["retained_b"]),
            retained_t=int(data["retained_t"]),
            cond_t=data["cond_t"],
            policy=data["policy"],
        )


def spectrum_report(covs, policy=None):
    """Sorted spectra of ``covs.sigma_b`` and ``covs.sigma_t`` with retained counts.

    With ``policy=None`` the between-class matrix uses
    :func:`default_between_policy` and the overall one :func:`default_total_policy`.
    """
    p = covs.sigma_t.shape[0]
    k = covs.class_count
    policy_b = policy if policy is not None else default_between_policy(p, k)
    policy_t = policy if policy is not None else default_total_policy(p)
    eigs_b, _ = psd_eigendecomp(covs.sigma_b)
    eigs_t, _ = psd_eigendecomp(covs.sigma_t)
    keep_b = retained_mask(eigs_b, policy_b)
    keep_t = retained_mask(eigs_t, policy_t)
    kept = eigs_t[keep_t]
    cond = float(kept.max() / kept.min()) if kept.size else None
    return SpectrumReport(
        eigs_sigma_b=eigs_b,
        eigs_sigma_t=eigs_t,
        retained_b=int(keep_b.sum()),
        retained_t=int(keep_t.sum()),
        cond_t=cond,
        policy=format_policy(policy),
    )
