import numpy as np
import pytest

from varcollapse.exceptions import BadPolicy, NonSymmetricMatrix, NotPositiveSemidefinite
from varcollapse.spectra import (
    AbsoluteTol,
    FixedRank,
    RelativeTol,
    default_between_policy,
    default_total_policy,
    format_policy,
    parse_policy,
    psd_eigendecomp,
    pseudo_inverse,
    retained_mask,
    spectrum_report,
    sym_eigendecomp,
    trace_pinv_product,
)
from varcollapse.stats import covariances
from varcollapse.synth import GeneratorSpec, collapsed_config


def test_diagonal_eigendecomp():
    vals, vecs = sym_eigendecomp(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(vals, [2, 1])
    np.testing.assert_allclose(np.abs(vecs), np.eye(2), atol=1e-15)


def test_swap_matrix_eigendecomp():
    vals, vecs = sym_eigendecomp(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(vals, [1, -1], atol=1e-15)
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(np.abs(vecs[:, 0]), [r, r], atol=1e-15)
    assert vecs[0, 1] * vecs[1, 1] < 0


def test_zero_matrix_eigendecomp():
    vals, _ = sym_eigendecomp(np.zeros((3, 3)))
    np.testing.assert_array_equal(vals, 0)


def test_eigendecomp_is_deterministic():
    s = np.random.default_rng(0).standard_normal((5, 5))
    s = s + s.T
    a = sym_eigendecomp(s)
    b = sym_eigendecomp(s.copy())
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_non_symmetric_rejected():
    with pytest.raises(NonSymmetricMatrix):
        sym_eigendecomp(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_negative_spectrum_rejected_but_roundoff_clamped():
    with pytest.raises(NotPositiveSemidefinite):
        psd_eigendecomp(np.diag([1.0, -1e-3]))
    vals, _ = psd_eigendecomp(np.diag([1.0, -1e-14]))
    np.testing.assert_array_equal(vals, [1.0, 0.0])


def test_diagonal_pinv():
    got = pseudo_inverse(np.diag([2.0, 1.0, 0.0]), RelativeTol(1e-12))
    np.testing.assert_allclose(got, np.diag([0.5, 1, 0]), atol=1e-15)


def test_small_trailing_eigenvalue_policies():
    s = np.diag([1.0, 2e-3])
    np.testing.assert_allclose(pseudo_inverse(s, FixedRank(1)), np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(pseudo_inverse(s, RelativeTol(1e-6)), np.diag([1, 500]), rtol=1e-12)


@pytest.mark.parametrize("policy", [FixedRank(2), RelativeTol(0.5), AbsoluteTol(1.0)])
def test_zero_matrix_pinv(policy):
    np.testing.assert_array_equal(pseudo_inverse(np.zeros((2, 2)), policy), 0)


def test_fixed_rank_ignores_zero_eigenvalues():
    assert retained_mask(np.array([3.0, 0.0, 0.0]), FixedRank(2)).tolist() == [True, False, False]


def test_moore_penrose_identities():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((6, 3))
    s = a @ a.T  # rank 3
    pinv = pseudo_inverse(s, RelativeTol(1e-10))
    scale = np.linalg.norm(s)
    assert np.linalg.norm(s @ pinv @ s - s) <= 1e-8 * scale
    assert np.linalg.norm(pinv @ s @ pinv - pinv) <= 1e-8 * np.linalg.norm(pinv)
    np.testing.assert_allclose(pinv, np.linalg.pinv(s, rcond=1e-10, hermitian=True), atol=1e-10)


def test_full_rank_inverse():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 5))
    s = a @ a.T + np.eye(5)
    assert np.linalg.norm(pseudo_inverse(s, FixedRank(5)) @ s - np.eye(5)) <= 1e-8


def test_policy_monotonicity():
    eigs = np.geomspace(1, 1e-12, 25)
    rel = [retained_mask(eigs, RelativeTol(e)).sum() for e in np.geomspace(1e-14, 0.9, 30)]
    ab = [retained_mask(eigs, AbsoluteTol(t)).sum() for t in np.geomspace(1e-14, 2, 30)]
    assert all(x >= y for x, y in zip(rel, rel[1:]))
    assert all(x >= y for x, y in zip(ab, ab[1:]))


def test_trace_pinv_product_counts():
    trace, count = trace_pinv_product(np.diag([2.0, 0.0]), np.diag([1.0, 5.0]), RelativeTol(1e-9))
    assert (trace, count) == (0.5, 1)


@pytest.mark.parametrize(
    "text, policy",
    [("rank:3", FixedRank(3)), ("rel:1e-6", RelativeTol(1e-6)), ("abs:0.5", AbsoluteTol(0.5)),
     ("rel:auto", None), (None, None)],
)
def test_parse_policy(text, policy):
    assert parse_policy(text) == policy


@pytest.mark.parametrize("text", ["rank:0", "rank:-1", "rank:1.5", "rel:0", "rel:1", "rel:x",
                                  "abs:-1", "abs:nan", "foo:1", "rank"])
def test_bad_policy(text):
    with pytest.raises(BadPolicy) as info:
        parse_policy(text)
    assert info.value.code == "config.bad_policy"


def test_format_roundtrip():
    for policy in (FixedRank(4), RelativeTol(1e-6), AbsoluteTol(0.25)):
        assert parse_policy(format_policy(policy)) == policy
    assert format_policy(None) == "rel:auto"


def test_defaults():
    assert default_total_policy(4) == RelativeTol(4 * 2.0**-52)
    assert default_between_policy(3, 10) == FixedRank(3)
    assert default_between_policy(30, 10) == FixedRank(9)


def test_spectrum_d1(d1):
    report = spectrum_report(covariances(d1))
    np.testing.assert_allclose(report.eigs_sigma_b, [1, 0], atol=1e-15)
    np.testing.assert_allclose(report.eigs_sigma_t, [1, 1], atol=1e-15)


def test_spectrum_d0(d0):
    report = spectrum_report(covariances(d0))
    np.testing.assert_allclose(report.eigs_sigma_t, [1, 0], atol=1e-15)
    assert report.cond_t == pytest.approx(1.0)


def test_spectrum_simplex_rank():
    f = collapsed_config(GeneratorSpec(k=3, p=3, n=4))
    assert spectrum_report(covariances(f)).retained_b == 2
