import itertools

import numpy as np
import pytest

from conftest import make_features, random_features
from varcollapse import LabeledFeatures, cosine_stats, evaluate_all, fuzziness, squared_distance, vci
from varcollapse.exceptions import DegenerateBetweenVariance, ZeroNormFeature
from varcollapse.metrics import MetricReport, fuzziness_sensitivity
from varcollapse.spectra import FixedRank, RelativeTol
from varcollapse.stats import CovarianceSet, covariances
from varcollapse.synth import (
    apply_transform,
    fuzziness_counterexample,
    random_invertible,
    random_orthogonal,
    make_rng,
)


def _pair(sigma_b, sigma_w, k=2):
    return CovarianceSet.from_matrices(sigma_b, sigma_w, class_count=k)


def test_counterexample_one_then_two():
    sb, sw, u = fuzziness_counterexample()
    assert fuzziness(_pair(sb, sw)) == pytest.approx(1.0, abs=1e-12)
    assert fuzziness(_pair(u @ sb @ u.T, u @ sw @ u.T)) == pytest.approx(2.0, abs=1e-12)


def test_counterexample_trace_ratio_is_invariant():
    sb, sw, u = fuzziness_counterexample()
    before = vci(_pair(sb, sw))[0]
    after = vci(_pair(u @ sb @ u.T, u @ sw @ u.T))[0]
    assert before == pytest.approx(0.5, abs=1e-12)
    assert after == pytest.approx(0.5, abs=1e-12)


def test_fuzziness_zero_when_collapsed(d0):
    assert fuzziness(covariances(d0)) == 0.0


@pytest.mark.parametrize("name, expected", [("d0", 0.0), ("d1", 1.0), ("d2", 1.0)])
def test_squared_distance(request, name, expected):
    assert squared_distance(request.getfixturevalue(name)) == pytest.approx(expected, abs=1e-15)


def test_squared_distance_degenerate():
    f = make_features([(1, 0), (2, 0), (2, 0), (1, 0)], [0, 0, 1, 1])
    with pytest.raises(DegenerateBetweenVariance):
        squared_distance(f)


def test_squared_distance_balanced_formula():
    rng = np.random.default_rng(4)
    f = random_features(rng, 5, 3, 4)
    h, y = f.features, f.labels
    means = np.stack([h[:, y == k].mean(axis=1) for k in range(3)], axis=1)
    within = sum(np.sum((h[:, i] - means[:, y[i]]) ** 2) for i in range(f.n))
    between = 4 * np.sum((means - means.mean(axis=1, keepdims=True)) ** 2)
    assert squared_distance(f) == pytest.approx(within / between, rel=1e-12)


def _cosine_oracle(f):
    h = f.features
    unit = h / np.linalg.norm(h, axis=0)
    y = f.labels
    dist = 1 - unit.T @ unit
    within = np.mean([dist[i, j] for i, j in itertools.product(range(f.n), repeat=2)
                      if y[i] == y[j]])
    total = dist.mean()
    return within, total


def test_cosine_d0(d0):
    within, total, sep = cosine_stats(d0)
    assert (within, total, sep) == pytest.approx((0, 1, 1), abs=1e-15)


def test_cosine_all_identical():
    f = make_features([(1, 2)] * 4, [0, 1, 0, 1])
    within, total, sep = cosine_stats(f)
    assert within == pytest.approx(0, abs=1e-15)
    assert total == pytest.approx(0, abs=1e-15)
    assert sep is None


@pytest.mark.parametrize("balanced", [True, False])
def test_cosine_matches_pairwise_oracle(balanced):
    f = random_features(np.random.default_rng(11), 4, 3, 5, balanced)
    within, total, _ = cosine_stats(f)
    o_within, o_total = _cosine_oracle(f)
    assert within == pytest.approx(o_within, abs=1e-12)
    assert total == pytest.approx(o_total, abs=1e-12)


def test_cosine_zero_norm(d2):
    with pytest.raises(ZeroNormFeature):
        cosine_stats(d2)


def test_orthogonal_and_scale_invariance():
    rng = np.random.default_rng(12)
    f = random_features(rng, 6, 4, 5)
    q = random_orthogonal(6, rng)
    base_sq = squared_distance(f)
    base_cos = cosine_stats(f)
    for g in (apply_transform(f, q), f.with_features(3.5 * f.features)):
        assert abs(squared_distance(g) - base_sq) <= 1e-10
        assert np.allclose(cosine_stats(g), base_cos, atol=1e-10, rtol=0)
    scaled = f.with_features(f.features * rng.uniform(0.1, 10, size=f.n))
    assert np.allclose(cosine_stats(scaled), base_cos, atol=1e-10, rtol=0)


@pytest.mark.parametrize("name, ratio, index", [("d0", 1, 0), ("d1", 1, 0), ("d2", 0.5, 0.5)])
def test_vci_examples(request, name, ratio, index):
    got_ratio, got_vci, bound = vci(covariances(request.getfixturevalue(name)))
    assert got_ratio == pytest.approx(ratio, abs=1e-15)
    assert got_vci == pytest.approx(index, abs=1e-15)
    assert bound == 1


def test_vci_zero_while_within_variation_nonzero(d1):
    covs = covariances(d1)
    assert np.linalg.norm(covs.sigma_w) > 0
    assert vci(covs)[1] == 0.0


def test_vci_degenerate():
    covs = _pair(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(DegenerateBetweenVariance):
        vci(covs)


def test_vci_invariant_under_invertible_maps():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        f = random_features(rng, 5, 4, 6)
        ratio, index, _ = vci(covariances(f))
        g = apply_transform(f, random_invertible(5, seed, 1e3))
        ratio2, index2, _ = vci(covariances(g))
        assert abs(index - index2) <= 1e-6
        assert abs(ratio - ratio2) <= 1e-6


def test_fuzziness_block_invariance():
    # V_B is the span of the first two coordinates.
    rng = make_rng(3)
    a = rng.standard_normal((2, 2))
    sb = np.zeros((5, 5))
    sb[:2, :2] = a @ a.T + np.eye(2)
    c = rng.standard_normal((5, 5))
    sw = c @ c.T
    covs = _pair(sb, sw, k=3)
    base = fuzziness(covs)
    u = np.zeros((5, 5))
    u[:2, :2] = random_invertible(2, 1, 10)
    u[2:, 2:] = random_invertible(3, 2, 10)
    moved = _pair(u @ sb @ u.T, u @ sw @ u.T, k=3)
    assert abs(fuzziness(moved) - base) <= 1e-8 * max(1, base)


def test_sensitivity_keys(d2):
    result = fuzziness_sensitivity(covariances(d2))
    assert list(result) == ["rel:0.001", "rel:1e-06", "rel:1e-09"]
    assert all(v == pytest.approx(1.0) for v in result.values())


@pytest.mark.parametrize(
    "name, expected",
    [
        ("d1", dict(fuzziness=0, squared_distance=1, vci=0, proj_vb=0, proj_vb_perp=1)),
        ("d0", dict(fuzziness=0, squared_distance=0, vci=0, class_separation=1)),
        ("d2", dict(fuzziness=1, squared_distance=1, vci=0.5)),
    ],
)
@pytest.mark.filterwarnings("ignore:sample")
def test_evaluate_all_examples(request, name, expected):
    report = evaluate_all(request.getfixturevalue(name))
    assert isinstance(report, MetricReport)
    for key, value in expected.items():
        assert getattr(report, key) == pytest.approx(value, abs=1e-12), key
    assert report.rank_bound == 1
    assert report.policy == "rel:auto"


def test_explicit_policy_is_recorded(d1):
    report = evaluate_all(d1, RelativeTol(1e-12))
    assert report.policy == "rel:1e-12"
    assert report.vci == pytest.approx(0, abs=1e-15)


def test_evaluate_all_matches_individual_functions():
    f = random_features(np.random.default_rng(21), 6, 4, 5, balanced=False)
    report = evaluate_all(f, FixedRank(3))
    covs = covariances(f)
    assert report.fuzziness == fuzziness(covs, FixedRank(3))
    assert report.vci == vci(covs, FixedRank(3))[1]
    assert report.squared_distance == pytest.approx(squared_distance(f), rel=1e-12)
    assert report.cos_within == cosine_stats(f)[0]


def test_degenerate_report_keeps_defined_fields():
    f = LabeledFeatures(np.array([[1.0, 2.0, 2.0, 1.0]]), [0, 0, 1, 1])
    with pytest.warns(UserWarning):
        report = evaluate_all(f)
    assert report.vci is None and report.squared_distance is None
    assert report.cos_within is not None
