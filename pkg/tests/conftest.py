import numpy as np
import pytest

from varcollapse import LabeledFeatures

_ACCEPTANCE = []


def make_features(columns, labels, k=None):
    return LabeledFeatures(np.asarray(columns, dtype=float).T, labels, k)


def random_features(rng, p, k, n, balanced=True, scale=1.0):
    """Gaussian features with per-class offsets; ``n`` samples per class."""
    if balanced:
        counts = np.full(k, n)
    else:
        counts = rng.integers(1, n + 1, size=k)
    labels = np.repeat(np.arange(k), counts)
    means = rng.standard_normal((p, k)) * scale
    feats = means[:, labels] + rng.standard_normal((p, labels.size))
    return LabeledFeatures(feats, labels, k)


@pytest.fixture
def d0():
    return make_features([(1, 0), (1, 0), (-1, 0), (-1, 0)], [0, 0, 1, 1])


@pytest.fixture
def d1():
    return make_features([(1, 1), (1, -1), (-1, 1), (-1, -1)], [0, 0, 1, 1])


@pytest.fixture
def d2():
    return make_features([(2, 0), (0, 0), (-2, 0), (0, 0)], [0, 0, 1, 1])


@pytest.fixture
def criterion():
    """Record a named acceptance criterion result for the terminal summary."""

    def record(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}: {detail}")
