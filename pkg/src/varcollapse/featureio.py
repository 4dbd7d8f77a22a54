"""Loading labeled feature matrices and writing analysis reports.

On disk every sample is a row; in memory ``LabeledFeatures.features`` holds
samples as columns (shape ``(p, n)``), so the loaders transpose.

Two input layouts are understood:

* CSV: one sample per row, ``label, f1, ..., fp``. An optional header row is
  recognised by a non-numeric first token.
* NPY pair: a ``(n, p)`` float array (``<f8`` or ``<f4``) and a ``(n,)``
  integer label array, stored as two ``.npy`` files.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    EmptyClass,
    FeatureFormatError,
    LabelOutOfRange,
    MalformedHeader,
    MalformedRow,
    NonFiniteValue,
)

__all__ = [
    "LabeledFeatures",
    "load_features",
    "save_features",
    "save_report",
    "load_report",
    "report_to_json",
]


@dataclass(eq=False)
class LabeledFeatures:
    """A ``(p, n)`` feature matrix with one class label per column.

    Attributes:
        features: float64 array of shape ``(p, n)``; column ``i`` is sample ``i``.
        labels: int64 array of shape ``(n,)`` with values in ``[0, class_count)``.
        class_count: number of classes ``K``. Every class must be present.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int = field(default=None)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise FeatureFormatError(f"features must be 2-D, got shape {feats.shape}")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != feats.shape[1]:
            raise FeatureFormatError(
                f"expected {feats.shape[1]} labels, got shape {labels.shape}"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(np.int64)
            bad = np.flatnonzero(as_int != labels)
            if bad.size:
                raise LabelOutOfRange(
                    f"non-integer label {labels[bad[0]]!r}", row=int(bad[0])
                )
            labels = as_int
        labels = labels.astype(np.int64, copy=False)
        p, n = feats.shape
        if p < 1:
            raise FeatureFormatError("feature dimension must be at least 1")

        bad = np.argwhere(~np.isfinite(feats))
        if bad.size:
            col, row = int(bad[0][0]), int(bad[0][1])
            raise NonFiniteValue(
                f"non-finite feature value {feats[col, row]!r}", row=row, column=col
            )
        neg = np.flatnonzero(labels < 0)
        if neg.size:
            raise LabelOutOfRange(f"negative label {labels[neg[0]]}", row=int(neg[0]))

        k = self.class_count
        if k is None:
            k = int(labels.max()) + 1 if n else 0
        k = int(k)
        over = np.flatnonzero(labels >= k)
        if over.size:
            raise LabelOutOfRange(
                f"label {labels[over[0]]} not below class count {k}", row=int(over[0])
            )
        if k < 2:
            raise FeatureFormatError(f"need at least 2 classes, got {k}")
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise EmptyClass(f"class {int(empty[0])} has no samples")

        self.features = feats
        self.labels = labels
        self.class_count = k

    @property
    def p(self):
        return self.features.shape[0]

    @property
    def n(self):
        return self.features.shape[1]

    @property
    def class_counts(self):
        return np.bincount(self.labels, minlength=self.class_count)

    @property
    def is_balanced(self):
        counts = self.class_counts
        return bool(np.all(counts == counts[0]))

    def with_features(self, features):
        return LabeledFeatures(features, self.labels.copy(), self.class_count)

    def __eq__(self, other):
        if not isinstance(other, LabeledFeatures):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


# -- loading ---------------------------------------------------------------


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_label(token, row):
    try:
        value = int(token.strip())
    except ValueError:
        raise LabelOutOfRange(f"label {token!r} is not an integer", row=row, column=0)
    if value < 0:
        raise LabelOutOfRange(f"negative label {value}", row=row, column=0)
    return value


def _load_csv(path, class_count):
    labels = []
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader):
            if not record or all(not tok.strip() for tok in record):
                continue
            if lineno == 0 and not _is_number(record[0]):
                if len(record) < 2 or any(not tok.strip() for tok in record):
                    raise MalformedHeader("header needs a label and >=1 feature name", row=0)
                width = len(record)
                continue
            if width is None:
                width = len(record)
                if width < 2:
                    raise MalformedRow("row needs a label and at least one feature", row=lineno)
            elif len(record) != width:
                raise MalformedRow(
                    f"expected {width} fields, found {len(record)}", row=lineno
                )
            labels.append(_parse_label(record[0], lineno))
            try:
                values = np.array(record[1:], dtype=np.float64)
            except ValueError:
                for j, tok in enumerate(record[1:], start=1):
                    if not _is_number(tok):
                        raise MalformedRow(f"unparseable value {tok!r}", row=lineno, column=j)
                raise
            if not np.all(np.isfinite(values)):
                j = int(np.flatnonzero(~np.isfinite(values))[0])
                raise NonFiniteValue(
                    f"non-finite value {record[j + 1]!r}", row=lineno, column=j + 1
                )
            rows.append(values)
    if not rows:
        raise MalformedRow("file contains no samples")
    feats = np.vstack(rows).T
    return LabeledFeatures(feats, np.asarray(labels, dtype=np.int64), class_count)


def _load_npy_pair(path, labels_path, class_count):
    if labels_path is None:
        raise FeatureFormatError("npy-pair format needs a labels file")
    feats = np.load(path, allow_pickle=False)
    if feats.dtype not in (np.dtype("<f8"), np.dtype("<f4")):
        raise FeatureFormatError(f"features must be <f8 or <f4, got {feats.dtype.str}")
    if feats.ndim != 2:
        raise FeatureFormatError(f"features must have shape (n, p), got {feats.shape}")
    labels = np.load(labels_path, allow_pickle=False)
    if labels.ndim != 1 or not np.issubdtype(labels.dtype, np.integer):
        raise FeatureFormatError(
            f"labels must be a 1-D integer array, got {labels.dtype.str} {labels.shape}"
        )
    if labels.shape[0] != feats.shape[0]:
        raise FeatureFormatError(
            f"{feats.shape[0]} feature rows but {labels.shape[0]} labels"
        )
    return LabeledFeatures(np.asarray(feats, dtype=np.float64).T, labels, class_count)


def load_features(path, format=None, labels_path=None, class_count=None):
    """Read a labeled feature file.

    Args:
        path: CSV file, or the features ``.npy`` file of an NPY pair.
        format: ``"csv"`` or ``"npy"``; inferred from the suffix when omitted.
        labels_path: labels ``.npy`` file (NPY pair only).
        class_count: optional ``K``; by default ``max(label) + 1``.

    Raises:
        FileNotFoundError: a path does not exist.
        FeatureFormatError: any malformed content, with row/column location.
    """
    path = Path(path)
    if format is None:
        format = "npy" if path.suffix.lower() == ".npy" else "csv"
    if format == "csv":
        return _load_csv(path, class_count)
    if format in ("npy", "npy-pair"):
        return _load_npy_pair(path, labels_path, class_count)
    raise FeatureFormatError(f"unknown feature format {format!r}")


def save_features(f, path, format=None, labels_path=None):
    """Write ``f`` in the CSV or NPY-pair layout read by :func:`load_features`."""
    path = Path(path)
    if format is None:
        format = "npy" if path.suffix.lower() == ".npy" else "csv"
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for label, column in zip(f.labels, f.features.T):
                writer.writerow([int(label)] + [repr(float(v)) for v in column])
        return path, None
    if labels_path is None:
        labels_path = path.with_name(path.stem + "_labels.npy")
    np.save(path, np.ascontiguousarray(f.features.T, dtype="<f8"))
    np.save(labels_path, f.labels.astype("<i8"))
    return path, Path(labels_path)


# -- reports ---------------------------------------------------------------


def _jsonable(value):
    if value is None:
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def report_to_json(report):
    """Serialize a report object (anything with ``to_dict``) or a plain dict."""
    data = report.to_dict() if hasattr(report, "to_dict") else report
    # repr-based float formatting round-trips float64 exactly.
    return json.dumps(_jsonable(data), indent=2, allow_nan=False) + "\n"


def save_report(report, path):
    """Write ``report`` as JSON. Undefined values are written as ``null``."""
    text = report_to_json(report)
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(text)


def load_report(path):
    """Read a report written by :func:`save_report` back into its type.

    The type is recognised from its keys; unknown layouts come back as dicts.
    """
    with open(os.fspath(path), encoding="utf-8") as fh:
        data = json.load(fh)
    from .metrics import MetricReport
    from .probe import ProbeSolution
    from .spectra import SpectrumReport

    for cls in (MetricReport, ProbeSolution, SpectrumReport):
        if cls.matches(data):
            return cls.from_dict(data)
    return data
