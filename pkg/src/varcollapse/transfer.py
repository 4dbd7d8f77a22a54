"""Transferability statistics over pretraining runs.

The bundled table holds, per pretraining run, linear-probe accuracies on ten
downstream datasets, the pretraining accuracy, the four collapse metrics and
the published mean log odds gain (MLOG). Accuracies are stored as printed
(percent) and converted to fractions on load.
"""

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import InfiniteLogOdds, UndefinedCorrelation

__all__ = [
    "DOWNSTREAM_DATASETS",
    "METRIC_NAMES",
    "TransferRecord",
    "log_odds",
    "mean_log_odds_gain",
    "pearson",
    "paper_fixture_tables",
    "load_transfer_table",
    "group_records",
    "correlation_report",
]

DOWNSTREAM_DATASETS = (
    "pets", "flowers", "aircraft", "cars", "dtd",
    "cifar10", "food101", "cifar100", "caltech", "sun397",
)
METRIC_NAMES = ("fuzziness", "squared_distance", "cos_sim", "vci")

_FIXTURE = "transfer_tables.csv"


@dataclass
class TransferRecord:
    setting: str
    downstream_accs: list
    pretrain_acc: float
    metric_values: dict
    mlog: float = None
    group: str = None
    mlo: float = None  # printed mean downstream log odds


def log_odds(p):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InfiniteLogOdds(f"accuracy {p} has infinite log odds")
    return math.log(p / (1.0 - p))


def mean_log_odds_gain(downstream_accs, pretrain_acc):
    """Mean downstream log odds minus the pretraining log odds (natural log)."""
    accs = list(downstream_accs)
    if not accs:
        raise ValueError("need at least one downstream accuracy")
    return sum(log_odds(a) for a in accs) / len(accs) - log_odds(pretrain_acc)


def pearson(x, y):
    """Sample Pearson correlation coefficient.

    Raises:
        UndefinedCorrelation: either input is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError(f"need two equal-length sequences of >= 2 values, got {x.shape}, {y.shape}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelation("correlation with a constant sequence is undefined")
    r = float((dx / sx) @ (dy / sy))
    return min(1.0, max(-1.0, r))


def _records_from_csv(text):
    records = []
    for row in csv.DictReader(io.StringIO(text)):
        records.append(TransferRecord(
            setting=row["setting"],
            group=row.get("group") or None,
            downstream_accs=[float(row[d]) / 100.0 for d in DOWNSTREAM_DATASETS],
            pretrain_acc=float(row["accuracy"]) / 100.0,
            metric_values={m: float(row[m]) for m in METRIC_NAMES},
            mlog=float(row["mlog"]) if row.get("mlog") else None,
            mlo=float(row["mlo"]) if row.get("mlo") else None,
        ))
    return records


def load_transfer_table(path):
    """Read a transfer table in the bundled CSV layout."""
    with open(path, encoding="utf-8") as fh:
        return _records_from_csv(fh.read())


def paper_fixture_tables():
    """The eleven bundled pretraining runs (six temperatures, five regularizations)."""
    text = resources.files("varcollapse.data").joinpath(_FIXTURE).read_text(encoding="utf-8")
    return _records_from_csv(text)


def group_records(records):
    groups = {}
    for rec in records:
        groups.setdefault(rec.group or "all", []).append(rec)
    return groups


def correlation_report(records, groups=None, target="mlog"):
    """Pearson r of every metric against the transfer score, per group and overall.

    Args:
        records: transfer records.
        groups: mapping group name -> records; defaults to grouping by
            ``record.group``.
        target: ``"mlog"`` for the stored value or ``"mlog_recomputed"`` to
            recompute it from the accuracies.

    Returns:
        dict keyed by ``(metric, group)``; the key ``"overall"`` covers all records.
    """
    if groups is None:
        groups = group_records(records)
    groups = dict(groups)
    groups["overall"] = list(records)

    def score(rec):
        if target == "mlog" and rec.mlog is not None:
            return rec.mlog
        return mean_log_odds_gain(rec.downstream_accs, rec.pretrain_acc)

    report = {}
    for name, members in groups.items():
        if len(members) < 3:
            raise ValueError(f"group {name!r} has {len(members)} records; need >= 3")
        ys = [score(r) for r in members]
        for metric in METRIC_NAMES:
            xs = [r.metric_values[metric] for r in members]
            report[(metric, name)] = pearson(xs, ys)
    return report
