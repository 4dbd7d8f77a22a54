"""Command-line interface: ``varcollapse {metrics,probe,spectrum,synth,transfer}``.

Errors are written to stderr as ``{"error": {"code": ..., "message": ...}}``
and the process exits with status 2.
"""

import argparse
import contextlib
import csv
import json
import os
import sys

from threadpoolctl import threadpool_limits

from . import __version__
from .exceptions import ConfigError, VarCollapseError
from .featureio import load_features, report_to_json, save_features
from .metrics import _evaluate, fuzziness_sensitivity
from .probe import solve_mse_probe
from .spectra import parse_policy, spectrum_report
from .stats import covariances
from .synth import GeneratorSpec, generate
from .transfer import (
    correlation_report,
    load_transfer_table,
    mean_log_odds_gain,
    paper_fixture_tables,
)

THREADS_ENV = "NC_METRICS_THREADS"
EXIT_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _add_input(parser):
    parser.add_argument("--input", required=True, help="CSV file or features .npy")
    parser.add_argument("--labels", help="labels .npy (NPY pair input)")
    parser.add_argument("--format", choices=("csv", "npy"), help="default: from suffix")
    parser.add_argument("--policy", default="rel:auto",
                        help="rank:R | rel:EPS | abs:T | rel:auto (default)")
    parser.add_argument("--out", default="-", help="output JSON path, - for stdout")


def build_parser():
    parser = _Parser(prog="varcollapse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("metrics", help="all collapse metrics as JSON")
    _add_input(p)
    p.add_argument("--sensitivity", action="store_true",
                   help="add fuzziness under rel:1e-3, rel:1e-6 and rel:1e-9")

    p = sub.add_parser("probe", help="closed-form MSE linear probe")
    _add_input(p)

    p = sub.add_parser("spectrum", help="eigenvalue spectra of sigma_b and sigma_t")
    _add_input(p)
    p.add_argument("--csv", dest="csv_out", help="write sorted eigenvalues as CSV")

    p = sub.add_parser("synth", help="generate a synthetic feature set")
    p.add_argument("--geometry", default="simplex",
                   choices=("simplex", "simplex-collapsed", "vb-perp-noise", "vb-noise"))
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--k", type=int, required=True, help="number of classes")
    p.add_argument("--p", type=int, required=True, help="feature dimension")
    p.add_argument("--n", type=int, required=True, help="samples per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "npy"))
    p.add_argument("--labels-out", help="labels .npy path (npy output)")

    p = sub.add_parser("transfer", help="metric / transferability correlations")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixtures", action="store_true", help="use the bundled tables")
    src.add_argument("--table", help="CSV in the bundled table layout")
    p.add_argument("--out", default="-")
    return parser


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load(args):
    return load_features(args.input, format=args.format, labels_path=args.labels)


def cmd_metrics(args):
    policy = parse_policy(args.policy)
    f = _load(args)
    report, covs, _ = _evaluate(f, policy)
    data = report.to_dict()
    if args.sensitivity:
        for key, value in fuzziness_sensitivity(covs).items():
            data["fuzziness_" + key.replace(":", "_")] = value
    _write(report_to_json(data), args.out)


def cmd_probe(args):
    policy = parse_policy(args.policy)
    _write(report_to_json(solve_mse_probe(_load(args), policy)), args.out)


def cmd_spectrum(args):
    policy = parse_policy(args.policy)
    report = spectrum_report(covariances(_load(args)), policy)
    _write(report_to_json(report), args.out)
    if args.csv_out:
        with open(args.csv_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["eig_sigma_b", "eig_sigma_t"])
            for b, t in zip(report.eigs_sigma_b, report.eigs_sigma_t):
                writer.writerow([repr(float(b)), repr(float(t))])


def cmd_synth(args):
    geometry = "simplex-collapsed" if args.geometry == "simplex" else args.geometry
    spec = GeneratorSpec(k=args.k, p=args.p, n=args.n, geometry=geometry,
                         sigma=args.sigma, seed=args.seed)
    save_features(generate(spec), args.out, format=args.format, labels_path=args.labels_out)


def cmd_transfer(args):
    records = paper_fixture_tables() if args.fixtures else load_transfer_table(args.table)
    report = correlation_report(records)
    correlations = {}
    for (metric, group), r in report.items():
        correlations.setdefault(group, {})[metric] = r
    rows = [
        {
            "setting": rec.setting,
            "group": rec.group,
            "mlog": rec.mlog,
            "mlog_recomputed": mean_log_odds_gain(rec.downstream_accs, rec.pretrain_acc),
        }
        for rec in records
    ]
    out = {"source": "fixtures" if args.fixtures else args.table,
           "correlations": correlations, "records": rows}
    _write(report_to_json(out), args.out)


COMMANDS = {
    "metrics": cmd_metrics,
    "probe": cmd_probe,
    "spectrum": cmd_spectrum,
    "synth": cmd_synth,
    "transfer": cmd_transfer,
}


def _thread_limit():
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {value}")
    return value


def _fail(code, message):
    json.dump({"error": {"code": code, "message": message}}, sys.stderr)
    sys.stderr.write("\n")
    return EXIT_ERROR


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        threads = _thread_limit()
        limiter = threadpool_limits(limits=threads) if threads else contextlib.nullcontext()
        with limiter:
            COMMANDS[args.command](args)
    except VarCollapseError as exc:
        json.dump({"error": exc.to_dict()}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_ERROR
    except FileNotFoundError as exc:
        return _fail("io.not_found", f"no such file: {exc.filename}")
    except OSError as exc:
        return _fail("io.error", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
