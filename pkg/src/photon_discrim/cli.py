"""Command-line entry point.

Exit status: 0 on success, 1 on a configuration or usage error, 2 on an
I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .classifiers import (
    AdalineModel,
    NaiveBayesModel,
    adaline_predict,
    adaline_train,
    evaluate,
    load_model,
    nb_classify,
    nb_log_odds,
    save_model,
)
from .dataset import build_collection, featurize
from .errors import ConfigurationError, PhotonDiscrimError
from .nets import cnn_train, mnn_train
from .stats import PhotonCountSequence, SourceKind, sample_counts
from .trace import (
    PulseShape,
    count_photons,
    synthesize_trace,
    write_trace_binary,
    write_trace_csv,
)

SEED_ENV = "PHOTON_DISCRIM_SEED"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

log = logging.getLogger("photon_discrim")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _cmd_simulate(args) -> int:
    rows = harness.emit_histograms(args.nbar, args.n, _resolve_seed(args.seed), args.out)
    if args.out is None:
        print(",".join(harness.HISTOGRAM_HEADER))
        for row in rows:
            print(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    else:
        if args.gnuplot:
            harness.write_gnuplot_script(args.out, "histogram")
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_trace(args) -> int:
    seed = _resolve_seed(args.seed)
    counts = sample_counts(SourceKind.parse(args.source), args.nbar, args.bins, seed)
    pulse = PulseShape(noise_sigma=args.noise, rise=args.rise)
    trace = synthesize_trace(counts, pulse, seed=seed + 1)
    recovered = count_photons(trace, threshold=args.threshold)
    mismatched = int(np.sum(recovered.counts != counts.counts))
    print(f"bins={args.bins} photons={int(counts.counts.sum())} mismatched_bins={mismatched}")
    if args.out:
        if str(args.out).endswith(".csv"):
            write_trace_csv(trace, args.out)
        else:
            write_trace_binary(trace, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = harness.load_config(args.config) if args.config else harness.SweepConfig()
    if args.seed is not None:
        config.master_seed = args.seed
    elif not args.config:
        config.master_seed = _resolve_seed(None)
    if args.out:
        config.output_dir = args.out
    if args.workers:
        config.workers = args.workers
    config.validate()
    report = harness.run_sweep(config)
    out = Path(config.output_dir) / harness.REPORT_FILENAME
    if args.gnuplot:
        harness.write_gnuplot_script(out, "accuracy", report=report)
    print(f"wrote {out} ({len(report.rows)} rows, {len(report.failures)} failed cells)")
    return EXIT_OK


def _cmd_project(args) -> int:
    rows = harness.export_projection(args.nbar, args.m, args.subsets, _resolve_seed(args.seed), args.out)
    print(
        f"centroid distance {harness.centroid_distance(rows):.6f} "
        f"separation ratio {harness.separation_ratio(rows):.4f}"
    )
    if args.out:
        if args.gnuplot:
            harness.write_gnuplot_script(args.out, "projection")
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    train, test = build_collection(args.nbar, args.m, args.subsets, 0.7, seed)
    if args.classifier == "nb":
        model = NaiveBayesModel(args.nbar)
        preds = np.where(nb_log_odds(test.counts, args.nbar) > 0, 1, -1)
    else:
        if args.classifier == "adaline":
            model = adaline_train(train, args.eta, args.epochs or 50, seed)
        elif args.classifier == "mnn":
            model = mnn_train(train, args.epochs or 200, seed)
        else:
            model = cnn_train(train, args.epochs or 200, seed)
        preds = model.predict_targets(test.features)
    print(f"{args.classifier} test accuracy {evaluate(preds, test.targets):.4f}")
    save_model(model, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _read_counts(path) -> PhotonCountSequence:
    text = Path(path).read_text().replace(",", " ").split()
    try:
        return PhotonCountSequence([int(t) for t in text])
    except ValueError as exc:
        raise ConfigurationError(f"{path}: counts must be non-negative integers ({exc})") from None


def _cmd_classify(args) -> int:
    try:
        model = load_model(args.model)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    counts = _read_counts(args.counts)
    if isinstance(model, NaiveBayesModel):
        label, margin = nb_classify(counts, model)
        print(f"{label.value} margin={margin:.6f}")
    elif isinstance(model, AdalineModel):
        fv = featurize(counts)
        activation = float(model.activation(fv.probs))
        print(f"{adaline_predict(model, fv).value} activation={activation:.6f}")
    else:
        label, probs = model.predict(featurize(counts))
        print(f"{label.value} p_coherent={probs[0]:.6f} p_thermal={probs[1]:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photon-discrim", description="Coherent vs. thermal light discrimination toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="photon-number histograms, empirical vs analytic")
    p.add_argument("--nbar", type=float, required=True)
    p.add_argument("--n", type=int, default=1_000_000, help="measurements per source")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("trace", help="synthesize a detector trace and count it back")
    p.add_argument("--nbar", type=float, default=0.77)
    p.add_argument("--source", default="thermal", choices=[s.value for s in SourceKind])
    p.add_argument("--bins", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--rise", default="rectangular", choices=["rectangular", "raised-cosine"])
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the trace (.csv, otherwise binary PTRC)")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("sweep", help="accuracy versus subset size")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("project", help="feature-space projection on (P(0), P(1), P(2))")
    p.add_argument("--nbar", type=float, required=True)
    p.add_argument("--m", type=int, default=60)
    p.add_argument("--subsets", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("train", help="train one model and save it as JSON")
    p.add_argument("--classifier", choices=["adaline", "nb", "mnn", "cnn"], default="adaline")
    p.add_argument("--nbar", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--subsets", type=int, default=1000)
    p.add_argument("--eta", type=float, default=0.001)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="classify a file of photon counts with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--counts", required=True, help="whitespace- or comma-separated integers")
    p.set_defaults(func=_cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, PhotonDiscrimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
